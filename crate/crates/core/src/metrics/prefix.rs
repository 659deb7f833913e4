//! Prefix-based metrics (wcd, wcpd, wcnd, wcpnd) over a merged plan trie.

use std::collections::HashMap;

use super::{MetricError, MetricValue};
use crate::pddl::ActionId;

#[derive(Clone, Copy, Debug, Default)]
struct TrieNode {
    depth: u32,
    children: u32,
    /// distinct plans having this prefix
    plans_through: u32,
    /// some plan ends exactly here
    terminal: bool,
}

/// One trie holding every plan of every goal. Each node records which
/// goals' plan sets contain its prefix, so it doubles as the per-goal
/// prefix tries: a sequence is in goal i's trie iff its node is marked i.
#[derive(Clone, Debug)]
pub struct PrefixIndex {
    nodes: Vec<TrieNode>,
    edges: HashMap<(u32, ActionId), u32>,
    /// `words` bitset words per node: goal marks
    marks: Vec<u64>,
    words: usize,
    num_goals: usize,
    /// per goal: number of plans (with duplicates inside one goal collapsed)
    goal_plans: Vec<usize>,
    /// per goal: longest plan length
    goal_max_len: Vec<usize>,
    distinct_plans: usize,
}

impl PrefixIndex {
    /// `per_goal[i]` lists the plans of goal position i.
    pub fn build<'p, I, P>(per_goal: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: IntoIterator<Item = &'p [ActionId]>,
    {
        let sets: Vec<Vec<&[ActionId]>> = per_goal
            .into_iter()
            .map(|p| p.into_iter().collect())
            .collect();
        let num_goals = sets.len();
        let words = num_goals.div_ceil(64).max(1);
        let mut idx = PrefixIndex {
            nodes: vec![TrieNode::default()],
            edges: HashMap::new(),
            marks: vec![0; words],
            words,
            num_goals,
            goal_plans: vec![0; num_goals],
            goal_max_len: vec![0; num_goals],
            distinct_plans: 0,
        };
        let mut path = Vec::new();
        for (g, plans) in sets.iter().enumerate() {
            let mut seen_terminals = Vec::new();
            for plan in plans {
                let end = idx.insert(g, plan, &mut path);
                if !seen_terminals.contains(&end) {
                    seen_terminals.push(end);
                    idx.goal_plans[g] += 1;
                }
                idx.goal_max_len[g] = idx.goal_max_len[g].max(plan.len());
            }
        }
        idx
    }

    fn mark(&mut self, node: usize, goal: usize) {
        self.marks[node * self.words + goal / 64] |= 1 << (goal % 64);
    }

    fn marked(&self, node: usize, goal: usize) -> bool {
        self.marks[node * self.words + goal / 64] & (1 << (goal % 64)) != 0
    }

    fn mark_count(&self, node: usize) -> u32 {
        self.marks[node * self.words..(node + 1) * self.words]
            .iter()
            .map(|w| w.count_ones())
            .sum()
    }

    fn insert(&mut self, goal: usize, plan: &[ActionId], path: &mut Vec<usize>) -> usize {
        path.clear();
        let mut cur = 0usize;
        self.mark(0, goal);
        path.push(0);
        for &a in plan {
            cur = match self.edges.get(&(cur as u32, a)) {
                Some(&child) => child as usize,
                None => {
                    let child = self.nodes.len();
                    let depth = self.nodes[cur].depth + 1;
                    self.nodes.push(TrieNode {
                        depth,
                        ..Default::default()
                    });
                    self.marks.extend(std::iter::repeat_n(0, self.words));
                    self.nodes[cur].children += 1;
                    self.edges.insert((cur as u32, a), child as u32);
                    child
                }
            };
            self.mark(cur, goal);
            path.push(cur);
        }
        if !self.nodes[cur].terminal {
            self.nodes[cur].terminal = true;
            self.distinct_plans += 1;
            for &n in path.iter() {
                self.nodes[n].plans_through += 1;
            }
        }
        cur
    }

    pub fn num_goals(&self) -> usize {
        self.num_goals
    }

    pub fn distinct_plans(&self) -> usize {
        self.distinct_plans
    }

    /// Whether `prefix` begins some plan of goal position `goal`.
    pub fn contains(&self, goal: usize, prefix: &[ActionId]) -> bool {
        let mut cur = 0u32;
        for &a in prefix {
            match self.edges.get(&(cur, a)) {
                Some(&c) => cur = c,
                None => return false,
            }
        }
        self.marked(cur as usize, goal)
    }

    fn goals_with_plans(&self) -> usize {
        self.goal_plans.iter().filter(|&&n| n > 0).count()
    }

    /// Worst-case distinctiveness: the longest prefix shared by plans of two
    /// different goals.
    pub fn wcd(&self) -> Result<MetricValue, MetricError> {
        if self.num_goals < 2 || self.goals_with_plans() < 2 {
            return Err(MetricError::DegenerateGoalCount(self.goals_with_plans()));
        }
        let best = self
            .nodes
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.mark_count(i) >= 2)
            .map(|(_, n)| n.depth)
            .max()
            .unwrap_or(0);
        Ok(MetricValue::from_int(best as u64))
    }

    /// Worst-case plan distinctiveness: the longest common prefix of any two
    /// distinct plans in the library.
    pub fn wcpd(&self) -> Result<MetricValue, MetricError> {
        if self.distinct_plans < 2 {
            return Err(MetricError::DegeneratePlanCount(self.distinct_plans));
        }
        let best = self
            .nodes
            .iter()
            .filter(|n| n.plans_through >= 2)
            .map(|n| n.depth)
            .max()
            .unwrap_or(0);
        Ok(MetricValue::from_int(best as u64))
    }

    /// Worst-case plan non-distinctiveness: the shortest common prefix of
    /// any two distinct plans, i.e. the shallowest node where plans part.
    pub fn wcpnd(&self) -> Result<MetricValue, MetricError> {
        if self.distinct_plans < 2 {
            return Err(MetricError::DegeneratePlanCount(self.distinct_plans));
        }
        let best = self
            .nodes
            .iter()
            .filter(|n| n.children + u32::from(n.terminal) >= 2)
            .map(|n| n.depth)
            .min()
            .unwrap_or(0);
        Ok(MetricValue::from_int(best as u64))
    }

    /// Worst-case non-distinctiveness: over goal pairs, the minimum of the
    /// longest n for which both goals have the same set of n-prefixes.
    pub fn wcnd(&self) -> Result<MetricValue, MetricError> {
        if self.num_goals < 2 || self.goals_with_plans() < 2 {
            return Err(MetricError::DegenerateGoalCount(self.goals_with_plans()));
        }
        let max_depth = self
            .nodes
            .iter()
            .map(|n| n.depth as usize)
            .max()
            .unwrap_or(0);
        let mut by_depth: Vec<Vec<usize>> = vec![Vec::new(); max_depth + 1];
        for (i, n) in self.nodes.iter().enumerate() {
            by_depth[n.depth as usize].push(i);
        }
        let mut best = usize::MAX;
        for a in 0..self.num_goals {
            for b in a + 1..self.num_goals {
                let cap = self.goal_max_len[a].max(self.goal_max_len[b]);
                let mut agree = cap;
                for (n, level) in by_depth.iter().enumerate().take(cap + 1).skip(1) {
                    if level
                        .iter()
                        .any(|&i| self.marked(i, a) != self.marked(i, b))
                    {
                        agree = n - 1;
                        break;
                    }
                }
                best = best.min(agree);
            }
        }
        Ok(MetricValue::from_int(best as u64))
    }
}
