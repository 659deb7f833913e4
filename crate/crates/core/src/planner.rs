//! Exact optimal planning over a ground environment with some actions
//! removed. Everything the metrics and the validity check need (h*, one
//! optimal plan, goal reachability) comes from here.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use thiserror::Error;

use crate::pddl::{ActionId, FactId, GroundEnvironment};

pub const DEFAULT_NODE_LIMIT: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlannerError {
    #[error("search exceeded the node limit ({limit} expansions)")]
    ResourceLimit { limit: usize },
}

/// A set of true facts, stored as a fixed-width bit vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    bits: Box<[u64]>,
}

impl State {
    pub fn empty(num_facts: usize) -> Self {
        State {
            bits: vec![0; num_facts.div_ceil(64).max(1)].into_boxed_slice(),
        }
    }

    pub fn from_facts(num_facts: usize, facts: &[FactId]) -> Self {
        let mut s = State::empty(num_facts);
        for &f in facts {
            s.insert(f);
        }
        s
    }

    pub fn initial(env: &GroundEnvironment) -> Self {
        State::from_facts(env.num_facts(), &env.init)
    }

    pub fn contains(&self, f: FactId) -> bool {
        let i = f.index();
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn insert(&mut self, f: FactId) {
        let i = f.index();
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, f: FactId) {
        let i = f.index();
        self.bits[i / 64] &= !(1 << (i % 64));
    }

    pub fn satisfies(&self, facts: &[FactId]) -> bool {
        facts.iter().all(|&f| self.contains(f))
    }

    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                (rest != 0).then(|| {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    FactId((w * 64 + b) as u32)
                })
            })
        })
    }

    /// `(s \ del(a)) ∪ add(a)`
    pub fn apply(&self, env: &GroundEnvironment, a: ActionId) -> State {
        let act = env.action(a);
        let mut next = self.clone();
        for &f in &act.del {
            next.remove(f);
        }
        for &f in &act.add {
            next.insert(f);
        }
        next
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.facts().map(|x| x.0)).finish()
    }
}

/// The environment with a set of actions removed, without copying it.
#[derive(Clone)]
pub struct EnvView<'a> {
    pub env: &'a GroundEnvironment,
    removed: Vec<ActionId>,
    mask: Vec<u64>,
}

impl<'a> EnvView<'a> {
    pub fn full(env: &'a GroundEnvironment) -> Self {
        EnvView::new(env, Vec::new())
    }

    pub fn new(env: &'a GroundEnvironment, mut removed: Vec<ActionId>) -> Self {
        removed.sort_unstable();
        removed.dedup();
        let mut mask = vec![0u64; env.num_actions().div_ceil(64).max(1)];
        for a in &removed {
            mask[a.index() / 64] |= 1 << (a.index() % 64);
        }
        EnvView { env, removed, mask }
    }

    pub fn removed(&self) -> &[ActionId] {
        &self.removed
    }

    pub fn is_removed(&self, a: ActionId) -> bool {
        self.mask[a.index() / 64] & (1 << (a.index() % 64)) != 0
    }

    pub fn is_applicable(&self, s: &State, a: ActionId) -> bool {
        !self.is_removed(a) && s.satisfies(&self.env.action(a).pre)
    }

    /// Applicable, non-removed actions with their successor states, in
    /// action-index order.
    pub fn successors(&self, s: &State) -> Vec<(ActionId, State)> {
        // An applicable action's first precondition holds in s, so only
        // actions led by a true fact need checking.
        let mut cand: Vec<ActionId> = self.env.actions_without_pre().to_vec();
        for f in s.facts() {
            cand.extend_from_slice(self.env.actions_led_by(f));
        }
        cand.sort_unstable();
        cand.into_iter()
            .filter(|&a| self.is_applicable(s, a))
            .map(|a| (a, s.apply(self.env, a)))
            .collect()
    }

    /// Replays `plan` from `from`, returning every visited state (including
    /// `from`), or `None` if some action is removed or inapplicable.
    pub fn simulate(&self, from: &State, plan: &[ActionId]) -> Option<Vec<State>> {
        let mut states = Vec::with_capacity(plan.len() + 1);
        states.push(from.clone());
        for &a in plan {
            let cur = states.last().unwrap();
            if !self.is_applicable(cur, a) {
                return None;
            }
            states.push(cur.apply(self.env, a));
        }
        Some(states)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Solved { cost: u64, plan: Vec<ActionId> },
    Unreachable,
}

impl SearchOutcome {
    pub fn cost(&self) -> Option<u64> {
        match self {
            SearchOutcome::Solved { cost, .. } => Some(*cost),
            SearchOutcome::Unreachable => None,
        }
    }
}

struct SearchNode {
    state: State,
    parent: usize,
    action: Option<ActionId>,
    g: u64,
}

/// Result of a uniform-cost search plus every state it settled, so the
/// caller can harvest extra h* facts.
struct UcsRun {
    outcome: SearchOutcome,
    /// States on the returned plan, with their g-values.
    path: Vec<(State, u64)>,
    /// When the goal was unreachable: every state reachable from the start.
    dead: Vec<State>,
}

fn uniform_cost(
    view: &EnvView,
    from: &State,
    goal: &[FactId],
    limit: usize,
) -> Result<UcsRun, PlannerError> {
    let mut nodes: Vec<SearchNode> = vec![SearchNode {
        state: from.clone(),
        parent: usize::MAX,
        action: None,
        g: 0,
    }];
    let mut best_g: HashMap<State, u64> = HashMap::from([(from.clone(), 0)]);
    let mut closed: HashMap<State, ()> = HashMap::new();
    // (g, insertion order) keeps ties FIFO, and successors are pushed in
    // action-index order, so the returned plan is reproducible.
    let mut open: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::from([Reverse((0, 0))]);
    let mut expanded = 0usize;

    while let Some(Reverse((g, idx))) = open.pop() {
        let state = nodes[idx].state.clone();
        if closed.contains_key(&state) {
            continue;
        }
        if state.satisfies(goal) {
            let mut plan = Vec::new();
            let mut path = Vec::new();
            let mut cur = idx;
            while cur != usize::MAX {
                path.push((nodes[cur].state.clone(), nodes[cur].g));
                if let Some(a) = nodes[cur].action {
                    plan.push(a);
                }
                cur = nodes[cur].parent;
            }
            plan.reverse();
            path.reverse();
            return Ok(UcsRun {
                outcome: SearchOutcome::Solved { cost: g, plan },
                path,
                dead: Vec::new(),
            });
        }
        closed.insert(state.clone(), ());
        expanded += 1;
        if expanded > limit {
            return Err(PlannerError::ResourceLimit { limit });
        }
        for (a, next) in view.successors(&state) {
            if closed.contains_key(&next) {
                continue;
            }
            let ng = g + view.env.action(a).cost;
            match best_g.entry(next.clone()) {
                Entry::Occupied(mut e) => {
                    if *e.get() <= ng {
                        continue;
                    }
                    e.insert(ng);
                }
                Entry::Vacant(e) => {
                    e.insert(ng);
                }
            }
            nodes.push(SearchNode {
                state: next,
                parent: idx,
                action: Some(a),
                g: ng,
            });
            open.push(Reverse((ng, nodes.len() - 1)));
        }
    }
    Ok(UcsRun {
        outcome: SearchOutcome::Unreachable,
        path: Vec::new(),
        dead: closed.into_keys().collect(),
    })
}

/// Optimal cost and one optimal plan from `from` to a state satisfying `goal`.
pub fn optimal_cost(
    view: &EnvView,
    from: &State,
    goal: &[FactId],
) -> Result<SearchOutcome, PlannerError> {
    optimal_cost_limited(view, from, goal, DEFAULT_NODE_LIMIT)
}

pub fn optimal_cost_limited(
    view: &EnvView,
    from: &State,
    goal: &[FactId],
    limit: usize,
) -> Result<SearchOutcome, PlannerError> {
    uniform_cost(view, from, goal, limit).map(|r| r.outcome)
}

/// For each goal, whether it is reachable from `from`. One breadth-first
/// sweep covers all goals.
pub fn goals_reachable(
    view: &EnvView,
    from: &State,
    goals: &[&[FactId]],
    limit: usize,
) -> Result<Vec<bool>, PlannerError> {
    let mut reached: Vec<bool> = goals.iter().map(|g| from.satisfies(g)).collect();
    let mut remaining = reached.iter().filter(|r| !**r).count();
    if remaining == 0 {
        return Ok(reached);
    }
    let mut seen: HashMap<State, ()> = HashMap::from([(from.clone(), ())]);
    let mut queue = VecDeque::from([from.clone()]);
    let mut expanded = 0usize;
    while let Some(s) = queue.pop_front() {
        expanded += 1;
        if expanded > limit {
            return Err(PlannerError::ResourceLimit { limit });
        }
        for (_, next) in view.successors(&s) {
            if seen.contains_key(&next) {
                continue;
            }
            for (i, g) in goals.iter().enumerate() {
                if !reached[i] && next.satisfies(g) {
                    reached[i] = true;
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                return Ok(reached);
            }
            seen.insert(next.clone(), ());
            queue.push_back(next);
        }
    }
    Ok(reached)
}

type GoalTable = HashMap<State, Option<u64>>;
type ViewTable = HashMap<Vec<FactId>, GoalTable>;

/// Memo table for h*(s, G) keyed by (removed-action set, goal, state).
/// Keys carry no environment identity, so one cache serves one environment.
///
/// Reads take a shared lock; inserts take the exclusive lock.
pub struct HStarCache {
    table: RwLock<HashMap<Vec<ActionId>, ViewTable>>,
    hits: AtomicU64,
    misses: AtomicU64,
    node_limit: usize,
}

impl Default for HStarCache {
    fn default() -> Self {
        HStarCache::new(DEFAULT_NODE_LIMIT)
    }
}

impl HStarCache {
    pub fn new(node_limit: usize) -> Self {
        HStarCache {
            table: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            node_limit,
        }
    }

    pub fn node_limit(&self) -> usize {
        self.node_limit
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    fn lookup(&self, removed: &[ActionId], goal: &[FactId], s: &State) -> Option<Option<u64>> {
        let table = self.table.read().unwrap();
        table.get(removed)?.get(goal)?.get(s).copied()
    }

    fn store(
        &self,
        removed: &[ActionId],
        goal: &[FactId],
        entries: impl IntoIterator<Item = (State, Option<u64>)>,
    ) {
        let mut table = self.table.write().unwrap();
        let per_goal = table
            .entry(removed.to_vec())
            .or_default()
            .entry(goal.to_vec())
            .or_default();
        per_goal.extend(entries);
    }

    /// Drops every memoized value for views other than the unmodified one.
    pub fn retain_only_full_view(&self) {
        self.table.write().unwrap().retain(|k, _| k.is_empty());
    }

    /// Drops every memoized value for one removal set.
    pub fn forget(&self, removed: &[ActionId]) {
        self.table.write().unwrap().remove(removed);
    }

    pub fn len(&self) -> usize {
        self.table
            .read()
            .unwrap()
            .values()
            .flat_map(|g| g.values())
            .map(HashMap::len)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// h*(from, goal) in `view`, memoized in `cache`. `None` means unreachable.
///
/// A solved search also records h* for every state on the optimal path
/// (suffixes of optimal plans are optimal); an unreachable result marks
/// every state the search settled as unreachable too.
pub fn h_star(
    view: &EnvView,
    from: &State,
    goal: &[FactId],
    cache: &HStarCache,
) -> Result<Option<u64>, PlannerError> {
    if let Some(v) = cache.lookup(view.removed(), goal, from) {
        cache.hits.fetch_add(1, Ordering::Relaxed);
        return Ok(v);
    }
    cache.misses.fetch_add(1, Ordering::Relaxed);
    let run = uniform_cost(view, from, goal, cache.node_limit)?;
    let result = run.outcome.cost();
    match result {
        Some(cost) => cache.store(
            view.removed(),
            goal,
            run.path.into_iter().map(|(s, g)| (s, Some(cost - g))),
        ),
        None => cache.store(
            view.removed(),
            goal,
            run.dead.into_iter().map(|s| (s, None)),
        ),
    }
    Ok(result)
}
