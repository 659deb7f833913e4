//! Top-quality plan enumeration: every loop-less plan whose cost is within
//! a sub-optimality bound of the optimum, collected per goal into a plan
//! library.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::pddl::ActionId;
use crate::planner::{
    h_star, optimal_cost_limited, EnvView, HStarCache, PlannerError, SearchOutcome, State,
};

/// Per-goal plan cap used when none is given.
pub const DEFAULT_PLAN_CAP: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopqError {
    #[error("goal {goal} is unreachable")]
    UnreachableGoal { goal: usize },
    #[error("goal {goal}: {source}")]
    Planner {
        goal: usize,
        #[source]
        source: PlannerError,
    },
    #[error("invalid sub-optimality bound `{0}` (expected a rational >= 1, e.g. 1.0, 1.5 or 3/2)")]
    InvalidBound(String),
}

/// Sub-optimality bound b ≥ 1, held exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(Ratio<u64>);

impl Bound {
    pub const OPTIMAL: Bound = Bound(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Result<Bound, TopqError> {
        if denom == 0 || numer < denom {
            return Err(TopqError::InvalidBound(format!("{numer}/{denom}")));
        }
        Ok(Bound(Ratio::new(numer, denom)))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    /// ⌊b · c*⌋
    pub fn cost_limit(&self, optimal: u64) -> u64 {
        (self.0 * optimal).to_integer()
    }
}

impl Default for Bound {
    fn default() -> Self {
        Bound::OPTIMAL
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Bound {
    type Err = TopqError;

    /// Accepts `1`, `1.5`, `3/2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TopqError::InvalidBound(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| err())?;
            let d: u64 = d.trim().parse().map_err(|_| err())?;
            return Bound::new(n, d).map_err(|_| err());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty()
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        if frac.len() > 12 {
            return Err(err());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let numer = format!("{int}{frac}").parse::<u64>().map_err(|_| err())?;
        Bound::new(numer, denom).map_err(|_| err())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plan {
    pub actions: Vec<ActionId>,
    pub cost: u64,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// All bounded loop-less plans for one goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoalPlanSet {
    pub goal: usize,
    pub optimal_cost: u64,
    pub plans: Vec<Plan>,
    /// The cap stopped enumeration before every plan was found.
    pub truncated: bool,
}

impl GoalPlanSet {
    pub fn min_cost(&self) -> Option<u64> {
        self.plans.iter().map(|p| p.cost).min()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanLibrary {
    pub per_goal: Vec<GoalPlanSet>,
    pub bound: Bound,
    pub cap: usize,
    /// Sorted union of the actions of every stored plan.
    pub used_actions: Vec<ActionId>,
}

impl PlanLibrary {
    pub fn from_goal_sets(per_goal: Vec<GoalPlanSet>, bound: Bound, cap: usize) -> Self {
        let used: BTreeSet<ActionId> = per_goal
            .iter()
            .flat_map(|g| g.plans.iter())
            .flat_map(|p| p.actions.iter().copied())
            .collect();
        PlanLibrary {
            per_goal,
            bound,
            cap,
            used_actions: used.into_iter().collect(),
        }
    }

    pub fn truncated(&self) -> bool {
        self.per_goal.iter().any(|g| g.truncated)
    }
}

struct Enumerator<'v, 'c> {
    view: &'v EnvView<'v>,
    goal: &'v [crate::pddl::FactId],
    limit: u64,
    cap: usize,
    cache: &'c HStarCache,
    on_path: HashSet<State>,
    prefix: Vec<ActionId>,
    plans: Vec<Plan>,
    truncated: bool,
    expanded: usize,
}

impl Enumerator<'_, '_> {
    /// Returns `false` once the cap stops the enumeration.
    fn dfs(&mut self, s: &State, g: u64) -> Result<bool, PlannerError> {
        self.expanded += 1;
        if self.expanded > self.cache.node_limit() {
            return Err(PlannerError::ResourceLimit {
                limit: self.cache.node_limit(),
            });
        }
        if s.satisfies(self.goal) {
            if self.plans.len() == self.cap {
                self.truncated = true;
                return Ok(false);
            }
            self.plans.push(Plan {
                actions: self.prefix.clone(),
                cost: g,
            });
        }
        for (a, next) in self.view.successors(s) {
            if self.on_path.contains(&next) {
                continue;
            }
            let ng = g + self.view.env.action(a).cost;
            if ng > self.limit {
                continue;
            }
            match h_star(self.view, &next, self.goal, self.cache)? {
                Some(h) if ng + h <= self.limit => {}
                _ => continue,
            }
            self.on_path.insert(next.clone());
            self.prefix.push(a);
            let go_on = self.dfs(&next, ng)?;
            self.prefix.pop();
            self.on_path.remove(&next);
            if !go_on {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Every loop-less plan from the initial state to goal `goal` whose cost is
/// at most ⌊b·c*⌋, in lexicographic action-index order, stopping after
/// `cap` plans.
pub fn enumerate_plans(
    view: &EnvView,
    goal: usize,
    bound: Bound,
    cap: usize,
    cache: &HStarCache,
) -> Result<GoalPlanSet, TopqError> {
    let goal_facts = view.env.goal(goal);
    let init = State::initial(view.env);
    let wrap = |source| TopqError::Planner { goal, source };
    let optimal =
        match optimal_cost_limited(view, &init, goal_facts, cache.node_limit()).map_err(wrap)? {
            SearchOutcome::Solved { cost, .. } => cost,
            SearchOutcome::Unreachable => return Err(TopqError::UnreachableGoal { goal }),
        };
    let mut e = Enumerator {
        view,
        goal: goal_facts,
        limit: bound.cost_limit(optimal),
        cap: cap.max(1),
        cache,
        on_path: HashSet::from([init.clone()]),
        prefix: Vec::new(),
        plans: Vec::new(),
        truncated: false,
        expanded: 0,
    };
    e.dfs(&init, 0).map_err(wrap)?;
    Ok(GoalPlanSet {
        goal,
        optimal_cost: optimal,
        plans: e.plans,
        truncated: e.truncated,
    })
}

/// Plan library over the given goals, one [`GoalPlanSet`] per goal.
/// With `parallel`, goals are enumerated concurrently on the current rayon pool.
pub fn build_library(
    view: &EnvView,
    goals: &[usize],
    bound: Bound,
    cap: usize,
    cache: &HStarCache,
    parallel: bool,
) -> Result<PlanLibrary, TopqError> {
    let per_goal: Result<Vec<_>, _> = if parallel {
        goals
            .par_iter()
            .map(|&g| enumerate_plans(view, g, bound, cap, cache))
            .collect()
    } else {
        goals
            .iter()
            .map(|&g| enumerate_plans(view, g, bound, cap, cache))
            .collect()
    };
    Ok(PlanLibrary::from_goal_sets(per_goal?, bound, cap))
}

/// A plan library restricted to plans that avoid a set of removed actions.
#[derive(Clone, Debug)]
pub struct FilteredLibrary<'a> {
    pub library: &'a PlanLibrary,
    /// Per goal (same order as `library.per_goal`): indices of surviving plans.
    pub kept: Vec<Vec<usize>>,
    /// Positions (into `per_goal`) whose cached set may be incomplete.
    pub stale: Vec<usize>,
}

impl<'a> FilteredLibrary<'a> {
    pub fn plans(&self, pos: usize) -> impl Iterator<Item = &'a Plan> + '_ {
        let set = &self.library.per_goal[pos];
        self.kept[pos].iter().map(move |&i| &set.plans[i])
    }

    /// Surviving plans of one goal as an owned set.
    pub fn goal_set(&self, pos: usize) -> GoalPlanSet {
        let set = &self.library.per_goal[pos];
        GoalPlanSet {
            goal: set.goal,
            optimal_cost: set.optimal_cost,
            plans: self.plans(pos).cloned().collect(),
            truncated: set.truncated,
        }
    }
}

/// Keeps the plans that use no removed action. A goal is stale when
/// nothing survives or the cheapest survivor costs more than the original
/// optimum: in both cases the optimum moved and the bounded plan set of the
/// modified environment may hold plans the cache never saw.
pub fn filter_library<'a>(lib: &'a PlanLibrary, view: &EnvView) -> FilteredLibrary<'a> {
    let mut kept = Vec::with_capacity(lib.per_goal.len());
    let mut stale = Vec::new();
    for (pos, set) in lib.per_goal.iter().enumerate() {
        let survivors: Vec<usize> = set
            .plans
            .iter()
            .enumerate()
            .filter(|(_, p)| p.actions.iter().all(|&a| !view.is_removed(a)))
            .map(|(i, _)| i)
            .collect();
        let min = survivors.iter().map(|&i| set.plans[i].cost).min();
        if min.is_none_or(|c| c > set.optimal_cost) {
            stale.push(pos);
        }
        kept.push(survivors);
    }
    FilteredLibrary {
        library: lib,
        kept,
        stale,
    }
}
