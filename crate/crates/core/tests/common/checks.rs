//! Property checks shared by the proptest suite and the acceptance run.
//! Each returns `Ok(true)` when the property held, `Ok(false)` when the
//! random case did not meet the property's precondition, and `Err` with a
//! description otherwise.

use std::collections::BTreeSet;

use envredesign::metrics::{evaluate, EvalConfig, MetricError, MetricKind, MetricValue};
use envredesign::pddl::ActionId;
use envredesign::planner::{optimal_cost, EnvView, HStarCache, State, DEFAULT_NODE_LIMIT};
use envredesign::redesign::{ger_search, is_valid, RedesignTask, StopCondition};
use envredesign::topq::{build_library, enumerate_plans, filter_library, Bound, PlanLibrary};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{oracle_metric, random_subset, small_grid, Grid};
use MetricKind::*;

pub type Checked = Result<bool, String>;

const PREFIX: [MetricKind; 4] = [GoalTransparency, PlanTransparency, GoalPrivacy, PlanPrivacy];

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// A small random grid, its optimal plan library and a random removal set.
pub struct Case {
    pub grid: Grid,
    pub lib: PlanLibrary,
    pub cache: HStarCache,
    pub removed: Vec<ActionId>,
}

impl Case {
    pub fn new(grid_seed: u64, cut_seed: u64, max_cut: usize) -> Self {
        let grid = Grid::new(small_grid(grid_seed, 4));
        let cache = HStarCache::default();
        let goals: Vec<usize> = (0..grid.env.goals.len()).collect();
        let lib = build_library(
            &EnvView::full(&grid.env),
            &goals,
            Bound::OPTIMAL,
            usize::MAX,
            &cache,
            false,
        )
        .unwrap();
        let removed = random_subset(
            &mut ChaCha8Rng::seed_from_u64(cut_seed),
            &all_actions(&grid),
            max_cut,
        );
        Case {
            grid,
            lib,
            cache,
            removed,
        }
    }

    pub fn view(&self) -> EnvView<'_> {
        EnvView::new(&self.grid.env, self.removed.clone())
    }

    pub fn valid(&self) -> bool {
        is_valid(&self.view(), DEFAULT_NODE_LIMIT)
    }

    pub fn eval(&self, m: MetricKind) -> Result<MetricValue, MetricError> {
        evaluate(
            m,
            &self.view(),
            &self.lib,
            &self.cache,
            &EvalConfig::default(),
        )
    }
}

fn all_actions(grid: &Grid) -> Vec<ActionId> {
    (0..grid.env.num_actions() as u32).map(ActionId).collect()
}

pub fn prefix_orderings(grid_seed: u64, cut_seed: u64) -> Checked {
    let case = Case::new(grid_seed, cut_seed, 4);
    if !case.valid() {
        return Ok(false);
    }
    let [wcd, wcpd, wcnd, wcpnd] = PREFIX.map(|m| case.eval(m).ok());
    if let (Some(wcd), Some(wcnd)) = (wcd, wcnd) {
        ensure!(wcnd <= wcd, "wcnd {wcnd} > wcd {wcd}");
    }
    if let (Some(wcd), Some(wcpd)) = (wcd, wcpd) {
        ensure!(wcpd >= wcd, "wcpd {wcpd} < wcd {wcd}");
    }
    if let (Some(wcpd), Some(wcpnd)) = (wcpd, wcpnd) {
        ensure!(wcpnd <= wcpd, "wcpnd {wcpnd} > wcpd {wcpd}");
    }
    Ok(true)
}

pub fn distance_orderings(grid_seed: u64, cut_seed: u64) -> Checked {
    let case = Case::new(grid_seed, cut_seed, 4);
    if !case.valid() {
        return Ok(false);
    }
    // MaxMinD aggregates by min, MinMaxD by max; both avg metrics agree
    let (Ok(min), Ok(avg), Ok(max)) = (
        case.eval(MaxMinDistance),
        case.eval(MinAvgDistance),
        case.eval(MinMaxDistance),
    ) else {
        return Ok(false);
    };
    ensure!(
        min <= avg && avg <= max,
        "minD {min}, avgD {avg}, maxD {max}"
    );
    ensure!(
        case.eval(MaxAvgDistance).ok() == Some(avg),
        "avg metrics disagree"
    );
    Ok(true)
}

pub fn metrics_match_oracle(grid_seed: u64, cut_seed: u64) -> Checked {
    let case = Case::new(grid_seed, cut_seed, 4);
    if !case.valid() {
        return Ok(false);
    }
    for m in MetricKind::ALL {
        let want = oracle_metric(&case.grid, m, &case.removed, Ratio::from_integer(1));
        let got = match case.eval(m) {
            Ok(v) => Some(v.ratio()),
            Err(e) if e.is_degenerate() => None,
            Err(e) => return Err(format!("{m}: {e}")),
        };
        ensure!(got == want, "{m}: got {got:?}, oracle {want:?}");
    }
    Ok(true)
}

pub fn prefix_metrics_ignore_non_library_actions(grid_seed: u64, cut_seed: u64) -> Checked {
    let mut case = Case::new(grid_seed, 0, 0);
    let unused: Vec<ActionId> = all_actions(&case.grid)
        .into_iter()
        .filter(|a| case.lib.used_actions.binary_search(a).is_err())
        .collect();
    let before = PREFIX.map(|m| case.eval(m).ok());
    case.removed = random_subset(&mut ChaCha8Rng::seed_from_u64(cut_seed), &unused, 6);
    ensure!(
        case.valid(),
        "removing unused actions {:?} broke validity",
        case.removed
    );
    let after = PREFIX.map(|m| case.eval(m).ok());
    ensure!(before == after, "{before:?} became {after:?}");
    Ok(true)
}

pub fn optimal_cost_monotone(grid_seed: u64, cut_seed: u64, extra_seed: u64) -> Checked {
    let case = Case::new(grid_seed, cut_seed, 4);
    let extra = random_subset(
        &mut ChaCha8Rng::seed_from_u64(extra_seed),
        &all_actions(&case.grid),
        4,
    );
    let larger: BTreeSet<ActionId> = case.removed.iter().chain(&extra).copied().collect();
    let env = &case.grid.env;
    let big = EnvView::new(env, larger.into_iter().collect());
    let init = State::initial(env);
    for g in 0..env.goals.len() {
        let small = optimal_cost(&case.view(), &init, env.goal(g))
            .map_err(|e| e.to_string())?
            .cost();
        let large = optimal_cost(&big, &init, env.goal(g))
            .map_err(|e| e.to_string())?
            .cost();
        // None is +infinity
        ensure!(
            small.unwrap_or(u64::MAX) <= large.unwrap_or(u64::MAX),
            "goal {g}: {small:?} then {large:?}"
        );
    }
    Ok(true)
}

pub fn filter_matches_fresh_build(grid_seed: u64, cut_seed: u64) -> Checked {
    let case = Case::new(grid_seed, cut_seed, 5);
    let view = case.view();
    let filtered = filter_library(&case.lib, &view);
    for (pos, set) in case.lib.per_goal.iter().enumerate() {
        if filtered.stale.contains(&pos) {
            continue;
        }
        let fresh = enumerate_plans(&view, set.goal, Bound::OPTIMAL, usize::MAX, &case.cache)
            .map_err(|e| e.to_string())?;
        ensure!(
            filtered.goal_set(pos).plans == fresh.plans,
            "goal {}: filtered set differs",
            set.goal
        );
    }
    Ok(true)
}

pub fn solutions_valid_and_consistent(
    grid_seed: u64,
    metric: MetricKind,
    budget: usize,
) -> Checked {
    let spec = small_grid(grid_seed, 3);
    let task = RedesignTask::new(spec.ground().unwrap(), metric, Bound::OPTIMAL, usize::MAX)
        .map_err(|e| e.to_string())?;
    let out = ger_search(&task, &StopCondition::budget(budget)).map_err(|e| e.to_string())?;
    let cache = HStarCache::default();
    let lib = task.build_library(&cache).map_err(|e| e.to_string())?;
    for s in &out.solutions {
        let view = EnvView::new(&task.env, s.removed.clone());
        ensure!(
            is_valid(&view, DEFAULT_NODE_LIMIT),
            "{metric}: invalid solution {:?}",
            s.removed
        );
        ensure!(s.depth() <= budget, "{metric}: solution over budget");
        match evaluate(metric, &view, &lib, &cache, &task.eval) {
            Ok(v) => ensure!(
                v == out.m_plus,
                "{metric}: solution worth {v}, m+ {}",
                out.m_plus
            ),
            // degenerate environments are valued 0
            Err(e) if e.is_degenerate() => ensure!(
                out.m_plus == MetricValue::from_int(0),
                "{metric}: degenerate"
            ),
            Err(e) => return Err(format!("{metric}: {e}")),
        }
    }
    Ok(true)
}
