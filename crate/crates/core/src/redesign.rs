//! Environment redesign by action removal: the anytime breadth-first GER
//! search and an exhaustive oracle.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{
    evaluate, is_better, reaches, EvalConfig, MetricError, MetricKind, MetricValue,
};
use crate::pddl::{ActionId, FactId, GroundEnvironment};
use crate::planner::{goals_reachable, EnvView, HStarCache, State, DEFAULT_NODE_LIMIT};
use crate::topq::{build_library, Bound, PlanLibrary, TopqError, DEFAULT_PLAN_CAP};

/// Subset budget for [`brute_force_redesign`].
pub const DEFAULT_BRUTE_FORCE_CAP: u64 = 200_000;

#[derive(Debug, Error)]
pub enum RedesignError {
    #[error("goal {goal} is unreachable in the unmodified environment")]
    UnreachableGoal { goal: usize },
    #[error("metric {metric} cannot be evaluated on the unmodified environment: {source}")]
    InitialEvaluation {
        metric: MetricKind,
        #[source]
        source: MetricError,
    },
    #[error(transparent)]
    Library(#[from] TopqError),
    #[error(transparent)]
    Planner(#[from] crate::planner::PlannerError),
    #[error("{count} removal sets exceed the brute-force cap of {cap}")]
    CombinatorialBlowup { count: u64, cap: u64 },
}

/// Which actions GER may remove.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModificationScope {
    /// Library actions for prefix metrics, every action for distance metrics.
    #[default]
    Pruned,
    /// Every ground action for every metric.
    AllActions,
}

/// A redesign problem: environment, metric and library parameters.
#[derive(Debug)]
pub struct RedesignTask {
    pub env: GroundEnvironment,
    pub metric: MetricKind,
    pub bound: Bound,
    pub plan_cap: usize,
    pub eval: EvalConfig,
    pub scope: ModificationScope,
    /// Planner expansion cap per query.
    pub node_limit: usize,
    /// Evaluate the children of a node on the rayon pool.
    pub parallel: bool,
}

impl RedesignTask {
    /// Checks that every goal is reachable from the initial state.
    pub fn new(
        env: GroundEnvironment,
        metric: MetricKind,
        bound: Bound,
        plan_cap: usize,
    ) -> Result<Self, RedesignError> {
        let task = RedesignTask {
            env,
            metric,
            bound,
            plan_cap: plan_cap.max(1),
            eval: EvalConfig::default(),
            scope: ModificationScope::default(),
            node_limit: DEFAULT_NODE_LIMIT,
            parallel: false,
        };
        let view = EnvView::full(&task.env);
        let reach = goals_reachable(
            &view,
            &State::initial(&task.env),
            &task.goal_refs(),
            task.node_limit,
        )?;
        if let Some(goal) = reach.iter().position(|r| !r) {
            return Err(RedesignError::UnreachableGoal { goal });
        }
        Ok(task)
    }

    pub fn with_plan_defaults(
        env: GroundEnvironment,
        metric: MetricKind,
    ) -> Result<Self, RedesignError> {
        RedesignTask::new(env, metric, Bound::OPTIMAL, DEFAULT_PLAN_CAP)
    }

    fn goal_refs(&self) -> Vec<&[FactId]> {
        (0..self.env.goals.len())
            .map(|g| self.env.goal(g))
            .collect()
    }

    fn new_cache(&self) -> HStarCache {
        HStarCache::new(self.node_limit)
    }

    /// The plan library of the unmodified environment.
    pub fn build_library(&self, cache: &HStarCache) -> Result<PlanLibrary, TopqError> {
        let goals: Vec<usize> = (0..self.env.goals.len()).collect();
        build_library(
            &EnvView::full(&self.env),
            &goals,
            self.bound,
            self.plan_cap,
            cache,
            self.parallel,
        )
    }
}

/// A canonical removal set A¬: strictly increasing action indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ModificationNode {
    pub removed: Vec<ActionId>,
}

impl ModificationNode {
    pub fn root() -> Self {
        ModificationNode::default()
    }

    pub fn depth(&self) -> usize {
        self.removed.len()
    }

    /// The set with `a` appended; `a` must exceed every current member.
    pub fn extend(&self, a: ActionId) -> Self {
        debug_assert!(self.removed.last().is_none_or(|&l| l < a));
        let mut removed = self.removed.clone();
        removed.push(a);
        ModificationNode { removed }
    }

    pub fn names(&self, env: &GroundEnvironment) -> Vec<String> {
        self.removed
            .iter()
            .map(|&a| env.action(a).name.clone())
            .collect()
    }
}

/// Composite stop condition; the search also ends when the open list empties.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StopCondition {
    pub time_limit: Option<Duration>,
    /// Expanded-node limit.
    pub node_limit: Option<u64>,
    /// Design budget: no node deeper than this is generated.
    pub max_removals: Option<usize>,
    /// Stop once m+ is at least this good.
    pub target: Option<MetricValue>,
}

impl StopCondition {
    pub fn exhaustive() -> Self {
        StopCondition::default()
    }

    pub fn budget(max_removals: usize) -> Self {
        StopCondition {
            max_removals: Some(max_removals),
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    OpenExhausted,
    TimeLimit,
    NodeLimit,
    TargetReached,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::OpenExhausted => "open-exhausted",
            StopReason::TimeLimit => "time-limit",
            StopReason::NodeLimit => "node-limit",
            StopReason::TargetReached => "target-reached",
        }
    }

    /// Whether the search was cut short rather than finishing its space.
    pub fn is_interrupted(self) -> bool {
        matches!(self, StopReason::TimeLimit | StopReason::NodeLimit)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub elapsed: Duration,
    pub nodes_expanded: u64,
    pub value: MetricValue,
    pub removals: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_generated: u64,
    pub nodes_expanded: u64,
    /// Generated nodes under which some goal became unreachable.
    pub invalid_pruned: u64,
    /// Generated nodes whose distance evaluation stranded a secondary goal or
    /// hit a planner limit; kept in open but never a solution.
    pub unevaluable: u64,
    /// Subsets the naive `s ∪ {a}` successor rule would regenerate.
    pub duplicates_skipped: u64,
    /// Nodes whose metric was degenerate and valued 0.
    pub degenerate: u64,
    /// Largest open-list length observed.
    pub peak_open: u64,
    pub allowed_actions: usize,
}

#[derive(Clone, Debug)]
pub struct RedesignOutcome {
    pub metric: MetricKind,
    pub m0: MetricValue,
    pub m_plus: MetricValue,
    /// Best removal sets, all of the same size, in generation order.
    pub solutions: Vec<ModificationNode>,
    pub solution_names: Vec<Vec<String>>,
    /// Starts with m0 at zero removals; one entry per strict improvement.
    pub trace: Vec<TraceEvent>,
    pub stats: SearchStats,
    pub library_truncated: bool,
    pub stop_reason: StopReason,
    pub time_to_best: Duration,
    pub elapsed: Duration,
}

impl RedesignOutcome {
    pub fn improved(&self) -> bool {
        is_better(self.metric, self.m_plus, self.m0)
    }
}

/// Actions GER may remove, in index order.
pub fn allowed_modifications(task: &RedesignTask, lib: &PlanLibrary) -> Vec<ActionId> {
    if task.scope == ModificationScope::Pruned && task.metric.is_prefix_metric() {
        lib.used_actions.clone()
    } else {
        task.env.action_ids().collect()
    }
}

/// Every goal is still reachable from I. Planner limits count as invalid.
pub fn is_valid(view: &EnvView, node_limit: usize) -> bool {
    let env = view.env;
    let goals: Vec<&[FactId]> = (0..env.goals.len()).map(|g| env.goal(g)).collect();
    match goals_reachable(view, &State::initial(env), &goals, node_limit) {
        Ok(r) => r.into_iter().all(|b| b),
        Err(_) => false,
    }
}

/// [`is_valid`], answered from the library where possible: a goal that
/// still has a surviving cached plan is reachable without search.
fn is_valid_with_library(view: &EnvView, lib: &PlanLibrary, node_limit: usize) -> bool {
    let env = view.env;
    let pending: Vec<&[FactId]> = (0..env.goals.len())
        .filter(|&g| {
            !lib.per_goal
                .iter()
                .filter(|set| set.goal == g)
                .flat_map(|set| set.plans.iter())
                .any(|p| p.actions.iter().all(|&a| !view.is_removed(a)))
        })
        .map(|g| env.goal(g))
        .collect();
    if pending.is_empty() {
        return true;
    }
    match goals_reachable(view, &State::initial(env), &pending, node_limit) {
        Ok(r) => r.into_iter().all(|b| b),
        Err(_) => false,
    }
}

enum NodeEval {
    Invalid,
    Unevaluable,
    Value {
        value: MetricValue,
        degenerate: bool,
    },
}

fn eval_node(
    task: &RedesignTask,
    lib: &PlanLibrary,
    node: &ModificationNode,
    cache: &HStarCache,
) -> NodeEval {
    let view = EnvView::new(&task.env, node.removed.clone());
    if !is_valid_with_library(&view, lib, task.node_limit) {
        return NodeEval::Invalid;
    }
    let r = evaluate(task.metric, &view, lib, cache, &task.eval);
    cache.forget(&node.removed);
    match r {
        Ok(value) => NodeEval::Value {
            value,
            degenerate: false,
        },
        Err(e) if e.is_degenerate() => NodeEval::Value {
            value: MetricValue::from_int(0),
            degenerate: true,
        },
        Err(_) => NodeEval::Unevaluable,
    }
}

fn naive_duplicates(allowed: &[ActionId], node: &ModificationNode) -> u64 {
    let Some(&last) = node.removed.last() else {
        return 0;
    };
    let below = allowed.partition_point(|&a| a < last) as u64;
    below - (node.depth() as u64 - 1)
}

/// Anytime breadth-first redesign search.
pub fn ger_search(
    task: &RedesignTask,
    stop: &StopCondition,
) -> Result<RedesignOutcome, RedesignError> {
    let start = Instant::now();
    let cache = task.new_cache();
    let lib = task.build_library(&cache)?;
    ger_search_with_library(task, &lib, &cache, stop, start)
}

/// [`ger_search`] over a prebuilt library. `start` anchors the clock.
pub fn ger_search_with_library(
    task: &RedesignTask,
    lib: &PlanLibrary,
    cache: &HStarCache,
    stop: &StopCondition,
    start: Instant,
) -> Result<RedesignOutcome, RedesignError> {
    let metric = task.metric;
    let root = ModificationNode::root();
    let m0 = evaluate(metric, &EnvView::full(&task.env), lib, cache, &task.eval)
        .map_err(|source| RedesignError::InitialEvaluation { metric, source })?;

    let allowed = allowed_modifications(task, lib);
    let mut stats = SearchStats {
        allowed_actions: allowed.len(),
        ..Default::default()
    };
    let mut m_plus = m0;
    let mut best = vec![root.clone()];
    let mut time_to_best = start.elapsed();
    let mut trace = vec![TraceEvent {
        elapsed: time_to_best,
        nodes_expanded: 0,
        value: m0,
        removals: 0,
    }];
    let mut open = VecDeque::from([root]);
    let budget = stop.max_removals.unwrap_or(usize::MAX);

    let timed_out = || stop.time_limit.is_some_and(|t| start.elapsed() >= t);
    let target_met = |m: MetricValue| stop.target.is_some_and(|t| reaches(metric, m, t));

    let reason = 'search: loop {
        if target_met(m_plus) {
            break StopReason::TargetReached;
        }
        if timed_out() {
            break StopReason::TimeLimit;
        }
        if stop.node_limit.is_some_and(|n| stats.nodes_expanded >= n) {
            break StopReason::NodeLimit;
        }
        let Some(node) = open.pop_front() else {
            break StopReason::OpenExhausted;
        };
        if node.depth() >= budget {
            continue;
        }
        stats.nodes_expanded += 1;
        stats.duplicates_skipped += naive_duplicates(&allowed, &node);
        let first = match node.removed.last() {
            Some(&last) => allowed.partition_point(|&a| a <= last),
            None => 0,
        };
        let children: Vec<ModificationNode> =
            allowed[first..].iter().map(|&a| node.extend(a)).collect();

        // With a worker pool, siblings are evaluated together and committed
        // in generation order; sequentially, the clock is checked per child.
        let evals: Vec<NodeEval> = if task.parallel {
            children
                .par_iter()
                .map(|c| eval_node(task, lib, c, cache))
                .collect()
        } else {
            Vec::new()
        };
        let mut evals = evals.into_iter();
        for child in children {
            let ev = if task.parallel {
                evals.next().expect("one evaluation per child")
            } else {
                if timed_out() {
                    break 'search StopReason::TimeLimit;
                }
                eval_node(task, lib, &child, cache)
            };
            stats.nodes_generated += 1;
            match ev {
                NodeEval::Invalid => {
                    stats.invalid_pruned += 1;
                    continue;
                }
                NodeEval::Unevaluable => stats.unevaluable += 1,
                NodeEval::Value { value, degenerate } => {
                    stats.degenerate += u64::from(degenerate);
                    if is_better(metric, value, m_plus) {
                        m_plus = value;
                        best = vec![child.clone()];
                        time_to_best = start.elapsed();
                        trace.push(TraceEvent {
                            elapsed: time_to_best,
                            nodes_expanded: stats.nodes_expanded,
                            value,
                            removals: child.depth(),
                        });
                    } else if value == m_plus && child.depth() == best[0].depth() {
                        best.push(child.clone());
                    }
                }
            }
            open.push_back(child);
            stats.peak_open = stats.peak_open.max(open.len() as u64);
        }
    };

    Ok(RedesignOutcome {
        metric,
        m0,
        m_plus,
        solution_names: best.iter().map(|n| n.names(&task.env)).collect(),
        solutions: best,
        trace,
        stats,
        library_truncated: lib.truncated(),
        stop_reason: reason,
        time_to_best,
        elapsed: start.elapsed(),
    })
}

/// Exhaustive oracle result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceResult {
    pub best: MetricValue,
    /// Every removal set of minimal size achieving `best`, in lexicographic order.
    pub witnesses: Vec<ModificationNode>,
    pub evaluated: u64,
}

fn binomial_sum(n: u64, k: usize, cap: u64) -> Option<u64> {
    // running C(n, i), starting from C(n, 0) = 1
    let mut total = 1u64;
    let mut c = 1u64;
    for i in 1..=(k as u64).min(n) {
        c = c.checked_mul(n - i + 1)? / i;
        total = total.checked_add(c)?;
        if total > cap {
            return None;
        }
    }
    (total <= cap).then_some(total)
}

/// Evaluates every valid subset of A with at most `max_removals` members,
/// rebuilding the plan library from scratch in each modified environment.
pub fn brute_force_redesign(
    task: &RedesignTask,
    max_removals: usize,
    cap: u64,
) -> Result<BruteForceResult, RedesignError> {
    let n = task.env.num_actions();
    if binomial_sum(n as u64, max_removals, cap).is_none() {
        return Err(RedesignError::CombinatorialBlowup {
            count: binomial_sum(n as u64, max_removals, u64::MAX).unwrap_or(u64::MAX),
            cap,
        });
    }
    let goals: Vec<usize> = (0..task.env.goals.len()).collect();
    let mut best: Option<MetricValue> = None;
    let mut witnesses: Vec<ModificationNode> = Vec::new();
    let mut evaluated = 0;
    let actions: Vec<ActionId> = task.env.action_ids().collect();

    for k in 0..=max_removals.min(n) {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let node = ModificationNode {
                removed: idx.iter().map(|&i| actions[i]).collect(),
            };
            let cache = task.new_cache();
            let view = EnvView::new(&task.env, node.removed.clone());
            if is_valid(&view, task.node_limit) {
                evaluated += 1;
                let value = build_library(&view, &goals, task.bound, task.plan_cap, &cache, false)
                    .map_err(MetricError::from)
                    .and_then(|lib| evaluate(task.metric, &view, &lib, &cache, &task.eval));
                let value = match value {
                    Ok(v) => Some(v),
                    Err(e) if e.is_degenerate() => Some(MetricValue::from_int(0)),
                    Err(_) => None,
                };
                if let Some(v) = value {
                    match best {
                        Some(b) if is_better(task.metric, v, b) => {
                            best = Some(v);
                            witnesses = vec![node];
                        }
                        Some(b) if v == b && witnesses[0].depth() == k => witnesses.push(node),
                        Some(_) => {}
                        None => {
                            best = Some(v);
                            witnesses = vec![node];
                        }
                    }
                }
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
    }
    let best = best.ok_or(RedesignError::InitialEvaluation {
        metric: task.metric,
        source: MetricError::DegenerateGoalCount(0),
    })?;
    Ok(BruteForceResult {
        best,
        witnesses,
        evaluated,
    })
}

/// Advances `idx` to the next k-combination of 0..n in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
