//! Machine-readable run report.
//!
//! Everything except the `timing` block and the per-event `elapsed_s` in
//! `trace` is deterministic for a deterministic stop condition.

use serde::{Deserialize, Serialize};

use crate::metrics::{Direction, MetricValue};
use crate::redesign::{RedesignOutcome, RedesignTask};
use crate::topq::PlanLibrary;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueJson {
    pub num: u64,
    pub den: u64,
    pub decimal: String,
}

impl From<MetricValue> for ValueJson {
    fn from(v: MetricValue) -> Self {
        ValueJson {
            num: v.numer(),
            den: v.denom(),
            decimal: v.decimal(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFiles {
    pub domain: Option<String>,
    pub problem: Option<String>,
    pub goals: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSection {
    pub files: TaskFiles,
    pub metric: String,
    pub bound: String,
    pub plan_cap: usize,
    pub max_removals: Option<usize>,
    pub literal_library: bool,
    pub distance_view: String,
    pub modification_scope: String,
    pub num_actions: usize,
    pub num_goals: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalEntry {
    pub goal: usize,
    pub atoms: Vec<String>,
    pub optimal_cost: u64,
    pub plan_count: usize,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibrarySection {
    pub per_goal: Vec<GoalEntry>,
    pub used_actions: usize,
    pub allowed_actions: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultSection {
    pub m0: ValueJson,
    pub m_plus: ValueJson,
    pub direction: Direction,
    pub improved: bool,
    pub removals: usize,
    pub solutions: Vec<Vec<String>>,
    pub stop_reason: String,
    /// Some goal's plan set hit the cap; optimality is then not guaranteed.
    pub library_truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub elapsed_s: f64,
    pub nodes_expanded: u64,
    pub metric_value: ValueJson,
    pub removals: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsSection {
    pub nodes_generated: u64,
    pub nodes_expanded: u64,
    pub invalid_pruned: u64,
    pub duplicates_skipped: u64,
    pub unevaluable: u64,
    pub degenerate: u64,
    pub peak_open: u64,
    pub hstar_cache_hits: u64,
    pub hstar_cache_misses: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSection {
    pub total_s: f64,
    pub time_to_best_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: TaskSection,
    pub library: LibrarySection,
    pub result: ResultSection,
    pub trace: Vec<TraceEntry>,
    pub stats: StatsSection,
    pub timing: TimingSection,
}

/// Inputs that live outside the outcome itself.
#[derive(Clone, Debug, Default)]
pub struct ReportContext {
    pub files: TaskFiles,
    pub max_removals: Option<usize>,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

impl Report {
    pub fn new(
        task: &RedesignTask,
        lib: &PlanLibrary,
        out: &RedesignOutcome,
        ctx: ReportContext,
    ) -> Self {
        let env = &task.env;
        Report {
            task: TaskSection {
                files: ctx.files,
                metric: task.metric.cli_name().to_string(),
                bound: task.bound.to_string(),
                plan_cap: task.plan_cap,
                max_removals: ctx.max_removals,
                literal_library: task.eval.literal_library,
                distance_view: format!("{:?}", task.eval.distance_view).to_lowercase(),
                modification_scope: match task.scope {
                    crate::redesign::ModificationScope::Pruned => "pruned".into(),
                    crate::redesign::ModificationScope::AllActions => "all".into(),
                },
                num_actions: env.num_actions(),
                num_goals: env.goals.len(),
            },
            library: LibrarySection {
                per_goal: lib
                    .per_goal
                    .iter()
                    .map(|g| GoalEntry {
                        goal: g.goal,
                        atoms: env
                            .goal(g.goal)
                            .iter()
                            .map(|f| env.facts[f.index()].to_string())
                            .collect(),
                        optimal_cost: g.optimal_cost,
                        plan_count: g.plans.len(),
                        truncated: g.truncated,
                    })
                    .collect(),
                used_actions: lib.used_actions.len(),
                allowed_actions: out.stats.allowed_actions,
            },
            result: ResultSection {
                m0: out.m0.into(),
                m_plus: out.m_plus.into(),
                direction: task.metric.direction(),
                improved: out.improved(),
                removals: out.solutions.first().map_or(0, |s| s.depth()),
                solutions: out.solution_names.clone(),
                stop_reason: out.stop_reason.as_str().to_string(),
                library_truncated: out.library_truncated,
            },
            trace: out
                .trace
                .iter()
                .map(|e| TraceEntry {
                    elapsed_s: e.elapsed.as_secs_f64(),
                    nodes_expanded: e.nodes_expanded,
                    metric_value: e.value.into(),
                    removals: e.removals,
                })
                .collect(),
            stats: StatsSection {
                nodes_generated: out.stats.nodes_generated,
                nodes_expanded: out.stats.nodes_expanded,
                invalid_pruned: out.stats.invalid_pruned,
                duplicates_skipped: out.stats.duplicates_skipped,
                unevaluable: out.stats.unevaluable,
                degenerate: out.stats.degenerate,
                peak_open: out.stats.peak_open,
                hstar_cache_hits: ctx.cache_hits,
                hstar_cache_misses: ctx.cache_misses,
            },
            timing: TimingSection {
                total_s: out.elapsed.as_secs_f64(),
                time_to_best_s: out.time_to_best.as_secs_f64(),
            },
        }
    }

    /// Copy with every wall-clock field zeroed, for byte-level comparison.
    pub fn without_timestamps(&self) -> Self {
        let mut r = self.clone();
        r.timing = TimingSection {
            total_s: 0.0,
            time_to_best_s: 0.0,
        };
        for e in &mut r.trace {
            e.elapsed_s = 0.0;
        }
        r
    }
}
