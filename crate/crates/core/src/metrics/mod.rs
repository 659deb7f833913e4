//! The eight redesign metrics and their exact values.

mod distance;
mod prefix;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distance::{distance_metric, traversed_states, DistanceKind};
pub use prefix::PrefixIndex;

use crate::pddl::FactId;
use crate::planner::{EnvView, HStarCache, PlannerError};
use crate::topq::{
    enumerate_plans, filter_library, FilteredLibrary, GoalPlanSet, Plan, PlanLibrary, TopqError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("metric needs at least two goals with plans, found {0}")]
    DegenerateGoalCount(usize),
    #[error("metric needs at least two distinct plans, found {0}")]
    DegeneratePlanCount(usize),
    #[error("secondary goal {secondary} is unreachable from a traversed state")]
    UnreachableSecondary { secondary: usize },
    #[error("a cached plan is no longer applicable")]
    SimulationFailure,
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Topq(#[from] TopqError),
    #[error("unknown metric `{0}` (expected one of gt, pt, gp, pp, min-avg-d, max-avg-d, min-max-d, max-min-d)")]
    UnknownMetric(String),
}

impl MetricError {
    /// Pair-based metrics with too few goals or plans; valued 0 by convention.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            MetricError::DegenerateGoalCount(_) | MetricError::DegeneratePlanCount(_)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Goal transparency: minimize wcd.
    GoalTransparency,
    /// Plan transparency: minimize wcpd.
    PlanTransparency,
    /// Goal privacy: maximize wcnd.
    GoalPrivacy,
    /// Plan privacy: maximize wcpnd.
    PlanPrivacy,
    MinAvgDistance,
    MaxAvgDistance,
    MinMaxDistance,
    MaxMinDistance,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::GoalTransparency,
        MetricKind::PlanTransparency,
        MetricKind::GoalPrivacy,
        MetricKind::PlanPrivacy,
        MetricKind::MinAvgDistance,
        MetricKind::MaxAvgDistance,
        MetricKind::MinMaxDistance,
        MetricKind::MaxMinDistance,
    ];

    pub fn direction(self) -> Direction {
        use MetricKind::*;
        match self {
            GoalTransparency | PlanTransparency | MinAvgDistance | MinMaxDistance => {
                Direction::Minimize
            }
            GoalPrivacy | PlanPrivacy | MaxAvgDistance | MaxMinDistance => Direction::Maximize,
        }
    }

    /// Metrics computed from plan prefixes only; actions outside the plan
    /// library cannot change them.
    pub fn is_prefix_metric(self) -> bool {
        use MetricKind::*;
        matches!(
            self,
            GoalTransparency | PlanTransparency | GoalPrivacy | PlanPrivacy
        )
    }

    pub fn distance_kind(self) -> Option<DistanceKind> {
        use MetricKind::*;
        match self {
            MinAvgDistance | MaxAvgDistance => Some(DistanceKind::Avg),
            MinMaxDistance => Some(DistanceKind::Max),
            MaxMinDistance => Some(DistanceKind::Min),
            _ => None,
        }
    }

    pub fn cli_name(self) -> &'static str {
        use MetricKind::*;
        match self {
            GoalTransparency => "gt",
            PlanTransparency => "pt",
            GoalPrivacy => "gp",
            PlanPrivacy => "pp",
            MinAvgDistance => "min-avg-d",
            MaxAvgDistance => "max-avg-d",
            MinMaxDistance => "min-max-d",
            MaxMinDistance => "max-min-d",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        MetricKind::ALL
            .into_iter()
            .find(|m| m.cli_name() == lower)
            .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

/// Exact metric value. Prefix metrics are integers; distance averages are
/// fractions kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetricValue(Ratio<u64>);

impl MetricValue {
    pub fn new(r: Ratio<u64>) -> Self {
        MetricValue(r)
    }

    pub fn from_int(v: u64) -> Self {
        MetricValue(Ratio::from_integer(v))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Decimal rendering rounded to six places, e.g. `3.857143`.
    pub fn decimal(&self) -> String {
        if self.denom() == 1 {
            return self.numer().to_string();
        }
        format!("{:.6}", self.to_f64())
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for MetricValue {
    type Err = String;

    /// Accepts `4`, `27/7`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad =
            || format!("invalid metric value `{s}` (expected an integer or a fraction like 27/7)");
        match s.trim().split_once('/') {
            Some((n, d)) => {
                let n: u64 = n.trim().parse().map_err(|_| bad())?;
                let d: u64 = d.trim().parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Ok(MetricValue(Ratio::new(n, d)))
            }
            None => s
                .trim()
                .parse()
                .map(MetricValue::from_int)
                .map_err(|_| bad()),
        }
    }
}

/// Strictly better in the metric's direction. No tolerance.
pub fn is_better(metric: MetricKind, candidate: MetricValue, incumbent: MetricValue) -> bool {
    match metric.direction() {
        Direction::Minimize => candidate.cmp(&incumbent) == Ordering::Less,
        Direction::Maximize => candidate.cmp(&incumbent) == Ordering::Greater,
    }
}

/// Better than or equal to `target` in the metric's direction.
pub fn reaches(metric: MetricKind, value: MetricValue, target: MetricValue) -> bool {
    value == target || is_better(metric, value, target)
}

/// Environment in which distance metrics measure h*(s, G).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceView {
    /// The unmodified environment: only the true goal's plans move.
    #[default]
    Original,
    /// The redesigned environment with the removals applied.
    Redesigned,
}

impl FromStr for DistanceView {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(DistanceView::Original),
            "redesigned" => Ok(DistanceView::Redesigned),
            other => Err(format!(
                "unknown distance view `{other}` (expected original or redesigned)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalConfig {
    /// Use the filtered cached library as-is, never re-enumerating goals
    /// whose bounded plan set may have changed.
    pub literal_library: bool,
    pub distance_view: DistanceView,
}

/// Fresh plan sets for the stale goals among `positions`, unless the config
/// asks for the literal library.
fn reenumerate_stale(
    view: &EnvView,
    filtered: &FilteredLibrary,
    positions: &[usize],
    cache: &HStarCache,
    config: &EvalConfig,
) -> Result<Vec<(usize, GoalPlanSet)>, MetricError> {
    if config.literal_library {
        return Ok(Vec::new());
    }
    let lib = filtered.library;
    positions
        .iter()
        .filter(|pos| filtered.stale.contains(pos))
        .map(|&pos| {
            let goal = lib.per_goal[pos].goal;
            Ok((pos, enumerate_plans(view, goal, lib.bound, lib.cap, cache)?))
        })
        .collect()
}

/// Value of `metric` for the environment seen through `view`, using `lib`
/// (built on the unmodified environment) as the plan cache.
pub fn evaluate(
    metric: MetricKind,
    view: &EnvView,
    lib: &PlanLibrary,
    cache: &HStarCache,
    config: &EvalConfig,
) -> Result<MetricValue, MetricError> {
    let env = view.env;
    let filtered = filter_library(lib, view);
    let positions: Vec<usize> = match metric.distance_kind() {
        Some(_) => vec![lib
            .per_goal
            .iter()
            .position(|g| g.goal == env.true_goal)
            .ok_or(MetricError::DegenerateGoalCount(lib.per_goal.len()))?],
        None => (0..lib.per_goal.len()).collect(),
    };
    let fresh = reenumerate_stale(view, &filtered, &positions, cache, config)?;
    let plans_of = |pos: usize| -> Vec<&Plan> {
        match fresh.iter().find(|(p, _)| *p == pos) {
            Some((_, set)) => set.plans.iter().collect(),
            None => filtered.plans(pos).collect(),
        }
    };

    if let Some(kind) = metric.distance_kind() {
        let states = traversed_states(plans_of(positions[0]), view)?;
        let secondary: Vec<&[FactId]> = env.secondary_goals().map(|g| env.goal(g)).collect();
        let full;
        let h_view = match config.distance_view {
            DistanceView::Redesigned => view,
            DistanceView::Original => {
                full = EnvView::full(env);
                &full
            }
        };
        return distance_metric(kind, h_view, &states, &secondary, cache);
    }

    let sets: Vec<Vec<&Plan>> = positions.iter().map(|&pos| plans_of(pos)).collect();
    let index = PrefixIndex::build(sets.iter().map(|s| s.iter().map(|p| p.actions.as_slice())));
    match metric {
        MetricKind::GoalTransparency => index.wcd(),
        MetricKind::PlanTransparency => index.wcpd(),
        MetricKind::GoalPrivacy => index.wcnd(),
        MetricKind::PlanPrivacy => index.wcpnd(),
        _ => unreachable!("distance metrics handled above"),
    }
}
