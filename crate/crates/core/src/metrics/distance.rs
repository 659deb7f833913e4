//! avgD / maxD / minD: optimal-cost distances from the states visited by
//! the true goal's plans to the secondary goals.

use std::collections::BTreeSet;

use num_rational::Ratio;

use super::{MetricError, MetricValue};
use crate::pddl::FactId;
use crate::planner::{h_star, EnvView, HStarCache, State};
use crate::topq::Plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistanceKind {
    Avg,
    Max,
    Min,
}

/// Deduplicated union of every state visited by every plan, start and end
/// states included.
pub fn traversed_states<'p>(
    plans: impl IntoIterator<Item = &'p Plan>,
    view: &EnvView,
) -> Result<Vec<State>, MetricError> {
    let init = State::initial(view.env);
    let mut states = BTreeSet::from([init.clone()]);
    for p in plans {
        let visited = view
            .simulate(&init, &p.actions)
            .ok_or(MetricError::SimulationFailure)?;
        states.extend(visited);
    }
    Ok(states.into_iter().collect())
}

/// Aggregates h*(s, G) over every traversed state s and secondary goal G,
/// with h* measured in `h_view`.
pub fn distance_metric(
    kind: DistanceKind,
    h_view: &EnvView,
    states: &[State],
    secondary: &[&[FactId]],
    cache: &HStarCache,
) -> Result<MetricValue, MetricError> {
    if secondary.is_empty() {
        return Err(MetricError::DegenerateGoalCount(1));
    }
    let mut sum = 0u64;
    let mut max = 0u64;
    let mut min = u64::MAX;
    for s in states {
        for (i, g) in secondary.iter().enumerate() {
            let h = h_star(h_view, s, g, cache)?
                .ok_or(MetricError::UnreachableSecondary { secondary: i })?;
            sum += h;
            max = max.max(h);
            min = min.min(h);
        }
    }
    let pairs = (states.len() * secondary.len()) as u64;
    Ok(match kind {
        DistanceKind::Avg if pairs == 0 => MetricValue::from_int(0),
        DistanceKind::Avg => MetricValue::new(Ratio::new(sum, pairs)),
        DistanceKind::Max => MetricValue::from_int(max),
        DistanceKind::Min if pairs == 0 => MetricValue::from_int(0),
        DistanceKind::Min => MetricValue::from_int(min),
    })
}
