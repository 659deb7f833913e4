//! Independent oracles that work directly on the grid graph: simple-path
//! enumeration, pairwise prefix comparisons and BFS distances. None of them
//! touch the planner, the enumerator or the prefix trie.
#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeSet, HashMap, VecDeque};

use envredesign::bench::{random_grid, Cell, GridSpec};
use envredesign::metrics::{DistanceKind, MetricKind};
use envredesign::pddl::{ActionId, GroundEnvironment};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Move = (Cell, Cell);

pub struct Grid {
    pub spec: GridSpec,
    pub env: GroundEnvironment,
    /// directed moves still available
    pub moves: BTreeSet<Move>,
}

fn neighbours(spec: &GridSpec, (x, y): Cell) -> Vec<Cell> {
    let mut v = Vec::new();
    if x > 0 {
        v.push((x - 1, y));
    }
    v.push((x + 1, y));
    if y > 0 {
        v.push((x, y - 1));
    }
    v.push((x, y + 1));
    v.into_iter().filter(|c| spec.is_free(*c)).collect()
}

impl Grid {
    pub fn new(spec: GridSpec) -> Self {
        let env = spec.ground().unwrap();
        let mut moves = BTreeSet::new();
        for x in 0..spec.width {
            for y in 0..spec.height {
                if spec.is_free((x, y)) {
                    for n in neighbours(&spec, (x, y)) {
                        moves.insert(((x, y), n));
                    }
                }
            }
        }
        Grid { spec, env, moves }
    }

    pub fn action(&self, m: Move) -> ActionId {
        let name = format!(
            "(move {} {})",
            self.spec.cell_name(m.0),
            self.spec.cell_name(m.1)
        );
        self.env.action_by_name(&name).expect("move exists")
    }

    pub fn moves_of(&self, removed: &[ActionId]) -> BTreeSet<Move> {
        self.moves
            .iter()
            .copied()
            .filter(|m| !removed.contains(&self.action(*m)))
            .collect()
    }

    pub fn to_actions(&self, path: &[Cell]) -> Vec<ActionId> {
        path.windows(2).map(|w| self.action((w[0], w[1]))).collect()
    }
}

/// BFS distance in the directed move graph.
pub fn distance(moves: &BTreeSet<Move>, from: Cell, to: Cell) -> Option<u64> {
    let mut adj: HashMap<Cell, Vec<Cell>> = HashMap::new();
    for &(a, b) in moves {
        adj.entry(a).or_default().push(b);
    }
    let mut dist = HashMap::from([(from, 0u64)]);
    let mut q = VecDeque::from([from]);
    while let Some(c) = q.pop_front() {
        if c == to {
            return Some(dist[&c]);
        }
        for &n in adj.get(&c).into_iter().flatten() {
            if !dist.contains_key(&n) {
                dist.insert(n, dist[&c] + 1);
                q.push_back(n);
            }
        }
    }
    None
}

/// Every simple path from `from` to `to` with at most `max_len` moves.
/// In the grid domain a state is a cell, so these are the loop-less plans.
pub fn simple_paths(moves: &BTreeSet<Move>, from: Cell, to: Cell, max_len: u64) -> Vec<Vec<Cell>> {
    let mut adj: HashMap<Cell, Vec<Cell>> = HashMap::new();
    for &(a, b) in moves {
        adj.entry(a).or_default().push(b);
    }
    let mut out = Vec::new();
    let mut path = vec![from];
    fn go(
        adj: &HashMap<Cell, Vec<Cell>>,
        to: Cell,
        max_len: u64,
        path: &mut Vec<Cell>,
        out: &mut Vec<Vec<Cell>>,
    ) {
        let cur = *path.last().unwrap();
        if cur == to {
            out.push(path.clone());
        }
        if path.len() as u64 > max_len {
            return;
        }
        for &n in adj.get(&cur).into_iter().flatten() {
            if !path.contains(&n) {
                path.push(n);
                go(adj, to, max_len, path, out);
                path.pop();
            }
        }
    }
    go(&adj, to, max_len, &mut path, &mut out);
    out
}

/// Bounded plan set of one goal: simple paths with cost ≤ ⌊b·c*⌋.
pub fn bounded_paths(
    moves: &BTreeSet<Move>,
    from: Cell,
    to: Cell,
    bound: Ratio<u64>,
) -> Option<Vec<Vec<Cell>>> {
    let c = distance(moves, from, to)?;
    let limit = (bound * c).to_integer();
    Some(simple_paths(moves, from, to, limit))
}

fn lcp<T: PartialEq>(a: &[T], b: &[T]) -> u64 {
    a.iter().zip(b).take_while(|(x, y)| x == y).count() as u64
}

/// Plans as action sequences, grouped per goal.
pub type PlanSets = Vec<Vec<Vec<ActionId>>>;

pub fn oracle_wcd(sets: &PlanSets) -> Option<u64> {
    let nonempty = sets.iter().filter(|s| !s.is_empty()).count();
    if nonempty < 2 {
        return None;
    }
    let mut best = 0;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            for a in &sets[i] {
                for b in &sets[j] {
                    best = best.max(lcp(a, b));
                }
            }
        }
    }
    Some(best)
}

fn distinct(sets: &PlanSets) -> Vec<&Vec<ActionId>> {
    let all: BTreeSet<&Vec<ActionId>> = sets.iter().flatten().collect();
    all.into_iter().collect()
}

pub fn oracle_wcpd(sets: &PlanSets) -> Option<u64> {
    let plans = distinct(sets);
    if plans.len() < 2 {
        return None;
    }
    let mut best = 0;
    for i in 0..plans.len() {
        for j in i + 1..plans.len() {
            best = best.max(lcp(plans[i], plans[j]));
        }
    }
    Some(best)
}

pub fn oracle_wcpnd(sets: &PlanSets) -> Option<u64> {
    let plans = distinct(sets);
    if plans.len() < 2 {
        return None;
    }
    let mut best = u64::MAX;
    for i in 0..plans.len() {
        for j in i + 1..plans.len() {
            best = best.min(lcp(plans[i], plans[j]));
        }
    }
    Some(best)
}

fn prefixes(set: &[Vec<ActionId>], n: usize) -> BTreeSet<&[ActionId]> {
    set.iter()
        .filter(|p| p.len() >= n)
        .map(|p| &p[..n])
        .collect()
}

pub fn oracle_wcnd(sets: &PlanSets) -> Option<u64> {
    let nonempty = sets.iter().filter(|s| !s.is_empty()).count();
    if sets.len() < 2 || nonempty < 2 {
        return None;
    }
    let mut best = u64::MAX;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let cap = sets[i]
                .iter()
                .chain(&sets[j])
                .map(Vec::len)
                .max()
                .unwrap_or(0);
            let agree = (1..=cap)
                .find(|&n| prefixes(&sets[i], n) != prefixes(&sets[j], n))
                .map_or(cap, |n| n - 1);
            best = best.min(agree as u64);
        }
    }
    Some(best)
}

/// (sum, count, max, min) of BFS distances from every cell on the true
/// goal's paths to every secondary goal cell.
pub fn oracle_distances(
    dist_moves: &BTreeSet<Move>,
    true_paths: &[Vec<Cell>],
    start: Cell,
    secondary: &[Cell],
) -> Option<(u64, u64, u64, u64)> {
    let mut cells: BTreeSet<Cell> = true_paths.iter().flatten().copied().collect();
    cells.insert(start);
    let (mut sum, mut count, mut max, mut min) = (0, 0, 0, u64::MAX);
    for &c in &cells {
        for &g in secondary {
            let d = distance(dist_moves, c, g)?;
            sum += d;
            count += 1;
            max = max.max(d);
            min = min.min(d);
        }
    }
    Some((sum, count, max, min))
}

/// Metric value of the grid with `removed` cut, computed from fresh bounded
/// path sets (prefix metrics) or BFS distances in the original grid
/// (distance metrics). `None` when a goal is unreachable or the metric is
/// degenerate.
pub fn oracle_metric(
    grid: &Grid,
    metric: MetricKind,
    removed: &[ActionId],
    bound: Ratio<u64>,
) -> Option<Ratio<u64>> {
    let moves = grid.moves_of(removed);
    let spec = &grid.spec;
    let mut paths = Vec::new();
    for &g in &spec.goals {
        paths.push(bounded_paths(&moves, spec.start, g, bound)?);
    }
    if let Some(kind) = metric.distance_kind() {
        let (sum, count, max, min) =
            oracle_distances(&grid.moves, &paths[0], spec.start, &spec.goals[1..])?;
        return match kind {
            DistanceKind::Avg => Some(Ratio::new(sum, count)),
            DistanceKind::Max => Some(Ratio::from_integer(max)),
            DistanceKind::Min => Some(Ratio::from_integer(min)),
        };
    }
    let sets: PlanSets = paths
        .iter()
        .map(|ps| ps.iter().map(|p| grid.to_actions(p)).collect())
        .collect();
    let v = match metric {
        MetricKind::GoalTransparency => oracle_wcd(&sets),
        MetricKind::PlanTransparency => oracle_wcpd(&sets),
        MetricKind::GoalPrivacy => oracle_wcnd(&sets),
        MetricKind::PlanPrivacy => oracle_wcpnd(&sets),
        _ => unreachable!(),
    }?;
    Some(Ratio::from_integer(v))
}

/// A reproducible small random grid: sides 2..=max_side, 2–3 goals.
pub fn small_grid(seed: u64, max_side: u32) -> GridSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let w = rng.gen_range(2..=max_side);
        let h = rng.gen_range(2..=max_side);
        let goals = rng.gen_range(2..=3usize).min((w * h - 1) as usize);
        let density = if rng.gen_bool(0.5) { 0.0 } else { 0.2 };
        if let Ok(spec) = random_grid(w, h, goals, density, rng.gen()) {
            return spec;
        }
    }
}

/// A random subset of `pool` with at most `max` members, sorted.
pub fn random_subset(rng: &mut impl Rng, pool: &[ActionId], max: usize) -> Vec<ActionId> {
    let k = rng.gen_range(0..=max.min(pool.len()));
    let mut picked: Vec<ActionId> = rand::seq::index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort();
    picked
}
