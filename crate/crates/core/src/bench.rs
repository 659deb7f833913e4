//! Grid-navigation task generator: the 5×5 running example plus seeded
//! random grids.
//!
//! Coordinates are `(x, y)` with `y` growing upward. Every ordered pair of
//! adjacent free cells gets its own directed `move` action, so a single
//! direction of travel can be removed.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pddl::{self, GroundEnvironment, PddlError};

pub type Cell = (u32, u32);

pub const MAX_BLOCK_DENSITY: f64 = 0.4;
const RANDOM_RETRIES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("could not generate a grid with all goals reachable after {0} attempts")]
    GenerationFailure(usize),
}

pub const GRID_DOMAIN: &str = "(define (domain grid)
  (:requirements :strips :typing)
  (:types cell)
  (:predicates (at ?c - cell) (adjacent ?from ?to - cell))
  (:action move
    :parameters (?from ?to - cell)
    :precondition (and (at ?from) (adjacent ?from ?to))
    :effect (and (at ?to) (not (at ?from)))))
";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    pub start: Cell,
    /// First goal is the true goal.
    pub goals: Vec<Cell>,
    pub blocked: BTreeSet<Cell>,
    pub seed: u64,
}

/// The four text artifacts of a generated task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedTask {
    pub domain: String,
    pub problem: String,
    pub goals: String,
    /// `object-name x y` per cell.
    pub sidecar: String,
}

/// The 5×5 open grid: start (2,0), goals (0,4) and (4,4).
pub fn running_example() -> GridSpec {
    GridSpec::open(5, 5, (2, 0), vec![(0, 4), (4, 4)])
}

impl GridSpec {
    pub fn open(width: u32, height: u32, start: Cell, goals: Vec<Cell>) -> Self {
        GridSpec {
            width,
            height,
            start,
            goals,
            blocked: BTreeSet::new(),
            seed: 0,
        }
    }

    pub fn cell_name(&self, (x, y): Cell) -> String {
        if self.width <= 10 && self.height <= 10 {
            format!("c{x}{y}")
        } else {
            format!("c{x}_{y}")
        }
    }

    fn in_bounds(&self, (x, y): Cell) -> bool {
        x < self.width && y < self.height
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked.contains(&c)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!(
                "size {}x{} must be positive",
                self.width, self.height
            ));
        }
        if self.goals.is_empty() {
            return bad("at least one goal is required".into());
        }
        if !self.is_free(self.start) {
            return bad(format!(
                "start {:?} is blocked or out of bounds",
                self.start
            ));
        }
        for (i, g) in self.goals.iter().enumerate() {
            if !self.is_free(*g) {
                return bad(format!("goal {g:?} is blocked or out of bounds"));
            }
            if self.goals[..i].contains(g) {
                return bad(format!("goal {g:?} listed twice"));
            }
        }
        Ok(())
    }

    fn neighbours(&self, (x, y): Cell) -> impl Iterator<Item = Cell> + '_ {
        let cand = [
            x.checked_sub(1).map(|nx| (nx, y)),
            Some((x + 1, y)),
            y.checked_sub(1).map(|ny| (x, ny)),
            Some((x, y + 1)),
        ];
        cand.into_iter().flatten().filter(|c| self.is_free(*c))
    }

    /// Whether every goal can be reached from the start.
    pub fn goals_reachable(&self) -> bool {
        let mut seen = BTreeSet::from([self.start]);
        let mut queue = VecDeque::from([self.start]);
        while let Some(c) = queue.pop_front() {
            for n in self.neighbours(c) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        self.goals.iter().all(|g| seen.contains(g))
    }

    fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.width).flat_map(move |x| (0..self.height).map(move |y| (x, y)))
    }

    pub fn generate(&self) -> Result<GeneratedTask, BenchError> {
        self.validate()?;
        let mut problem = String::new();
        writeln!(
            problem,
            "(define (problem grid-{}x{})",
            self.width, self.height
        )
        .unwrap();
        writeln!(problem, "  (:domain grid)").unwrap();
        let names: Vec<String> = self.cells().map(|c| self.cell_name(c)).collect();
        writeln!(problem, "  (:objects {} - cell)", names.join(" ")).unwrap();
        writeln!(problem, "  (:init").unwrap();
        writeln!(problem, "    (at {})", self.cell_name(self.start)).unwrap();
        for c in self.cells().filter(|c| self.is_free(*c)) {
            for n in self.neighbours(c) {
                writeln!(
                    problem,
                    "    (adjacent {} {})",
                    self.cell_name(c),
                    self.cell_name(n)
                )
                .unwrap();
            }
        }
        writeln!(problem, "  )").unwrap();
        writeln!(problem, "  (:goal (at {})))", self.cell_name(self.goals[0])).unwrap();

        let mut goals = String::new();
        for g in &self.goals {
            writeln!(goals, "(at {})", self.cell_name(*g)).unwrap();
        }

        let mut sidecar = String::new();
        for c in self.cells() {
            writeln!(sidecar, "{} {} {}", self.cell_name(c), c.0, c.1).unwrap();
        }

        Ok(GeneratedTask {
            domain: GRID_DOMAIN.to_string(),
            problem,
            goals,
            sidecar,
        })
    }

    /// Generates, parses and grounds the task.
    pub fn ground(&self) -> Result<GroundEnvironment, GridTaskError> {
        let task = self.generate()?;
        Ok(task.ground()?)
    }
}

impl GeneratedTask {
    pub fn ground(&self) -> Result<GroundEnvironment, PddlError> {
        let d = pddl::parse_domain(&self.domain)?;
        let p = pddl::parse_problem(&self.problem, &d)?;
        let g = pddl::parse_goals(&self.goals, &d, &p)?;
        pddl::ground(&d, &p, &g)
    }
}

#[derive(Debug, Error)]
pub enum GridTaskError {
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// Seeded random grid: blocked cells drawn with probability `density`,
/// start and goals drawn from free cells, redrawn until all goals are
/// reachable.
pub fn random_grid(
    width: u32,
    height: u32,
    n_goals: usize,
    density: f64,
    seed: u64,
) -> Result<GridSpec, BenchError> {
    if width == 0 || height == 0 {
        return Err(BenchError::InvalidSpec(format!(
            "size {width}x{height} must be positive"
        )));
    }
    if !(0.0..=MAX_BLOCK_DENSITY).contains(&density) {
        return Err(BenchError::InvalidSpec(format!(
            "block density {density} outside [0, {MAX_BLOCK_DENSITY}]"
        )));
    }
    if n_goals == 0 || n_goals as u64 + 1 > width as u64 * height as u64 {
        return Err(BenchError::InvalidSpec(format!(
            "{n_goals} goal(s) do not fit in a {width}x{height} grid"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_RETRIES {
        let mut spec = GridSpec::open(width, height, (0, 0), Vec::new());
        spec.seed = seed;
        for x in 0..width {
            for y in 0..height {
                if rng.gen_bool(density) {
                    spec.blocked.insert((x, y));
                }
            }
        }
        let mut free: Vec<Cell> = spec.cells().filter(|c| spec.is_free(*c)).collect();
        if free.len() < n_goals + 1 {
            continue;
        }
        free.shuffle(&mut rng);
        spec.start = free[0];
        spec.goals = free[1..=n_goals].to_vec();
        if spec.goals_reachable() {
            return Ok(spec);
        }
    }
    Err(BenchError::GenerationFailure(RANDOM_RETRIES))
}
