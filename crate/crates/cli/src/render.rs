//! ASCII diagrams of redesigned grid environments.
//!
//! Cells are drawn as `S` (start), `1`..`9` (goals in file order, `1` the
//! true goal), `#` (no moves in or out) or `.`. Connectors show which moves
//! were removed: `>`/`<` on a horizontal edge, `^`/`v` on a vertical one,
//! `X` when both directions are gone.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use envredesign::pddl::GroundEnvironment;

pub const MAX_DIAGRAMS: usize = 8;

/// Cell object name → (x, y), read from a `name x y` sidecar.
#[derive(Clone, Debug, Default)]
pub struct Sidecar {
    cells: HashMap<String, (u32, u32)>,
    width: u32,
    height: u32,
}

impl Sidecar {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cells = HashMap::new();
        let (mut width, mut height) = (0, 0);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [name, x, y] = parts[..] else {
                bail!(
                    "sidecar line {}: expected `name x y`, found `{line}`",
                    n + 1
                );
            };
            let x: u32 = x
                .parse()
                .with_context(|| format!("sidecar line {}: bad x `{x}`", n + 1))?;
            let y: u32 = y
                .parse()
                .with_context(|| format!("sidecar line {}: bad y `{y}`", n + 1))?;
            width = width.max(x + 1);
            height = height.max(y + 1);
            cells.insert(name.to_ascii_lowercase(), (x, y));
        }
        if cells.is_empty() {
            bail!("sidecar lists no cells");
        }
        Ok(Sidecar {
            cells,
            width,
            height,
        })
    }

    fn cell(&self, name: &str) -> Option<(u32, u32)> {
        self.cells.get(name).copied()
    }
}

/// Cells named by an atom or action name like `(move c20 c21)`.
fn cells_in(name: &str, sidecar: &Sidecar) -> Vec<(u32, u32)> {
    name.trim_matches(|c| c == '(' || c == ')')
        .split_whitespace()
        .skip(1)
        .filter_map(|a| sidecar.cell(a))
        .collect()
}

type Edge = ((u32, u32), (u32, u32));

/// Directed unit moves an action performs, if it is one.
fn move_edge(name: &str, sidecar: &Sidecar) -> Option<Edge> {
    match cells_in(name, sidecar)[..] {
        [a, b] if a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1 => Some((a, b)),
        _ => None,
    }
}

pub fn render(env: &GroundEnvironment, sidecar: &Sidecar, removed: &[String]) -> String {
    let edges: BTreeSet<Edge> = env
        .actions
        .iter()
        .filter_map(|a| move_edge(&a.name, sidecar))
        .collect();
    let cut: BTreeSet<Edge> = removed
        .iter()
        .filter_map(|n| move_edge(n, sidecar))
        .collect();
    let mut marks: HashMap<(u32, u32), char> = HashMap::new();
    for &(a, b) in &edges {
        marks.insert(a, '.');
        marks.insert(b, '.');
    }
    for f in &env.init {
        if let [c] = cells_in(&env.facts[f.index()].to_string(), sidecar)[..] {
            marks.insert(c, 'S');
        }
    }
    for (i, g) in env.goals.iter().enumerate().take(9) {
        for f in g {
            if let [c] = cells_in(&env.facts[f.index()].to_string(), sidecar)[..] {
                marks.insert(c, char::from_digit(i as u32 + 1, 10).unwrap());
            }
        }
    }

    let connector = |a: (u32, u32), b: (u32, u32), fwd: char, back: char, plain: char| -> char {
        let (ab, ba) = (edges.contains(&(a, b)), edges.contains(&(b, a)));
        let (cab, cba) = (cut.contains(&(a, b)), cut.contains(&(b, a)));
        match (cab, cba) {
            (true, true) => 'X',
            (true, false) => fwd,
            (false, true) => back,
            _ if ab || ba => plain,
            _ => ' ',
        }
    };

    let mut out = String::new();
    for y in (0..sidecar.height).rev() {
        let mut row = String::new();
        for x in 0..sidecar.width {
            row.push(marks.get(&(x, y)).copied().unwrap_or('#'));
            if x + 1 < sidecar.width {
                let c = connector((x, y), (x + 1, y), '>', '<', '-');
                let _ = write!(row, " {c} ");
            }
        }
        out.push_str(row.trim_end());
        out.push('\n');
        if y > 0 {
            let mut row = String::new();
            for x in 0..sidecar.width {
                // upward move is from (x, y-1) to (x, y)
                row.push(connector((x, y - 1), (x, y), '^', 'v', '|'));
                if x + 1 < sidecar.width {
                    row.push_str("   ");
                }
            }
            out.push_str(row.trim_end());
            out.push('\n');
        }
    }
    out
}
