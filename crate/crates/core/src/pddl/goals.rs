use super::ast::{check_atom, parse_ground_atom, Atom, DomainAst, ProblemAst};
use super::sexpr::{self, SExpr};
use super::PddlError;

/// Candidate goals, one conjunction per entry. `goals[true_goal]` is the
/// agent's real goal; the others are the secondary goals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoalSet {
    pub goals: Vec<Vec<Atom>>,
    pub true_goal: usize,
}

impl GoalSet {
    pub fn new(goals: Vec<Vec<Atom>>) -> Result<Self, PddlError> {
        if goals.is_empty() {
            return Err(PddlError::EmptyGoalFile);
        }
        Ok(GoalSet {
            goals,
            true_goal: 0,
        })
    }

    pub fn with_true_goal(mut self, index: usize) -> Result<Self, PddlError> {
        if index >= self.goals.len() {
            return Err(PddlError::TrueGoalOutOfRange {
                index,
                count: self.goals.len(),
            });
        }
        self.true_goal = index;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    /// Indices of every goal other than the true goal.
    pub fn secondary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.goals.len()).filter(move |&i| i != self.true_goal)
    }
}

/// Reads a goal file: one conjunction per non-empty line, written either
/// as `(and (p a) (q b))` or as a bare sequence `(p a) (q b)`. The first
/// line is the true goal. `;` comments are allowed.
pub fn parse_goals(
    text: &str,
    domain: &DomainAst,
    problem: &ProblemAst,
) -> Result<GoalSet, PddlError> {
    let mut goals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let exprs = sexpr::parse_all(content).map_err(|e| match e {
            PddlError::Syntax {
                col,
                expected,
                found,
                ..
            } => PddlError::Syntax {
                line: lineno + 1,
                col,
                expected,
                found,
            },
            other => other,
        })?;
        let mut conj = Vec::new();
        for e in &exprs {
            collect_atoms(e, &mut conj)?;
        }
        for atom in &conj {
            check_atom(atom, domain, problem)?;
        }
        conj.sort();
        conj.dedup();
        goals.push(conj);
    }
    GoalSet::new(goals)
}

fn collect_atoms(expr: &SExpr, out: &mut Vec<Atom>) -> Result<(), PddlError> {
    if expr.head() == Some("and") {
        for e in &expr.as_list().unwrap_or_default()[1..] {
            collect_atoms(e, out)?;
        }
        return Ok(());
    }
    if expr.head() == Some("not") {
        return Err(PddlError::UnsupportedRequirement(
            ":negative-preconditions".into(),
        ));
    }
    out.push(parse_ground_atom(expr)?);
    Ok(())
}
