use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::ast::{ActionSchema, Atom, DomainAst, Literal, ProblemAst, Term};
use super::goals::GoalSet;
use super::PddlError;

pub const DEFAULT_GROUNDING_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub u32);

impl FactId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    /// Canonical name `(schema obj1 obj2 ...)`.
    pub name: String,
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
    pub cost: u64,
}

/// Propositional planning environment: facts, ground actions, initial
/// state and candidate goals. Fact and action tables are sorted by their
/// printed names so indices are stable across runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundEnvironment {
    pub facts: Vec<Atom>,
    pub actions: Vec<GroundAction>,
    pub init: Vec<FactId>,
    pub goals: Vec<Vec<FactId>>,
    pub true_goal: usize,
    fact_index: HashMap<Atom, FactId>,
    action_index: HashMap<String, ActionId>,
    /// Actions keyed by their first precondition fact; index `facts.len()`
    /// holds the actions without preconditions.
    by_first_pre: Vec<Vec<ActionId>>,
}

impl GroundEnvironment {
    /// Builds an environment directly from propositional parts. Facts are
    /// taken in the given order; actions are re-sorted by name.
    pub fn from_parts(
        facts: Vec<Atom>,
        mut actions: Vec<GroundAction>,
        init: Vec<FactId>,
        goals: Vec<Vec<FactId>>,
        true_goal: usize,
    ) -> Self {
        actions.sort_by(|a, b| a.name.cmp(&b.name));
        for a in &mut actions {
            normalize(&mut a.pre);
            normalize(&mut a.add);
            normalize(&mut a.del);
            let add = &a.add;
            a.del.retain(|f| add.binary_search(f).is_err());
        }
        let fact_index = facts
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), FactId(i as u32)))
            .collect();
        let action_index = actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.name.clone(), ActionId(i as u32)))
            .collect();
        let mut init = init;
        normalize(&mut init);
        let goals = goals
            .into_iter()
            .map(|mut g| {
                normalize(&mut g);
                g
            })
            .collect();
        let mut by_first_pre = vec![Vec::new(); facts.len() + 1];
        for (i, a) in actions.iter().enumerate() {
            let slot = a.pre.first().map_or(facts.len(), |f| f.index());
            by_first_pre[slot].push(ActionId(i as u32));
        }
        GroundEnvironment {
            facts,
            actions,
            init,
            goals,
            true_goal,
            fact_index,
            action_index,
            by_first_pre,
        }
    }

    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id.index()]
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len() as u32).map(ActionId)
    }

    /// Actions whose first precondition is `f`, in index order.
    pub(crate) fn actions_led_by(&self, f: FactId) -> &[ActionId] {
        &self.by_first_pre[f.index()]
    }

    pub(crate) fn actions_without_pre(&self) -> &[ActionId] {
        &self.by_first_pre[self.facts.len()]
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(&name.to_ascii_lowercase()).copied()
    }

    pub fn fact_id(&self, atom: &Atom) -> Option<FactId> {
        self.fact_index.get(atom).copied()
    }

    pub fn goal(&self, index: usize) -> &[FactId] {
        &self.goals[index]
    }

    /// Goal indices other than the true goal.
    pub fn secondary_goals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.goals.len()).filter(move |&i| i != self.true_goal)
    }
}

fn normalize(v: &mut Vec<FactId>) {
    v.sort_unstable();
    v.dedup();
}

/// Grounds with the default action cap.
pub fn ground(
    domain: &DomainAst,
    problem: &ProblemAst,
    goals: &GoalSet,
) -> Result<GroundEnvironment, PddlError> {
    ground_with_cap(domain, problem, goals, DEFAULT_GROUNDING_CAP)
}

struct GroundCtx<'a> {
    problem: &'a ProblemAst,
    static_preds: BTreeSet<&'a str>,
    cap: usize,
}

struct RawAction {
    name: String,
    pre: Vec<Atom>,
    add: Vec<Atom>,
    del: Vec<Atom>,
}

/// Instantiates every schema with every type-consistent object tuple.
/// Predicates that no action changes are static: their atoms are checked
/// against the initial state here and then dropped from preconditions and
/// states.
pub fn ground_with_cap(
    domain: &DomainAst,
    problem: &ProblemAst,
    goals: &GoalSet,
    cap: usize,
) -> Result<GroundEnvironment, PddlError> {
    let fluent: BTreeSet<&str> = domain
        .actions
        .iter()
        .flat_map(|a| a.add.iter().chain(&a.del))
        .map(|l| l.predicate.as_str())
        .collect();
    let static_preds = domain
        .predicates
        .keys()
        .map(String::as_str)
        .filter(|p| !fluent.contains(p))
        .collect();
    let ctx = GroundCtx {
        problem,
        static_preds,
        cap,
    };

    let mut raw = Vec::new();
    for schema in &domain.actions {
        let candidates: Vec<Vec<&str>> = schema
            .parameters
            .iter()
            .map(|p| {
                let mut objs: Vec<&str> = problem
                    .all_objects(domain)
                    .filter(|o| domain.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect();
                objs.sort_unstable();
                objs.dedup();
                objs
            })
            .collect();
        let mut binding = Vec::with_capacity(schema.parameters.len());
        ctx.bind(schema, &candidates, &mut binding, &mut raw)?;
    }

    // Fact table: every fluent atom that occurs anywhere, plus goal atoms.
    let mut atoms: BTreeSet<Atom> = BTreeSet::new();
    for a in &raw {
        atoms.extend(a.pre.iter().chain(&a.add).chain(&a.del).cloned());
    }
    atoms.extend(
        problem
            .init
            .iter()
            .filter(|a| !ctx.static_preds.contains(a.predicate.as_str()))
            .cloned(),
    );
    for g in &goals.goals {
        atoms.extend(g.iter().cloned());
    }
    let facts: Vec<Atom> = atoms.into_iter().collect();
    let ids: HashMap<&Atom, FactId> = facts
        .iter()
        .enumerate()
        .map(|(i, a)| (a, FactId(i as u32)))
        .collect();
    let to_ids = |v: &[Atom]| v.iter().map(|a| ids[a]).collect::<Vec<_>>();

    let actions = raw
        .iter()
        .map(|r| GroundAction {
            name: r.name.clone(),
            pre: to_ids(&r.pre),
            add: to_ids(&r.add),
            del: to_ids(&r.del),
            cost: 1,
        })
        .collect();
    let init = problem
        .init
        .iter()
        .filter_map(|a| ids.get(a).copied())
        .collect();
    let goal_ids = goals.goals.iter().map(|g| to_ids(g)).collect();
    Ok(GroundEnvironment::from_parts(
        facts,
        actions,
        init,
        goal_ids,
        goals.true_goal,
    ))
}

impl<'a> GroundCtx<'a> {
    fn bind(
        &self,
        schema: &ActionSchema,
        candidates: &[Vec<&'a str>],
        binding: &mut Vec<&'a str>,
        out: &mut Vec<RawAction>,
    ) -> Result<(), PddlError> {
        let k = binding.len();
        if k == schema.parameters.len() {
            if let Some(a) = self.instantiate(schema, binding) {
                if out.len() >= self.cap {
                    return Err(PddlError::GroundingExplosion { cap: self.cap });
                }
                out.push(a);
            }
            return Ok(());
        }
        for &obj in &candidates[k] {
            binding.push(obj);
            if self.statics_hold(schema, binding) {
                self.bind(schema, candidates, binding, out)?;
            }
            binding.pop();
        }
        Ok(())
    }

    /// Static preconditions that are fully bound by the partial binding must hold in init.
    fn statics_hold(&self, schema: &ActionSchema, binding: &[&str]) -> bool {
        schema
            .precondition
            .iter()
            .filter(|l| self.static_preds.contains(l.predicate.as_str()))
            .filter(|l| {
                l.args
                    .iter()
                    .all(|t| !matches!(t, Term::Param(i) if *i >= binding.len()))
            })
            .all(|l| self.problem.init.contains(&resolve(l, binding)))
    }

    fn instantiate(&self, schema: &ActionSchema, binding: &[&str]) -> Option<RawAction> {
        if !self.statics_hold(schema, binding) {
            return None;
        }
        let pre = schema
            .precondition
            .iter()
            .filter(|l| !self.static_preds.contains(l.predicate.as_str()))
            .map(|l| resolve(l, binding))
            .collect();
        let add: Vec<Atom> = schema.add.iter().map(|l| resolve(l, binding)).collect();
        let del = schema
            .del
            .iter()
            .map(|l| resolve(l, binding))
            .filter(|a| !add.contains(a))
            .collect();
        let mut name = format!("({}", schema.name);
        for b in binding {
            name.push(' ');
            name.push_str(b);
        }
        name.push(')');
        Some(RawAction {
            name,
            pre,
            add,
            del,
        })
    }
}

fn resolve(lit: &Literal, binding: &[&str]) -> Atom {
    Atom {
        predicate: lit.predicate.clone(),
        args: lit
            .args
            .iter()
            .map(|t| match t {
                Term::Param(i) => binding[*i].to_string(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}
