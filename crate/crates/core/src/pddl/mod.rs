//! STRIPS-subset PDDL front end: domain/problem parsing, the multi-goal
//! file, and grounding into a propositional [`GroundEnvironment`].

mod ast;
mod goals;
mod ground;
pub mod sexpr;

use thiserror::Error;

pub use ast::{
    parse_domain, parse_problem, ActionSchema, Atom, DomainAst, Literal, ProblemAst, Term,
    TypedName,
};
pub use goals::{parse_goals, GoalSet};
pub use ground::{
    ground, ground_with_cap, ActionId, FactId, GroundAction, GroundEnvironment,
    DEFAULT_GROUNDING_CAP,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported requirement `{0}` (only :strips and :typing are accepted)")]
    UnsupportedRequirement(String),
    #[error("predicate `{predicate}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("parameter `{param}` is not declared by action `{action}`")]
    UndeclaredParameter { action: String, param: String },
    #[error("unknown type `{0}`")]
    UnknownObjectType(String),
    #[error("ill-typed atom {atom}: {reason}")]
    IllTypedAtom { atom: String, reason: String },
    #[error("problem refers to domain `{found}` but the loaded domain is `{expected}`")]
    DomainMismatch { expected: String, found: String },
    #[error("goal file contains no goals")]
    EmptyGoalFile,
    #[error("true-goal index {index} out of range for {count} goal(s)")]
    TrueGoalOutOfRange { index: usize, count: usize },
    #[error("grounding produced more than {cap} actions")]
    GroundingExplosion { cap: usize },
}
