//! Redesign of classical planning environments by removing ground actions
//! so that a chosen metric over the agents' plans is optimized.
//!
//! Pipeline: [`pddl`] parses and grounds a task, [`topq`] builds the
//! bounded-cost plan library, [`metrics`] scores an environment, and
//! [`redesign`] searches removal sets breadth-first.

pub mod bench;
pub mod metrics;
pub mod pddl;
pub mod planner;
pub mod redesign;
pub mod report;
pub mod topq;
