//! Planning models: PDDL subset parsing, grounding and state transitions.

pub mod ground;
pub mod model;
pub mod parse;
pub mod sexpr;
pub mod state;

pub use ground::{ground, instantiate, Grounder};
pub use model::*;
pub use parse::{parse_domain, parse_problem, PddlError};
pub use state::{applicable, apply, EvalError, State};
