//! Simulation of goal-driven planning agents under partial observability and
//! instance-based classification of the behavior traces they leave.

pub mod pddl;
pub mod planner;
pub mod traces;
pub mod distances;
pub mod classifier;
pub mod domains;
pub mod simulator;
pub mod experiment;
