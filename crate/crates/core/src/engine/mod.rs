//! Interval-variable scheduling engine: optional intervals, sequences with
//! transition times, and a set-times tree search with restarts.

mod model;
mod propagators;
mod search;
mod store;

pub use model::{
    Assignment, Constraint, EngineError, IntervalId, IntervalVar, Model, PresenceRelation, SequenceId,
    SequenceVar, TransitionMatrix,
};
pub use search::{root_bounds, solve, SolveReport, SolveStatus, SolverConfig, WarmStart};
