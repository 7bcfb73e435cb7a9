//! Discrete-time production-system runtime.
//!
//! Productions whose conditions hold form the conflict set, one is drawn by a
//! softmax over utilities, and firing it advances the clock by a fixed
//! latency. Utilities learn from rewards delivered at the end of a decision
//! round; every step is recorded in a [`TraceLog`].

mod config;
pub mod learning;
mod production;
mod runtime;
pub mod select;
mod trace;

use thiserror::Error;

use crate::memory::{BufferName, MemoryError};
use crate::time::SimTime;

pub use config::{EngineConfig, TemperatureRule};
pub use learning::{effective_reward, td_update};
pub use production::{
    match_productions, Action, Bindings, Comparator, Computed, Condition, Context, Match, Operand, Production,
    ValueExpr,
};
pub use runtime::{render_output, Decision, Engine, FireSignals, RoundResult};
pub use select::{argmax, select, softmax_probabilities};
pub use trace::{audit_utility_updates, AuditFailure, EventKind, Module, TraceEvent, TraceLog, AUDIT_TOLERANCE};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("production `{0}` is declared twice")]
    DuplicateProduction(String),
    #[error("no production named `{0}`")]
    UnknownProduction(String),
    #[error("conflict set is empty")]
    EmptyConflictSet,
    #[error("deadlock at {time}: no production matches and nothing is pending\n{snapshot}")]
    Deadlock { time: SimTime, snapshot: String },
    #[error("round did not end within {limit} firings")]
    StepLimitExceeded { limit: usize },
    #[error("action on busy buffer: {0}")]
    ActionOnBusyBuffer(MemoryError),
    #[error(transparent)]
    Memory(MemoryError),
    #[error("cannot modify empty {0} buffer")]
    ModifyEmptyBuffer(BufferName),
    #[error("invalid decision signal: {0}")]
    InvalidDecision(String),
    #[error("scripted choice `{expected}` is not in the conflict set {available:?}")]
    ScriptMismatch { expected: String, available: Vec<String> },
}
