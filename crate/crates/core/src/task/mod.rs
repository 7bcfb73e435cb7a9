//! The two-section cycle-time reduction task.
//!
//! A [`ProblemInstance`] describes pre-assembly and assembly by cycle time and
//! OEE. Three personas decide which section to shorten: the novice always
//! picks assembly, the intermediate compares OEE, and the expert weighs
//! defect increases. [`rules::build_persona_rules`] encodes them as
//! productions; [`driver`] runs trials, runs and batches.

pub mod driver;
pub mod model;
pub mod rules;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;

pub use driver::{run_batch, run_trial, BatchConfig, BatchResult, PersonaMode, RunTrace, TaskRun};
pub use model::{
    compute_defect_increase, compute_headcount_delta, compute_weights, reward_for, CostClass, DefectModel,
    HeadcountModel, RewardModel, RewardPair, TaskModel,
};
pub use rules::build_persona_rules;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),
    #[error("reduction {reduction} s is not shorter than the {ct} s cycle")]
    ReductionExceedsCycle { ct: f64, reduction: f64 },
    #[error("round ended without a decision")]
    NoDecision,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Section {
    PreAssembly = 0,
    Assembly = 1,
}

impl Section {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Section> {
        match code {
            0 => Some(Section::PreAssembly),
            1 => Some(Section::Assembly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Novice = 0,
    Intermediate = 1,
    Expert = 2,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Novice, Strategy::Intermediate, Strategy::Expert];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Strategy> {
        Strategy::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Novice => "novice",
            Strategy::Intermediate => "intermediate",
            Strategy::Expert => "expert",
        }
    }
}

/// Cycle times in seconds, OEE as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub ct_pre: f64,
    pub oee_pre: f64,
    pub ct_asm: f64,
    pub oee_asm: f64,
    pub reduction: f64,
}

impl ProblemInstance {
    /// 40 s at 88% against 44 s at 80.1%, cut by 4 s.
    pub fn base() -> Self {
        ProblemInstance {
            ct_pre: 40.0,
            oee_pre: 0.88,
            ct_asm: 44.0,
            oee_asm: 0.801,
            reduction: 4.0,
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |m: String| Err(TaskError::InvalidInstance(m));
        for (name, ct) in [("ct_pre", self.ct_pre), ("ct_asm", self.ct_asm)] {
            if !(ct > 0.0 && ct.is_finite()) {
                return bad(format!("{name} must be positive, got {ct}"));
            }
        }
        for (name, oee) in [("oee_pre", self.oee_pre), ("oee_asm", self.oee_asm)] {
            if !(oee > 0.0 && oee <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {oee}"));
            }
        }
        if self.reduction.is_nan() || self.reduction <= 0.0 {
            return bad(format!("reduction must be positive, got {}", self.reduction));
        }
        if self.reduction >= self.ct_pre.min(self.ct_asm) {
            return Err(TaskError::ReductionExceedsCycle {
                ct: self.ct_pre.min(self.ct_asm),
                reduction: self.reduction,
            });
        }
        Ok(())
    }

    /// `(ct, oee)` of one section.
    pub fn section(&self, section: Section) -> (f64, f64) {
        match section {
            Section::PreAssembly => (self.ct_pre, self.oee_pre),
            Section::Assembly => (self.ct_asm, self.oee_asm),
        }
    }
}

/// Reads a problem-set CSV (`ct_pre,oee_pre,ct_asm,oee_asm,reduction`).
pub fn read_problem_sets<R: Read>(reader: R) -> Result<Vec<ProblemInstance>, TaskError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let inst: ProblemInstance = row?;
        inst.validate()?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_problem_sets<W: Write>(writer: W, sets: &[ProblemInstance]) -> Result<(), TaskError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in sets {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

/// The result of one decision round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub run_id: String,
    pub trial: usize,
    pub section: u8,
    pub strategy: u8,
    pub reward: f64,
    pub headcount_delta: f64,
}

impl DecisionOutcome {
    /// `strategy + 3 * section`.
    pub fn compound_code(&self) -> u8 {
        self.strategy + 3 * self.section
    }
}

/// Run identifier for problem set `set`, run `run`.
pub fn run_id(set: usize, run: usize) -> String {
    format!("s{set}r{run}")
}

/// Outcome CSV with header `run_id,trial,section,strategy,reward,headcount_delta`.
pub fn write_outcomes<W: Write>(writer: W, outcomes: &[DecisionOutcome]) -> Result<(), TaskError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for o in outcomes {
        wtr.serialize(o)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_outcomes<R: Read>(reader: R) -> Result<Vec<DecisionOutcome>, TaskError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let o: DecisionOutcome = row?;
        if Section::from_code(o.section).is_none() || Strategy::from_code(o.strategy).is_none() {
            return Err(TaskError::InvalidInstance(format!(
                "outcome {} trial {} has codes ({}, {})",
                o.run_id, o.trial, o.section, o.strategy
            )));
        }
        out.push(o);
    }
    Ok(out)
}
