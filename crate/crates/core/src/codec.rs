//! Plain-text trace format and target distillation.
//!
//! Timed events render as a timestamp column, a module column and the event
//! text. Output lines and utility-learning blocks carry no timestamp; when
//! parsed they take the time of the preceding timed line.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EventKind, Module, TraceEvent, TraceLog};
use crate::task::DecisionOutcome;
use crate::time::SimTime;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("line {line}: malformed timestamp `{token}`")]
    MalformedTimestamp { line: usize, token: String },
    #[error("line {line}: utility block is incomplete")]
    TruncatedUtilityBlock { line: usize },
    #[error("no outcomes to distill")]
    EmptyOutcomes,
}

const REWARD_PREFIX: &str = "Utility updates with Reward = ";
const UPDATE_PREFIX: &str = "Updating utility of production ";

/// Lines of a rendered trace, without terminators.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceText {
    pub lines: Vec<String>,
}

impl TraceText {
    /// Splits on LF. A single trailing newline is not an extra line.
    pub fn from_text(text: &str) -> Self {
        if text.is_empty() {
            return TraceText::default();
        }
        let body = text.strip_suffix('\n').unwrap_or(text);
        TraceText {
            lines: body.split('\n').map(str::to_string).collect(),
        }
    }
}

/// Every line followed by LF.
impl fmt::Display for TraceText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn timed(time: SimTime, module: Module, text: &str) -> String {
    format!("{:<7} {:<22} {}", time.to_string(), module.as_str(), text)
}

pub fn emit_text(log: &TraceLog) -> TraceText {
    let mut lines = Vec::with_capacity(log.len());
    for event in log {
        match &event.kind {
            EventKind::SetBufferChunk {
                buffer,
                chunk,
                requested,
            } => {
                let flag = if *requested { "T" } else { "NIL" };
                lines.push(timed(
                    event.time,
                    event.module,
                    &format!("SET-BUFFER-CHUNK {buffer} {chunk} {flag}"),
                ));
            }
            EventKind::ProductionFired { production } => {
                lines.push(timed(event.time, event.module, &format!("PRODUCTION-FIRED {production}")));
            }
            EventKind::SetBufferChunkFromSpec { buffer, spec } => {
                lines.push(timed(
                    event.time,
                    event.module,
                    &format!("SET-BUFFER-CHUNK-FROM-SPEC {buffer} {spec}"),
                ));
            }
            EventKind::Output { text } => lines.push(text.clone()),
            EventKind::Reward { reward, alpha } => {
                lines.push(format!("{REWARD_PREFIX}{reward:?}   alpha = {alpha:?}"));
            }
            EventKind::UtilityUpdate {
                production,
                u_prev,
                r_eff,
                reward,
                dt,
                u_new,
            } => {
                lines.push(format!("{UPDATE_PREFIX}{production}"));
                lines.push(format!(
                    "U(n-1) = {u_prev:?}   R(n) = {r_eff:?} [{reward:?} - {dt:?} seconds since selection]"
                ));
                lines.push(format!("U(n) = {u_new:?}"));
            }
        }
    }
    TraceText { lines }
}

/// `"1.250"` to 1250 ms. Requires exactly three decimals.
fn parse_timestamp(token: &str) -> Option<SimTime> {
    let (secs, millis) = token.split_once('.')?;
    if secs.is_empty() || millis.len() != 3 {
        return None;
    }
    if !secs.bytes().chain(millis.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let secs: u64 = secs.parse().ok()?;
    let millis: u64 = millis.parse().ok()?;
    Some(SimTime::from_millis(secs.checked_mul(1000)?.checked_add(millis)?))
}

/// Splits off the first whitespace-delimited token, returning it and the
/// remainder with leading spaces removed.
fn next_token(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start_matches(' ');
    if s.is_empty() {
        return None;
    }
    let end = s.find(' ').unwrap_or(s.len());
    Some((&s[..end], s[end..].trim_start_matches(' ')))
}

fn timed_kind(text: &str) -> Option<EventKind> {
    let (head, rest) = next_token(text)?;
    match head {
        "PRODUCTION-FIRED" => {
            let (name, tail) = next_token(rest)?;
            tail.is_empty().then(|| EventKind::ProductionFired {
                production: name.to_string(),
            })
        }
        "SET-BUFFER-CHUNK" => {
            let (buffer, rest) = next_token(rest)?;
            let (chunk, rest) = next_token(rest)?;
            let requested = match rest {
                "NIL" => false,
                "T" => true,
                _ => return None,
            };
            Some(EventKind::SetBufferChunk {
                buffer: buffer.to_string(),
                chunk: chunk.to_string(),
                requested,
            })
        }
        "SET-BUFFER-CHUNK-FROM-SPEC" => {
            // keep the spec verbatim, including an empty one
            let after = text.strip_prefix("SET-BUFFER-CHUNK-FROM-SPEC ")?;
            let (buffer, spec) = after.split_once(' ')?;
            (!buffer.is_empty()).then(|| EventKind::SetBufferChunkFromSpec {
                buffer: buffer.to_string(),
                spec: spec.to_string(),
            })
        }
        _ => None,
    }
}

fn parse_reward_header(line: &str) -> Option<EventKind> {
    let rest = line.strip_prefix(REWARD_PREFIX)?;
    let (reward, alpha) = rest.split_once("   alpha = ")?;
    Some(EventKind::Reward {
        reward: reward.parse().ok()?,
        alpha: alpha.parse().ok()?,
    })
}

fn parse_update(production: &str, values: &str, result: &str) -> Option<EventKind> {
    let rest = values.strip_prefix("U(n-1) = ")?;
    let (u_prev, rest) = rest.split_once("   R(n) = ")?;
    let (r_eff, rest) = rest.split_once(" [")?;
    let rest = rest.strip_suffix(" seconds since selection]")?;
    let (reward, dt) = rest.split_once(" - ")?;
    let u_new = result.strip_prefix("U(n) = ")?;
    Some(EventKind::UtilityUpdate {
        production: production.to_string(),
        u_prev: u_prev.parse().ok()?,
        r_eff: r_eff.parse().ok()?,
        reward: reward.parse().ok()?,
        dt: dt.parse().ok()?,
        u_new: u_new.parse().ok()?,
    })
}

pub fn parse_text(text: &TraceText) -> Result<TraceLog, CodecError> {
    let mut log = TraceLog::new();
    let mut now = SimTime::ZERO;
    let lines = &text.lines;
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        let untimed = |kind| TraceEvent::new(now, Module::Procedural, kind);
        if let Some(production) = line.strip_prefix(UPDATE_PREFIX) {
            let kind = match (lines.get(i + 1), lines.get(i + 2)) {
                (Some(values), Some(result)) => parse_update(production, values, result),
                _ => None,
            }
            .ok_or(CodecError::TruncatedUtilityBlock { line: i + 1 })?;
            log.push(untimed(kind));
            i += 3;
            continue;
        }
        if let Some(kind) = parse_reward_header(line) {
            log.push(untimed(kind));
            i += 1;
            continue;
        }
        let mut event = untimed(EventKind::Output { text: line.clone() });
        if let Some((first, rest)) = next_token(line) {
            if let Some((second, body)) = next_token(rest) {
                if let Some(module) = Module::parse(second) {
                    let time = parse_timestamp(first).ok_or_else(|| CodecError::MalformedTimestamp {
                        line: i + 1,
                        token: first.to_string(),
                    })?;
                    now = time;
                    event.time = time;
                    if let Some(kind) = timed_kind(body) {
                        event = TraceEvent::new(time, module, kind);
                    }
                }
            }
        }
        log.push(event);
        i += 1;
    }
    Ok(log)
}

/// Parses a whole trace file.
pub fn parse_str(text: &str) -> Result<TraceLog, CodecError> {
    parse_text(&TraceText::from_text(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Section only: 0 pre-assembly, 1 assembly.
    #[default]
    Single,
    /// `strategy + 3 * section`, 0..=5.
    Multi,
}

impl TargetMode {
    pub fn classes(self) -> usize {
        match self {
            TargetMode::Single => 2,
            TargetMode::Multi => 6,
        }
    }

    pub fn target(self, outcome: &DecisionOutcome) -> u8 {
        match self {
            TargetMode::Single => outcome.section,
            TargetMode::Multi => outcome.compound_code(),
        }
    }
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetMode::Single => "single",
            TargetMode::Multi => "multi",
        })
    }
}

impl std::str::FromStr for TargetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(TargetMode::Single),
            "multi" => Ok(TargetMode::Multi),
            other => Err(format!("unknown target mode `{other}` (expected single or multi)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedRecord {
    pub section_code: u8,
    pub strategy_code: u8,
    pub compound_code: u8,
}

impl SelectedRecord {
    /// Inverse of the compound code: `(section, strategy)`.
    pub fn decompose(compound: u8) -> (u8, u8) {
        (compound / 3, compound % 3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedTrace {
    pub mode: TargetMode,
    pub records: Vec<SelectedRecord>,
}

impl SelectedTrace {
    /// One target per record under `mode`.
    pub fn targets(&self) -> Vec<u8> {
        self.records
            .iter()
            .map(|r| match self.mode {
                TargetMode::Single => r.section_code,
                TargetMode::Multi => r.compound_code,
            })
            .collect()
    }
}

pub fn distill_selected(outcomes: &[DecisionOutcome], mode: TargetMode) -> Result<SelectedTrace, CodecError> {
    if outcomes.is_empty() {
        return Err(CodecError::EmptyOutcomes);
    }
    let records = outcomes
        .iter()
        .map(|o| SelectedRecord {
            section_code: o.section,
            strategy_code: o.strategy,
            compound_code: o.compound_code(),
        })
        .collect();
    Ok(SelectedTrace { mode, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn production_fired_layout() {
        let log: TraceLog = [TraceEvent::new(
            SimTime::from_millis(50),
            Module::Procedural,
            EventKind::ProductionFired {
                production: "CHOOSE-STRATEGY".into(),
            },
        )]
        .into_iter()
        .collect();
        assert_eq!(
            emit_text(&log).lines,
            ["0.050   PROCEDURAL             PRODUCTION-FIRED CHOOSE-STRATEGY"]
        );
    }

    #[test]
    fn empty_log_is_empty_text() {
        assert_eq!(emit_text(&TraceLog::new()).to_string(), "");
        assert_eq!(parse_str("").unwrap(), TraceLog::new());
    }

    #[test]
    fn goal_line_parses() {
        let log = parse_str("0.000   GOAL                   SET-BUFFER-CHUNK GOAL GOER NIL\n").unwrap();
        assert_eq!(
            log.events,
            [TraceEvent::new(
                SimTime::ZERO,
                Module::Goal,
                EventKind::SetBufferChunk {
                    buffer: "GOAL".into(),
                    chunk: "GOER".into(),
                    requested: false
                }
            )]
        );
    }

    #[test]
    fn bad_timestamp_rejected() {
        let err = parse_str("abc PROCEDURAL PRODUCTION-FIRED X").unwrap_err();
        assert_eq!(
            err,
            CodecError::MalformedTimestamp {
                line: 1,
                token: "abc".into()
            }
        );
        assert!(parse_str("0.05 PROCEDURAL PRODUCTION-FIRED X").is_err());
    }

    #[test]
    fn truncated_block_rejected() {
        let text = "Updating utility of production STOP\nU(n-1) = 0.0   R(n) = -2.05 [-2.0 - 0.05 seconds since selection]\n";
        assert_eq!(parse_str(text).unwrap_err(), CodecError::TruncatedUtilityBlock { line: 1 });
    }

    #[test]
    fn unknown_lines_become_output() {
        let log = parse_str("something else entirely\n0.100   PROCEDURAL             FOO BAR\n").unwrap();
        assert_eq!(log.len(), 2);
        assert!(log.iter().all(|e| matches!(e.kind, EventKind::Output { .. })));
        assert_eq!(log.events[1].time, SimTime::from_millis(100));
        assert_eq!(emit_text(&log).lines[1], "0.100   PROCEDURAL             FOO BAR");
    }

    #[test]
    fn long_timestamps_stay_separated() {
        let log: TraceLog = [TraceEvent::new(
            SimTime::from_millis(12_345_678),
            Module::Imaginal,
            EventKind::SetBufferChunkFromSpec {
                buffer: "IMAGINAL".into(),
                spec: String::new(),
            },
        )]
        .into_iter()
        .collect();
        let text = emit_text(&log);
        assert_eq!(parse_text(&text).unwrap(), log);
    }

    fn outcome(section: u8, strategy: u8) -> DecisionOutcome {
        DecisionOutcome {
            run_id: "s0r0".into(),
            trial: 0,
            section,
            strategy,
            reward: 0.0,
            headcount_delta: 0.0,
        }
    }

    #[test]
    fn distill_codes() {
        let outcomes = [outcome(0, 2), outcome(1, 0), outcome(1, 1)];
        assert_eq!(distill_selected(&outcomes, TargetMode::Multi).unwrap().targets(), [2, 3, 4]);
        assert_eq!(distill_selected(&outcomes, TargetMode::Single).unwrap().targets(), [0, 1, 1]);
        assert_eq!(distill_selected(&[], TargetMode::Single).unwrap_err(), CodecError::EmptyOutcomes);
        for code in 0..6 {
            let (s, k) = SelectedRecord::decompose(code);
            assert_eq!(outcome(s, k).compound_code(), code);
        }
    }
}
