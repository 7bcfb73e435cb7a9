//! Structured trace events emitted by the engine.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::learning::{effective_reward, td_update};
use crate::time::SimTime;

/// Column shown in the module field of a timed trace line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Module {
    Goal,
    Procedural,
    Imaginal,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::Goal => "GOAL",
            Module::Procedural => "PROCEDURAL",
            Module::Imaginal => "IMAGINAL",
        }
    }

    pub fn parse(s: &str) -> Option<Module> {
        match s {
            "GOAL" => Some(Module::Goal),
            "PROCEDURAL" => Some(Module::Procedural),
            "IMAGINAL" => Some(Module::Imaginal),
            _ => None,
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING-KEBAB-CASE")]
pub enum EventKind {
    SetBufferChunk {
        buffer: String,
        chunk: String,
        requested: bool,
    },
    ProductionFired {
        production: String,
    },
    SetBufferChunkFromSpec {
        buffer: String,
        spec: String,
    },
    Output {
        text: String,
    },
    /// Header of a utility-learning block.
    Reward {
        reward: f32,
        alpha: f32,
    },
    UtilityUpdate {
        production: String,
        u_prev: f32,
        r_eff: f32,
        reward: f32,
        dt: f32,
        u_new: f32,
    },
}

impl EventKind {
    /// Events rendered with a timestamp and module column.
    pub fn is_timed(&self) -> bool {
        matches!(
            self,
            EventKind::SetBufferChunk { .. } | EventKind::ProductionFired { .. } | EventKind::SetBufferChunkFromSpec { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: SimTime,
    pub module: Module,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl TraceEvent {
    pub fn new(time: SimTime, module: Module, kind: EventKind) -> Self {
        TraceEvent { time, module, kind }
    }

    pub fn production_fired(&self) -> Option<&str> {
        match &self.kind {
            EventKind::ProductionFired { production } => Some(production),
            _ => None,
        }
    }
}

/// Ordered record of everything an engine did during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn new() -> Self {
        TraceLog::default()
    }

    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceEvent> {
        self.events.iter()
    }

    pub fn fired_productions(&self) -> impl Iterator<Item = &str> {
        self.events.iter().filter_map(TraceEvent::production_fired)
    }

    pub fn utility_updates(&self) -> impl Iterator<Item = &EventKind> {
        self.events
            .iter()
            .map(|e| &e.kind)
            .filter(|k| matches!(k, EventKind::UtilityUpdate { .. }))
    }

    /// Line-delimited JSON, one event per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            // TraceEvent contains only plain data; serialization cannot fail.
            out.push_str(&serde_json::to_string(event).expect("trace event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<TraceEvent>, _>>()?;
        Ok(TraceLog { events })
    }

    /// Checks every utility-learning block against the update rule.
    pub fn audit(&self) -> Result<(), AuditFailure> {
        audit_utility_updates(self)
    }
}

impl FromIterator<TraceEvent> for TraceLog {
    fn from_iter<I: IntoIterator<Item = TraceEvent>>(iter: I) -> Self {
        TraceLog {
            events: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a TraceLog {
    type Item = &'a TraceEvent;
    type IntoIter = std::slice::Iter<'a, TraceEvent>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("utility update #{index} for {production} violates the learning rule: {detail}")]
pub struct AuditFailure {
    pub index: usize,
    pub production: String,
    pub detail: String,
}

pub const AUDIT_TOLERANCE: f64 = 1e-6;

/// Verifies `U(n) = U(n-1) + alpha * (R(n) - U(n-1))` and `R(n) = reward - dt`
/// for every update, using the alpha and reward of the enclosing block header.
pub fn audit_utility_updates(log: &TraceLog) -> Result<(), AuditFailure> {
    let mut header: Option<(f32, f32)> = None;
    let mut index = 0;
    for event in log {
        match &event.kind {
            EventKind::Reward { reward, alpha } => header = Some((*reward, *alpha)),
            EventKind::UtilityUpdate {
                production,
                u_prev,
                r_eff,
                reward,
                dt,
                u_new,
            } => {
                let fail = |detail: String| AuditFailure {
                    index,
                    production: production.clone(),
                    detail,
                };
                let (block_reward, alpha) = header.ok_or_else(|| fail("no reward header precedes the update".into()))?;
                if block_reward != *reward {
                    return Err(fail(format!("reward {reward} differs from block reward {block_reward}")));
                }
                let expected_r = effective_reward(f64::from(*reward), f64::from(*dt));
                if (expected_r - f64::from(*r_eff)).abs() > AUDIT_TOLERANCE {
                    return Err(fail(format!("R(n) = {r_eff}, expected {expected_r}")));
                }
                let expected_u = td_update(f64::from(*u_prev), f64::from(*r_eff), f64::from(alpha));
                if (expected_u - f64::from(*u_new)).abs() > AUDIT_TOLERANCE {
                    return Err(fail(format!("U(n) = {u_new}, expected {expected_u}")));
                }
                index += 1;
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(u_prev: f32, r_eff: f32, reward: f32, dt: f32, u_new: f32) -> TraceEvent {
        TraceEvent::new(
            SimTime::from_millis(250),
            Module::Procedural,
            EventKind::UtilityUpdate {
                production: "STOP".into(),
                u_prev,
                r_eff,
                reward,
                dt,
                u_new,
            },
        )
    }

    fn header(reward: f32) -> TraceEvent {
        TraceEvent::new(SimTime::from_millis(250), Module::Procedural, EventKind::Reward { reward, alpha: 0.2 })
    }

    #[test]
    fn audit_accepts_consistent_block() {
        let log: TraceLog = [header(-2.0), update(3.0, -2.2, -2.0, 0.2, 1.96)].into_iter().collect();
        assert!(log.audit().is_ok());
    }

    #[test]
    fn audit_rejects_plus_sign_variant() {
        // U + alpha * (R + U) would give 2.56 here.
        let log: TraceLog = [header(-2.0), update(3.0, -2.2, -2.0, 0.2, 2.56)].into_iter().collect();
        let err = log.audit().unwrap_err();
        assert_eq!(err.production, "STOP");
    }

    #[test]
    fn audit_requires_header() {
        let log: TraceLog = [update(0.0, -2.05, -2.0, 0.05, -0.41)].into_iter().collect();
        assert!(log.audit().is_err());
    }

    #[test]
    fn json_lines_round_trip() {
        let log: TraceLog = [
            TraceEvent::new(
                SimTime::ZERO,
                Module::Goal,
                EventKind::SetBufferChunk {
                    buffer: "GOAL".into(),
                    chunk: "GOER".into(),
                    requested: false,
                },
            ),
            header(-2.0),
            update(0.0, -2.25, -2.0, 0.25, -0.45000002),
        ]
        .into_iter()
        .collect();
        let text = log.to_json_lines();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(r#"{"time":0.0,"module":"GOAL","kind":"SET-BUFFER-CHUNK""#));
        assert_eq!(TraceLog::from_json_lines(&text).unwrap(), log);
    }
}
