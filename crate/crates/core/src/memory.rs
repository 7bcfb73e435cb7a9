//! Symbolic state: slot values, typed chunks and single-chunk buffers.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("slot `{0}` appears more than once")]
    DuplicateSlot(String),
    #[error("{chunk_type} chunk is missing required slot `{slot}`")]
    MissingRequiredSlot { chunk_type: ChunkType, slot: &'static str },
    #[error("decision-state must be novice, intermediate or expert, got {0}")]
    InvalidDecisionState(SlotValue),
    #[error("buffer {buffer} is busy until {busy_until} (now {now})")]
    BufferBusy {
        buffer: BufferName,
        busy_until: SimTime,
        now: SimTime,
    },
}

/// Contents of a single chunk slot.
///
/// Symbols are reference counted so cloning chunks while matching stays cheap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Number(f64),
    Symbol(Arc<str>),
    Nil,
}

impl SlotValue {
    pub fn symbol(s: &str) -> Self {
        SlotValue::Symbol(Arc::from(s))
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            SlotValue::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SlotValue::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, SlotValue::Nil)
    }
}

impl From<f64> for SlotValue {
    fn from(x: f64) -> Self {
        SlotValue::Number(x)
    }
}

impl From<&str> for SlotValue {
    fn from(s: &str) -> Self {
        SlotValue::symbol(s)
    }
}

impl fmt::Display for SlotValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotValue::Number(x) => write!(f, "{x}"),
            SlotValue::Symbol(s) => f.write_str(s),
            SlotValue::Nil => f.write_str("NIL"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkType {
    Decision,
    DecisionMerits,
    Goal,
}

impl fmt::Display for ChunkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChunkType::Decision => "decision",
            ChunkType::DecisionMerits => "decision-merits",
            ChunkType::Goal => "goal",
        })
    }
}

/// The eight slots every `decision` chunk carries.
pub const DECISION_SLOTS: [&str; 8] = [
    "reduction-time",
    "decision-state",
    "ct-pre",
    "ct-asm",
    "oee-pre",
    "oee-asm",
    "chosen-section",
    "headcount-delta",
];

/// Allowed values of a decision chunk's `decision-state` slot.
pub const DECISION_STATES: [&str; 3] = ["novice", "intermediate", "expert"];

/// A typed, immutable slot-value record. Slot order is preserved as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    chunk_type: ChunkType,
    slots: Vec<(String, SlotValue)>,
}

impl Chunk {
    pub fn new<I, S>(chunk_type: ChunkType, slot_pairs: I) -> Result<Self, MemoryError>
    where
        I: IntoIterator<Item = (S, SlotValue)>,
        S: Into<String>,
    {
        let mut slots: Vec<(String, SlotValue)> = Vec::new();
        for (name, value) in slot_pairs {
            let name = name.into();
            if slots.iter().any(|(n, _)| *n == name) {
                return Err(MemoryError::DuplicateSlot(name));
            }
            slots.push((name, value));
        }
        if chunk_type == ChunkType::Decision {
            for required in DECISION_SLOTS {
                if !slots.iter().any(|(n, _)| n == required) {
                    return Err(MemoryError::MissingRequiredSlot {
                        chunk_type,
                        slot: required,
                    });
                }
            }
            let state = slots.iter().find(|(n, _)| n == "decision-state").map(|(_, v)| v);
            if let Some(v) = state.filter(|v| !v.as_symbol().is_some_and(|s| DECISION_STATES.contains(&s))) {
                return Err(MemoryError::InvalidDecisionState(v.clone()));
            }
        }
        Ok(Chunk { chunk_type, slots })
    }

    pub fn chunk_type(&self) -> ChunkType {
        self.chunk_type
    }

    pub fn get(&self, slot: &str) -> Option<&SlotValue> {
        self.slots.iter().find(|(n, _)| n == slot).map(|(_, v)| v)
    }

    pub fn slots(&self) -> impl Iterator<Item = (&str, &SlotValue)> {
        self.slots.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Copy of this chunk with the given slots overwritten or appended.
    pub fn with_slots<I, S>(&self, updates: I) -> Chunk
    where
        I: IntoIterator<Item = (S, SlotValue)>,
        S: Into<String>,
    {
        let mut slots = self.slots.clone();
        for (name, value) in updates {
            let name = name.into();
            match slots.iter_mut().find(|(n, _)| *n == name) {
                Some(entry) => entry.1 = value,
                None => slots.push((name, value)),
            }
        }
        Chunk {
            chunk_type: self.chunk_type,
            slots,
        }
    }
}

/// Shorthand for [`Chunk::new`].
pub fn make_chunk<I, S>(chunk_type: ChunkType, slot_pairs: I) -> Result<Chunk, MemoryError>
where
    I: IntoIterator<Item = (S, SlotValue)>,
    S: Into<String>,
{
    Chunk::new(chunk_type, slot_pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BufferName {
    Goal,
    Imaginal,
    Retrieval,
}

impl BufferName {
    pub const ALL: [BufferName; 3] = [BufferName::Goal, BufferName::Imaginal, BufferName::Retrieval];

    pub fn as_str(self) -> &'static str {
        match self {
            BufferName::Goal => "GOAL",
            BufferName::Imaginal => "IMAGINAL",
            BufferName::Retrieval => "RETRIEVAL",
        }
    }
}

impl fmt::Display for BufferName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A workspace holding at most one chunk.
///
/// A write with a non-zero delay makes the buffer busy: its new content only
/// becomes visible once the clock reaches `busy_until`, and further writes are
/// refused until then.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    name: BufferName,
    content: Option<Chunk>,
    busy_until: SimTime,
}

impl Buffer {
    pub fn new(name: BufferName) -> Self {
        Buffer {
            name,
            content: None,
            busy_until: SimTime::ZERO,
        }
    }

    pub fn name(&self) -> BufferName {
        self.name
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn is_free(&self, now: SimTime) -> bool {
        self.busy_until <= now
    }

    /// Content as seen by the matcher at `now`.
    pub fn read(&self, now: SimTime) -> Option<&Chunk> {
        if self.is_free(now) {
            self.content.as_ref()
        } else {
            None
        }
    }

    /// Replace the content. Returns the time at which the write completes.
    pub fn write(&mut self, chunk: Chunk, now: SimTime, delay: SimTime) -> Result<SimTime, MemoryError> {
        if !self.is_free(now) {
            return Err(MemoryError::BufferBusy {
                buffer: self.name,
                busy_until: self.busy_until,
                now,
            });
        }
        self.content = Some(chunk);
        self.busy_until = now + delay;
        Ok(self.busy_until)
    }

    pub fn clear(&mut self) {
        self.content = None;
    }
}

/// Functional form of [`Buffer::write`].
pub fn buffer_write(buffer: &Buffer, chunk: Chunk, now: SimTime, delay: SimTime) -> Result<Buffer, MemoryError> {
    let mut next = buffer.clone();
    next.write(chunk, now, delay)?;
    Ok(next)
}

/// The goal, imaginal and retrieval buffers of one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferSet {
    buffers: [Buffer; 3],
}

impl Default for BufferSet {
    fn default() -> Self {
        BufferSet {
            buffers: BufferName::ALL.map(Buffer::new),
        }
    }
}

impl BufferSet {
    fn index(name: BufferName) -> usize {
        match name {
            BufferName::Goal => 0,
            BufferName::Imaginal => 1,
            BufferName::Retrieval => 2,
        }
    }

    pub fn get(&self, name: BufferName) -> &Buffer {
        &self.buffers[Self::index(name)]
    }

    pub fn get_mut(&mut self, name: BufferName) -> &mut Buffer {
        &mut self.buffers[Self::index(name)]
    }

    pub fn read(&self, name: BufferName, now: SimTime) -> Option<&Chunk> {
        self.get(name).read(now)
    }

    /// Human readable dump used in deadlock reports.
    pub fn snapshot(&self, now: SimTime) -> String {
        let mut out = String::new();
        for buffer in &self.buffers {
            out.push_str(buffer.name.as_str());
            if !buffer.is_free(now) {
                out.push_str(&format!(" [busy until {}]", buffer.busy_until));
            }
            match &buffer.content {
                Some(chunk) => {
                    out.push_str(&format!(" ({})", chunk.chunk_type()));
                    for (slot, value) in chunk.slots() {
                        out.push_str(&format!(" {slot}={value}"));
                    }
                }
                None => out.push_str(" empty"),
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn decision_slots(n: usize) -> Vec<(&'static str, SlotValue)> {
        let values = [
            SlotValue::Number(4.0),
            SlotValue::symbol("novice"),
            SlotValue::Number(40.0),
            SlotValue::Number(44.0),
            SlotValue::Number(0.88),
            SlotValue::Number(0.801),
            SlotValue::Nil,
            SlotValue::Number(0.02),
        ];
        DECISION_SLOTS.iter().copied().zip(values).take(n).collect()
    }

    #[test]
    fn minimal_goal_chunk() {
        let chunk = make_chunk(ChunkType::Goal, [("state", SlotValue::symbol("start"))]).unwrap();
        assert_eq!(chunk.len(), 1);
        assert_eq!(chunk.get("state").and_then(SlotValue::as_symbol), Some("start"));
    }

    #[test]
    fn decision_chunk_needs_all_eight_slots() {
        let chunk = make_chunk(ChunkType::Decision, decision_slots(8)).unwrap();
        assert_eq!(chunk.len(), 8);
        assert_eq!(chunk.get("reduction-time"), Some(&SlotValue::Number(4.0)));
        assert_eq!(chunk.get("decision-state").and_then(SlotValue::as_symbol), Some("novice"));

        let err = make_chunk(ChunkType::Decision, decision_slots(7)).unwrap_err();
        assert_eq!(
            err,
            MemoryError::MissingRequiredSlot {
                chunk_type: ChunkType::Decision,
                slot: "headcount-delta"
            }
        );
    }

    #[test]
    fn duplicate_slot_rejected() {
        let err = make_chunk(
            ChunkType::Goal,
            [("state", SlotValue::Nil), ("state", SlotValue::symbol("x"))],
        )
        .unwrap_err();
        assert_eq!(err, MemoryError::DuplicateSlot("state".into()));
    }

    #[test]
    fn delayed_write_completes_later() {
        let buffer = Buffer::new(BufferName::Imaginal);
        let chunk = make_chunk(ChunkType::DecisionMerits, [("w-pre", SlotValue::Number(0.4))]).unwrap();
        let written = buffer_write(&buffer, chunk.clone(), SimTime::from_millis(400), SimTime::from_millis(200)).unwrap();
        assert_eq!(written.busy_until(), SimTime::from_millis(600));
        assert!(written.read(SimTime::from_millis(599)).is_none());
        assert_eq!(written.read(SimTime::from_millis(600)), Some(&chunk));

        let err = buffer_write(&written, chunk, SimTime::from_millis(500), SimTime::ZERO).unwrap_err();
        assert!(matches!(err, MemoryError::BufferBusy { .. }));
    }

    #[test]
    fn zero_delay_write_is_visible_immediately() {
        let mut buffer = Buffer::new(BufferName::Goal);
        let chunk = make_chunk(ChunkType::Goal, [("state", SlotValue::symbol("start"))]).unwrap();
        let now = SimTime::from_millis(250);
        let done = buffer.write(chunk.clone(), now, SimTime::ZERO).unwrap();
        assert_eq!(done, now);
        assert_eq!(buffer.read(now), Some(&chunk));
    }

    #[test]
    fn with_slots_overrides_and_appends() {
        let chunk = make_chunk(ChunkType::DecisionMerits, [("w-pre", SlotValue::Number(0.4))]).unwrap();
        let next = chunk.with_slots([("w-pre", SlotValue::Number(0.5)), ("w-asm", SlotValue::Number(0.5))]);
        let names: Vec<_> = next.slots().map(|(n, _)| n).collect();
        assert_eq!(names, ["w-pre", "w-asm"]);
        assert_eq!(next.get("w-pre"), Some(&SlotValue::Number(0.5)));
    }

    fn slot_value() -> impl Strategy<Value = SlotValue> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(SlotValue::Number),
            "[a-z-]{1,12}".prop_map(|s| SlotValue::symbol(&s)),
            Just(SlotValue::Nil),
        ]
    }

    proptest! {
        #[test]
        fn construction_then_lookup_round_trips(
            slots in proptest::collection::btree_map("[a-z]{1,8}", slot_value(), 0..10)
        ) {
            let pairs: Vec<(String, SlotValue)> = slots.clone().into_iter().collect();
            let chunk = make_chunk(ChunkType::Goal, pairs.clone()).unwrap();
            for (name, value) in &pairs {
                prop_assert_eq!(chunk.get(name), Some(value));
            }
            let order: Vec<&str> = chunk.slots().map(|(n, _)| n).collect();
            let expected: Vec<&str> = pairs.iter().map(|(n, _)| n.as_str()).collect();
            prop_assert_eq!(order, expected);
        }
    }
}
