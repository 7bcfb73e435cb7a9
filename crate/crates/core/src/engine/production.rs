//! Production rules: buffer tests on the left-hand side, actions on the right.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::memory::{BufferName, BufferSet, ChunkType, SlotValue};
use crate::time::SimTime;

/// Variable bindings established while matching a production.
pub type Bindings = BTreeMap<String, SlotValue>;

/// Read-only view handed to computed values.
pub struct Context<'a> {
    pub buffers: &'a BufferSet,
    pub bindings: &'a Bindings,
    pub now: SimTime,
}

impl Context<'_> {
    /// Slot of a visible chunk; missing slots read as `Nil`.
    pub fn slot(&self, buffer: BufferName, slot: &str) -> Option<SlotValue> {
        let chunk = self.buffers.read(buffer, self.now)?;
        Some(chunk.get(slot).cloned().unwrap_or(SlotValue::Nil))
    }

    pub fn number(&self, buffer: BufferName, slot: &str) -> Option<f64> {
        self.slot(buffer, slot)?.as_number()
    }

    pub fn var(&self, name: &str) -> Option<&SlotValue> {
        self.bindings.get(name)
    }
}

pub type ComputeFn = dyn Fn(&Context<'_>) -> SlotValue + Send + Sync;

/// A labelled closure producing a slot value at fire time.
#[derive(Clone)]
pub struct Computed {
    pub label: String,
    pub func: Arc<ComputeFn>,
}

impl Computed {
    pub fn new(label: impl Into<String>, func: impl Fn(&Context<'_>) -> SlotValue + Send + Sync + 'static) -> Self {
        Computed {
            label: label.into(),
            func: Arc::new(func),
        }
    }
}

impl fmt::Debug for Computed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Computed({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum ValueExpr {
    Const(SlotValue),
    Slot { buffer: BufferName, slot: String },
    Var(String),
    Compute(Computed),
}

impl ValueExpr {
    pub fn text(s: &str) -> Self {
        ValueExpr::Const(SlotValue::symbol(s))
    }

    pub fn number(x: f64) -> Self {
        ValueExpr::Const(SlotValue::Number(x))
    }

    pub fn slot(buffer: BufferName, slot: &str) -> Self {
        ValueExpr::Slot {
            buffer,
            slot: slot.to_string(),
        }
    }

    pub fn compute(label: &str, func: impl Fn(&Context<'_>) -> SlotValue + Send + Sync + 'static) -> Self {
        ValueExpr::Compute(Computed::new(label, func))
    }

    pub fn eval(&self, ctx: &Context<'_>) -> SlotValue {
        match self {
            ValueExpr::Const(v) => v.clone(),
            ValueExpr::Slot { buffer, slot } => ctx.slot(*buffer, slot).unwrap_or(SlotValue::Nil),
            ValueExpr::Var(name) => ctx.var(name).cloned().unwrap_or(SlotValue::Nil),
            ValueExpr::Compute(c) => (c.func)(ctx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    fn holds(self, lhs: &SlotValue, rhs: &SlotValue) -> bool {
        match self {
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
            _ => match (lhs.as_number(), rhs.as_number()) {
                (Some(a), Some(b)) => match self {
                    Comparator::Lt => a < b,
                    Comparator::Le => a <= b,
                    Comparator::Gt => a > b,
                    Comparator::Ge => a >= b,
                    Comparator::Eq | Comparator::Ne => unreachable!(),
                },
                _ => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Value(SlotValue),
    /// Binds on first use (with `Eq`), compares on later uses.
    Var(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Test {
        buffer: BufferName,
        slot: String,
        cmp: Comparator,
        operand: Operand,
    },
    /// The buffer has no pending write.
    Free(BufferName),
}

impl Condition {
    pub fn test(buffer: BufferName, slot: &str, cmp: Comparator, value: impl Into<SlotValue>) -> Self {
        Condition::Test {
            buffer,
            slot: slot.to_string(),
            cmp,
            operand: Operand::Value(value.into()),
        }
    }

    pub fn eq(buffer: BufferName, slot: &str, value: impl Into<SlotValue>) -> Self {
        Condition::test(buffer, slot, Comparator::Eq, value)
    }

    pub fn bind(buffer: BufferName, slot: &str, var: &str) -> Self {
        Condition::Test {
            buffer,
            slot: slot.to_string(),
            cmp: Comparator::Eq,
            operand: Operand::Var(var.to_string()),
        }
    }

    /// Compares a slot against a variable bound by an earlier condition.
    pub fn compare_var(buffer: BufferName, slot: &str, cmp: Comparator, var: &str) -> Self {
        Condition::Test {
            buffer,
            slot: slot.to_string(),
            cmp,
            operand: Operand::Var(var.to_string()),
        }
    }

    /// Checks the condition, extending `bindings` on success.
    fn check(&self, buffers: &BufferSet, now: SimTime, bindings: &mut Bindings) -> bool {
        match self {
            Condition::Free(buffer) => buffers.get(*buffer).is_free(now),
            Condition::Test {
                buffer,
                slot,
                cmp,
                operand,
            } => {
                let Some(chunk) = buffers.read(*buffer, now) else {
                    return false;
                };
                let actual = chunk.get(slot).cloned().unwrap_or(SlotValue::Nil);
                match operand {
                    Operand::Value(expected) => cmp.holds(&actual, expected),
                    Operand::Var(name) => match bindings.get(name) {
                        Some(bound) => cmp.holds(&actual, bound),
                        None if *cmp == Comparator::Eq => {
                            bindings.insert(name.clone(), actual);
                            true
                        }
                        None => false,
                    },
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Action {
    /// Immediate modification of the chunk already in a buffer.
    Modify {
        buffer: BufferName,
        slots: Vec<(String, ValueExpr)>,
    },
    /// Delayed write of the imaginal buffer. Slots are merged onto the current
    /// imaginal chunk when it has the same type.
    ImaginalWrite {
        chunk_type: ChunkType,
        slots: Vec<(String, ValueExpr)>,
    },
    /// Emits one untimed line of text. Numbers print in single precision
    /// followed by a space.
    Output(ValueExpr),
    SignalDecision {
        section: ValueExpr,
        strategy: u8,
    },
    SignalRoundEnd,
}

impl Action {
    pub fn modify_goal<const N: usize>(slots: [(&str, ValueExpr); N]) -> Self {
        Action::Modify {
            buffer: BufferName::Goal,
            slots: slots.into_iter().map(|(s, v)| (s.to_string(), v)).collect(),
        }
    }

    pub fn imaginal<const N: usize>(chunk_type: ChunkType, slots: [(&str, ValueExpr); N]) -> Self {
        Action::ImaginalWrite {
            chunk_type,
            slots: slots.into_iter().map(|(s, v)| (s.to_string(), v)).collect(),
        }
    }

    pub fn output_text(text: &str) -> Self {
        Action::Output(ValueExpr::text(text))
    }
}

/// A condition-action rule with a learned utility.
#[derive(Debug, Clone)]
pub struct Production {
    pub name: String,
    pub conditions: Vec<Condition>,
    pub actions: Vec<Action>,
    pub utility: f32,
    pub initial_utility: f32,
    pub last_selection_time: Option<SimTime>,
    pub fired_since_last_reward: bool,
}

impl Production {
    pub fn new(name: &str) -> Self {
        Production {
            name: name.to_string(),
            conditions: Vec::new(),
            actions: Vec::new(),
            utility: 0.0,
            initial_utility: 0.0,
            last_selection_time: None,
            fired_since_last_reward: false,
        }
    }

    pub fn when(mut self, condition: Condition) -> Self {
        self.conditions.push(condition);
        self
    }

    pub fn then(mut self, action: Action) -> Self {
        self.actions.push(action);
        self
    }

    pub fn with_utility(mut self, utility: f32) -> Self {
        self.utility = utility;
        self.initial_utility = utility;
        self
    }

    /// Bindings if every condition holds against the buffers at `now`.
    pub fn matches(&self, buffers: &BufferSet, now: SimTime) -> Option<Bindings> {
        let mut bindings = Bindings::new();
        self.conditions
            .iter()
            .all(|c| c.check(buffers, now, &mut bindings))
            .then_some(bindings)
    }

    pub fn reset(&mut self) {
        self.utility = self.initial_utility;
        self.last_selection_time = None;
        self.fired_since_last_reward = false;
    }
}

/// One entry of a conflict set.
#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub index: usize,
    pub bindings: Bindings,
}

/// All productions whose conditions hold, in declaration order.
pub fn match_productions(productions: &[Production], buffers: &BufferSet, now: SimTime) -> Vec<Match> {
    productions
        .iter()
        .enumerate()
        .filter_map(|(index, p)| p.matches(buffers, now).map(|bindings| Match { index, bindings }))
        .collect()
}
