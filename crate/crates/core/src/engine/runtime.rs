//! The match → select → fire loop.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::learning::{effective_reward, td_update};
use crate::engine::production::{match_productions, Action, Context, Match, Production};
use crate::engine::select::select;
use crate::engine::trace::{EventKind, Module, TraceEvent, TraceLog};
use crate::engine::{EngineConfig, EngineError};
use crate::memory::{BufferName, BufferSet, Chunk, MemoryError, SlotValue};
use crate::time::SimTime;

/// The (section, strategy) pair a round committed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub section: u8,
    pub strategy: u8,
}

/// Signals raised by the actions of one firing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FireSignals {
    pub decision: Option<Decision>,
    pub round_end: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub events: Vec<TraceEvent>,
    pub decision: Option<Decision>,
    pub firings: usize,
    pub end_time: SimTime,
}

/// Renders an output value the way the trace shows it.
pub fn render_output(value: &SlotValue) -> String {
    match value {
        SlotValue::Number(x) => format!("{:?} ", *x as f32),
        SlotValue::Symbol(s) => s.to_string(),
        SlotValue::Nil => "NIL".to_string(),
    }
}

/// A single-threaded production-system run.
#[derive(Debug)]
pub struct Engine {
    config: EngineConfig,
    productions: Vec<Production>,
    buffers: BufferSet,
    clock: SimTime,
    rng: ChaCha8Rng,
    pending: Vec<TraceEvent>,
    log: TraceLog,
    fire_order: Vec<usize>,
    script: VecDeque<String>,
}

impl Engine {
    pub fn new(config: EngineConfig, productions: Vec<Production>) -> Result<Self, EngineError> {
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        Engine::with_rng(config, productions, rng)
    }

    pub fn with_rng(config: EngineConfig, mut productions: Vec<Production>, rng: ChaCha8Rng) -> Result<Self, EngineError> {
        config.validate()?;
        for (i, p) in productions.iter().enumerate() {
            if productions[..i].iter().any(|q| q.name == p.name) {
                return Err(EngineError::DuplicateProduction(p.name.clone()));
            }
        }
        productions.iter_mut().for_each(Production::reset);
        Ok(Engine {
            config,
            productions,
            buffers: BufferSet::default(),
            clock: SimTime::ZERO,
            rng,
            pending: Vec::new(),
            log: TraceLog::new(),
            fire_order: Vec::new(),
            script: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn buffers(&self) -> &BufferSet {
        &self.buffers
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, name: &str) -> Option<&Production> {
        self.productions.iter().find(|p| p.name == name)
    }

    /// Overrides a production's current utility.
    pub fn set_utility(&mut self, name: &str, utility: f32) -> Result<(), EngineError> {
        let p = self
            .productions
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| EngineError::UnknownProduction(name.to_string()))?;
        p.utility = utility;
        Ok(())
    }

    pub fn log(&self) -> &TraceLog {
        &self.log
    }

    pub fn into_log(self) -> TraceLog {
        self.log
    }

    /// Queue of production names used instead of sampling whenever the
    /// conflict set has more than one member. Replays recorded traces.
    pub fn script_choices<I: IntoIterator<Item = S>, S: Into<String>>(&mut self, names: I) {
        self.script.extend(names.into_iter().map(Into::into));
    }

    /// Places `chunk` in the goal buffer and logs the event.
    pub fn set_goal(&mut self, chunk_name: &str, chunk: Chunk) -> Result<(), EngineError> {
        self.buffers
            .get_mut(BufferName::Goal)
            .write(chunk, self.clock, SimTime::ZERO)
            .map_err(EngineError::ActionOnBusyBuffer)?;
        self.log.push(TraceEvent::new(
            self.clock,
            Module::Goal,
            EventKind::SetBufferChunk {
                buffer: BufferName::Goal.to_string(),
                chunk: chunk_name.to_string(),
                requested: false,
            },
        ));
        Ok(())
    }

    pub fn conflict_set(&self) -> Vec<Match> {
        match_productions(&self.productions, &self.buffers, self.clock)
    }

    fn commit_due(&mut self) {
        while self.pending.first().is_some_and(|e| e.time <= self.clock) {
            let event = self.pending.remove(0);
            self.log.push(event);
        }
    }

    fn schedule(&mut self, event: TraceEvent) {
        let at = self.pending.partition_point(|e| e.time <= event.time);
        self.pending.insert(at, event);
    }

    fn choose(&mut self, set: &[Match]) -> Result<usize, EngineError> {
        if set.len() > 1 {
            if let Some(name) = self.script.pop_front() {
                return set
                    .iter()
                    .position(|m| self.productions[m.index].name == name)
                    .ok_or_else(|| EngineError::ScriptMismatch {
                        expected: name,
                        available: set.iter().map(|m| self.productions[m.index].name.clone()).collect(),
                    });
            }
        }
        let utilities: Vec<f64> = set.iter().map(|m| f64::from(self.productions[m.index].utility)).collect();
        select(&utilities, &self.config, &mut self.rng)
    }

    /// Fires a member of the current conflict set: advances the clock by one
    /// production latency, logs the firing and runs the actions in order.
    pub fn fire(&mut self, selected: &Match) -> Result<FireSignals, EngineError> {
        let index = selected.index;
        let production = self
            .productions
            .get_mut(index)
            .ok_or_else(|| EngineError::UnknownProduction(format!("#{index}")))?;
        production.last_selection_time = Some(self.clock);
        if !production.fired_since_last_reward {
            production.fired_since_last_reward = true;
            self.fire_order.push(index);
        }
        let name = production.name.clone();
        let actions = production.actions.clone();

        self.clock = self.clock + self.config.production_latency;
        self.commit_due();
        self.log.push(TraceEvent::new(
            self.clock,
            Module::Procedural,
            EventKind::ProductionFired { production: name },
        ));

        let mut signals = FireSignals::default();
        for action in &actions {
            self.execute(action, selected, &mut signals)?;
        }
        Ok(signals)
    }

    fn execute(&mut self, action: &Action, selected: &Match, signals: &mut FireSignals) -> Result<(), EngineError> {
        let now = self.clock;
        let eval_all = |engine: &Engine, slots: &[(String, crate::engine::ValueExpr)]| {
            let ctx = Context {
                buffers: &engine.buffers,
                bindings: &selected.bindings,
                now,
            };
            slots.iter().map(|(s, v)| (s.clone(), v.eval(&ctx))).collect::<Vec<_>>()
        };
        match action {
            Action::Modify { buffer, slots } => {
                let values = eval_all(self, slots);
                let current = self
                    .buffers
                    .read(*buffer, now)
                    .ok_or(EngineError::ModifyEmptyBuffer(*buffer))?
                    .with_slots(values);
                self.buffers
                    .get_mut(*buffer)
                    .write(current, now, SimTime::ZERO)
                    .map_err(EngineError::ActionOnBusyBuffer)?;
            }
            Action::ImaginalWrite { chunk_type, slots } => {
                let values = eval_all(self, slots);
                let chunk = match self.buffers.read(BufferName::Imaginal, now) {
                    Some(existing) if existing.chunk_type() == *chunk_type => existing.with_slots(values),
                    _ => Chunk::new(*chunk_type, values).map_err(EngineError::Memory)?,
                };
                let ready = self
                    .buffers
                    .get_mut(BufferName::Imaginal)
                    .write(chunk, now, self.config.imaginal_delay)
                    .map_err(EngineError::ActionOnBusyBuffer)?;
                let event = TraceEvent::new(
                    ready,
                    Module::Imaginal,
                    EventKind::SetBufferChunkFromSpec {
                        buffer: BufferName::Imaginal.to_string(),
                        spec: String::new(),
                    },
                );
                if ready == now {
                    self.log.push(event);
                } else {
                    self.schedule(event);
                }
            }
            Action::Output(expr) => {
                let ctx = Context {
                    buffers: &self.buffers,
                    bindings: &selected.bindings,
                    now,
                };
                let text = render_output(&expr.eval(&ctx));
                self.log
                    .push(TraceEvent::new(now, Module::Procedural, EventKind::Output { text }));
            }
            Action::SignalDecision { section, strategy } => {
                let ctx = Context {
                    buffers: &self.buffers,
                    bindings: &selected.bindings,
                    now,
                };
                let value = section.eval(&ctx);
                let section = match value.as_number() {
                    Some(x) if x == 0.0 || x == 1.0 => x as u8,
                    _ => return Err(EngineError::InvalidDecision(format!("section {value}"))),
                };
                if *strategy > 2 {
                    return Err(EngineError::InvalidDecision(format!("strategy {strategy}")));
                }
                signals.decision = Some(Decision {
                    section,
                    strategy: *strategy,
                });
            }
            Action::SignalRoundEnd => signals.round_end = true,
        }
        Ok(())
    }

    /// Runs match → select → fire until a production signals the end of the
    /// round. Returns the events logged during the round.
    pub fn run_until_round_end(&mut self) -> Result<RoundResult, EngineError> {
        let start = self.log.len();
        let mut firings = 0;
        let mut decision = None;
        loop {
            self.commit_due();
            let set = self.conflict_set();
            if set.is_empty() {
                match self.pending.first() {
                    Some(next) => {
                        self.clock = next.time;
                        continue;
                    }
                    None => {
                        return Err(EngineError::Deadlock {
                            time: self.clock,
                            snapshot: self.buffers.snapshot(self.clock),
                        })
                    }
                }
            }
            if firings >= self.config.step_limit {
                return Err(EngineError::StepLimitExceeded {
                    limit: self.config.step_limit,
                });
            }
            let chosen = self.choose(&set)?;
            let signals = self.fire(&set[chosen])?;
            firings += 1;
            if signals.decision.is_some() {
                decision = signals.decision;
            }
            if signals.round_end {
                break;
            }
        }
        Ok(RoundResult {
            events: self.log.events[start..].to_vec(),
            decision,
            firings,
            end_time: self.clock,
        })
    }

    /// Applies `reward` at the current clock.
    pub fn apply_reward(&mut self, reward: f32) {
        self.apply_reward_at(reward, self.clock);
    }

    /// Credits every production fired since the previous reward, in firing
    /// order, with `reward` minus the seconds since its selection.
    pub fn apply_reward_at(&mut self, reward: f32, now: SimTime) {
        let alpha = self.config.alpha;
        self.log
            .push(TraceEvent::new(now, Module::Procedural, EventKind::Reward { reward, alpha }));
        for index in std::mem::take(&mut self.fire_order) {
            let p = &mut self.productions[index];
            let selected_at = p.last_selection_time.unwrap_or(now);
            let dt = now.saturating_sub(selected_at).as_secs_f32();
            let r_eff = effective_reward(reward, dt);
            let u_prev = p.utility;
            let u_new = td_update(u_prev, r_eff, alpha);
            p.utility = u_new;
            self.log.push(TraceEvent::new(
                now,
                Module::Procedural,
                EventKind::UtilityUpdate {
                    production: p.name.clone(),
                    u_prev,
                    r_eff,
                    reward,
                    dt,
                    u_new,
                },
            ));
        }
        for p in &mut self.productions {
            p.fired_since_last_reward = false;
        }
    }

    pub fn reset_utilities(&mut self) {
        self.productions.iter_mut().for_each(Production::reset);
        self.fire_order.clear();
    }
}

impl From<MemoryError> for EngineError {
    fn from(e: MemoryError) -> Self {
        EngineError::Memory(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::production::{Condition, ValueExpr};
    use crate::memory::{make_chunk, ChunkType};

    fn goal(state: &str) -> Chunk {
        make_chunk(ChunkType::Goal, [("state", SlotValue::symbol(state))]).unwrap()
    }

    fn step(from: &str, to: &str, name: &str) -> Production {
        Production::new(name)
            .when(Condition::eq(BufferName::Goal, "state", from))
            .then(Action::modify_goal([("state", ValueExpr::text(to))]))
    }

    fn chain() -> Vec<Production> {
        vec![
            step("start", "b", "A"),
            step("b", "stop", "B"),
            Production::new("STOP")
                .when(Condition::eq(BufferName::Goal, "state", "stop"))
                .then(Action::output_text("this is the end of one decision making"))
                .then(Action::modify_goal([("state", ValueExpr::text("start"))]))
                .then(Action::SignalRoundEnd),
        ]
    }

    #[test]
    fn firings_advance_clock_by_latency() {
        let mut engine = Engine::new(EngineConfig::default(), chain()).unwrap();
        engine.set_goal("GOER", goal("start")).unwrap();
        let round = engine.run_until_round_end().unwrap();
        let times: Vec<u64> = round
            .events
            .iter()
            .filter(|e| e.production_fired().is_some())
            .map(|e| e.time.as_millis())
            .collect();
        assert_eq!(times, [50, 100, 150]);
        assert_eq!(round.firings, 3);
        assert_eq!(
            round.events.last().unwrap().kind,
            EventKind::Output {
                text: "this is the end of one decision making".into()
            }
        );
    }

    #[test]
    fn reward_decays_with_time_since_selection() {
        let mut engine = Engine::new(EngineConfig::default(), chain()).unwrap();
        engine.set_goal("GOER", goal("start")).unwrap();
        engine.run_until_round_end().unwrap();
        engine.apply_reward(-2.0);
        let dts: Vec<f32> = engine
            .log()
            .utility_updates()
            .map(|k| match k {
                EventKind::UtilityUpdate { dt, .. } => *dt,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(dts, [0.15, 0.1, 0.05]);
        assert!(engine.log().audit().is_ok());
        // flags cleared: a second reward updates nothing
        engine.apply_reward(1.0);
        assert_eq!(engine.log().utility_updates().count(), 3);
    }

    #[test]
    fn no_terminating_production_hits_step_limit() {
        let looping = vec![step("start", "start", "LOOP")];
        let config = EngineConfig {
            step_limit: 25,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(config, looping).unwrap();
        engine.set_goal("GOER", goal("start")).unwrap();
        let err = engine.run_until_round_end().unwrap_err();
        assert!(matches!(err, EngineError::StepLimitExceeded { limit: 25 }));
    }

    #[test]
    fn empty_conflict_set_deadlocks_with_snapshot() {
        let mut engine = Engine::new(EngineConfig::default(), vec![step("b", "c", "B")]).unwrap();
        engine.set_goal("GOER", goal("start")).unwrap();
        match engine.run_until_round_end().unwrap_err() {
            EngineError::Deadlock { time, snapshot } => {
                assert_eq!(time, SimTime::ZERO);
                assert!(snapshot.contains("state=start"), "{snapshot}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn imaginal_write_waits_for_delay() {
        let rules = vec![
            Production::new("WRITE")
                .when(Condition::eq(BufferName::Goal, "state", "start"))
                .then(Action::imaginal(ChunkType::DecisionMerits, [("w-pre", ValueExpr::number(0.5))]))
                .then(Action::modify_goal([("state", ValueExpr::text("read"))])),
            Production::new("READ")
                .when(Condition::eq(BufferName::Goal, "state", "read"))
                .when(Condition::Free(BufferName::Imaginal))
                .when(Condition::test(BufferName::Imaginal, "w-pre", crate::engine::Comparator::Gt, 0.0))
                .then(Action::SignalRoundEnd),
        ];
        let mut engine = Engine::new(EngineConfig::default(), rules).unwrap();
        engine.set_goal("GOER", goal("start")).unwrap();
        let round = engine.run_until_round_end().unwrap();
        let rendered: Vec<(u64, String)> = round
            .events
            .iter()
            .map(|e| (e.time.as_millis(), format!("{:?}", e.kind)))
            .collect();
        assert_eq!(rendered[0].0, 50);
        assert!(rendered[1].1.starts_with("SetBufferChunkFromSpec"));
        assert_eq!(rendered[1].0, 250);
        assert_eq!(rendered[2].0, 300);
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = Engine::new(EngineConfig::default(), vec![Production::new("X"), Production::new("X")]).unwrap_err();
        assert!(matches!(err, EngineError::DuplicateProduction(_)));
    }

    #[test]
    fn same_seed_same_log() {
        let rules = || {
            vec![
                step("start", "stop", "LEFT").with_utility(0.5),
                step("start", "stop", "RIGHT"),
                Production::new("STOP")
                    .when(Condition::eq(BufferName::Goal, "state", "stop"))
                    .then(Action::modify_goal([("state", ValueExpr::text("start"))]))
                    .then(Action::SignalRoundEnd),
            ]
        };
        let run = || {
            let mut engine = Engine::new(EngineConfig { rng_seed: 99, ..EngineConfig::default() }, rules()).unwrap();
            engine.set_goal("GOER", goal("start")).unwrap();
            for _ in 0..20 {
                engine.run_until_round_end().unwrap();
                engine.apply_reward(1.0);
            }
            engine.into_log()
        };
        assert_eq!(run().to_json_lines(), run().to_json_lines());
    }
}
