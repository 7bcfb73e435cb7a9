//! Trial, run and batch drivers.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, EngineConfig, TraceLog};
use crate::task::rules::{build_persona_rules, initial_goal, restrict_to_persona};
use crate::task::{run_id, DecisionOutcome, ProblemInstance, Section, Strategy, TaskError, TaskModel};

/// How personas are assigned within a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonaMode {
    /// One learning model per run; all three selectors compete.
    #[default]
    Adaptive,
    /// Run `k` of each set is locked to persona `k mod 3`.
    Fixed,
}

/// One model run on one problem instance. Utilities persist across trials.
#[derive(Debug)]
pub struct TaskRun {
    engine: Engine,
    instance: ProblemInstance,
    model: TaskModel,
    run_id: String,
}

impl TaskRun {
    pub fn new(
        instance: ProblemInstance,
        model: TaskModel,
        config: EngineConfig,
        rng: ChaCha8Rng,
        persona: Option<Strategy>,
        run_id: String,
    ) -> Result<Self, TaskError> {
        let mut rules = build_persona_rules(&instance, &model)?;
        if let Some(p) = persona {
            rules = restrict_to_persona(rules, p);
        }
        let mut engine = Engine::with_rng(config, rules, rng)?;
        engine.set_goal("GOER", initial_goal(&instance))?;
        Ok(TaskRun {
            engine,
            instance,
            model,
            run_id,
        })
    }

    /// A run seeded from `config.rng_seed`.
    pub fn seeded(instance: ProblemInstance, model: TaskModel, config: EngineConfig) -> Result<Self, TaskError> {
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        TaskRun::new(instance, model, config, rng, None, run_id(0, 0))
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut Engine {
        &mut self.engine
    }

    pub fn into_log(self) -> TraceLog {
        self.engine.into_log()
    }

    /// Plays one decision round and applies its reward.
    pub fn trial(&mut self, trial: usize) -> Result<(DecisionOutcome, TraceLog), TaskError> {
        let start = self.engine.log().len();
        let round = self.engine.run_until_round_end()?;
        let decision = round.decision.ok_or(TaskError::NoDecision)?;
        let section = Section::from_code(decision.section).ok_or(TaskError::NoDecision)?;
        let strategy = Strategy::from_code(decision.strategy).ok_or(TaskError::NoDecision)?;
        let delta = self
            .model
            .headcount
            .delta(&self.instance, section, self.instance.reduction)?;
        let reward = self.model.reward.reward_for(strategy, delta);
        self.engine.apply_reward(reward);
        let outcome = DecisionOutcome {
            run_id: self.run_id.clone(),
            trial,
            section: section.code(),
            strategy: strategy.code(),
            reward: f64::from(reward),
            headcount_delta: delta,
        };
        let segment = self.engine.log().events[start..].iter().cloned().collect();
        Ok((outcome, segment))
    }
}

pub fn run_trial(run: &mut TaskRun, trial: usize) -> Result<(DecisionOutcome, TraceLog), TaskError> {
    run.trial(trial)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub master_seed: u64,
    pub runs_per_set: usize,
    pub trials_per_run: usize,
    /// Stop one trial early when the three trials before the last were all expert.
    pub truncate_on_expert_streak: bool,
    pub mode: PersonaMode,
    pub engine: EngineConfig,
    pub model: TaskModel,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            master_seed: 0,
            runs_per_set: 4,
            trials_per_run: 16,
            truncate_on_expert_streak: true,
            mode: PersonaMode::default(),
            engine: EngineConfig::default(),
            model: TaskModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run_id: String,
    pub log: TraceLog,
    /// Event index range of each trial within `log`.
    pub trial_spans: Vec<Range<usize>>,
}

impl RunTrace {
    /// The events of trial `i`.
    pub fn trial_log(&self, i: usize) -> TraceLog {
        self.log.events[self.trial_spans[i].clone()].iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Ordered by (set, run, trial).
    pub outcomes: Vec<DecisionOutcome>,
    pub traces: Vec<RunTrace>,
}

/// RNG for global run index `index` under `master_seed`.
pub fn run_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn play_run(
    set: usize,
    run: usize,
    instance: ProblemInstance,
    config: &BatchConfig,
) -> Result<(Vec<DecisionOutcome>, RunTrace), TaskError> {
    let index = (set * config.runs_per_set + run) as u64;
    let persona = match config.mode {
        PersonaMode::Adaptive => None,
        PersonaMode::Fixed => Strategy::from_code((run % 3) as u8),
    };
    let id = run_id(set, run);
    let mut task = TaskRun::new(
        instance,
        config.model,
        config.engine.clone(),
        run_rng(config.master_seed, index),
        persona,
        id.clone(),
    )?;
    let mut outcomes = Vec::with_capacity(config.trials_per_run);
    let mut trial_spans = Vec::with_capacity(config.trials_per_run);
    for trial in 0..config.trials_per_run {
        let start = task.engine().log().len();
        let (outcome, _) = task.trial(trial)?;
        outcomes.push(outcome);
        trial_spans.push(start..task.engine().log().len());
        let remaining = config.trials_per_run - trial - 1;
        if config.truncate_on_expert_streak && remaining == 1 && trial >= 2 {
            let streak = outcomes[trial - 2..=trial]
                .iter()
                .all(|o| o.strategy == Strategy::Expert.code());
            if streak {
                break;
            }
        }
    }
    Ok((outcomes, RunTrace {
            run_id: id,
            log: task.into_log(),
            trial_spans,
        }))
}

/// Plays `runs_per_set` runs on every problem set, in parallel.
pub fn run_batch(problem_sets: &[ProblemInstance], config: &BatchConfig) -> Result<BatchResult, TaskError> {
    config.engine.validate()?;
    let jobs: Vec<(usize, usize)> = (0..problem_sets.len())
        .flat_map(|s| (0..config.runs_per_set).map(move |r| (s, r)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(s, r)| play_run(s, r, problem_sets[s], config))
        .collect::<Result<Vec<_>, _>>()?;
    let mut outcomes = Vec::new();
    let mut traces = Vec::new();
    for (o, t) in runs {
        outcomes.extend(o);
        traces.push(t);
    }
    Ok(BatchResult { outcomes, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EventKind;

    fn quiet() -> EngineConfig {
        EngineConfig {
            noise_s: 0.0,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn first_noiseless_trial_is_novice_assembly() {
        let mut run = TaskRun::seeded(ProblemInstance::base(), TaskModel::default(), quiet()).unwrap();
        let (outcome, log) = run.trial(0).unwrap();
        assert_eq!((outcome.section, outcome.strategy, outcome.reward), (1, 0, -2.0));
        let fired: Vec<&str> = log.fired_productions().collect();
        assert_eq!(fired, ["CHOOSE-STRATEGY", "DECIDE-BRUTE", "BRUTE-DECISION", "REHEADCOUNT", "STOP"]);
    }

    #[test]
    fn scripted_expert_picks_preassembly() {
        let mut run = TaskRun::seeded(ProblemInstance::base(), TaskModel::default(), quiet()).unwrap();
        run.engine_mut().script_choices(["EXPERT-STRATEGY"]);
        let (outcome, log) = run.trial(0).unwrap();
        assert_eq!((outcome.section, outcome.strategy, outcome.reward), (0, 2, 6.0));
        let texts: Vec<String> = log
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Output { text } => Some(text.clone()),
                _ => None,
            })
            .collect();
        assert!(texts.contains(&"choose preassemble has better stable output!".to_string()));
        assert!(log.fired_productions().count() >= 10);
    }

    #[test]
    fn every_reward_block_matches_reward_model() {
        let sets = [ProblemInstance::base()];
        let config = BatchConfig {
            runs_per_set: 2,
            ..BatchConfig::default()
        };
        let result = run_batch(&sets, &config).unwrap();
        for trace in &result.traces {
            trace.log.audit().unwrap();
            let rewards: Vec<f32> = trace
                .log
                .iter()
                .filter_map(|e| match e.kind {
                    EventKind::Reward { reward, .. } => Some(reward),
                    _ => None,
                })
                .collect();
            let expected: Vec<f32> = result
                .outcomes
                .iter()
                .filter(|o| o.run_id == trace.run_id)
                .map(|o| o.reward as f32)
                .collect();
            assert_eq!(rewards, expected);
        }
    }

    #[test]
    fn batch_is_deterministic_and_sized() {
        let sets = [ProblemInstance::base(), ProblemInstance { ct_pre: 43.0, ..ProblemInstance::base() }];
        let config = BatchConfig {
            runs_per_set: 2,
            trials_per_run: 16,
            ..BatchConfig::default()
        };
        let a = run_batch(&sets, &config).unwrap();
        let b = run_batch(&sets, &config).unwrap();
        assert_eq!(a, b);
        assert!(a.outcomes.len() >= 4 * 15 && a.outcomes.len() <= 4 * 16);
        let one = BatchConfig {
            runs_per_set: 1,
            trials_per_run: 1,
            ..BatchConfig::default()
        };
        assert_eq!(run_batch(&sets[..1], &one).unwrap().outcomes.len(), 1);
    }

    #[test]
    fn fixed_mode_locks_persona() {
        let config = BatchConfig {
            runs_per_set: 3,
            trials_per_run: 4,
            mode: PersonaMode::Fixed,
            ..BatchConfig::default()
        };
        let result = run_batch(&[ProblemInstance::base()], &config).unwrap();
        for o in &result.outcomes {
            let run: usize = o.run_id.rsplit('r').next().unwrap().parse().unwrap();
            assert_eq!(o.strategy as usize, run % 3);
        }
    }
}
