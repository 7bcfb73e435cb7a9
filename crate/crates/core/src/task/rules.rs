//! The 18 persona productions.
//!
//! Control flows through the goal's `state` slot. From `choose`, three
//! selectors compete: DECIDE-BRUTE (novice), DECIDE-INTERMEDIATE and
//! EXPERT-STRATEGY. Every path ends in STOP, which resets `state` to `start`.

use crate::engine::{Action, Comparator, Condition, Production, ValueExpr};
use crate::memory::{make_chunk, BufferName, Chunk, ChunkType, SlotValue};
use crate::task::{ProblemInstance, Section, Strategy, TaskError, TaskModel};

pub const ASSEMBLY_TEXT: &str = "assembly is always a good place to reduce time!";
pub const END_TEXT: &str = "this is the end of one decision making";
pub const CHOOSE_PRE_TEXT: &str = "choose preassemble has better stable output!";
pub const CHOOSE_ASM_TEXT: &str = "choose assemble has better stable output!";

/// Names of the three productions that compete at `state = choose`.
pub const SELECTORS: [&str; 3] = ["DECIDE-BRUTE", "DECIDE-INTERMEDIATE", "EXPERT-STRATEGY"];

/// Selector production that commits to `strategy`.
pub fn selector_for(strategy: Strategy) -> &'static str {
    SELECTORS[strategy.code() as usize]
}

/// Goal chunk placed at the start of every run.
pub fn initial_goal(instance: &ProblemInstance) -> Chunk {
    let pairs: [(&str, SlotValue); 9] = [
        ("state", "start".into()),
        ("reduction-time", instance.reduction.into()),
        ("ct-pre", instance.ct_pre.into()),
        ("ct-asm", instance.ct_asm.into()),
        ("oee-pre", instance.oee_pre.into()),
        ("oee-asm", instance.oee_asm.into()),
        ("section", SlotValue::Nil),
        ("diff", SlotValue::Nil),
        ("decision", SlotValue::Nil),
    ];
    make_chunk(ChunkType::Goal, pairs).expect("distinct goal slots")
}

fn state(s: &str) -> Condition {
    Condition::eq(BufferName::Goal, "state", s)
}

fn goto(s: &str) -> (&str, ValueExpr) {
    ("state", ValueExpr::text(s))
}

fn goal_number(slot: &'static str) -> ValueExpr {
    ValueExpr::slot(BufferName::Goal, slot)
}

pub fn build_persona_rules(instance: &ProblemInstance, model: &TaskModel) -> Result<Vec<Production>, TaskError> {
    instance.validate()?;
    let r = instance.reduction;
    let (w_pre, w_asm) = model.defect.weights(instance);
    let d_pre = model.defect.defect_increase(instance, Section::PreAssembly, r);
    let d_asm = model.defect.defect_increase(instance, Section::Assembly, r);
    let hc_pre = model.headcount.delta(instance, Section::PreAssembly, r)?;
    let hc_asm = model.headcount.delta(instance, Section::Assembly, r)?;

    // headcount change of whichever section the goal records as chosen
    let chosen_delta = move |sign: f64| {
        ValueExpr::compute("chosen-headcount-delta", move |ctx| {
            match ctx.number(BufferName::Goal, "section") {
                Some(0.0) => SlotValue::Number(sign * hc_pre),
                Some(_) => SlotValue::Number(sign * hc_asm),
                None => SlotValue::Nil,
            }
        })
    };

    let rules = vec![
        Production::new("CHOOSE-STRATEGY")
            .when(state("start"))
            .then(Action::modify_goal([goto("choose")])),
        // novice
        Production::new("DECIDE-BRUTE")
            .with_utility(3.0)
            .when(state("choose"))
            .then(Action::modify_goal([goto("brute")])),
        Production::new("BRUTE-DECISION")
            .when(state("brute"))
            .then(Action::output_text(ASSEMBLY_TEXT))
            .then(Action::SignalDecision {
                section: ValueExpr::number(1.0),
                strategy: Strategy::Novice.code(),
            })
            .then(Action::modify_goal([
                ("section", ValueExpr::number(1.0)),
                ("decision", ValueExpr::text("novice")),
                goto("reheadcount"),
            ])),
        Production::new("REHEADCOUNT")
            .when(state("reheadcount"))
            .then(Action::Output(chosen_delta(-1.0)))
            .then(Action::modify_goal([goto("stop")])),
        Production::new("STOP")
            .when(state("stop"))
            .then(Action::output_text(END_TEXT))
            .then(Action::modify_goal([goto("start")]))
            .then(Action::SignalRoundEnd),
        // intermediate
        Production::new("DECIDE-INTERMEDIATE")
            .when(state("choose"))
            .then(Action::modify_goal([goto("intermediate")])),
        Production::new("INTERMEDIATE-STRATEGY")
            .when(state("intermediate"))
            .then(Action::Output(ValueExpr::number(hc_pre)))
            .then(Action::imaginal(
                ChunkType::Decision,
                [
                    ("reduction-time", goal_number("reduction-time")),
                    ("decision-state", ValueExpr::text("intermediate")),
                    ("ct-pre", goal_number("ct-pre")),
                    ("ct-asm", goal_number("ct-asm")),
                    ("oee-pre", goal_number("oee-pre")),
                    ("oee-asm", goal_number("oee-asm")),
                    ("chosen-section", ValueExpr::Const(SlotValue::Nil)),
                    ("headcount-delta", ValueExpr::number(hc_pre)),
                ],
            ))
            .then(Action::modify_goal([goto("intermediate-choice")])),
        Production::new("INERMEDIATE-CHOICE1")
            .when(state("intermediate-choice"))
            .when(Condition::Free(BufferName::Imaginal))
            .when(Condition::bind(BufferName::Imaginal, "oee-pre", "pre"))
            .when(Condition::compare_var(BufferName::Imaginal, "oee-asm", Comparator::Gt, "pre"))
            .then(Action::output_text(CHOOSE_PRE_TEXT))
            .then(Action::SignalDecision {
                section: ValueExpr::number(0.0),
                strategy: Strategy::Intermediate.code(),
            })
            .then(Action::modify_goal([
                ("section", ValueExpr::number(0.0)),
                ("decision", ValueExpr::text("intermediate")),
                goto("reheadcount"),
            ])),
        Production::new("INERMEDIATE-CHOICE2")
            .when(state("intermediate-choice"))
            .when(Condition::Free(BufferName::Imaginal))
            .when(Condition::bind(BufferName::Imaginal, "oee-pre", "pre"))
            .when(Condition::compare_var(BufferName::Imaginal, "oee-asm", Comparator::Le, "pre"))
            .then(Action::output_text(CHOOSE_ASM_TEXT))
            .then(Action::SignalDecision {
                section: ValueExpr::number(1.0),
                strategy: Strategy::Intermediate.code(),
            })
            .then(Action::modify_goal([
                ("section", ValueExpr::number(1.0)),
                ("decision", ValueExpr::text("intermediate")),
                goto("reheadcount"),
            ])),
        // expert
        Production::new("EXPERT-STRATEGY")
            .when(state("choose"))
            .then(Action::modify_goal([goto("perceive")])),
        Production::new("PERCEIVE")
            .when(state("perceive"))
            .then(Action::modify_goal([goto("weight-pre")])),
        Production::new("PREASSEMBLE-WEIGHT")
            .when(state("weight-pre"))
            .when(Condition::Free(BufferName::Imaginal))
            .then(Action::Output(ValueExpr::number(w_pre)))
            .then(Action::output_text("caculate the preassemble defect decision weight"))
            .then(Action::imaginal(ChunkType::DecisionMerits, [("weight-pre", ValueExpr::number(w_pre))]))
            .then(Action::modify_goal([goto("weight-asm")])),
        Production::new("ASSEMBLE-WEIGHT")
            .when(state("weight-asm"))
            .when(Condition::Free(BufferName::Imaginal))
            .then(Action::Output(ValueExpr::number(w_asm)))
            .then(Action::output_text("calculate the assemble defect decision weight"))
            .then(Action::imaginal(ChunkType::DecisionMerits, [("weight-asm", ValueExpr::number(w_asm))]))
            .then(Action::modify_goal([goto("defect-pre")])),
        Production::new("PREASSEMBLE")
            .when(state("defect-pre"))
            .when(Condition::Free(BufferName::Imaginal))
            .then(Action::Output(ValueExpr::number(d_pre)))
            .then(Action::output_text("calculate the final preassemble defect rate"))
            .then(Action::imaginal(ChunkType::DecisionMerits, [("defect-pre", ValueExpr::number(d_pre))]))
            .then(Action::modify_goal([goto("defect-asm")])),
        Production::new("ASSEMBLE")
            .when(state("defect-asm"))
            .when(Condition::Free(BufferName::Imaginal))
            .then(Action::Output(ValueExpr::number(d_asm)))
            .then(Action::output_text("calclate the assemble defect rate"))
            .then(Action::imaginal(ChunkType::DecisionMerits, [("defect-asm", ValueExpr::number(d_asm))]))
            .then(Action::modify_goal([goto("compare")])),
        Production::new("COMPARE")
            .when(state("compare"))
            .when(Condition::Free(BufferName::Imaginal))
            .when(Condition::bind(BufferName::Imaginal, "defect-pre", "pre"))
            .when(Condition::bind(BufferName::Imaginal, "defect-asm", "asm"))
            .then(Action::modify_goal([
                (
                    "diff",
                    ValueExpr::compute("defect-pre - defect-asm", |ctx| {
                        match (ctx.var("pre").and_then(SlotValue::as_number), ctx.var("asm").and_then(SlotValue::as_number)) {
                            (Some(p), Some(a)) => SlotValue::Number(p - a),
                            _ => SlotValue::Nil,
                        }
                    }),
                ),
                goto("decide"),
            ]))
            .then(Action::Output(goal_number("diff"))),
        Production::new("DECIDE")
            .when(state("decide"))
            .then(Action::Output(ValueExpr::compute("decision-text", |ctx| {
                if preassembly_wins(ctx.number(BufferName::Goal, "diff")) {
                    SlotValue::symbol(CHOOSE_PRE_TEXT)
                } else {
                    SlotValue::symbol(CHOOSE_ASM_TEXT)
                }
            })))
            .then(Action::SignalDecision {
                section: decided_section(),
                strategy: Strategy::Expert.code(),
            })
            .then(Action::modify_goal([
                ("section", decided_section()),
                ("decision", ValueExpr::text("expert")),
                goto("headcount"),
            ])),
        Production::new("HEADCOUNT")
            .when(state("headcount"))
            .then(Action::Output(chosen_delta(1.0)))
            .then(Action::modify_goal([goto("stop")])),
    ];
    debug_assert_eq!(rules.len(), 18);
    Ok(rules)
}

fn preassembly_wins(diff: Option<f64>) -> bool {
    diff.is_some_and(|d| d <= 0.0)
}

fn decided_section() -> ValueExpr {
    ValueExpr::compute("argmin defect", |ctx| {
        let pre = preassembly_wins(ctx.number(BufferName::Goal, "diff"));
        SlotValue::Number(if pre { 0.0 } else { 1.0 })
    })
}

/// Keeps only the selector for `persona`, so every round follows that path.
pub fn restrict_to_persona(rules: Vec<Production>, persona: Strategy) -> Vec<Production> {
    let keep = selector_for(persona);
    rules
        .into_iter()
        .filter(|p| !SELECTORS.contains(&p.name.as_str()) || p.name == keep)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighteen_uniquely_named_rules() {
        let rules = build_persona_rules(&ProblemInstance::base(), &TaskModel::default()).unwrap();
        assert_eq!(rules.len(), 18);
        let mut names: Vec<&str> = rules.iter().map(|p| p.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 18);
        for p in &rules {
            let expected = if p.name == "DECIDE-BRUTE" { 3.0 } else { 0.0 };
            assert_eq!(p.initial_utility, expected, "{}", p.name);
        }
    }

    #[test]
    fn selectors_share_the_choose_state() {
        let rules = build_persona_rules(&ProblemInstance::base(), &TaskModel::default()).unwrap();
        let mut buffers = crate::memory::BufferSet::default();
        let goal = initial_goal(&ProblemInstance::base()).with_slots([("state", SlotValue::symbol("choose"))]);
        buffers
            .get_mut(BufferName::Goal)
            .write(goal, crate::time::SimTime::ZERO, crate::time::SimTime::ZERO)
            .unwrap();
        let set = crate::engine::match_productions(&rules, &buffers, crate::time::SimTime::ZERO);
        let names: Vec<&str> = set.iter().map(|m| rules[m.index].name.as_str()).collect();
        assert_eq!(names, SELECTORS);
    }

    #[test]
    fn restriction_removes_two_selectors() {
        let rules = build_persona_rules(&ProblemInstance::base(), &TaskModel::default()).unwrap();
        let expert = restrict_to_persona(rules, Strategy::Expert);
        assert_eq!(expert.len(), 16);
        assert!(expert.iter().any(|p| p.name == "EXPERT-STRATEGY"));
        assert!(!expert.iter().any(|p| p.name == "DECIDE-BRUTE"));
    }
}
