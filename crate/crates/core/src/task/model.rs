//! Weight, defect, headcount and reward models for the two-section task.

use serde::{Deserialize, Serialize};

use crate::task::{ProblemInstance, Section, Strategy, TaskError};

/// Sector weights and defect increases.
///
/// `w_i = ct_i (1 - oee_i) / sum_j ct_j (1 - oee_j)` and
/// `defect_i = w_i (1 - oee_i) (reduction / ct_i) * kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DefectModel {
    pub kappa: f64,
}

impl Default for DefectModel {
    fn default() -> Self {
        DefectModel { kappa: 1.0 }
    }
}

impl DefectModel {
    pub fn weights(&self, instance: &ProblemInstance) -> (f64, f64) {
        let pre = instance.ct_pre * (1.0 - instance.oee_pre);
        let asm = instance.ct_asm * (1.0 - instance.oee_asm);
        let total = pre + asm;
        if total <= 0.0 {
            return (0.5, 0.5);
        }
        (pre / total, 1.0 - pre / total)
    }

    pub fn weight(&self, instance: &ProblemInstance, section: Section) -> f64 {
        let (pre, asm) = self.weights(instance);
        match section {
            Section::PreAssembly => pre,
            Section::Assembly => asm,
        }
    }

    pub fn defect_increase(&self, instance: &ProblemInstance, section: Section, reduction: f64) -> f64 {
        let (ct, oee) = instance.section(section);
        self.weight(instance, section) * (1.0 - oee) * (reduction / ct) * self.kappa
    }
}

/// `delta = lambda (1 / (ct - r) - 1 / ct)`; the default lambda gives 0.02
/// for a 4 s cut from 40 s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadcountModel {
    pub lambda: f64,
}

impl Default for HeadcountModel {
    fn default() -> Self {
        HeadcountModel { lambda: 7.2 }
    }
}

impl HeadcountModel {
    pub fn delta(&self, instance: &ProblemInstance, section: Section, reduction: f64) -> Result<f64, TaskError> {
        let (ct, _) = instance.section(section);
        if reduction >= ct {
            return Err(TaskError::ReductionExceedsCycle { ct, reduction });
        }
        Ok(self.lambda * (1.0 / (ct - reduction) - 1.0 / ct))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostClass {
    Efficient,
    Inefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardPair {
    pub efficient: f32,
    pub inefficient: f32,
}

impl RewardPair {
    fn get(&self, class: CostClass) -> f32 {
        match class {
            CostClass::Efficient => self.efficient,
            CostClass::Inefficient => self.inefficient,
        }
    }
}

/// Round reward keyed by strategy level and cost class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardModel {
    pub novice: RewardPair,
    pub intermediate: RewardPair,
    pub expert: RewardPair,
    /// Deltas above this are inefficient.
    pub cost_threshold: f64,
}

impl Default for RewardModel {
    fn default() -> Self {
        RewardModel {
            novice: RewardPair {
                efficient: -1.0,
                inefficient: -2.0,
            },
            intermediate: RewardPair {
                efficient: 0.0,
                inefficient: 0.0,
            },
            expert: RewardPair {
                efficient: 6.0,
                inefficient: 6.0,
            },
            cost_threshold: 0.015,
        }
    }
}

impl RewardModel {
    pub fn cost_class(&self, headcount_delta: f64) -> CostClass {
        if headcount_delta > self.cost_threshold {
            CostClass::Inefficient
        } else {
            CostClass::Efficient
        }
    }

    pub fn reward_for(&self, strategy: Strategy, headcount_delta: f64) -> f32 {
        let class = self.cost_class(headcount_delta);
        match strategy {
            Strategy::Novice => self.novice.get(class),
            Strategy::Intermediate => self.intermediate.get(class),
            Strategy::Expert => self.expert.get(class),
        }
    }

    /// Expert ≥ intermediate ≥ novice within each cost class.
    pub fn is_ordered(&self) -> bool {
        [CostClass::Efficient, CostClass::Inefficient].iter().all(|&c| {
            self.expert.get(c) >= self.intermediate.get(c) && self.intermediate.get(c) >= self.novice.get(c)
        })
    }
}

/// Everything the task layer needs besides the instance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskModel {
    pub defect: DefectModel,
    pub headcount: HeadcountModel,
    pub reward: RewardModel,
}

pub fn compute_weights(instance: &ProblemInstance) -> (f64, f64) {
    DefectModel::default().weights(instance)
}

pub fn compute_defect_increase(instance: &ProblemInstance, section: Section, model: &DefectModel) -> f64 {
    model.defect_increase(instance, section, instance.reduction)
}

pub fn compute_headcount_delta(instance: &ProblemInstance, section: Section, reduction: f64) -> Result<f64, TaskError> {
    HeadcountModel::default().delta(instance, section, reduction)
}

pub fn reward_for(strategy: Strategy, headcount_delta: f64, model: &RewardModel) -> f32 {
    model.reward_for(strategy, headcount_delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn instance(ct_pre: f64, oee_pre: f64, ct_asm: f64, oee_asm: f64) -> ProblemInstance {
        ProblemInstance {
            ct_pre,
            oee_pre,
            ct_asm,
            oee_asm,
            reduction: 4.0,
        }
    }

    #[test]
    fn symmetric_instance_splits_evenly() {
        let inst = instance(42.0, 0.85, 42.0, 0.85);
        assert_eq!(compute_weights(&inst), (0.5, 0.5));
        let m = DefectModel::default();
        assert_eq!(
            compute_defect_increase(&inst, Section::PreAssembly, &m),
            compute_defect_increase(&inst, Section::Assembly, &m)
        );
    }

    #[test]
    fn base_instance_weights_and_defects() {
        let base = ProblemInstance::base();
        let (w_pre, w_asm) = compute_weights(&base);
        // 40 * 0.12 = 4.8 against 44 * 0.199 = 8.756
        let oracle_pre = 4.8 / (4.8 + 8.756);
        assert!((w_pre - oracle_pre).abs() < 1e-12);
        assert!(w_asm > w_pre);
        let m = DefectModel::default();
        let d_pre = compute_defect_increase(&base, Section::PreAssembly, &m);
        let d_asm = compute_defect_increase(&base, Section::Assembly, &m);
        assert!((d_pre - oracle_pre * 0.12 * 0.1).abs() < 1e-12);
        assert!(d_asm > d_pre);
    }

    #[test]
    fn perfect_oee_has_no_weight() {
        let inst = instance(40.0, 1.0, 44.0, 0.8);
        assert_eq!(compute_weights(&inst).0, 0.0);
        assert_eq!(compute_weights(&instance(40.0, 1.0, 44.0, 1.0)), (0.5, 0.5));
    }

    #[test]
    fn zero_reduction_costs_nothing() {
        let base = ProblemInstance::base();
        let m = DefectModel::default();
        assert_eq!(m.defect_increase(&base, Section::Assembly, 0.0), 0.0);
        assert_eq!(compute_headcount_delta(&base, Section::PreAssembly, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn headcount_delta_calibrated() {
        let base = ProblemInstance::base();
        let delta = compute_headcount_delta(&base, Section::PreAssembly, 4.0).unwrap();
        let lambda: f64 = 0.02 / (1.0 / 36.0 - 1.0 / 40.0);
        assert!((lambda - 7.2).abs() < 1e-9);
        assert!((delta - 0.02).abs() < 1e-3);
        assert!(matches!(
            compute_headcount_delta(&base, Section::PreAssembly, 40.0),
            Err(TaskError::ReductionExceedsCycle { .. })
        ));
    }

    #[test]
    fn reward_table() {
        let m = RewardModel::default();
        assert_eq!(reward_for(Strategy::Novice, 0.02, &m), -2.0);
        assert_eq!(reward_for(Strategy::Expert, 0.01, &m), 6.0);
        assert_eq!(reward_for(Strategy::Intermediate, 0.01, &m), 0.0);
        assert_eq!(reward_for(Strategy::Intermediate, 0.02, &m), 0.0);
        assert!(m.is_ordered());
    }

    proptest! {
        #[test]
        fn weights_sum_to_one(ct_pre in 10.0f64..60.0, ct_asm in 10.0f64..60.0, a in 0.5f64..1.0, b in 0.5f64..1.0) {
            let (p, q) = compute_weights(&instance(ct_pre, a, ct_asm, b));
            prop_assert!((p + q - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn defect_increases_with_reduction(ct in 20.0f64..60.0, oee in 0.5f64..0.99, r1 in 0.0f64..9.0, dr in 0.01f64..5.0) {
            let inst = instance(ct, oee, ct + 3.0, oee - 0.1);
            let m = DefectModel::default();
            for s in [Section::PreAssembly, Section::Assembly] {
                let lo = m.defect_increase(&inst, s, r1);
                let hi = m.defect_increase(&inst, s, r1 + dr);
                prop_assert!(lo >= 0.0 && hi > lo);
            }
        }
    }
}
