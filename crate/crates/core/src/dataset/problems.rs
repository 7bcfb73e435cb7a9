use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::task::ProblemInstance;

/// Sampling ranges for generated instances. Each brackets the base instance
/// by about 10%, so either section can come out ahead.
pub const CT_PRE_RANGE: RangeInclusive<f64> = 36.0..=44.0;
pub const CT_ASM_RANGE: RangeInclusive<f64> = 40.0..=48.0;
pub const OEE_RANGE: RangeInclusive<f64> = 0.75..=0.92;

/// `count` instances with the base instance first. The rest draw cycle times
/// rounded to whole seconds and OEE rounded to 0.1 percentage points, so
/// prompts read like the base one. The reduction stays at 4 s.
pub fn generate_problem_sets(master_seed: u64, count: usize) -> Vec<ProblemInstance> {
    let base = ProblemInstance::base();
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(base);
    for _ in 1..count {
        let ct_pre = rng.gen_range(CT_PRE_RANGE).round();
        let oee_pre = (rng.gen_range(OEE_RANGE) * 1000.0).round() / 1000.0;
        let ct_asm = rng.gen_range(CT_ASM_RANGE).round();
        let oee_asm = (rng.gen_range(OEE_RANGE) * 1000.0).round() / 1000.0;
        out.push(ProblemInstance {
            ct_pre,
            oee_pre,
            ct_asm,
            oee_asm,
            reduction: base.reduction,
        });
    }
    out
}
