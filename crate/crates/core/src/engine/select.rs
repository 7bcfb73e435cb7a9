//! Softmax conflict resolution.

use rand::Rng;

use crate::engine::{EngineConfig, EngineError};

/// Selection probabilities `exp(U_i / t) / sum_j exp(U_j / t)`.
///
/// The maximum utility is subtracted before exponentiating. `temperature`
/// must be positive; use [`argmax`] for the noiseless limit.
pub fn softmax_probabilities(utilities: &[f64], temperature: f64) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities.iter().map(|u| ((u - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Index of the largest utility; ties go to the lowest index.
pub fn argmax(utilities: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &u) in utilities.iter().enumerate() {
        if best.is_none_or(|(_, b)| u > b) {
            best = Some((i, u));
        }
    }
    best.map(|(i, _)| i)
}

/// Draws one index from the conflict set's utilities.
pub fn select<R: Rng + ?Sized>(utilities: &[f64], config: &EngineConfig, rng: &mut R) -> Result<usize, EngineError> {
    if utilities.is_empty() {
        return Err(EngineError::EmptyConflictSet);
    }
    if utilities.len() == 1 {
        return Ok(0);
    }
    let temperature = config.temperature();
    if temperature == 0.0 {
        return Ok(argmax(utilities).unwrap_or(0));
    }
    let probabilities = softmax_probabilities(utilities, temperature);
    let draw: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if draw < cumulative {
            return Ok(i);
        }
    }
    Ok(probabilities.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::TemperatureRule;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config_with_temperature(t: f64) -> EngineConfig {
        // sqrt(2) * s = t
        EngineConfig {
            noise_s: t / std::f64::consts::SQRT_2,
            temperature_rule: TemperatureRule::Sqrt2TimesS,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn empty_conflict_set_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = select(&[], &EngineConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, EngineError::EmptyConflictSet));
    }

    #[test]
    fn zero_noise_picks_argmax() {
        let cfg = EngineConfig {
            noise_s: 0.0,
            ..EngineConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(select(&[3.0, 0.0, 0.0], &cfg, &mut rng).unwrap(), 0);
        }
        assert_eq!(select(&[1.0, 2.0, 2.0], &cfg, &mut rng).unwrap(), 1);
    }

    #[test]
    fn two_way_closed_form() {
        // e^2 / (e^1 + e^2)
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        let p = softmax_probabilities(&[1.0, 2.0], 1.0);
        assert!((p[1] - expected).abs() < 1e-15);
        assert!((expected - 0.7311).abs() < 1e-4);

        let cfg = config_with_temperature(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let hits = (0..n).filter(|_| select(&[1.0, 2.0], &cfg, &mut rng).unwrap() == 1).count();
        let freq = hits as f64 / n as f64;
        let sd = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((freq - expected).abs() < 4.0 * sd, "freq {freq}");
    }

    proptest! {
        #[test]
        fn probabilities_form_a_distribution(us in proptest::collection::vec(-20.0f64..20.0, 1..8), t in 0.05f64..5.0) {
            let p = softmax_probabilities(&us, t);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn shift_invariant(us in proptest::collection::vec(-20.0f64..20.0, 1..8), t in 0.5f64..5.0, c in -10.0f64..10.0) {
            let p = softmax_probabilities(&us, t);
            let shifted: Vec<f64> = us.iter().map(|u| u + c).collect();
            let q = softmax_probabilities(&shifted, t);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
