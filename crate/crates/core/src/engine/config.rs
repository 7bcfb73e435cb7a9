use serde::{Deserialize, Serialize};

use crate::engine::EngineError;
use crate::time::SimTime;

/// How the selection temperature is derived from the noise parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemperatureRule {
    /// `t = sqrt(2) * s`, the usual ACT-R convention.
    #[default]
    Sqrt2TimesS,
    /// `t = sqrt(2 * s)`.
    SqrtOf2s,
}

impl TemperatureRule {
    pub fn temperature(self, noise_s: f64) -> f64 {
        match self {
            TemperatureRule::Sqrt2TimesS => std::f64::consts::SQRT_2 * noise_s,
            TemperatureRule::SqrtOf2s => (2.0 * noise_s).sqrt(),
        }
    }
}

/// Engine parameters. Key names match the `[engine]` table of the simulate
/// config file; durations are given in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub alpha: f32,
    pub noise_s: f64,
    pub temperature_rule: TemperatureRule,
    pub production_latency: SimTime,
    pub imaginal_delay: SimTime,
    pub rng_seed: u64,
    pub step_limit: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            alpha: 0.2,
            noise_s: 0.8,
            temperature_rule: TemperatureRule::default(),
            production_latency: SimTime::from_millis(50),
            imaginal_delay: SimTime::from_millis(200),
            rng_seed: 0,
            step_limit: 10_000,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::InvalidConfig(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie strictly between 0 and 1");
        }
        if !(self.noise_s >= 0.0 && self.noise_s.is_finite()) {
            return bad("noise_s must be finite and non-negative");
        }
        if self.production_latency == SimTime::ZERO {
            return bad("production_latency must be positive");
        }
        if self.step_limit == 0 {
            return bad("step_limit must be positive");
        }
        Ok(())
    }

    pub fn temperature(&self) -> f64 {
        self.temperature_rule.temperature(self.noise_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = EngineConfig::default();
        assert_eq!(cfg.alpha, 0.2);
        assert_eq!(cfg.production_latency.as_millis(), 50);
        assert_eq!(cfg.imaginal_delay.as_millis(), 200);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_alpha() {
        for alpha in [0.0, 1.0, -0.1, f32::NAN] {
            let cfg = EngineConfig { alpha, ..EngineConfig::default() };
            assert!(cfg.validate().is_err(), "alpha {alpha}");
        }
    }

    #[test]
    fn temperature_rules_differ() {
        assert!((TemperatureRule::Sqrt2TimesS.temperature(0.5) - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert!((TemperatureRule::SqrtOf2s.temperature(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parses_partial_json() {
        let cfg: EngineConfig = serde_json::from_str(r#"{"noise_s": 0.3, "production_latency": 0.05}"#).unwrap();
        assert_eq!(cfg.noise_s, 0.3);
        assert_eq!(cfg.alpha, 0.2);
    }
}
