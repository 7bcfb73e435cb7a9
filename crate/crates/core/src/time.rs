//! Simulation clock with millisecond resolution.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point on (or span of) the simulated clock, stored as whole milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms)
    }

    /// Rounds to the nearest millisecond; negative or non-finite input is rejected.
    pub fn from_secs_f64(secs: f64) -> Option<Self> {
        if !secs.is_finite() || secs < 0.0 {
            return None;
        }
        Some(SimTime((secs * 1000.0).round() as u64))
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Seconds in single precision, the representation utility learning runs in.
    pub fn as_secs_f32(self) -> f32 {
        self.0 as f32 / 1000.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for SimTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(deserializer)?;
        SimTime::from_secs_f64(secs).ok_or_else(|| serde::de::Error::custom(format!("invalid time {secs}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_three_decimals() {
        assert_eq!(SimTime::ZERO.to_string(), "0.000");
        assert_eq!(SimTime::from_millis(50).to_string(), "0.050");
        assert_eq!(SimTime::from_millis(12_345).to_string(), "12.345");
    }

    #[test]
    fn seconds_round_trip() {
        let t = SimTime::from_secs_f64(1.35).unwrap();
        assert_eq!(t.as_millis(), 1350);
        assert_eq!(t.as_secs_f32(), 1.35f32);
        assert!(SimTime::from_secs_f64(-0.1).is_none());
    }
}
