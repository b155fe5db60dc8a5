//! Rate units accepted at the configuration boundary.
//!
//! Internally every rate is μs⁻¹ and every time is μs.

use serde::{Deserialize, Serialize};

/// Microseconds per second.
pub const US_PER_S: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RateUnit {
    #[default]
    #[serde(rename = "per_us", alias = "us^-1", alias = "MHz")]
    PerMicrosecond,
    #[serde(rename = "per_s", alias = "s^-1", alias = "Hz")]
    PerSecond,
}

impl RateUnit {
    /// Convert a rate expressed in `self` to μs⁻¹.
    pub fn to_per_us(self, rate: f64) -> f64 {
        match self {
            RateUnit::PerMicrosecond => rate,
            RateUnit::PerSecond => rate / US_PER_S,
        }
    }

    pub fn from_per_us(self, rate: f64) -> f64 {
        match self {
            RateUnit::PerMicrosecond => rate,
            RateUnit::PerSecond => rate * US_PER_S,
        }
    }
}
