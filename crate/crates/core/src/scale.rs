//! Decreasing, slowly varying scale functions `L` for the `t·L(Y_t)` limit.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `L(x) = (−log x)^k` for odd `k`; `k = 1` is the negative logarithm.
///
/// Odd powers keep `L` decreasing on all of (0, ∞) and slowly varying at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleFunction {
    power: u32,
}

impl ScaleFunction {
    pub fn neg_log() -> Self {
        ScaleFunction { power: 1 }
    }

    pub fn neg_log_power(power: u32) -> Result<Self> {
        if power.is_multiple_of(2) {
            return Err(invalid(format!("scale power must be odd for L to decrease, got {power}")));
        }
        Ok(ScaleFunction { power })
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_at_log(x.ln())
    }

    /// L(e^ℓ) = (−ℓ)^k.
    pub fn value_at_log(&self, log_x: f64) -> f64 {
        (-log_x).powi(self.power as i32)
    }

    /// log L⁻¹(w) = −w^{1/k} with the real odd root.
    pub fn log_inverse(&self, w: f64) -> f64 {
        let k = self.power as f64;
        -(w.signum() * w.abs().powf(1.0 / k))
    }

    pub fn label(&self) -> String {
        if self.power == 1 {
            "-log x".into()
        } else {
            format!("(-log x)^{}", self.power)
        }
    }
}
