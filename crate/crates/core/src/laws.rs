//! The two limit laws: Pareto Π_γ on [1, ∞) and the exponential E_γ.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Result};

/// Π_γ(x) = (1 − x^{−γ}) for x ≥ 1, zero below.
pub fn pareto_cdf(gamma: f64, x: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    Ok(pareto_cdf_unchecked(gamma, x))
}

pub(crate) fn pareto_cdf_unchecked(gamma: f64, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 1.0 {
        0.0
    } else {
        -(-gamma * x.ln()).exp_m1()
    }
}

/// Inverse of [`pareto_cdf`]: (1 − p)^{−1/γ}.
pub fn pareto_quantile(gamma: f64, p: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("probability must lie in [0, 1], got {p}")));
    }
    if p == 1.0 {
        return Err(invalid("Pareto quantile at p = 1 is unbounded"));
    }
    Ok((-(-p).ln_1p() / gamma).exp())
}

/// CDF of the product of independent Π_{γ₁} and Π_{γ₂} variables.
///
/// log P₁ + log P₂ is a sum of exponentials, so for x ≥ 1
/// P(P₁P₂ > x) = x^{−γ₁}(1 + γ₁(1 − x^{−(γ₂−γ₁)})/(γ₂ − γ₁)),
/// which tends to x^{−γ}(1 + γ log x) when γ₁ = γ₂ = γ.
pub fn pareto_product_cdf(gamma1: f64, gamma2: f64, x: f64) -> Result<f64> {
    require_positive("gamma1", gamma1)?;
    require_positive("gamma2", gamma2)?;
    Ok(pareto_product_cdf_unchecked(gamma1, gamma2, x))
}

pub(crate) fn pareto_product_cdf_unchecked(gamma1: f64, gamma2: f64, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 1.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let (g1, g2) = if gamma1 <= gamma2 { (gamma1, gamma2) } else { (gamma2, gamma1) };
    let lx = x.ln();
    let d = g2 - g1;
    // (1 − x^{−d})/d, continuous at d = 0
    let ratio = if d * lx < 1e-12 { lx * (1.0 - 0.5 * d * lx) } else { -(-d * lx).exp_m1() / d };
    let survival = (-g1 * lx).exp() * (1.0 + g1 * ratio);
    (1.0 - survival).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoLaw {
    gamma: f64,
}

impl ParetoLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        Ok(ParetoLaw { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        pareto_cdf_unchecked(self.gamma, x)
    }

    /// Survival function 1 − Π_γ(x).
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 1.0 {
            1.0
        } else {
            (-self.gamma * x.ln()).exp()
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        pareto_quantile(self.gamma, p)
    }

    /// Law of the minimum of `self` and an independent `other`: Π_{γ₁+γ₂}.
    pub fn min_with(&self, other: &ParetoLaw) -> ParetoLaw {
        ParetoLaw { gamma: self.gamma + other.gamma }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 − U ∈ (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        (-u.ln() / self.gamma).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialLaw {
    gamma: f64,
}

impl ExponentialLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        Ok(ExponentialLaw { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.gamma * x).exp_m1()
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(invalid(format!("probability must lie in [0, 1), got {p}")));
        }
        Ok(-(-p).ln_1p() / self.gamma)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        -u.ln() / self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_examples() {
        assert_eq!(pareto_cdf(3.0, 0.5).unwrap(), 0.0);
        assert_eq!(pareto_cdf(0.7, 1.0).unwrap(), 0.0);
        assert!((pareto_cdf(2.0, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(pareto_cdf(0.0, 2.0).is_err());
        assert!(pareto_cdf(-1.0, 2.0).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(pareto_quantile(1.0, 0.0).unwrap(), 1.0);
        assert!((pareto_quantile(1.0, 0.5).unwrap() - 2.0).abs() < 1e-14);
        assert!((pareto_quantile(2.0, 0.75).unwrap() - 2.0).abs() < 1e-14);
        assert!(pareto_quantile(1.0, 1.0).is_err());
        assert!(pareto_quantile(1.0, 1.5).is_err());
        assert!(pareto_quantile(1.0, -0.1).is_err());
    }

    #[test]
    fn exponential_law_basics() {
        let e = ExponentialLaw::new(2.0).unwrap();
        assert_eq!(e.cdf(-1.0), 0.0);
        assert!((e.cdf(0.5) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((e.quantile(0.5).unwrap() - 2f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn product_cdf_matches_closed_forms() {
        // equal indices: 1 − x^{−γ}(1 + γ log x)
        let x: f64 = 3.7;
        let equal = 1.0 - x.powf(-2.0) * (1.0 + 2.0 * x.ln());
        assert!((pareto_product_cdf(2.0, 2.0, x).unwrap() - equal).abs() < 1e-14);
        // distinct indices: 1 − (γ₂x^{−γ₁} − γ₁x^{−γ₂})/(γ₂ − γ₁)
        let (g1, g2) = (1.0, 3.0);
        let distinct = 1.0 - (g2 * x.powf(-g1) - g1 * x.powf(-g2)) / (g2 - g1);
        assert!((pareto_product_cdf(g1, g2, x).unwrap() - distinct).abs() < 1e-14);
        assert_eq!(pareto_product_cdf(g2, g1, x).unwrap(), pareto_product_cdf(g1, g2, x).unwrap());
        assert_eq!(pareto_product_cdf(1.0, 1.0, 0.9).unwrap(), 0.0);
        assert_eq!(pareto_product_cdf(1.0, 1.0, f64::INFINITY).unwrap(), 1.0);
        let near = pareto_product_cdf(2.0, 2.0 + 1e-9, x).unwrap();
        assert!((near - equal).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf(gamma in 0.05f64..20.0, w in 0.0f64..9.0) {
            let x = (w / gamma).exp();
            let p = pareto_cdf(gamma, x).unwrap();
            let back = pareto_quantile(gamma, p).unwrap();
            prop_assert!((back - x).abs() <= 1e-10 * x);
        }

        #[test]
        fn cdf_inverts_quantile(gamma in 0.05f64..20.0, p in 0.0f64..0.999) {
            let x = pareto_quantile(gamma, p).unwrap();
            prop_assert!((pareto_cdf(gamma, x).unwrap() - p).abs() <= 1e-12);
        }

        #[test]
        fn min_of_paretos_is_pareto(g1 in 0.05f64..10.0, g2 in 0.05f64..10.0, x in 1.0f64..1e4) {
            let a = ParetoLaw::new(g1).unwrap();
            let b = ParetoLaw::new(g2).unwrap();
            // P(min > x) = P(P₁ > x)·P(P₂ > x)
            let lhs = a.sf(x) * b.sf(x);
            let rhs = 1.0 - a.min_with(&b).cdf(x);
            prop_assert!((lhs - rhs).abs() <= 1e-14);
        }

        #[test]
        fn min_stability_power(gamma in 0.05f64..5.0, n in 1u32..8, x in 1.0f64..100.0) {
            // (1 − Π_γ(x))ⁿ = 1 − Π_{nγ}(x)
            let lhs = ParetoLaw::new(gamma).unwrap().sf(x).powi(n as i32);
            let rhs = ParetoLaw::new(n as f64 * gamma).unwrap().sf(x);
            prop_assert!((lhs - rhs).abs() <= 1e-13);
        }

        #[test]
        fn cdf_is_monotone(gamma in 0.05f64..10.0, x in 1.0f64..1e3, dx in 0.0f64..10.0) {
            let p = ParetoLaw::new(gamma).unwrap();
            prop_assert!(p.cdf(x + dx) >= p.cdf(x));
        }
    }
}
