//! Concrete subordinators and parametric families with known small-time limits.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{invalid, require_positive, Result};
use crate::model::{phi_from_tail_log, LaplaceExponent, LevyTail, ScalarFn, SubordinatorModel};
use crate::numeric::special::{expint_e1, EULER_GAMMA};
use crate::numeric::{log_add_exp, Tolerance};
use crate::simulate::{log_gamma_variate, RngState};

/// log(1 + e^z) without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 35.0 {
        z + (-z).exp()
    } else {
        z.exp().ln_1p()
    }
}

/// E₁(e^ℓ) with the small-argument branch kept in log form.
fn e1_at_log(log_x: f64) -> f64 {
    if log_x < -30.0 {
        // E₁(x) = −γ_E − log x + x + O(x²)
        -EULER_GAMMA - log_x + log_x.exp()
    } else {
        expint_e1(log_x.exp())
    }
}

/// Gamma process: Y₁ ~ Gamma(shape γ, rate λ), Φ(s) = γ log(1 + s/λ).
pub fn make_gamma(gamma: f64, lambda: f64) -> Result<SubordinatorModel> {
    require_positive("gamma", gamma)?;
    require_positive("lambda", lambda)?;
    let ln_lambda = lambda.ln();
    let phi = LaplaceExponent::new(
        move |s: f64| gamma * (s / lambda).ln_1p(),
        move |l: f64| gamma * softplus(l - ln_lambda),
    )
    .with_log_value(move |l: f64| gamma.ln() + softplus(l - ln_lambda).ln());
    let tail = LevyTail::from_log_fn(move |l: f64| gamma * e1_at_log(l + ln_lambda));
    let log_norm = gamma * ln_lambda - ln_gamma(gamma);
    Ok(SubordinatorModel::new("gamma")
        .with_param("gamma", gamma)
        .with_param("lambda", lambda)
        .with_phi(phi)
        .with_tail(tail)
        .with_density1(move |x: f64| {
            if x <= 0.0 {
                return if gamma < 1.0 { f64::INFINITY } else if gamma == 1.0 { lambda } else { 0.0 };
            }
            (log_norm + (gamma - 1.0) * x.ln() - lambda * x).exp()
        })
        .with_cdf1(move |x: f64| if x <= 0.0 { 0.0 } else { gamma_lr(gamma, lambda * x) })
        .with_sampler(Arc::new(move |t: f64, rng: &mut RngState| log_gamma_variate(t * gamma, rng) - ln_lambda))
        .with_known_gamma(Some(gamma)))
}

/// log of a standard positive α-stable variate (Laplace transform e^{−s^α})
/// by Kanter's representation.
pub fn log_positive_stable(alpha: f64, rng: &mut RngState) -> f64 {
    let u = PI * rng.open_uniform();
    let w = -rng.open_uniform().ln();
    let log_a = alpha * (alpha * u).sin().ln() + (1.0 - alpha) * ((1.0 - alpha) * u).sin().ln() - u.sin().ln();
    log_a / alpha - (1.0 - alpha) / alpha * w.ln()
}

/// Positive α-stable subordinator, Φ(s) = a s^α. Its `Y_t^{−t}` tends to the
/// point mass at 1, so no Pareto index is attached.
pub fn make_stable(a: f64, alpha: f64) -> Result<SubordinatorModel> {
    require_positive("a", a)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("stable index must lie in (0, 1), got {alpha}")));
    }
    let ln_a = a.ln();
    let phi = LaplaceExponent::new(move |s: f64| a * s.powf(alpha), move |l: f64| (ln_a + alpha * l).exp())
        .with_log_value(move |l: f64| ln_a + alpha * l);
    Ok(SubordinatorModel::new("stable")
        .with_param("a", a)
        .with_param("alpha", alpha)
        .with_phi(phi)
        .with_sampler(Arc::new(move |t: f64, rng: &mut RngState| {
            (ln_a + t.ln()) / alpha + log_positive_stable(alpha, rng)
        })))
}

/// Subordinator with Φ(s) = −log(1 + s − √(s² + 2s)), i.e. ψ(s) = 1 + s − √(s² + 2s).
///
/// Evaluated through the conjugate: Φ(s) = log(1 + s + √(s² + 2s)).
pub fn make_bessel() -> SubordinatorModel {
    let small = |s: f64| (s + (s * s + 2.0 * s).sqrt()).ln_1p();
    let large = |l: f64| {
        let e = (-l).exp();
        l + (1.0 + e + (1.0 + 2.0 * e).sqrt()).ln()
    };
    let direct = move |s: f64| if s > 1e8 { large(s.ln()) } else { small(s) };
    let at_log = move |l: f64| if l > 20.0 { large(l) } else { small(l.exp()) };
    SubordinatorModel::new("bessel")
        .with_phi(LaplaceExponent::new(direct, at_log))
        .with_known_gamma(Some(1.0))
}

/// A finite discrete Thorin measure: atoms at `y_i > 0` with masses `m_i > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThorinMeasure {
    atoms: Vec<(f64, f64)>,
}

impl ThorinMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("Thorin measure needs at least one atom"));
        }
        for &(y, m) in &atoms {
            require_positive("Thorin mass", m)?;
            if y == 0.0 {
                return Err(invalid("Thorin atom at y = 0 gives a non-integrable Levy density"));
            }
            require_positive("Thorin location", y)?;
        }
        Ok(ThorinMeasure { atoms })
    }

    pub fn dirac(location: f64, mass: f64) -> Result<Self> {
        ThorinMeasure::new(vec![(location, mass)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }
}

/// Generalized gamma convolution with a discrete Thorin measure: a sum of
/// independent gamma processes, one per atom.
pub fn make_thorin(measure: &ThorinMeasure) -> SubordinatorModel {
    let atoms: Arc<[(f64, f64)]> = measure.atoms().into();
    let (a1, a2, a3, a4) = (atoms.clone(), atoms.clone(), atoms.clone(), atoms.clone());
    let phi = LaplaceExponent::new(
        move |s: f64| a1.iter().map(|&(y, m)| m * (s / y).ln_1p()).sum(),
        move |l: f64| a2.iter().map(|&(y, m)| m * softplus(l - y.ln())).sum(),
    );
    let tail = LevyTail::from_log_fn(move |l: f64| a3.iter().map(|&(y, m)| m * e1_at_log(l + y.ln())).sum());
    let mut model = SubordinatorModel::new("thorin");
    for (i, &(y, m)) in atoms.iter().enumerate() {
        model = model.with_param(format!("y{i}"), y).with_param(format!("m{i}"), m);
    }
    model
        .with_phi(phi)
        .with_tail(tail)
        .with_sampler(Arc::new(move |t: f64, rng: &mut RngState| {
            a4.iter()
                .map(|&(y, m)| log_gamma_variate(t * m, rng) - y.ln())
                .fold(f64::NEG_INFINITY, log_add_exp)
        }))
        .with_known_gamma(Some(measure.total_mass()))
}

/// Thorin measure uniform on (0, γ): Φ(s) = (s+γ)log(s+γ) − s log s − γ log γ.
///
/// The Lévy density is (1 − e^{−γx})/x², whose tail integrates to
/// ν̄(x) = (1 − e^{−γx})/x + γE₁(γx).
pub fn make_thorin_uniform(gamma: f64) -> Result<SubordinatorModel> {
    require_positive("gamma", gamma)?;
    // s·log(1 + γ/s) + γ·log(1 + s/γ), free of the x log x cancellation
    let direct = move |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            s * (gamma / s).ln_1p() + gamma * (s / gamma).ln_1p()
        }
    };
    let ln_g = gamma.ln();
    let at_log = move |l: f64| {
        let s = l.exp();
        let first = if l > 40.0 { gamma - 0.5 * gamma * gamma / s } else { s * (gamma / s).ln_1p() };
        first + gamma * softplus(l - ln_g)
    };
    let tail = LevyTail::from_log_fn(move |l: f64| {
        let x = l.exp();
        let first = if l < -30.0 { gamma * (1.0 - 0.5 * gamma * x) } else { -(-gamma * x).exp_m1() / x };
        first + gamma * e1_at_log(l + ln_g)
    });
    Ok(SubordinatorModel::new("thorin_uniform")
        .with_param("gamma", gamma)
        .with_phi(LaplaceExponent::new(direct, at_log))
        .with_tail(tail)
        .with_known_gamma(Some(gamma)))
}

/// Y₁ Weibull: F(x) = 1 − e^{−x^γ}. Only the distribution is available in
/// closed form; for γ = 1 (the unit exponential) Φ(s) = log(1 + s) is attached.
pub fn make_weibull(gamma: f64) -> Result<SubordinatorModel> {
    require_positive("gamma", gamma)?;
    let mut model = SubordinatorModel::new("weibull")
        .with_param("gamma", gamma)
        .with_cdf1(move |x: f64| if x <= 0.0 { 0.0 } else { -(-x.powf(gamma)).exp_m1() })
        .with_density1(move |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let xg = x.powf(gamma);
            gamma * xg / x * (-xg).exp()
        })
        .with_known_gamma(Some(gamma));
    if gamma == 1.0 {
        model = model.with_phi(LaplaceExponent::new(|s: f64| s.ln_1p(), |l: f64| softplus(l)));
    }
    Ok(model)
}

/// Density a/(1+x)^{a+1}.
pub fn make_pareto_type(a: f64) -> Result<SubordinatorModel> {
    require_positive("a", a)?;
    Ok(SubordinatorModel::new("pareto_type")
        .with_param("a", a)
        .with_cdf1(move |x: f64| if x <= 0.0 { 0.0 } else { -(-a * x.ln_1p()).exp_m1() })
        .with_density1(move |x: f64| if x < 0.0 { 0.0 } else { a * (-(a + 1.0) * x.ln_1p()).exp() })
        .with_known_gamma(Some(1.0)))
}

/// Density ∝ x^{b−1}(1+x)^{−a−b}, normalized by the beta function B(a, b).
pub fn make_fdist(a: f64, b: f64) -> Result<SubordinatorModel> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    let log_norm = -ln_beta(a, b);
    Ok(SubordinatorModel::new("fdist")
        .with_param("a", a)
        .with_param("b", b)
        .with_cdf1(move |x: f64| if x <= 0.0 { 0.0 } else { beta_reg(b, a, x / (1.0 + x)) })
        .with_density1(move |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            (log_norm + (b - 1.0) * x.ln() - (a + b) * x.ln_1p()).exp()
        })
        .with_known_gamma(Some(b)))
}

/// Cauchy law folded onto (0, ∞): density (2/π)/(1 + x²).
pub fn make_half_cauchy() -> SubordinatorModel {
    SubordinatorModel::new("half_cauchy")
        .with_cdf1(|x: f64| if x <= 0.0 { 0.0 } else { 2.0 / PI * x.atan() })
        .with_density1(|x: f64| if x < 0.0 { 0.0 } else { 2.0 / PI / (1.0 + x * x) })
        .with_known_gamma(Some(1.0))
}

/// The null subordinator Y ≡ 0 (Φ ≡ 0). Accepted here, rejected by criteria.
pub fn make_null() -> SubordinatorModel {
    SubordinatorModel::new("null")
        .with_phi(LaplaceExponent::zero())
        .with_sampler(Arc::new(|_, _| f64::NEG_INFINITY))
}

/// Pure drift Y_t = ct, Φ(s) = cs.
pub fn make_drift(c: f64) -> Result<SubordinatorModel> {
    require_positive("c", c)?;
    let ln_c = c.ln();
    let phi = LaplaceExponent::new(move |s: f64| c * s, move |l: f64| (ln_c + l).exp()).with_log_value(move |l| ln_c + l);
    Ok(SubordinatorModel::new("drift")
        .with_param("c", c)
        .with_phi(phi)
        .with_sampler(Arc::new(move |t: f64, _: &mut RngState| ln_c + t.ln()))
        .mark_degenerate_at_one())
}

/// Lévy tail ν̄(x) = γ(−log x)^k on (0, 1]. For k = 1 this is the Dickman
/// process; for odd k > 1 `t·(−log Y_t)^k` has an Exp(γ) limit while the
/// Pareto index is infinite.
pub fn make_log_power_tail(gamma: f64, power: u32) -> Result<SubordinatorModel> {
    require_positive("gamma", gamma)?;
    if power == 0 {
        return Err(invalid("tail power must be at least 1"));
    }
    let k = power as i32;
    let tail = LevyTail::from_log_fn(move |l: f64| if l >= 0.0 { 0.0 } else { gamma * (-l).powi(k) })
        .with_support_upper(1.0)
        .with_log_inverse(move |y: f64| -(y / gamma).powf(1.0 / power as f64));
    let quad_tail = tail.clone();
    let phi = LaplaceExponent::from_log_fn(move |l: f64| {
        phi_from_tail_log(&quad_tail, l, Tolerance::new(1e-13, 1e-11)).unwrap_or(f64::NAN)
    });
    Ok(SubordinatorModel::new("log_power_tail")
        .with_param("gamma", gamma)
        .with_param("power", power as f64)
        .with_phi(phi)
        .with_tail(tail)
        .with_known_gamma(if power == 1 { Some(gamma) } else { None }))
}

/// A family `t ↦ ψ_t` of Laplace transforms that need not be of the form ψ^t.
#[derive(Clone)]
pub struct GeneralFamily {
    name: String,
    psi_t_log: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    limit_cdf: Option<ScalarFn>,
}

impl fmt::Debug for GeneralFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralFamily").field("name", &self.name).finish_non_exhaustive()
    }
}

impl GeneralFamily {
    pub fn new(name: impl Into<String>, psi_t_log: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        GeneralFamily { name: name.into(), psi_t_log: Arc::new(psi_t_log), limit_cdf: None }
    }

    pub fn with_limit_cdf(mut self, cdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.limit_cdf = Some(Arc::new(cdf));
        self
    }

    /// The infinitely divisible family ψ_t = e^{−tΦ} of a model.
    pub fn from_exponent(name: impl Into<String>, phi: &LaplaceExponent) -> Self {
        let phi = phi.clone();
        GeneralFamily::new(name, move |t, lu| (-t * phi.eval_log(lu)).exp())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn psi_t(&self, t: f64, u: f64) -> f64 {
        if u == 0.0 {
            return 1.0;
        }
        (self.psi_t_log)(t, u.ln())
    }

    /// ψ_t(e^{log_u}).
    pub fn psi_t_log(&self, t: f64, log_u: f64) -> f64 {
        if log_u == f64::NEG_INFINITY {
            return 1.0;
        }
        (self.psi_t_log)(t, log_u)
    }

    pub fn limit_cdf(&self) -> Option<&ScalarFn> {
        self.limit_cdf.as_ref()
    }
}

/// Tilted positive-stable natural exponential family,
/// ψ_t(u) = exp{−a[(θ+u)^t − θ^t]}, whose `Y_t^{−t}` limit is the shifted
/// exponential 1 − e^{−a(x−1)} on x ≥ 1.
pub fn make_stable_nef(a: f64, theta: f64) -> Result<GeneralFamily> {
    require_positive("a", a)?;
    if theta == 0.0 {
        return Err(invalid("stable NEF needs a positive tilt theta"));
    }
    require_positive("theta", theta)?;
    let ln_theta = theta.ln();
    Ok(GeneralFamily::new("stable_nef", move |t: f64, log_u: f64| {
        let log_sum = log_add_exp(ln_theta, log_u);
        // (θ+u)^t − θ^t = θ^t·expm1(t(log(θ+u) − log θ))
        let diff = (t * ln_theta).exp() * (t * (log_sum - ln_theta)).exp_m1();
        (-a * diff).exp()
    })
    .with_limit_cdf(move |x: f64| if x <= 1.0 { 0.0 } else { -(-a * (x - 1.0)).exp_m1() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_examples() {
        let m = make_gamma(1.0, 1.0).unwrap();
        let phi = m.phi().unwrap();
        assert_relative_eq!(phi.eval(std::f64::consts::E - 1.0), 1.0, max_relative = 1e-14);
        let f = m.density1().unwrap();
        assert_relative_eq!(f(1e-12), 1.0, max_relative = 1e-10);
        assert_eq!(make_gamma(2.0, 3.0).unwrap().phi().unwrap().eval(0.0), 0.0);
        assert!(make_gamma(0.0, 1.0).is_err());
        assert!(make_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_log_argument_matches_direct() {
        let phi = make_gamma(0.7, 2.5).unwrap().phi().unwrap().clone();
        for &s in &[1e-8, 0.3, 7.0, 1e6, 1e15] {
            assert_relative_eq!(phi.eval(s), phi.eval_log(s.ln()), max_relative = 1e-12);
        }
        // no overflow far beyond f64
        assert_relative_eq!(phi.eval_log(1e4), 0.7 * (1e4 - 2.5f64.ln()), max_relative = 1e-12);
    }

    #[test]
    fn stable_examples() {
        let m = make_stable(1.0, 0.5).unwrap();
        assert_relative_eq!(m.phi().unwrap().eval(4.0), 2.0, max_relative = 1e-14);
        assert_eq!(make_stable(2.0, 0.3).unwrap().phi().unwrap().eval(0.0), 0.0);
        assert!(make_stable(1.0, 1.0).is_err());
        assert!(make_stable(1.0, 0.0).is_err());
        assert!(m.known_gamma().is_none());
    }

    #[test]
    fn bessel_examples() {
        let phi = make_bessel().phi().unwrap().clone();
        assert_eq!(phi.eval(0.0), 0.0);
        assert_relative_eq!(phi.eval(0.25), 2f64.ln(), max_relative = 1e-14);
        let s: f64 = 1e300;
        assert!((phi.eval(s) / s.ln() - 1.0).abs() < 0.01);
        // same as the printed form up to sign, where the printed form is stable
        let printed = |s: f64| (1.0 + s - (s * s + 2.0 * s).sqrt()).ln();
        assert_relative_eq!(phi.eval(0.8), -printed(0.8), max_relative = 1e-12);
        assert_relative_eq!(phi.eval_log(25.0), phi.eval(25f64.exp()), max_relative = 1e-12);
    }

    #[test]
    fn thorin_uniform_examples() {
        let m = make_thorin_uniform(2.0).unwrap();
        let phi = m.phi().unwrap();
        assert_eq!(phi.eval(0.0), 0.0);
        assert!(phi.eval(1e-12) < 1e-10);
        assert_relative_eq!(phi.eval(2.0), 4.0 * 2f64.ln(), max_relative = 1e-14);
        // printed form (s+γ)log(s+γ) − s log s − γ log γ at moderate s
        let g = 2.0;
        for &s in &[0.5f64, 3.0, 40.0] {
            let printed = (s + g) * (s + g).ln() - s * s.ln() - g * g.ln();
            assert_relative_eq!(phi.eval(s), printed, max_relative = 1e-12);
        }
    }

    #[test]
    fn thorin_dirac_reproduces_gamma() {
        let thorin = make_thorin(&ThorinMeasure::dirac(3.0, 1.5).unwrap());
        let gamma = make_gamma(1.5, 3.0).unwrap();
        for &s in &[0.0, 1e-3, 1.0, 17.0, 1e5, 1e9] {
            let a = thorin.phi().unwrap().eval(s);
            let b = gamma.phi().unwrap().eval(s);
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
        assert_eq!(thorin.known_gamma(), Some(1.5));
        assert!(ThorinMeasure::new(vec![(0.0, 1.0)]).is_err());
        assert!(ThorinMeasure::new(vec![(1.0, -1.0)]).is_err());
    }

    #[test]
    fn density_model_examples() {
        let w = make_weibull(2.0).unwrap();
        let f = w.cdf1().unwrap();
        let x: f64 = 1e-4;
        assert!((f(x) / (x * x) - 1.0).abs() < 1e-6);
        assert!(w.phi().is_none());
        assert!(make_weibull(1.0).unwrap().phi().is_some());
        assert_relative_eq!(make_pareto_type(1.0).unwrap().density1().unwrap()(0.0), 1.0);
        assert_relative_eq!(make_half_cauchy().density1().unwrap()(0.0), 2.0 / PI);
        assert!(make_weibull(-1.0).is_err());
        assert!(make_fdist(1.0, 0.0).is_err());
    }

    #[test]
    fn fdist_density_integrates_to_cdf() {
        let m = make_fdist(2.0, 1.5).unwrap();
        let f = m.density1().unwrap().clone();
        let integral = crate::numeric::integrate(|x| f(x), 0.0, 3.0, Tolerance::new(1e-12, 1e-10)).unwrap();
        assert_relative_eq!(integral.value, m.cdf1().unwrap()(3.0), max_relative = 1e-8);
    }

    #[test]
    fn stable_nef_examples() {
        let fam = make_stable_nef(1.0, 1.0).unwrap();
        let cdf = fam.limit_cdf().unwrap();
        assert_eq!(cdf(1.0), 0.0);
        let a = 1.7;
        let fam2 = make_stable_nef(a, 1.0).unwrap();
        assert_relative_eq!(fam2.limit_cdf().unwrap()(1.0 + 2f64.ln() / a), 0.5, max_relative = 1e-14);
        let (t, u) = (1e-4f64, 2.0f64);
        let dev = (fam.psi_t_log(t, u.ln() / t) - (1.0 - cdf(u))).abs();
        assert!(dev <= 1e-3, "deviation {dev}");
        assert!(make_stable_nef(1.0, 0.0).is_err());
    }

    #[test]
    fn stable_nef_is_a_laplace_family() {
        let fam = make_stable_nef(0.8, 2.0).unwrap();
        for &t in &[0.01, 0.5, 2.0] {
            assert_eq!(fam.psi_t(t, 0.0), 1.0);
            let mut prev = 1.0;
            for i in 0..50 {
                let v = fam.psi_t(t, i as f64 * 0.7);
                assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
                prev = v;
            }
        }
    }

    #[test]
    fn log_power_tail_reduces_to_dickman() {
        let m = make_log_power_tail(2.0, 1).unwrap();
        let tail = m.tail().unwrap();
        assert_relative_eq!(tail.tail(0.1), 2.0 * 10f64.ln(), max_relative = 1e-14);
        assert_eq!(m.known_gamma(), Some(2.0));
        assert!(make_log_power_tail(1.0, 3).unwrap().known_gamma().is_none());
    }
}
