//! Subordinator descriptions and the bridges between the Lévy tail, the
//! marginal distribution function and the Laplace exponent.
//!
//! Every function of the rate `s` also comes in a log-argument form: the
//! criteria probe `s = u^{1/t}` for `t → 0`, which overflows `f64` long
//! before the limit is visible.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, integrate_to_infinity, Tolerance};
use crate::simulate::RngState;

/// Shared scalar function.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact marginal sampler: `(t, rng) ↦ log Y_t`, `-inf` encoding `Y_t = 0`.
pub type MarginalSampler = Arc<dyn Fn(f64, &mut RngState) -> f64 + Send + Sync>;

/// A Laplace exponent Φ with `E e^{−sY_t} = e^{−tΦ(s)}`.
#[derive(Clone)]
pub struct LaplaceExponent {
    direct: Option<ScalarFn>,
    at_log: ScalarFn,
    log_value: Option<ScalarFn>,
}

impl fmt::Debug for LaplaceExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaplaceExponent").finish_non_exhaustive()
    }
}

impl LaplaceExponent {
    /// Build from the log-argument map `ℓ ↦ Φ(e^ℓ)` only.
    pub fn from_log_fn(at_log: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        LaplaceExponent { direct: None, at_log: Arc::new(at_log), log_value: None }
    }

    /// Build from both the direct map `s ↦ Φ(s)` and its log-argument twin.
    pub fn new(
        direct: impl Fn(f64) -> f64 + Send + Sync + 'static,
        at_log: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LaplaceExponent { direct: Some(Arc::new(direct)), at_log: Arc::new(at_log), log_value: None }
    }

    /// Attach `ℓ ↦ log Φ(e^ℓ)` for exponents that outgrow `f64` (power laws).
    pub fn with_log_value(mut self, log_value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_value = Some(Arc::new(log_value));
        self
    }

    /// The null exponent Φ ≡ 0.
    pub fn zero() -> Self {
        LaplaceExponent::new(|_| 0.0, |_| 0.0).with_log_value(|_| f64::NEG_INFINITY)
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s.is_nan() || s < 0.0 {
            return f64::NAN;
        }
        if s == 0.0 {
            return 0.0;
        }
        match &self.direct {
            Some(f) => f(s),
            None => (self.at_log)(s.ln()),
        }
    }

    /// Φ(e^ℓ).
    pub fn eval_log(&self, log_s: f64) -> f64 {
        if log_s == f64::NEG_INFINITY {
            return 0.0;
        }
        (self.at_log)(log_s)
    }

    /// log Φ(e^ℓ).
    pub fn log_eval_log(&self, log_s: f64) -> f64 {
        match &self.log_value {
            Some(f) => f(log_s),
            None => self.eval_log(log_s).ln(),
        }
    }

    /// ψ(s) = e^{−Φ(s)}, the Laplace transform of Y₁.
    pub fn lst(&self, s: f64) -> f64 {
        (-self.eval(s)).exp()
    }

    /// True when Φ vanishes on every grid point.
    pub fn is_null_on(&self, log_grid: &[f64]) -> bool {
        log_grid.iter().all(|&l| self.eval_log(l) == 0.0)
    }

    /// Check Φ(0) = 0, monotonicity, midpoint concavity and the agreement
    /// of the two argument forms on an increasing grid of rates. Returns a
    /// description of every violation.
    pub fn check_invariants(&self, s_grid: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.eval(0.0).abs() > 1e-12 {
            out.push(format!("Phi(0) = {} != 0", self.eval(0.0)));
        }
        let values: Vec<f64> = s_grid.iter().map(|&s| self.eval(s)).collect();
        for (i, (&s, &v)) in s_grid.iter().zip(&values).enumerate() {
            if !(v >= 0.0) {
                out.push(format!("Phi({s}) = {v} is not a nonnegative number"));
            }
            if i > 0 && v < values[i - 1] - tol * values[i - 1].abs().max(1.0) {
                out.push(format!("Phi decreases between {} and {s}", s_grid[i - 1]));
            }
            if s > 0.0 {
                let via_log = self.eval_log(s.ln());
                if v.is_finite() && via_log.is_finite() && (via_log - v).abs() > 1e-10 * v.abs().max(1e-300) {
                    out.push(format!("eval_log disagrees with eval at s = {s}: {via_log} vs {v}"));
                }
            }
        }
        for w in s_grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = self.eval(0.5 * (a + b));
            let chord = 0.5 * (self.eval(a) + self.eval(b));
            if mid < chord - tol * chord.abs().max(1.0) {
                out.push(format!("Phi not midpoint-concave on [{a}, {b}]"));
            }
        }
        out
    }
}

/// The Lévy tail ν̄(x) = ν((x, ∞)).
#[derive(Clone)]
pub struct LevyTail {
    at_log: ScalarFn,
    log_inverse: Option<ScalarFn>,
    support_upper: f64,
}

impl fmt::Debug for LevyTail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyTail")
            .field("support_upper", &self.support_upper)
            .field("closed_inverse", &self.log_inverse.is_some())
            .finish_non_exhaustive()
    }
}

impl LevyTail {
    /// Build from `ℓ ↦ ν̄(e^ℓ)`.
    pub fn from_log_fn(at_log: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        LevyTail { at_log: Arc::new(at_log), log_inverse: None, support_upper: f64::INFINITY }
    }

    /// Build from `x ↦ ν̄(x)`.
    pub fn from_fn(tail: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        LevyTail::from_log_fn(move |l: f64| tail(l.exp()))
    }

    /// Attach a closed-form generalized inverse in log form: `y ↦ log ν̄⁻¹(y)`.
    pub fn with_log_inverse(mut self, inv: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_inverse = Some(Arc::new(inv));
        self
    }

    pub fn with_support_upper(mut self, upper: f64) -> Self {
        self.support_upper = upper;
        self
    }

    pub fn support_upper(&self) -> f64 {
        self.support_upper
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.log_inverse.is_some()
    }

    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        if x >= self.support_upper {
            return 0.0;
        }
        (self.at_log)(x.ln())
    }

    /// ν̄(e^ℓ).
    pub fn tail_at_log(&self, log_x: f64) -> f64 {
        if log_x >= self.support_upper.ln() {
            return 0.0;
        }
        (self.at_log)(log_x)
    }

    /// Generalized inverse inf{x : ν̄(x) ≤ y}.
    pub fn inverse_tail(&self, y: f64) -> f64 {
        self.log_inverse_tail(y).exp()
    }

    /// log of the generalized inverse; numerically inverted by bisection in
    /// log-space when no closed form was attached.
    pub fn log_inverse_tail(&self, y: f64) -> f64 {
        if let Some(inv) = &self.log_inverse {
            return inv(y);
        }
        self.numeric_log_inverse(y)
    }

    fn numeric_log_inverse(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return self.support_upper.ln();
        }
        let mut hi = if self.support_upper.is_finite() { self.support_upper.ln() } else { 0.0 };
        let mut step = 1.0;
        while self.tail_at_log(hi) > y {
            hi += step;
            step *= 2.0;
            if hi > 710.0 {
                return f64::INFINITY;
            }
        }
        let mut lo = hi - 1.0;
        step = 1.0;
        while self.tail_at_log(lo) <= y {
            lo -= step;
            step *= 2.0;
            if lo < -1e6 {
                return f64::NEG_INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.tail_at_log(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        hi
    }

    /// Monotonicity, near-zero integrability of ν̄ and inverse consistency on
    /// an increasing grid of jump sizes.
    pub fn check_invariants(&self, x_grid: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        let values: Vec<f64> = x_grid.iter().map(|&x| self.tail(x)).collect();
        for i in 1..values.len() {
            if values[i] > values[i - 1] * (1.0 + 1e-12) + 1e-300 {
                out.push(format!("tail increases between {} and {}", x_grid[i - 1], x_grid[i]));
            }
        }
        if self.support_upper.is_finite() && self.tail(self.support_upper) != 0.0 {
            out.push("tail does not vanish at support_upper".into());
        }
        // ∫₀¹ ν̄(x) dx in log-space: ∫ e^ℓ ν̄(e^ℓ) dℓ
        let upper = self.support_upper.min(1.0).ln();
        match integrate_log_decay(|l| l.exp() * self.tail_at_log(l), upper, Tolerance::new(1e-12, 1e-9)) {
            Ok(v) if v.is_finite() => {}
            _ => out.push("tail is not integrable near zero".into()),
        }
        for (&x, &y) in x_grid.iter().zip(&values) {
            if y > 0.0 && y.is_finite() {
                let back = self.tail(self.inverse_tail(y));
                if (back - y).abs() > 1e-8 * y {
                    out.push(format!("inverse_tail inconsistent at x = {x}: tail(inv({y})) = {back}"));
                }
            }
        }
        out
    }
}

/// Lévy density ν'(x) with its support bound.
#[derive(Clone)]
pub struct LevyDensity {
    density: ScalarFn,
    support_upper: f64,
}

impl fmt::Debug for LevyDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyDensity").field("support_upper", &self.support_upper).finish_non_exhaustive()
    }
}

impl LevyDensity {
    /// `density` must satisfy ∫₀¹ x ν'(x) dx < ∞; the caller vouches for it.
    pub fn new(density: impl Fn(f64) -> f64 + Send + Sync + 'static, support_upper: f64) -> Self {
        LevyDensity { density: Arc::new(density), support_upper }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x > self.support_upper {
            0.0
        } else {
            (self.density)(x)
        }
    }
}

/// Φ(s) = ∫₀^∞ (1 − e^{−sx}) ν'(x) dx.
///
/// The integral is split at the knee `x = 1/s`: linear variable below it,
/// `v = log x` above it.
pub fn phi_from_levy(levy: &LevyDensity, s: f64, tol: Tolerance) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(invalid(format!("rate must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let knee = (1.0 / s).min(levy.support_upper);
    let low = integrate(|x: f64| -(-s * x).exp_m1() * levy.eval(x), 0.0, knee, tol)?;
    let in_log = |v: f64| {
        let x = v.exp();
        -(-s * x).exp_m1() * levy.eval(x) * x
    };
    let high = if knee >= levy.support_upper {
        0.0
    } else if levy.support_upper.is_finite() {
        integrate(in_log, knee.ln(), levy.support_upper.ln(), tol)?.value
    } else {
        integrate_to_infinity(in_log, knee.ln(), tol)?.value
    };
    Ok(low.value + high)
}

/// Φ(s) = ∫₀^∞ e^{−x} ν̄(x/s) dx.
pub fn phi_from_tail(tail: &LevyTail, s: f64, tol: Tolerance) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(invalid(format!("rate must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    phi_from_tail_log(tail, s.ln(), tol)
}

/// Log-argument form of [`phi_from_tail`]: Φ(e^ℓ), computed after the
/// substitution `x = e^u`, i.e. ∫ e^{u − e^u} ν̄(e^{u−ℓ}) du.
pub fn phi_from_tail_log(tail: &LevyTail, log_s: f64, tol: Tolerance) -> Result<f64> {
    if log_s == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let integrand = |u: f64| {
        let w = (u - u.exp()).exp();
        if w == 0.0 {
            return 0.0;
        }
        w * tail.tail_at_log(u - log_s)
    };
    let kink = log_s + tail.support_upper().ln();
    let top = 50f64.ln();
    let bottom = -1.0;
    let mut total = integrate_split(&integrand, bottom, top, kink, tol)?;
    // walk down in chunks until the left tail is negligible
    let mut edge = bottom;
    for _ in 0..300 {
        let chunk = integrate_split(&integrand, edge - 8.0, edge, kink, tol)?;
        total += chunk;
        edge -= 8.0;
        if chunk.abs() <= 1e-15 * total.abs() || (total == 0.0 && edge < log_s - 800.0) {
            return Ok(total);
        }
    }
    Err(Error::NumericalFailure { op: "phi_from_tail".into(), estimate: total })
}

fn integrate_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, split: f64, tol: Tolerance) -> Result<f64> {
    if split > a && split < b {
        Ok(integrate(f, a, split, tol)?.value + integrate(f, split, b, tol)?.value)
    } else {
        Ok(integrate(f, a, b, tol)?.value)
    }
}

/// ∫_{−∞}^{upper} g(ℓ) dℓ for integrands decaying as ℓ → −∞.
fn integrate_log_decay<F: Fn(f64) -> f64>(g: F, upper: f64, tol: Tolerance) -> Result<f64> {
    let mut total = 0.0;
    let mut edge = upper;
    for _ in 0..300 {
        let chunk = integrate(&g, edge - 8.0, edge, tol)?.value;
        total += chunk;
        edge -= 8.0;
        if chunk.abs() <= 1e-15 * total.abs() {
            return Ok(total);
        }
    }
    Err(Error::NumericalFailure { op: "integrate_log_decay".into(), estimate: total })
}

/// ψ(s) = s ∫₀^∞ e^{−sx} F(x) dx, evaluated as ∫₀^∞ e^{−y} F(y/s) dy.
pub fn lst_from_cdf(cdf: &(dyn Fn(f64) -> f64 + Send + Sync), s: f64, tol: Tolerance) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid(format!("rate must be positive and finite, got {s}")));
    }
    let f = |y: f64| (-y).exp() * cdf(y / s);
    // e^{−45} is below every tolerance we accept
    let head = integrate(f, 0.0, 1.0, tol)?.value;
    let body = integrate(f, 1.0, 45.0, tol)?.value;
    Ok((head + body).clamp(0.0, 1.0))
}

/// A named driftless subordinator with whichever representations are known.
#[derive(Clone)]
pub struct SubordinatorModel {
    name: String,
    params: Vec<(String, f64)>,
    phi: Option<LaplaceExponent>,
    tail: Option<LevyTail>,
    cdf1: Option<ScalarFn>,
    density1: Option<ScalarFn>,
    sampler: Option<MarginalSampler>,
    known_gamma: Option<f64>,
    degenerate_at_one: bool,
}

impl fmt::Debug for SubordinatorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubordinatorModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("representations", &self.representations())
            .field("known_gamma", &self.known_gamma)
            .finish()
    }
}

impl SubordinatorModel {
    pub fn new(name: impl Into<String>) -> Self {
        SubordinatorModel {
            name: name.into(),
            params: Vec::new(),
            phi: None,
            tail: None,
            cdf1: None,
            density1: None,
            sampler: None,
            known_gamma: None,
            degenerate_at_one: false,
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.push((key.into(), value));
        self
    }

    pub fn with_phi(mut self, phi: LaplaceExponent) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_tail(mut self, tail: LevyTail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn with_cdf1(mut self, cdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.cdf1 = Some(Arc::new(cdf));
        self
    }

    pub fn with_density1(mut self, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density1 = Some(Arc::new(density));
        self
    }

    pub fn with_sampler(mut self, sampler: MarginalSampler) -> Self {
        self.sampler = Some(sampler);
        self
    }

    pub fn with_known_gamma(mut self, gamma: Option<f64>) -> Self {
        self.known_gamma = gamma;
        self
    }

    pub(crate) fn mark_degenerate_at_one(mut self) -> Self {
        self.degenerate_at_one = true;
        self.known_gamma = None;
        self
    }

    pub(crate) fn clear_sampler(mut self) -> Self {
        self.sampler = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    /// `name(k=v, …)`, used in reports.
    pub fn descriptor(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.name, ps.join(", "))
    }

    pub fn phi(&self) -> Option<&LaplaceExponent> {
        self.phi.as_ref()
    }

    pub fn tail(&self) -> Option<&LevyTail> {
        self.tail.as_ref()
    }

    pub fn cdf1(&self) -> Option<&ScalarFn> {
        self.cdf1.as_ref()
    }

    pub fn density1(&self) -> Option<&ScalarFn> {
        self.density1.as_ref()
    }

    pub fn sampler(&self) -> Option<&MarginalSampler> {
        self.sampler.as_ref()
    }

    pub fn known_gamma(&self) -> Option<f64> {
        self.known_gamma
    }

    /// Set for drifted models, whose `Y_t^{−t}` collapses onto 1.
    pub fn is_degenerate_at_one(&self) -> bool {
        self.degenerate_at_one
    }

    /// Which of `phi, tail, cdf1, density1, sampler` are present.
    pub fn representations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.phi.is_some() {
            out.push("phi");
        }
        if self.tail.is_some() {
            out.push("tail");
        }
        if self.cdf1.is_some() {
            out.push("cdf1");
        }
        if self.density1.is_some() {
            out.push("density1");
        }
        if self.sampler.is_some() {
            out.push("sampler");
        }
        out
    }

    /// Cross-check the representations the model carries: `phi` against
    /// [`phi_from_tail`] and against [`lst_from_cdf`] (for `s ≤ 10³`).
    /// Returns the largest relative discrepancy of each available pair.
    pub fn consistency(&self, s_grid: &[f64]) -> Result<ModelConsistency> {
        let phi = self.phi.as_ref().ok_or_else(|| Error::UnsupportedModel(format!("{} has no Laplace exponent", self.name)))?;
        let tol = Tolerance::new(1e-13, 1e-10);
        let mut report = ModelConsistency::default();
        if let Some(tail) = &self.tail {
            let mut worst: f64 = 0.0;
            for &s in s_grid {
                let a = phi.eval(s);
                let b = phi_from_tail(tail, s, tol)?;
                worst = worst.max((a - b).abs() / a.abs().max(1e-300));
            }
            report.tail_vs_phi = Some(worst);
        }
        if let Some(cdf) = &self.cdf1 {
            let mut worst: f64 = 0.0;
            for &s in s_grid.iter().filter(|&&s| s <= 1e3) {
                let a = phi.lst(s);
                let b = lst_from_cdf(cdf.as_ref(), s, tol)?;
                worst = worst.max((a - b).abs() / a);
            }
            report.cdf_vs_phi = Some(worst);
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelConsistency {
    pub tail_vs_phi: Option<f64>,
    pub cdf_vs_phi: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::special::{expint_e1, EULER_GAMMA};
    use approx::assert_relative_eq;

    fn dickman_density(gamma: f64) -> LevyDensity {
        LevyDensity::new(move |x: f64| gamma / x, 1.0)
    }

    fn dickman_tail(gamma: f64) -> LevyTail {
        LevyTail::from_log_fn(move |l: f64| if l >= 0.0 { 0.0 } else { -gamma * l }).with_support_upper(1.0)
    }

    #[test]
    fn levy_quadrature_at_zero_rate() {
        assert_eq!(phi_from_levy(&dickman_density(1.0), 0.0, Tolerance::default()).unwrap(), 0.0);
    }

    #[test]
    fn levy_quadrature_gamma_closed_form() {
        let levy = LevyDensity::new(|x: f64| (-x).exp() / x, f64::INFINITY);
        let s = std::f64::consts::E - 1.0;
        let v = phi_from_levy(&levy, s, Tolerance::default()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn levy_quadrature_dickman_against_exponential_integral() {
        // Φ(s) = log s + γ_E + E₁(s) for unit Dickman
        for &s in &[0.5, 3.0, 40.0, 1e4, 1e8] {
            let v = phi_from_levy(&dickman_density(1.0), s, Tolerance::default()).unwrap();
            let oracle = s.ln() + EULER_GAMMA + expint_e1(s);
            assert_relative_eq!(v, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn tail_quadrature_matches_levy_quadrature() {
        let s = std::f64::consts::E;
        let a = phi_from_tail(&dickman_tail(2.0), s, Tolerance::default()).unwrap();
        let b = phi_from_levy(&dickman_density(2.0), s, Tolerance::default()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn tail_quadrature_vanishes_at_small_rate() {
        let v = phi_from_tail(&dickman_tail(1.0), 1e-12, Tolerance::default()).unwrap();
        assert!(v < 1e-11);
        assert_eq!(phi_from_tail(&dickman_tail(1.0), 0.0, Tolerance::default()).unwrap(), 0.0);
    }

    #[test]
    fn tail_quadrature_rejects_nonintegrable_tail() {
        let bad = LevyTail::from_log_fn(|l: f64| (-1.5 * l).exp());
        assert!(phi_from_tail(&bad, 1.0, Tolerance::default()).is_err());
    }

    #[test]
    fn lst_examples() {
        let point_mass = |x: f64| if x >= 0.0 { 1.0 } else { 0.0 };
        assert_relative_eq!(lst_from_cdf(&point_mass, 3.0, Tolerance::default()).unwrap(), 1.0, max_relative = 1e-10);
        let expo = |x: f64| -(-x).exp_m1();
        assert_relative_eq!(lst_from_cdf(&expo, 1.0, Tolerance::default()).unwrap(), 0.5, max_relative = 1e-10);
        assert!(lst_from_cdf(&expo, 0.0, Tolerance::default()).is_err());
    }

    #[test]
    fn numeric_inverse_matches_closed_form() {
        let closed = dickman_tail(2.0).with_log_inverse(|y| -y / 2.0);
        let numeric = dickman_tail(2.0);
        for &y in &[1e-3, 0.5, 3.0, 40.0] {
            assert_relative_eq!(closed.inverse_tail(y), numeric.inverse_tail(y), max_relative = 1e-12);
        }
        assert!(numeric.check_invariants(&[1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0, 2.0]).is_empty());
    }

    #[test]
    fn exponent_invariant_checker_flags_convexity() {
        let convex = LaplaceExponent::from_log_fn(|l: f64| (2.0 * l).exp());
        let grid: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(!convex.check_invariants(&grid, 1e-12).is_empty());
        let good = LaplaceExponent::new(|s: f64| s.ln_1p(), |l: f64| l.exp().ln_1p());
        assert!(good.check_invariants(&grid, 1e-12).is_empty());
    }
}
