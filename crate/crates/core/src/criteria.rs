//! Numerical estimators of the Pareto index γ from Φ, F, ν̄ or f, and the
//! sandwich bounds linking F and Φ.
//!
//! Every estimator evaluates a ratio sequence on a log grid approaching the
//! relevant boundary and extrapolates it with `r = γ + b/|log s|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{LaplaceExponent, LevyTail};
use crate::numeric::{affine_fit, AffineFit};
use crate::scale::ScaleFunction;

pub const DEFAULT_GRID_POINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    S2,
    S5,
    S6,
    S7,
    S8,
    GL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Diverged,
    Degenerate,
}

/// Result of one γ estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub criterion: Criterion,
    /// Log abscissae (log s or log x) actually used.
    pub grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub gamma_hat: Option<f64>,
    pub residual: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LimitEstimate {
    pub fn is_converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// log s from log 10² to log 10¹², increasing.
pub fn default_log_s_grid() -> Vec<f64> {
    linspace(100f64.ln(), 1e12f64.ln(), DEFAULT_GRID_POINTS)
}

/// log x from log 10⁻² to log 10⁻¹², decreasing.
pub fn default_log_x_grid() -> Vec<f64> {
    linspace(0.01f64.ln(), 1e-12f64.ln(), DEFAULT_GRID_POINTS)
}

/// log s from log 10⁻⁴ down to log 10⁻¹⁰⁰ for the generalized-L estimator.
/// Slowly varying scales converge at rate 1/|log s|, so the grid reaches
/// much further than the other defaults.
pub fn default_general_l_grid() -> Vec<f64> {
    linspace(1e-4f64.ln(), -100.0 * 10f64.ln(), DEFAULT_GRID_POINTS)
}

/// Classify a sequence of per-point γ estimates `q` against the abscissa
/// `x = 1/|log|`, ordered towards the limit. Returns the affine fit when one
/// exists.
pub fn classify(x: &[f64], q: &[f64]) -> Result<(Verdict, Option<AffineFit>)> {
    if q.iter().any(|v| v.is_nan()) {
        return Err(Error::NumericalFailure { op: "criteria ratio".into(), estimate: f64::NAN });
    }
    if q.iter().all(|&v| v == 0.0) {
        return Ok((Verdict::Degenerate, None));
    }
    if q.iter().any(|v| v.is_infinite()) {
        return Ok((Verdict::Diverged, None));
    }
    let fit = affine_fit(x, q).ok_or_else(|| invalid("grid needs at least two distinct points"))?;
    let first = q[0];
    let last = q[q.len() - 1];
    let tiny = 1e-300;
    if last > 0.0 && last > 10.0 * first.max(tiny) {
        return Ok((Verdict::Diverged, Some(fit)));
    }
    if fit.intercept <= 0.0 || last < 0.1 * first || last <= 0.0 {
        return Ok((Verdict::Degenerate, Some(fit)));
    }
    // A sequence that is not affine in 1/|log| has not reached the
    // extrapolation regime; the trend decides which way it is heading.
    let half = q.len() / 2;
    let spread = match (affine_fit(&x[..half], &q[..half]), affine_fit(&x[half..], &q[half..])) {
        (Some(a), Some(b)) => (a.intercept - b.intercept).abs(),
        _ => 0.0,
    };
    if fit.residual > 0.02 * fit.intercept || spread > 0.05 * fit.intercept {
        let verdict = if last > first { Verdict::Diverged } else { Verdict::Degenerate };
        return Ok((verdict, Some(fit)));
    }
    Ok((Verdict::Converged, Some(fit)))
}

fn assemble(criterion: Criterion, grid: Vec<f64>, ratios: Vec<f64>, offset: f64, warnings: Vec<String>) -> Result<LimitEstimate> {
    let x: Vec<f64> = grid.iter().map(|l| 1.0 / l.abs()).collect();
    let q: Vec<f64> = ratios.iter().map(|r| offset + r).collect();
    let (verdict, fit) = classify(&x, &q)?;
    let residual = fit.map_or(0.0, |f| f.residual);
    let gamma_hat = match (verdict, fit) {
        (Verdict::Converged, Some(f)) => Some(f.intercept),
        _ => None,
    };
    Ok(LimitEstimate { criterion, grid, ratios, gamma_hat, residual, verdict, warnings })
}

fn check_grid(grid: &[f64], increasing: bool, reach: f64) -> Result<()> {
    if grid.len() < 6 {
        return Err(invalid(format!("grid needs at least 6 points, got {}", grid.len())));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(invalid("grid values must be finite"));
    }
    let ordered = grid.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if !ordered {
        return Err(invalid(format!("grid must be strictly {}", if increasing { "increasing" } else { "decreasing" })));
    }
    let end = grid[grid.len() - 1];
    if (increasing && end < reach) || (!increasing && end > reach) {
        return Err(invalid(format!("grid must reach log abscissa {reach}, ends at {end}")));
    }
    if grid.contains(&0.0) {
        return Err(invalid("grid must avoid log abscissa 0"));
    }
    Ok(())
}

fn eval_grid(grid: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    grid.par_iter().map(|&l| f(l)).collect()
}

/// Φ(s)/log s → γ as s → ∞, on an increasing grid of log s.
pub fn estimate_gamma_s5(phi: &LaplaceExponent, log_s_grid: &[f64]) -> Result<LimitEstimate> {
    check_grid(log_s_grid, true, 20.0)?;
    let ratios = eval_grid(log_s_grid, |l| phi.eval_log(l) / l);
    assemble(Criterion::S5, log_s_grid.to_vec(), ratios, 0.0, Vec::new())
}

/// Drop grid points where `value` underflows to zero.
fn shrink_on_underflow(grid: &[f64], values: Vec<f64>, what: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut g = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len());
    for (&l, val) in grid.iter().zip(values) {
        if val > 0.0 {
            g.push(l);
            v.push(val);
        } else {
            warnings.push(format!("{what} underflows at log x = {l}; point dropped"));
        }
    }
    if g.is_empty() {
        return Err(Error::NumericalFailure { op: format!("{what} on grid"), estimate: 0.0 });
    }
    if g.len() < 3 {
        return Err(Error::NumericalFailure { op: format!("{what} on grid: only {} points left", g.len()), estimate: 0.0 });
    }
    Ok((g, v, warnings))
}

/// log F(x)/log x → γ as x → 0, on a decreasing grid of log x.
pub fn estimate_gamma_s6(cdf: &(dyn Fn(f64) -> f64 + Sync), log_x_grid: &[f64]) -> Result<LimitEstimate> {
    check_grid(log_x_grid, false, -20.0)?;
    let values = eval_grid(log_x_grid, |l| cdf(l.exp()));
    let (grid, values, warnings) = shrink_on_underflow(log_x_grid, values, "F")?;
    let ratios = grid.iter().zip(&values).map(|(l, v)| v.ln() / l).collect();
    assemble(Criterion::S6, grid, ratios, 0.0, warnings)
}

/// ν̄(x)/(−log x) → γ as x → 0.
pub fn estimate_gamma_s7(tail: &LevyTail, log_x_grid: &[f64]) -> Result<LimitEstimate> {
    check_grid(log_x_grid, false, -20.0)?;
    let ratios = eval_grid(log_x_grid, |l| tail.tail_at_log(l) / -l);
    assemble(Criterion::S7, log_x_grid.to_vec(), ratios, 0.0, Vec::new())
}

/// log f(x)/log x → γ − 1 as x → 0; the estimate is 1 + the limit.
pub fn estimate_gamma_s8(density: &(dyn Fn(f64) -> f64 + Sync), log_x_grid: &[f64]) -> Result<LimitEstimate> {
    check_grid(log_x_grid, false, -20.0)?;
    let values = eval_grid(log_x_grid, |l| density(l.exp()));
    if values.iter().any(|v| v.is_infinite()) {
        return Err(invalid("density must be finite on the grid"));
    }
    let (grid, values, warnings) = shrink_on_underflow(log_x_grid, values, "density")?;
    let ratios = grid.iter().zip(&values).map(|(l, v)| v.ln() / l).collect();
    assemble(Criterion::S8, grid, ratios, 1.0, warnings)
}

/// Φ(1/s)/L(s) → γ as s → 0, on a decreasing grid of log s. The ratios are
/// extrapolated in 1/|log s|, the leading error order for power-of-log scales.
pub fn estimate_gamma_general_l(phi: &LaplaceExponent, scale: &ScaleFunction, log_s_grid: &[f64]) -> Result<LimitEstimate> {
    check_grid(log_s_grid, false, -20.0)?;
    let l_values: Vec<f64> = log_s_grid.iter().map(|&l| scale.value_at_log(l)).collect();
    if l_values.iter().any(|v| !(*v > 0.0)) || l_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(format!("{} must be positive and increase as s decreases on the grid", scale.label())));
    }
    let phis = eval_grid(log_s_grid, |l| phi.eval_log(-l));
    let ratios = phis.iter().zip(&l_values).map(|(p, lv)| p / lv).collect();
    assemble(Criterion::GL, log_s_grid.to_vec(), ratios, 0.0, Vec::new())
}

/// Deviations in tΦ(u^{1/t}) → −log(1 − F∗(u)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2Report {
    pub t_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    /// max over u of the deviation, one entry per t.
    pub deviations: Vec<f64>,
    /// Deviation at the smallest t.
    pub max_deviation: f64,
    /// Whether deviations shrink as t decreases, allowing 10% per step.
    pub monotone: bool,
}

pub fn check_s2(phi: &LaplaceExponent, limit_cdf: &(dyn Fn(f64) -> f64 + Sync), t_grid: &[f64], u_grid: &[f64]) -> Result<S2Report> {
    if t_grid.is_empty() || u_grid.is_empty() {
        return Err(invalid("t and u grids must be nonempty"));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) || u_grid.iter().any(|u| !(*u > 0.0)) {
        return Err(invalid("t and u grid values must be positive"));
    }
    let targets: Vec<f64> = u_grid
        .iter()
        .map(|&u| {
            let f = limit_cdf(u);
            if f >= 1.0 {
                Err(invalid(format!("limit CDF equals 1 at u = {u}")))
            } else {
                Ok(-(-f).ln_1p())
            }
        })
        .collect::<Result<_>>()?;
    let deviations: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            u_grid
                .iter()
                .zip(&targets)
                .map(|(&u, &target)| (t * phi.eval_log(u.ln() / t) - target).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[b].total_cmp(&t_grid[a]));
    let monotone = order.windows(2).all(|w| deviations[w[1]] <= 1.1 * deviations[w[0]] + 1e-15);
    let smallest = order[order.len() - 1];
    Ok(S2Report {
        t_grid: t_grid.to_vec(),
        u_grid: u_grid.to_vec(),
        max_deviation: deviations[smallest],
        deviations,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Upper,
}

/// One grid point where a sandwich bound fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub z: f64,
    /// s for the Laplace-side form, x for the distribution-side form.
    pub point: f64,
    pub bound: Bound,
    pub excess: f64,
}

pub const SANDWICH_TOLERANCE: f64 = 1e-9;

/// F(z/s)e^{−z} ≤ ψ(s) ≤ F(z/s)(1 − e^{−z}) + e^{−z} with ψ = e^{−Φ}.
pub fn check_sandwich_ol(
    cdf: &(dyn Fn(f64) -> f64 + Sync),
    phi: &LaplaceExponent,
    z_grid: &[f64],
    s_grid: &[f64],
) -> Vec<SandwichViolation> {
    let mut out = Vec::new();
    for &s in s_grid {
        let psi = phi.lst(s);
        for &z in z_grid {
            let f = cdf(z / s);
            let ez = (-z).exp();
            let lower = f * ez - psi;
            if lower > SANDWICH_TOLERANCE {
                out.push(SandwichViolation { z, point: s, bound: Bound::Lower, excess: lower });
            }
            let upper = psi - (f * -(-z).exp_m1() + ez);
            if upper > SANDWICH_TOLERANCE {
                out.push(SandwichViolation { z, point: s, bound: Bound::Upper, excess: upper });
            }
        }
    }
    out
}

/// (e^z ψ(z/x) − 1)/(e^z − 1) ≤ F(x) ≤ ψ(z/x)e^z. Requires z ≥ 10⁻³.
pub fn check_sandwich_ol2(
    cdf: &(dyn Fn(f64) -> f64 + Sync),
    phi: &LaplaceExponent,
    z_grid: &[f64],
    x_grid: &[f64],
) -> Result<Vec<SandwichViolation>> {
    if let Some(z) = z_grid.iter().find(|z| !(**z >= 1e-3)) {
        return Err(invalid(format!("z must be at least 1e-3, got {z}")));
    }
    if let Some(x) = x_grid.iter().find(|x| !(**x > 0.0)) {
        return Err(invalid(format!("x must be positive, got {x}")));
    }
    let mut out = Vec::new();
    for &x in x_grid {
        let f = cdf(x);
        for &z in z_grid {
            let psi = phi.lst(z / x);
            let ez = z.exp();
            let lower = (ez * psi - 1.0) / z.exp_m1() - f;
            if lower > SANDWICH_TOLERANCE {
                out.push(SandwichViolation { z, point: x, bound: Bound::Lower, excess: lower });
            }
            let upper = f - psi * ez;
            if upper > SANDWICH_TOLERANCE {
                out.push(SandwichViolation { z, point: x, bound: Bound::Upper, excess: upper });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_bessel, make_gamma, make_null, make_stable, make_weibull};
    use crate::dickman::make_dickman;
    use crate::laws::pareto_cdf_unchecked;

    #[test]
    fn s5_gamma_and_bessel() {
        let g = make_gamma(2.0, 1.0).unwrap();
        let est = estimate_gamma_s5(g.phi().unwrap(), &default_log_s_grid()).unwrap();
        assert!((est.gamma_hat.unwrap() - 2.0).abs() < 0.01, "{est:?}");
        let b = make_bessel();
        let est = estimate_gamma_s5(b.phi().unwrap(), &default_log_s_grid()).unwrap();
        assert!((est.gamma_hat.unwrap() - 1.0).abs() < 0.01, "{est:?}");
    }

    #[test]
    fn s5_verdicts() {
        let st = make_stable(1.0, 0.5).unwrap();
        let est = estimate_gamma_s5(st.phi().unwrap(), &default_log_s_grid()).unwrap();
        assert_eq!(est.verdict, Verdict::Diverged);
        assert!(est.gamma_hat.is_none());
        let null = make_null();
        let est = estimate_gamma_s5(null.phi().unwrap(), &default_log_s_grid()).unwrap();
        assert_eq!(est.verdict, Verdict::Degenerate);
    }

    #[test]
    fn s5_shift_invariance() {
        let g = make_gamma(1.0, 1.0).unwrap();
        let phi = g.phi().unwrap().clone();
        let shifted = LaplaceExponent::from_log_fn(move |l| phi.eval_log(l) + 3.0);
        let a = estimate_gamma_s5(g.phi().unwrap(), &default_log_s_grid()).unwrap();
        let b = estimate_gamma_s5(&shifted, &default_log_s_grid()).unwrap();
        assert!((a.gamma_hat.unwrap() - b.gamma_hat.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn grid_preconditions() {
        let g = make_gamma(1.0, 1.0).unwrap();
        let short: Vec<f64> = (1..=5).map(|i| 5.0 * i as f64).collect();
        assert!(estimate_gamma_s5(g.phi().unwrap(), &short).is_err());
        let low: Vec<f64> = (1..=8).map(|i| i as f64).collect();
        assert!(estimate_gamma_s5(g.phi().unwrap(), &low).is_err());
        let mut rev = default_log_s_grid();
        rev.reverse();
        assert!(estimate_gamma_s5(g.phi().unwrap(), &rev).is_err());
    }

    #[test]
    fn s6_examples() {
        let w = make_weibull(2.0).unwrap();
        let est = estimate_gamma_s6(w.cdf1().unwrap().as_ref(), &default_log_x_grid()).unwrap();
        assert!((est.gamma_hat.unwrap() - 2.0).abs() < 0.01, "{est:?}");
        let g = make_gamma(1.0, 1.0).unwrap();
        let est = estimate_gamma_s6(g.cdf1().unwrap().as_ref(), &default_log_x_grid()).unwrap();
        assert!((est.gamma_hat.unwrap() - 1.0).abs() < 0.01, "{est:?}");
        let step = |x: f64| if x >= 0.0 { 1.0 } else { 0.0 };
        let est = estimate_gamma_s6(&step, &default_log_x_grid()).unwrap();
        assert_eq!(est.verdict, Verdict::Degenerate);
    }

    #[test]
    fn s6_underflow_handling() {
        let zero = |_: f64| 0.0;
        assert!(matches!(estimate_gamma_s6(&zero, &default_log_x_grid()), Err(Error::NumericalFailure { .. })));
        // x^40 underflows past x ≈ 1e-8
        let steep = |x: f64| x.powi(40);
        let est = estimate_gamma_s6(&steep, &default_log_x_grid()).unwrap();
        assert!(!est.warnings.is_empty());
        assert!(est.grid.len() < DEFAULT_GRID_POINTS);
        assert!((est.gamma_hat.unwrap() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn s7_dickman_is_exact() {
        let d = make_dickman(3.0).unwrap();
        let est = estimate_gamma_s7(d.tail().unwrap(), &default_log_x_grid()).unwrap();
        assert!(est.ratios.iter().all(|r| (r - 3.0).abs() <= 4.0 * f64::EPSILON));
        assert!((est.gamma_hat.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn s8_gamma_density() {
        let g = make_gamma(2.0, 1.0).unwrap();
        let est = estimate_gamma_s8(g.density1().unwrap().as_ref(), &default_log_x_grid()).unwrap();
        assert!((est.gamma_hat.unwrap() - 2.0).abs() < 0.01, "{est:?}");
    }

    #[test]
    fn general_l_examples() {
        let g = make_gamma(1.5, 1.0).unwrap();
        let est = estimate_gamma_general_l(g.phi().unwrap(), &ScaleFunction::neg_log(), &default_general_l_grid()).unwrap();
        assert!((est.gamma_hat.unwrap() - 1.5).abs() < 0.01, "{est:?}");
        let cubic = ScaleFunction::neg_log_power(3).unwrap();
        let est = estimate_gamma_general_l(g.phi().unwrap(), &cubic, &default_general_l_grid()).unwrap();
        assert_eq!(est.verdict, Verdict::Degenerate);
        let mut up = default_general_l_grid();
        up.reverse();
        assert!(estimate_gamma_general_l(g.phi().unwrap(), &cubic, &up).is_err());
    }

    #[test]
    fn s2_gamma_and_bessel() {
        let g = make_gamma(1.0, 1.0).unwrap();
        let limit = |u: f64| pareto_cdf_unchecked(1.0, u);
        let r = check_s2(g.phi().unwrap(), &limit, &[1e-1, 1e-2, 1e-3], &[std::f64::consts::E]).unwrap();
        assert!(r.max_deviation <= 1e-2, "{r:?}");
        assert!(r.monotone);
        let b = make_bessel();
        let r = check_s2(b.phi().unwrap(), &limit, &[1e-3], &[2.0]).unwrap();
        assert!(r.max_deviation <= 1e-2, "{r:?}");
        let below = check_s2(g.phi().unwrap(), &limit, &[1e-3], &[0.5]).unwrap();
        assert!(below.max_deviation < 1e-12);
        let one = |_: f64| 1.0;
        assert!(check_s2(g.phi().unwrap(), &one, &[1e-3], &[2.0]).is_err());
    }

    #[test]
    fn sandwich_gamma() {
        let g = make_gamma(1.0, 1.0).unwrap();
        let z: Vec<f64> = (0..10).map(|i| 0.1 * 100f64.powf(i as f64 / 9.0)).collect();
        let s: Vec<f64> = (0..10).map(|i| 1e4f64.powf(i as f64 / 9.0)).collect();
        assert!(check_sandwich_ol(g.cdf1().unwrap().as_ref(), g.phi().unwrap(), &z, &s).is_empty());
        let z2: Vec<f64> = (0..10).map(|i| 0.5 + 4.5 * i as f64 / 9.0).collect();
        let x2: Vec<f64> = (0..10).map(|i| 1e-3 * 1e3f64.powf(i as f64 / 9.0)).collect();
        assert!(check_sandwich_ol2(g.cdf1().unwrap().as_ref(), g.phi().unwrap(), &z2, &x2).unwrap().is_empty());
        assert!(check_sandwich_ol2(g.cdf1().unwrap().as_ref(), g.phi().unwrap(), &[1e-4], &x2).is_err());
    }

    #[test]
    fn sandwich_catches_wrong_exponent() {
        let g = make_gamma(1.0, 1.0).unwrap();
        let wrong = make_gamma(3.0, 1.0).unwrap();
        let v = check_sandwich_ol(g.cdf1().unwrap().as_ref(), wrong.phi().unwrap(), &[1.0, 3.0], &[1.0, 10.0, 100.0]);
        assert!(!v.is_empty());
    }
}
