//! Model algebra: exponential tilting, subordination, independent sums and
//! deterministic drift, each with the Pareto index it predicts.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::criteria::{classify, default_log_s_grid, Verdict};
use crate::dickman;
use crate::error::{invalid, require_positive, Error, Result};
use crate::model::{LaplaceExponent, LevyTail, SubordinatorModel};
use crate::numeric::{integrate, integrate_to_infinity, log_add_exp, Tolerance};
use crate::simulate::RngState;

fn require_phi<'a>(model: &'a SubordinatorModel, op: &str) -> Result<&'a LaplaceExponent> {
    model
        .phi()
        .ok_or_else(|| Error::UnsupportedModel(format!("{op} needs a Laplace exponent; {} has none", model.descriptor())))
}

/// Exponentially tilted model: Φ^{(θ)}(s) = Φ(θ + s) − Φ(θ), dν^{(θ)} = e^{−θx} dν.
pub fn tilt(model: &SubordinatorModel, theta: f64) -> Result<SubordinatorModel> {
    if theta.is_nan() || theta < 0.0 {
        return Err(invalid(format!("tilt must be nonnegative, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(model.clone());
    }
    let phi = require_phi(model, "tilt")?.clone();
    let base = phi.eval(theta);
    if !base.is_finite() {
        return Err(invalid(format!("Phi({theta}) is not finite")));
    }
    let ln_theta = theta.ln();
    let (p1, p2) = (phi.clone(), phi);
    let tilted = LaplaceExponent::new(
        move |s: f64| p1.eval(theta + s) - base,
        move |l: f64| p2.eval_log(log_add_exp(ln_theta, l)) - base,
    );
    let mut out = SubordinatorModel::new(format!("tilt[{}]", model.descriptor()))
        .with_param("theta", theta)
        .with_phi(tilted)
        .with_known_gamma(model.known_gamma());
    if let Some(tail) = model.tail() {
        out = out.with_tail(tilt_tail(tail, theta));
    }
    Ok(out)
}

/// ν̄^{(θ)}(x) = ∫ₓ^∞ e^{−θu} dν(u) = e^{−θx}ν̄(x) − θ∫ₓ^∞ e^{−θu}ν̄(u) du.
fn tilt_tail(tail: &LevyTail, theta: f64) -> LevyTail {
    let base = tail.clone();
    let upper = tail.support_upper();
    LevyTail::from_log_fn(move |l: f64| {
        let x = l.exp();
        if x >= upper {
            return 0.0;
        }
        let head = (-theta * x).exp() * base.tail_at_log(l);
        let tol = Tolerance::new(1e-300, 1e-11);
        let integrand = |v: f64| {
            let u = v.exp();
            (-theta * u).exp() * base.tail_at_log(v) * u
        };
        let rest = if upper.is_finite() {
            integrate(integrand, l, upper.ln(), tol).map(|r| r.value)
        } else {
            integrate_to_infinity(integrand, l, tol).map(|r| r.value)
        };
        match rest {
            Ok(r) => (head - theta * r).max(0.0),
            Err(_) => f64::NAN,
        }
    })
    .with_support_upper(upper)
}

/// Grid for the δ detection in subordination.
fn delta_grid() -> Vec<f64> {
    (0..12).map(|i| 20.0 + 100.0 * i as f64 / 11.0).collect()
}

/// Extrapolated lim log φ(s)/log s.
pub fn log_growth_index(phi: &LaplaceExponent) -> Option<f64> {
    let grid = delta_grid();
    let ratios: Vec<f64> = grid.iter().map(|&l| phi.log_eval_log(l) / l).collect();
    extrapolated_limit(&grid, &ratios)
}

/// Extrapolated lim φ(s)/s.
pub fn linear_growth_index(phi: &LaplaceExponent) -> Option<f64> {
    let grid = delta_grid();
    let ratios: Vec<f64> = grid.iter().map(|&l| (phi.log_eval_log(l) - l).exp()).collect();
    extrapolated_limit(&grid, &ratios)
}

fn extrapolated_limit(grid: &[f64], ratios: &[f64]) -> Option<f64> {
    let x: Vec<f64> = grid.iter().map(|l| 1.0 / l.abs()).collect();
    match classify(&x, ratios) {
        Ok((Verdict::Converged, Some(fit))) => Some(fit.intercept),
        _ => None,
    }
}

fn composed_exponent(outer: &LaplaceExponent, inner: &LaplaceExponent) -> LaplaceExponent {
    let (o1, i1, o2, i2) = (outer.clone(), inner.clone(), outer.clone(), inner.clone());
    LaplaceExponent::new(move |s: f64| o1.eval(i1.eval(s)), move |l: f64| o2.eval_log(i2.log_eval_log(l)))
}

/// Sampler for the exponent `outer∘inner`: draw the time change from the
/// `outer` model, then run `inner` for that long.
fn composed_sampler(outer: &SubordinatorModel, inner: &SubordinatorModel) -> Option<crate::model::MarginalSampler> {
    let time = outer.sampler()?.clone();
    let run = inner.sampler()?.clone();
    Some(Arc::new(move |t: f64, rng: &mut RngState| {
        let log_time = time(t, rng);
        if log_time == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let tau = log_time.exp();
        if tau == 0.0 {
            return f64::NEG_INFINITY;
        }
        run(tau, rng)
    }))
}

/// `A_t = X_{Y_t}` with exponent Φ(φ(s)); `outer` carries Φ (and the index
/// γ), `inner` carries φ. Predicted index γδ with δ = lim log φ(s)/log s.
pub fn compose_outer(outer: &SubordinatorModel, inner: &SubordinatorModel) -> Result<SubordinatorModel> {
    let phi_outer = require_phi(outer, "compose_outer")?;
    let phi_inner = require_phi(inner, "compose_outer")?;
    let known = outer.known_gamma().and_then(|g| log_growth_index(phi_inner).filter(|d| *d > 0.0).map(|d| g * d));
    let mut out = SubordinatorModel::new(format!("compose_outer[{}, {}]", outer.descriptor(), inner.descriptor()))
        .with_phi(composed_exponent(phi_outer, phi_inner))
        .with_known_gamma(known);
    if let Some(s) = composed_sampler(outer, inner) {
        out = out.with_sampler(s);
    }
    Ok(out)
}

/// `B_t = Y_{X_t}` with exponent φ(Φ(s)); `outer` carries φ, `inner` carries
/// Φ (and γ). Predicted index γδ with δ = lim φ(s)/s.
pub fn compose_inner(outer: &SubordinatorModel, inner: &SubordinatorModel) -> Result<SubordinatorModel> {
    let phi_outer = require_phi(outer, "compose_inner")?;
    let phi_inner = require_phi(inner, "compose_inner")?;
    let known = inner.known_gamma().and_then(|g| linear_growth_index(phi_outer).filter(|d| *d > 0.0).map(|d| g * d));
    let mut out = SubordinatorModel::new(format!("compose_inner[{}, {}]", outer.descriptor(), inner.descriptor()))
        .with_phi(composed_exponent(phi_outer, phi_inner))
        .with_known_gamma(known);
    if let Some(s) = composed_sampler(outer, inner) {
        out = out.with_sampler(s);
    }
    Ok(out)
}

/// Sum of independent subordinators: Φ₁ + Φ₂, ν̄₁ + ν̄₂, γ₁ + γ₂.
pub fn add(m1: &SubordinatorModel, m2: &SubordinatorModel) -> Result<SubordinatorModel> {
    let p1 = require_phi(m1, "add")?.clone();
    let p2 = require_phi(m2, "add")?.clone();
    let probe = default_log_s_grid();
    for (m, p) in [(m1, &p1), (m2, &p2)] {
        if p.is_null_on(&probe) {
            return Err(Error::DegenerateModel(format!("{} has a vanishing Laplace exponent", m.descriptor())));
        }
    }
    let (q1, q2) = (p1.clone(), p2.clone());
    let phi = LaplaceExponent::new(move |s: f64| p1.eval(s) + p2.eval(s), move |l: f64| q1.eval_log(l) + q2.eval_log(l));
    let known = match (m1.known_gamma(), m2.known_gamma()) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    let mut out = SubordinatorModel::new(format!("add[{}, {}]", m1.descriptor(), m2.descriptor()))
        .with_phi(phi)
        .with_known_gamma(known);
    if let (Some(t1), Some(t2)) = (m1.tail(), m2.tail()) {
        let (t1, t2) = (t1.clone(), t2.clone());
        let upper = t1.support_upper().max(t2.support_upper());
        out = out.with_tail(LevyTail::from_log_fn(move |l| t1.tail_at_log(l) + t2.tail_at_log(l)).with_support_upper(upper));
    }
    if let (Some(s1), Some(s2)) = (m1.sampler(), m2.sampler()) {
        let (s1, s2) = (s1.clone(), s2.clone());
        out = out.with_sampler(Arc::new(move |t, rng| {
            let a = s1(t, rng);
            log_add_exp(a, s2(t, rng))
        }));
    }
    Ok(out)
}

/// Adds the drift `c·t`: Φ(s) + cs. The Pareto index is cleared and the
/// model is flagged as collapsing onto 1. The Lévy tail is not carried over
/// since a jump-only sampler built from it would ignore the drift.
pub fn add_drift(model: &SubordinatorModel, c: f64) -> Result<SubordinatorModel> {
    require_positive("drift", c)?;
    let phi = require_phi(model, "add_drift")?.clone();
    let ln_c = c.ln();
    let p2 = phi.clone();
    let drifted = LaplaceExponent::new(move |s: f64| phi.eval(s) + c * s, move |l: f64| p2.eval_log(l) + (ln_c + l).exp());
    let mut out = SubordinatorModel::new(format!("drift[{}]", model.descriptor()))
        .with_param("c", c)
        .with_phi(drifted)
        .mark_degenerate_at_one();
    if let Some(s) = model.sampler() {
        let s = s.clone();
        out = out.with_sampler(Arc::new(move |t, rng| log_add_exp(ln_c + t.ln(), s(t, rng))));
    } else {
        out = out.clear_sampler();
    }
    Ok(out)
}

/// A model expression: catalog leaves combined by the transforms above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelExpr {
    Leaf {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Thorin {
        atoms: Vec<(f64, f64)>,
    },
    Tilt {
        theta: f64,
        model: Box<ModelExpr>,
    },
    ComposeOuter {
        outer: Box<ModelExpr>,
        inner: Box<ModelExpr>,
    },
    ComposeInner {
        outer: Box<ModelExpr>,
        inner: Box<ModelExpr>,
    },
    Add {
        left: Box<ModelExpr>,
        right: Box<ModelExpr>,
    },
    Drift {
        c: f64,
        model: Box<ModelExpr>,
    },
}

impl ModelExpr {
    pub fn leaf(name: &str, params: &[(&str, f64)]) -> Self {
        ModelExpr::Leaf {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn build(&self) -> Result<SubordinatorModel> {
        match self {
            ModelExpr::Leaf { name, params } => build_leaf(name, params),
            ModelExpr::Thorin { atoms } => Ok(catalog::make_thorin(&catalog::ThorinMeasure::new(atoms.clone())?)),
            ModelExpr::Tilt { theta, model } => tilt(&model.build()?, *theta),
            ModelExpr::ComposeOuter { outer, inner } => compose_outer(&outer.build()?, &inner.build()?),
            ModelExpr::ComposeInner { outer, inner } => compose_inner(&outer.build()?, &inner.build()?),
            ModelExpr::Add { left, right } => add(&left.build()?, &right.build()?),
            ModelExpr::Drift { c, model } => add_drift(&model.build()?, *c),
        }
    }
}

/// Catalog leaves and their parameter names, in listing order.
pub const LEAVES: &[(&str, &[&str])] = &[
    ("gamma", &["gamma", "lambda"]),
    ("stable", &["a", "alpha"]),
    ("bessel", &[]),
    ("thorin_uniform", &["gamma"]),
    ("weibull", &["gamma"]),
    ("pareto_type", &["a"]),
    ("fdist", &["a", "b"]),
    ("half_cauchy", &[]),
    ("dickman", &["gamma"]),
    ("log_power_tail", &["gamma", "power"]),
    ("drift", &["c"]),
    ("null", &[]),
];

fn build_leaf(name: &str, params: &BTreeMap<String, f64>) -> Result<SubordinatorModel> {
    let expected = LEAVES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, p)| *p)
        .ok_or_else(|| invalid(format!("unknown model '{name}'")))?;
    if let Some(extra) = params.keys().find(|k| !expected.contains(&k.as_str())) {
        return Err(invalid(format!("model '{name}' has no parameter '{extra}'")));
    }
    let get = |key: &str| {
        params.get(key).copied().ok_or_else(|| invalid(format!("model '{name}' is missing parameter '{key}'")))
    };
    match name {
        "gamma" => catalog::make_gamma(get("gamma")?, get("lambda")?),
        "stable" => catalog::make_stable(get("a")?, get("alpha")?),
        "bessel" => Ok(catalog::make_bessel()),
        "thorin_uniform" => catalog::make_thorin_uniform(get("gamma")?),
        "weibull" => catalog::make_weibull(get("gamma")?),
        "pareto_type" => catalog::make_pareto_type(get("a")?),
        "fdist" => catalog::make_fdist(get("a")?, get("b")?),
        "half_cauchy" => Ok(catalog::make_half_cauchy()),
        "dickman" => dickman::make_dickman(get("gamma")?),
        "log_power_tail" => {
            let power = get("power")?;
            if power.fract() != 0.0 || power < 1.0 {
                return Err(invalid(format!("power must be a positive integer, got {power}")));
            }
            catalog::make_log_power_tail(get("gamma")?, power as u32)
        }
        "drift" => catalog::make_drift(get("c")?),
        "null" => Ok(catalog::make_null()),
        _ => unreachable!("checked against LEAVES"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_bessel, make_drift, make_gamma, make_null, make_stable};
    use approx::assert_relative_eq;

    #[test]
    fn zero_tilt_is_identity() {
        let m = make_gamma(1.3, 2.0).unwrap();
        let t = tilt(&m, 0.0).unwrap();
        for &s in &[0.1, 5.0, 1e7] {
            assert_eq!(t.phi().unwrap().eval(s), m.phi().unwrap().eval(s));
        }
        assert!(tilt(&m, -1.0).is_err());
    }

    #[test]
    fn tilted_gamma_is_gamma_with_shifted_rate() {
        let (g, l, th) = (1.5, 2.0, 0.7);
        let t = tilt(&make_gamma(g, l).unwrap(), th).unwrap();
        let reference = make_gamma(g, l + th).unwrap();
        for &s in &[0.01, 1.0, 30.0, 1e6] {
            assert_relative_eq!(t.phi().unwrap().eval(s), reference.phi().unwrap().eval(s), max_relative = 1e-10);
        }
        // tilted tail against the gamma(γ, λ+θ) tail
        for &x in &[1e-4, 0.1, 1.0, 3.0] {
            assert_relative_eq!(t.tail().unwrap().tail(x), reference.tail().unwrap().tail(x), max_relative = 1e-8);
        }
        assert_eq!(t.known_gamma(), Some(g));
    }

    #[test]
    fn tilt_composes_additively() {
        let m = make_bessel();
        let twice = tilt(&tilt(&m, 0.4).unwrap(), 1.1).unwrap();
        let once = tilt(&m, 1.5).unwrap();
        for &s in &[0.0, 0.2, 3.0, 1e4, 1e9] {
            let a = twice.phi().unwrap().eval(s);
            let b = once.phi().unwrap().eval(s);
            assert!((a - b).abs() <= 1e-10 * b.max(1.0), "s = {s}: {a} vs {b}");
        }
    }

    #[test]
    fn compose_outer_with_stable_halves_index() {
        let m = compose_outer(&make_gamma(2.0, 1.0).unwrap(), &make_stable(1.0, 0.5).unwrap()).unwrap();
        assert_relative_eq!(m.known_gamma().unwrap(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn compose_with_identity_is_transparent() {
        let outer = make_gamma(1.2, 0.5).unwrap();
        let id = make_drift(1.0).unwrap();
        let m = compose_outer(&outer, &id).unwrap();
        for &s in &[0.3, 2.0, 1e8] {
            assert_relative_eq!(m.phi().unwrap().eval(s), outer.phi().unwrap().eval(s), max_relative = 1e-12);
        }
        assert_relative_eq!(m.known_gamma().unwrap(), 1.2, max_relative = 1e-9);
        let b = compose_inner(&id, &outer).unwrap();
        assert_relative_eq!(b.known_gamma().unwrap(), 1.2, max_relative = 1e-9);
    }

    #[test]
    fn compose_inner_linear_growth() {
        let phi = add_drift(&make_stable(1.0, 0.5).unwrap(), 2.0).unwrap();
        let b = compose_inner(&phi, &make_gamma(1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(b.known_gamma().unwrap(), 2.0, max_relative = 1e-4);
        let sub = compose_inner(&make_stable(1.0, 0.5).unwrap(), &make_gamma(1.0, 1.0).unwrap()).unwrap();
        assert!(sub.known_gamma().is_none());
    }

    #[test]
    fn add_sums_indices_and_rejects_null() {
        let m = add(&make_gamma(1.0, 1.0).unwrap(), &make_gamma(2.0, 1.0).unwrap()).unwrap();
        assert_eq!(m.known_gamma(), Some(3.0));
        assert_relative_eq!(m.phi().unwrap().eval(4.0), 3.0 * 5f64.ln(), max_relative = 1e-14);
        let err = add(&make_gamma(1.0, 1.0).unwrap(), &make_null()).unwrap_err();
        assert!(matches!(err, Error::DegenerateModel(_)));
    }

    #[test]
    fn drift_clears_index() {
        let m = add_drift(&make_gamma(1.0, 1.0).unwrap(), 0.5).unwrap();
        assert!(m.known_gamma().is_none());
        assert!(m.is_degenerate_at_one());
        assert_relative_eq!(m.phi().unwrap().eval(2.0), 3f64.ln() + 1.0, max_relative = 1e-14);
        assert!(add_drift(&make_gamma(1.0, 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn expressions_parse_and_build() {
        let json = r#"{"kind":"tilt","theta":0.5,"model":{"kind":"add",
            "left":{"kind":"leaf","name":"gamma","params":{"gamma":1,"lambda":1}},
            "right":{"kind":"leaf","name":"bessel"}}}"#;
        let expr: ModelExpr = serde_json::from_str(json).unwrap();
        let m = expr.build().unwrap();
        assert_eq!(m.known_gamma(), Some(2.0));
        let back: ModelExpr = serde_json::from_str(&serde_json::to_string(&expr).unwrap()).unwrap();
        assert_eq!(back, expr);
        assert!(ModelExpr::leaf("nope", &[]).build().is_err());
        assert!(ModelExpr::leaf("gamma", &[("gamma", 1.0)]).build().is_err());
        assert!(ModelExpr::leaf("gamma", &[("gamma", 1.0), ("lambda", 1.0), ("x", 2.0)]).build().is_err());
    }
}
