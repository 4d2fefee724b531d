//! Empirical checks of the small-time limits: ECDF and Kolmogorov–Smirnov
//! machinery plus one experiment per limit statement.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::catalog::GeneralFamily;
use crate::criteria::{default_general_l_grid, estimate_gamma_general_l};
use crate::error::{invalid, require_positive, Error, Result};
use crate::laws::{pareto_cdf_unchecked, pareto_product_cdf_unchecked};
use crate::model::SubordinatorModel;
use crate::numeric::{integrate, log_add_exp, Tolerance};
use crate::scale::ScaleFunction;
use crate::simulate::{
    derive_seed, draw_parallel, sample_marginal, to_neg_t_power, to_t_l, Samples, SamplingMethod, SamplingOptions,
    Transformed,
};

/// Sorted finite sample plus the number of points sent to +∞.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
    at_infinity: usize,
}

impl EmpiricalDistribution {
    pub fn new(mut finite: Vec<f64>, at_infinity: usize) -> Result<Self> {
        if finite.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("sample contains NaN".into()));
        }
        let extra = finite.iter().filter(|v| **v == f64::INFINITY).count();
        finite.retain(|v| *v != f64::INFINITY);
        finite.sort_by(f64::total_cmp);
        let out = EmpiricalDistribution { sorted: finite, at_infinity: at_infinity + extra };
        if out.n_total() == 0 {
            return Err(Error::InvalidInput("empirical distribution needs at least one point".into()));
        }
        Ok(out)
    }

    pub fn from_transformed(t: Transformed) -> Result<Self> {
        EmpiricalDistribution::new(t.finite, t.at_infinity)
    }

    pub fn finite(&self) -> &[f64] {
        &self.sorted
    }

    pub fn count_at_infinity(&self) -> usize {
        self.at_infinity
    }

    pub fn n_total(&self) -> usize {
        self.sorted.len() + self.at_infinity
    }

    /// Right-continuous ECDF.
    pub fn ecdf(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|v| *v <= x);
        k as f64 / self.n_total() as f64
    }

    /// Mass in the closed interval [lo, hi].
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let a = self.sorted.partition_point(|v| *v < lo);
        let b = self.sorted.partition_point(|v| *v <= hi);
        b.saturating_sub(a) as f64 / self.n_total() as f64
    }
}

/// sup |ECDF − F| over order statistics, counting the mass at +∞.
pub fn ks_distance(emp: &EmpiricalDistribution, cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = emp.n_total() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in emp.sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let m = emp.sorted.len() as f64;
    d.max(cdf(f64::INFINITY) - m / n)
}

/// [`ks_distance`] restricted to x outside the open window (lo, hi); the
/// target is assumed continuous outside the window.
pub fn ks_distance_outside(emp: &EmpiricalDistribution, cdf: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = emp.n_total() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in emp.sorted.iter().enumerate() {
        if x > lo && x < hi {
            continue;
        }
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    // the window edges themselves
    d = d.max((emp.ecdf(hi) - cdf(hi)).abs());
    let below_lo = emp.sorted.partition_point(|v| *v < lo) as f64 / n;
    d = d.max((below_lo - cdf(lo)).abs());
    let m = emp.sorted.len() as f64;
    d.max(cdf(f64::INFINITY) - m / n)
}

/// Two-sample KS distance; points at +∞ are tied with each other.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (na, nb) = (a.n_total() as f64, b.n_total() as f64);
    let (xa, xb) = (&a.sorted, &b.sorted);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let next = match (xa.get(i), xb.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] <= next {
            i += 1;
        }
        while j < xb.len() && xb[j] <= next {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov quantile c(α) = √(−log(α/2)/2).
pub fn kolmogorov_quantile(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    kolmogorov_quantile(alpha) / (n as f64).sqrt()
}

pub fn ks_two_sample_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_quantile(alpha) * ((n + m) / (n * m)).sqrt()
}

/// Limit laws compared against in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum TargetLaw {
    Pareto { gamma: f64 },
    Exponential { gamma: f64 },
    /// Product of independent Π_{γ₁} and Π_{γ₂}.
    ParetoProduct { gamma1: f64, gamma2: f64 },
    /// min(a·Π_γ, b).
    CappedPareto { gamma: f64, a: f64, b: f64 },
    /// Atom of mass 1 − q at 1, Π_γ with weight q.
    AtomMixture { gamma: f64, q: f64 },
}

impl TargetLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            TargetLaw::Pareto { gamma } => pareto_cdf_unchecked(gamma, x),
            TargetLaw::Exponential { gamma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-gamma * x).exp_m1()
                }
            }
            TargetLaw::ParetoProduct { gamma1, gamma2 } => pareto_product_cdf_unchecked(gamma1, gamma2, x),
            TargetLaw::CappedPareto { gamma, a, b } => {
                if x >= b {
                    1.0
                } else {
                    pareto_cdf_unchecked(gamma, x / a)
                }
            }
            TargetLaw::AtomMixture { gamma, q } => {
                let atom = if x >= 1.0 { 1.0 - q } else { 0.0 };
                atom + q * pareto_cdf_unchecked(gamma, x)
            }
        }
    }

    /// The same law with every index doubled (negative control).
    pub fn doubled(&self) -> TargetLaw {
        match *self {
            TargetLaw::Pareto { gamma } => TargetLaw::Pareto { gamma: 2.0 * gamma },
            TargetLaw::Exponential { gamma } => TargetLaw::Exponential { gamma: 2.0 * gamma },
            TargetLaw::ParetoProduct { gamma1, gamma2 } => {
                TargetLaw::ParetoProduct { gamma1: 2.0 * gamma1, gamma2: 2.0 * gamma2 }
            }
            TargetLaw::CappedPareto { gamma, a, b } => TargetLaw::CappedPareto { gamma: 2.0 * gamma, a, b },
            TargetLaw::AtomMixture { gamma, q } => TargetLaw::AtomMixture { gamma: 2.0 * gamma, q },
        }
    }
}

/// One sample-vs-limit comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub model: String,
    pub t: f64,
    pub n: usize,
    pub target: TargetLaw,
    pub ks_statistic: f64,
    pub seed: u64,
    pub count_at_infinity: usize,
    /// KS against [`TargetLaw::doubled`].
    pub control_statistic: f64,
}

fn report(model: &SubordinatorModel, t: f64, seed: u64, target: TargetLaw, emp: &EmpiricalDistribution) -> KsReport {
    let control = target.doubled();
    KsReport {
        model: model.descriptor(),
        t,
        n: emp.n_total(),
        target,
        ks_statistic: ks_distance(emp, &|x| target.cdf(x)),
        seed,
        count_at_infinity: emp.count_at_infinity(),
        control_statistic: ks_distance(emp, &|x| control.cdf(x)),
    }
}

fn uses_exact(model: &SubordinatorModel, opts: &SamplingOptions) -> bool {
    match opts.method {
        SamplingMethod::Exact => true,
        SamplingMethod::CompoundPoisson => false,
        SamplingMethod::Auto => model.sampler().is_some(),
    }
}

/// Sample and reject zeros from exact samplers, which cannot produce them.
fn sample_checked(model: &SubordinatorModel, t: f64, n: usize, seed: u64, opts: &SamplingOptions) -> Result<Samples> {
    let samples = sample_marginal(model, t, n, seed, opts)?;
    if uses_exact(model, opts) && samples.zero_count() > 0 && !model.is_degenerate_at_one() && model.name() != "null" {
        return Err(Error::NumericalFailure {
            op: format!("exact sampler of {} underflowed to 0", model.descriptor()),
            estimate: samples.zero_count() as f64,
        });
    }
    Ok(samples)
}

fn require_gamma(model: &SubordinatorModel) -> Result<f64> {
    model
        .known_gamma()
        .ok_or_else(|| Error::UnsupportedModel(format!("{} has no known Pareto index", model.descriptor())))
}

fn check_t_list(t_list: &[f64]) -> Result<()> {
    if t_list.is_empty() {
        return Err(invalid("t list must be nonempty"));
    }
    for &t in t_list {
        require_positive("t", t)?;
    }
    Ok(())
}

/// ECDF of `Y_t^{−t}` for one seed.
pub fn neg_t_power_ecdf(
    model: &SubordinatorModel,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<EmpiricalDistribution> {
    let samples = sample_checked(model, t, n, seed, opts)?;
    EmpiricalDistribution::from_transformed(to_neg_t_power(&samples, t)?)
}

/// ECDF of `t·L(Y_t)` for one seed.
pub fn t_l_ecdf(
    model: &SubordinatorModel,
    scale: &ScaleFunction,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<EmpiricalDistribution> {
    let samples = sample_checked(model, t, n, seed, opts)?;
    EmpiricalDistribution::from_transformed(to_t_l(&samples, scale, t)?)
}

/// KS of `Y_t^{−t}` against Π_γ for each `t`. The k-th entry uses the seed
/// `derive_seed(seed, k)`, which its report records.
pub fn experiment_pareto_limit(
    model: &SubordinatorModel,
    t_list: &[f64],
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<Vec<KsReport>> {
    let gamma = require_gamma(model)?;
    check_t_list(t_list)?;
    t_list
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let s = derive_seed(seed, k as u64);
            let emp = neg_t_power_ecdf(model, t, n, s, opts)?;
            Ok(report(model, t, s, TargetLaw::Pareto { gamma }, &emp))
        })
        .collect()
}

/// KS of `t·L(Y_t)` against E_γ. The generalized-L estimate from Φ must
/// converge to γ (within 0.05·max(1, γ)) before any sampling is done.
pub fn experiment_general_limit(
    model: &SubordinatorModel,
    scale: &ScaleFunction,
    gamma: f64,
    t_list: &[f64],
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<Vec<KsReport>> {
    require_positive("gamma", gamma)?;
    check_t_list(t_list)?;
    let phi = model
        .phi()
        .ok_or_else(|| Error::UnsupportedModel(format!("{} has no Laplace exponent", model.descriptor())))?;
    let est = estimate_gamma_general_l(phi, scale, &default_general_l_grid())?;
    match est.gamma_hat {
        Some(g) if (g - gamma).abs() <= 0.05 * gamma.max(1.0) => {}
        _ => {
            return Err(invalid(format!(
                "generalized-L estimate {:?} ({:?}) does not support gamma = {gamma}",
                est.gamma_hat, est.verdict
            )))
        }
    }
    t_list
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let s = derive_seed(seed, k as u64);
            let emp = t_l_ecdf(model, scale, t, n, s, opts)?;
            Ok(report(model, t, s, TargetLaw::Exponential { gamma }, &emp))
        })
        .collect()
}

/// Deterministic check of ψ_t(u^{1/t}) → 1 − F∗(u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyLimitReport {
    pub family: String,
    pub t_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    /// max over u, one entry per t.
    pub deviations: Vec<f64>,
    /// Deviation at the smallest t.
    pub max_deviation: f64,
}

pub fn check_family_limit(family: &GeneralFamily, t_grid: &[f64], u_grid: &[f64]) -> Result<FamilyLimitReport> {
    let cdf = family
        .limit_cdf()
        .ok_or_else(|| Error::InvalidInput(format!("family {} has no limit CDF", family.name())))?;
    check_t_list(t_grid)?;
    if u_grid.is_empty() || u_grid.iter().any(|u| !(*u > 0.0)) {
        return Err(invalid("u grid must be nonempty and positive"));
    }
    let deviations: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            u_grid
                .iter()
                .map(|&u| (family.psi_t_log(t, u.ln() / t) - (1.0 - cdf(u))).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let smallest = (0..t_grid.len()).min_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b])).expect("nonempty");
    Ok(FamilyLimitReport {
        family: family.name().to_string(),
        t_grid: t_grid.to_vec(),
        u_grid: u_grid.to_vec(),
        max_deviation: deviations[smallest],
        deviations,
    })
}

fn require_pair(m1: &SubordinatorModel, m2: &SubordinatorModel) -> Result<(f64, f64)> {
    for m in [m1, m2] {
        if m.is_degenerate_at_one() {
            return Err(Error::UnsupportedModel(format!("{} has a degenerate limit", m.descriptor())));
        }
    }
    Ok((require_gamma(m1)?, require_gamma(m2)?))
}

fn sample_pair(
    m1: &SubordinatorModel,
    m2: &SubordinatorModel,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<(Samples, Samples)> {
    let a = sample_checked(m1, t, n, derive_seed(seed, 1), opts)?;
    let b = sample_checked(m2, t, n, derive_seed(seed, 2), opts)?;
    Ok((a, b))
}

/// KS of `(Y₁ + Y₂)^{−t}` against Π_{γ₁+γ₂}.
pub fn experiment_min_rule(
    m1: &SubordinatorModel,
    m2: &SubordinatorModel,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<KsReport> {
    let (g1, g2) = require_pair(m1, m2)?;
    let (a, b) = sample_pair(m1, m2, t, n, seed, opts)?;
    let sum: Vec<f64> = a.log_values().iter().zip(b.log_values()).map(|(x, y)| log_add_exp(*x, *y)).collect();
    let emp = EmpiricalDistribution::from_transformed(to_neg_t_power(&Samples::from_log_values(sum), t)?)?;
    let label = SubordinatorModel::new(format!("sum[{}, {}]", m1.descriptor(), m2.descriptor()));
    Ok(report(&label, t, seed, TargetLaw::Pareto { gamma: g1 + g2 }, &emp))
}

/// KS of `(Y₁Y₂)^{−t}` against the product of Π_{γ₁} and Π_{γ₂}.
pub fn experiment_product_rule(
    m1: &SubordinatorModel,
    m2: &SubordinatorModel,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<KsReport> {
    let (g1, g2) = require_pair(m1, m2)?;
    let (a, b) = sample_pair(m1, m2, t, n, seed, opts)?;
    let prod: Vec<f64> = a.log_values().iter().zip(b.log_values()).map(|(x, y)| x + y).collect();
    let emp = EmpiricalDistribution::from_transformed(to_neg_t_power(&Samples::from_log_values(prod), t)?)?;
    let label = SubordinatorModel::new(format!("product[{}, {}]", m1.descriptor(), m2.descriptor()));
    Ok(report(&label, t, seed, TargetLaw::ParetoProduct { gamma1: g1, gamma2: g2 }, &emp))
}

/// KS of `(a_t Y_t + b_t)^{−t}` with a_t = a^{−1/t}, b_t = b^{−1/t} against
/// min(a·Π_γ, b). `b = ∞` drops the additive term.
pub fn experiment_affine(
    model: &SubordinatorModel,
    a: f64,
    b: f64,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<KsReport> {
    let gamma = require_gamma(model)?;
    require_positive("t", t)?;
    if !(a >= 1.0) || !(b > 1.0) {
        return Err(invalid(format!("affine experiment needs a >= 1 and b > 1, got a = {a}, b = {b}")));
    }
    let log_a_t = -a.ln() / t;
    let log_b_t = if b.is_finite() { -b.ln() / t } else { f64::NEG_INFINITY };
    let floor = f64::MIN_POSITIVE.ln();
    if log_a_t < floor || (b.is_finite() && log_b_t < floor) {
        return Err(Error::OutOfRange(format!("a^(-1/t) or b^(-1/t) underflows at t = {t}")));
    }
    let samples = sample_checked(model, t, n, seed, opts)?;
    let shifted: Vec<f64> = samples.log_values().iter().map(|&l| log_add_exp(log_a_t + l, log_b_t)).collect();
    let emp = EmpiricalDistribution::from_transformed(to_neg_t_power(&Samples::from_log_values(shifted), t)?)?;
    Ok(report(model, t, seed, TargetLaw::CappedPareto { gamma, a, b }, &emp))
}

/// Outcome of the randomly started experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    #[serde(flatten)]
    pub ks: KsReport,
    pub q: f64,
    pub start_value: f64,
    /// Half-width of the window around 1 holding the atom.
    pub window: f64,
    /// Empirical mass in [1 − window, 1 + window].
    pub atom_mass: f64,
    /// KS over x outside (1 − window, 1 + window).
    pub ks_outside_atom: f64,
}

pub const DEFAULT_START_VALUE: f64 = 1.0;
pub const DEFAULT_ATOM_WINDOW: f64 = 0.01;

/// `(B + Y_t)^{−t}` with P(B = 0) = q and B = `start_value` otherwise,
/// against (1 − q)·1_{x≥1} + q·Π_γ(x).
///
/// The target has an atom while `B + Y_t` is continuous, so the plain KS
/// statistic stays at least (1 − q)/2 for every t. The report also carries
/// the mass near 1 and the KS distance away from the atom.
pub fn experiment_mixture(
    model: &SubordinatorModel,
    q: f64,
    start_value: f64,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<MixtureReport> {
    let gamma = require_gamma(model)?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid(format!("q must lie in (0, 1], got {q}")));
    }
    require_positive("start value", start_value)?;
    let samples = sample_checked(model, t, n, derive_seed(seed, 1), opts)?;
    let coins = draw_parallel(n, derive_seed(seed, 2), |rng| rng.open_uniform());
    let ln_b = start_value.ln();
    let started: Vec<f64> = samples
        .log_values()
        .iter()
        .zip(&coins)
        .map(|(&l, &u)| if u <= q { l } else { log_add_exp(l, ln_b) })
        .collect();
    let emp = EmpiricalDistribution::from_transformed(to_neg_t_power(&Samples::from_log_values(started), t)?)?;
    let target = TargetLaw::AtomMixture { gamma, q };
    let w = DEFAULT_ATOM_WINDOW;
    Ok(MixtureReport {
        ks: report(model, t, seed, target, &emp),
        q,
        start_value,
        window: w,
        atom_mass: emp.mass_in(1.0 - w, 1.0 + w),
        ks_outside_atom: ks_distance_outside(&emp, &|x| target.cdf(x), 1.0 - w, 1.0 + w),
    })
}

/// Empirical mass of `Y_t^{−t}` below 1 − δ.
pub fn support_check(transformed: &Transformed, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let n = transformed.finite.len() + transformed.at_infinity;
    if n == 0 {
        return Err(invalid("empty sample"));
    }
    let below = transformed.finite.iter().filter(|v| **v < 1.0 - delta).count();
    Ok(below as f64 / n as f64)
}

/// Where `(ct + Y_t)^{−t}` puts its mass relative to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub model: String,
    pub t: f64,
    pub n: usize,
    pub seed: u64,
    pub window: f64,
    pub below: f64,
    pub inside: f64,
    pub above: f64,
}

/// For a drifted model, the mass of `Y_t^{−t}` below, inside and above
/// [1 − window, 1 + window].
pub fn experiment_drift(
    model: &SubordinatorModel,
    t: f64,
    n: usize,
    seed: u64,
    window: f64,
    opts: &SamplingOptions,
) -> Result<DriftReport> {
    if !model.is_degenerate_at_one() {
        return Err(Error::UnsupportedModel(format!("{} carries no drift", model.descriptor())));
    }
    if !(window > 0.0 && window < 1.0) {
        return Err(invalid(format!("window must lie in (0, 1), got {window}")));
    }
    let samples = sample_checked(model, t, n, seed, opts)?;
    let emp = EmpiricalDistribution::from_transformed(to_neg_t_power(&samples, t)?)?;
    let (lo, hi) = (1.0 - window, 1.0 + window);
    let nf = emp.n_total() as f64;
    let below = emp.finite().partition_point(|v| *v < lo) as f64 / nf;
    let inside = emp.mass_in(lo, hi);
    Ok(DriftReport {
        model: model.descriptor(),
        t,
        n: emp.n_total(),
        seed,
        window,
        below,
        inside,
        above: 1.0 - below - inside,
    })
}

/// Bounded test functions vanishing near 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Zero,
    /// 0 below `lo`, 1 above `hi`, linear in between.
    Ramp { lo: f64, hi: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::Ramp { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// f vanishes on [0, δ₀].
    pub fn vanishes_below(&self) -> f64 {
        match *self {
            TestFunction::Zero => f64::INFINITY,
            TestFunction::Ramp { lo, .. } => lo,
        }
    }

    fn validate(&self) -> Result<()> {
        if let TestFunction::Ramp { lo, hi } = *self {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(invalid(format!("ramp needs 0 < lo < hi, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicEstimate {
    pub model: String,
    pub t: f64,
    pub n: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    /// ∫ f dν by quadrature, when the model has a Lévy tail.
    pub target: Option<f64>,
}

/// ∫ f dν for a ramp, as (hi − lo)⁻¹ ∫_lo^hi ν̄(x) dx.
pub fn ergodic_target(model: &SubordinatorModel, f: &TestFunction) -> Result<Option<f64>> {
    f.validate()?;
    let Some(tail) = model.tail() else {
        return Ok(None);
    };
    match *f {
        TestFunction::Zero => Ok(Some(0.0)),
        TestFunction::Ramp { lo, hi } => {
            let r = integrate(|x| tail.tail(x), lo, hi, Tolerance::new(1e-14, 1e-12))?;
            Ok(Some(r.value / (hi - lo)))
        }
    }
}

/// Monte Carlo estimate of t⁻¹ E f(Y_t), which tends to ∫ f dν.
pub fn estimate_ergodic_functional(
    model: &SubordinatorModel,
    f: &TestFunction,
    t: f64,
    n: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<ErgodicEstimate> {
    f.validate()?;
    require_positive("t", t)?;
    if !uses_exact(model, opts) && f.vanishes_below() <= opts.log_epsilon.exp() {
        return Err(invalid("test function must vanish beyond the compound-Poisson cutoff"));
    }
    let target = ergodic_target(model, f)?;
    if *f == TestFunction::Zero {
        return Ok(ErgodicEstimate { model: model.descriptor(), t, n, seed, estimate: 0.0, stderr: 0.0, target });
    }
    let samples = sample_checked(model, t, n, seed, opts)?;
    let (mut sum, mut sq) = (0.0, 0.0);
    for &l in samples.log_values() {
        let v = f.eval(l.exp()) / t;
        sum += v;
        sq += v * v;
    }
    let nf = samples.len() as f64;
    let mean = sum / nf;
    let var = (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    Ok(ErgodicEstimate {
        model: model.descriptor(),
        t,
        n: samples.len(),
        seed,
        estimate: mean,
        stderr: (var / nf).sqrt(),
        target,
    })
}

/// One point of an ECDF-vs-target curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub ecdf: f64,
    pub target: f64,
}

/// ECDF and target at up to `points` evenly spaced order statistics.
pub fn ecdf_curve(emp: &EmpiricalDistribution, cdf: &dyn Fn(f64) -> f64, points: usize) -> Vec<CurvePoint> {
    let m = emp.sorted.len();
    if m == 0 || points == 0 {
        return Vec::new();
    }
    let step = (m as f64 / points as f64).max(1.0);
    let mut out = Vec::with_capacity(points.min(m));
    let mut k = 0.0;
    while (k as usize) < m {
        let x = emp.sorted[k as usize];
        if out.last().is_none_or(|p: &CurvePoint| p.x != x) {
            out.push(CurvePoint { x, ecdf: emp.ecdf(x), target: cdf(x) });
        }
        k += step;
    }
    out
}

/// CSV with header `x,ecdf,target`.
pub fn write_curve_csv<W: Write>(mut w: W, curve: &[CurvePoint]) -> std::io::Result<()> {
    writeln!(w, "x,ecdf,target")?;
    for p in curve {
        writeln!(w, "{:e},{:e},{:e}", p.x, p.ecdf, p.target)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_gamma, make_stable_nef};
    use crate::dickman::make_dickman;
    use crate::laws::{pareto_quantile, ParetoLaw};
    use crate::simulate::RngState;
    use crate::transforms::add_drift;

    fn emp(values: Vec<f64>) -> EmpiricalDistribution {
        EmpiricalDistribution::new(values, 0).unwrap()
    }

    #[test]
    fn ks_of_quantile_grid_is_tiny() {
        let n = 1000;
        let xs: Vec<f64> = (1..=n).map(|i| pareto_quantile(2.0, i as f64 / (n + 1) as f64).unwrap()).collect();
        let d = ks_distance(&emp(xs), &|x| pareto_cdf_unchecked(2.0, x));
        assert!(d <= 1.0 / (n + 1) as f64 + 1e-12, "{d}");
    }

    #[test]
    fn ks_all_at_infinity_is_one() {
        let e = EmpiricalDistribution::new(Vec::new(), 10).unwrap();
        assert_eq!(ks_distance(&e, &|x| pareto_cdf_unchecked(1.0, x)), 1.0);
        assert!(EmpiricalDistribution::new(Vec::new(), 0).is_err());
    }

    #[test]
    fn exact_pareto_passes_ks() {
        let n = 100_000;
        let law = ParetoLaw::new(2.0).unwrap();
        let xs = draw_parallel(n, 5, |rng: &mut RngState| law.sample(rng));
        let d = ks_distance(&emp(xs), &|x| law.cdf(x));
        assert!(d < ks_critical_value(n, 0.01), "{d}");
        assert!((ks_critical_value(n, 0.01) * (n as f64).sqrt() - 1.628).abs() < 1e-3);
    }

    #[test]
    fn product_target_matches_direct_products() {
        // direct 10⁶-sample check of the closed-form product law
        let n = 1_000_000;
        for &(g1, g2) in &[(1.0, 1.0), (1.0, 2.0), (0.5, 3.0)] {
            let (p1, p2) = (ParetoLaw::new(g1).unwrap(), ParetoLaw::new(g2).unwrap());
            let xs = draw_parallel(n, 11, |rng: &mut RngState| p1.sample(rng) * p2.sample(rng));
            let target = TargetLaw::ParetoProduct { gamma1: g1, gamma2: g2 };
            let d = ks_distance(&emp(xs), &|x| target.cdf(x));
            assert!(d < ks_critical_value(n, 0.01), "({g1}, {g2}): {d}");
        }
    }

    #[test]
    fn two_sample_ks() {
        let a = emp(vec![1.0, 2.0, 3.0]);
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        let b = emp(vec![4.0, 5.0, 6.0]);
        assert_eq!(ks_two_sample(&a, &b), 1.0);
        let c = EmpiricalDistribution::new(vec![1.0, 2.0], 1).unwrap();
        assert!((ks_two_sample(&a, &c) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_outside_window_skips_atom() {
        // all mass just below 1 against an atom at 1
        let e = emp(vec![0.999; 10]);
        let target = TargetLaw::AtomMixture { gamma: 1.0, q: 1e-12 };
        assert!(ks_distance(&e, &|x| target.cdf(x)) > 0.99);
        assert!(ks_distance_outside(&e, &|x| target.cdf(x), 0.99, 1.01) < 1e-9);
    }

    #[test]
    fn target_edge_cases() {
        let capped = TargetLaw::CappedPareto { gamma: 1.0, a: 2.0, b: 2.0 };
        assert_eq!(capped.cdf(2.0), 1.0);
        assert_eq!(capped.cdf(1.5), 0.0);
        let mix = TargetLaw::AtomMixture { gamma: 1.0, q: 0.3 };
        assert!((mix.cdf(1.0) - 0.7).abs() < 1e-15);
        assert_eq!(mix.cdf(0.99), 0.0);
    }

    #[test]
    fn pareto_experiment_is_deterministic() {
        let m = make_gamma(1.0, 1.0).unwrap();
        let a = experiment_pareto_limit(&m, &[0.05], 20_000, 3, &SamplingOptions::default()).unwrap();
        let b = experiment_pareto_limit(&m, &[0.05], 20_000, 3, &SamplingOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a[0].ks_statistic < 0.06, "{:?}", a[0]);
        assert!(a[0].control_statistic > 3.0 * a[0].ks_statistic);
    }

    #[test]
    fn family_limit_examples() {
        let fam = make_stable_nef(1.0, 1.0).unwrap();
        let u: Vec<f64> = (0..10).map(|i| 1.1 + i as f64).collect();
        let r = check_family_limit(&fam, &[1e-2, 1e-4], &u).unwrap();
        assert!(r.max_deviation <= 1e-3, "{r:?}");
        let below = check_family_limit(&fam, &[1e-4], &[0.5]).unwrap();
        assert!(below.max_deviation < 1e-12);
        let bare = GeneralFamily::new("bare", |_, _| 1.0);
        assert!(check_family_limit(&bare, &[1e-3], &[2.0]).is_err());
    }

    #[test]
    fn affine_guards() {
        let m = make_gamma(1.0, 1.0).unwrap();
        let o = SamplingOptions::default();
        assert!(experiment_affine(&m, 0.5, 2.0, 0.05, 10, 1, &o).is_err());
        assert!(matches!(experiment_affine(&m, 2.0, 2.0, 1e-4, 10, 1, &o), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn product_rejects_drift() {
        let g = make_gamma(1.0, 1.0).unwrap();
        let d = add_drift(&g, 1.0).unwrap();
        assert!(experiment_product_rule(&g, &d, 0.01, 10, 1, &SamplingOptions::default()).is_err());
    }

    #[test]
    fn support_of_exact_pareto() {
        let law = ParetoLaw::new(1.0).unwrap();
        let xs = draw_parallel(1000, 2, |rng: &mut RngState| law.sample(rng));
        let tr = Transformed { finite: xs, at_infinity: 0 };
        assert_eq!(support_check(&tr, 0.1).unwrap(), 0.0);
        assert!(support_check(&tr, 1.0).is_err());
    }

    #[test]
    fn ergodic_zero_and_cutoff_guard() {
        let d = make_dickman(1.0).unwrap();
        let r = estimate_ergodic_functional(&d, &TestFunction::Zero, 1e-3, 10, 1, &SamplingOptions::default()).unwrap();
        assert_eq!(r.estimate, 0.0);
        let ramp = TestFunction::Ramp { lo: 1e-9, hi: 0.5 };
        let cp = SamplingOptions::compound_poisson(1e-6f64.ln());
        assert!(estimate_ergodic_functional(&d, &ramp, 1e-3, 10, 1, &cp).is_err());
    }

    #[test]
    fn ergodic_target_dickman_ramp() {
        // ∫ f(x)/x dx over [1/2, 1] with f the ramp on [1/2, 3/4]
        let exact = 1.0 - 2.0 * 1.5f64.ln() + (4.0f64 / 3.0).ln();
        let t = ergodic_target(&make_dickman(1.0).unwrap(), &TestFunction::Ramp { lo: 0.5, hi: 0.75 }).unwrap();
        assert!((t.unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn curve_csv_format() {
        let e = emp(vec![1.0, 2.0, 3.0, 4.0]);
        let curve = ecdf_curve(&e, &|x| pareto_cdf_unchecked(1.0, x), 2);
        assert_eq!(curve.len(), 2);
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,ecdf,target\n1e0,2.5e-1,0e0\n"), "{text}");
    }
}
