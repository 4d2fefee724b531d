//! Marginal samplers for `Y_t`.
//!
//! Samples are carried as `log Y_t`: at `t = 10⁻³` a gamma marginal has
//! shape `10⁻³` and its draws sit around `e^{−1000}`, far below the
//! smallest positive `f64`. A value of `-inf` encodes `Y_t = 0`, which only
//! the compound-Poisson path can produce (no jump above the cutoff).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::model::{LevyTail, SubordinatorModel};
use crate::numeric::log_add_exp;
use crate::scale::ScaleFunction;
use crate::transforms::ModelExpr;

/// Seedable generator with independent substreams.
#[derive(Debug, Clone)]
pub struct RngState(ChaCha8Rng);

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `stream` of the generator keyed by `seed`.
    pub fn substream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState(rng)
    }

    /// Uniform on (0, 1].
    pub fn open_uniform(&mut self) -> f64 {
        1.0 - self.0.random::<f64>()
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer; derives decorrelated child seeds from a parent seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const CHUNK: usize = 8192;

/// Draw `n` values in parallel. Chunk `k` always uses substream `k`, so the
/// output is independent of thread count and scheduling.
pub fn draw_parallel<F>(n: usize, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut RngState) -> f64 + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = RngState::substream(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<f64>>()
        })
        .collect()
}

/// `log G` for `G ~ Gamma(shape, 1)`.
///
/// For `shape < 1` this uses the boost `G(a) = G(a+1)·U^{1/a}` carried out in
/// log-space, `log G(a+1) + log(U)/a`, with `G(a+1)` from Marsaglia–Tsang.
/// The linear-scale boost underflows to zero once `U^{1/a}` drops below
/// `10⁻³⁰⁸`, which at `a = 10⁻³` happens for more than half of all draws.
pub fn log_gamma_variate(shape: f64, rng: &mut RngState) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("shape >= 1");
        g.sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("shape > 0");
        let boosted: f64 = g.sample(rng);
        boosted.ln() + rng.open_uniform().ln() / shape
    }
}

/// Marginal draws stored as `log Y_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    log_values: Vec<f64>,
}

impl Samples {
    pub fn from_log_values(log_values: Vec<f64>) -> Self {
        Samples { log_values }
    }

    /// Wrap linear-scale values; negatives are rejected.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidInput(format!("subordinator samples must be nonnegative, got {v}")));
        }
        Ok(Samples { log_values: values.iter().map(|v| v.ln()).collect() })
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    /// Linear-scale values; may underflow to 0 for tiny draws.
    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    /// Number of exact zeros (compound-Poisson voids).
    pub fn zero_count(&self) -> usize {
        self.log_values.iter().filter(|l| **l == f64::NEG_INFINITY).count()
    }

    pub fn mean(&self) -> f64 {
        self.log_values.iter().map(|l| l.exp()).sum::<f64>() / self.len() as f64
    }
}

/// A transformed sample whose zero inputs were sent to +∞.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub finite: Vec<f64>,
    pub at_infinity: usize,
}

/// `y ↦ y^{−t}`, evaluated as `exp(−t·log y)`.
pub fn to_neg_t_power(samples: &Samples, t: f64) -> Result<Transformed> {
    require_positive("t", t)?;
    let mut finite = Vec::with_capacity(samples.len());
    let mut at_infinity = 0;
    for &l in samples.log_values() {
        if l == f64::NEG_INFINITY {
            at_infinity += 1;
        } else {
            finite.push((-t * l).exp());
        }
    }
    Ok(Transformed { finite, at_infinity })
}

/// `y ↦ t·L(y)`.
pub fn to_t_l(samples: &Samples, scale: &ScaleFunction, t: f64) -> Result<Transformed> {
    require_positive("t", t)?;
    let mut finite = Vec::with_capacity(samples.len());
    let mut at_infinity = 0;
    for &l in samples.log_values() {
        if l == f64::NEG_INFINITY {
            at_infinity += 1;
        } else {
            finite.push(t * scale.value_at_log(l));
        }
    }
    Ok(Transformed { finite, at_infinity })
}

/// Compound-Poisson approximation of `Y_t` keeping only jumps above a cutoff ε.
///
/// Jumps below ε are dropped without compensation, which biases the mean
/// down by `t·∫₀^ε x dν(x)`; see [`CompoundPoisson::mean_bias`].
#[derive(Debug, Clone)]
pub struct CompoundPoisson {
    tail: LevyTail,
    log_epsilon: f64,
    mass: f64,
}

impl CompoundPoisson {
    pub fn new(tail: &LevyTail, log_epsilon: f64) -> Result<Self> {
        if !(log_epsilon < 0.0) {
            return Err(invalid(format!("cutoff must lie in (0, 1), got exp({log_epsilon})")));
        }
        if log_epsilon >= tail.support_upper().ln() {
            return Err(invalid("cutoff must lie below the tail's support"));
        }
        let mass = tail.tail_at_log(log_epsilon);
        if !mass.is_finite() {
            return Err(invalid(format!("tail mass above the cutoff is not finite: {mass}")));
        }
        Ok(CompoundPoisson { tail: tail.clone(), log_epsilon, mass })
    }

    pub fn log_epsilon(&self) -> f64 {
        self.log_epsilon
    }

    /// ν̄(ε).
    pub fn jump_rate(&self) -> f64 {
        self.mass
    }

    /// Probability of an empty draw, `e^{−tν̄(ε)}`.
    pub fn void_probability(&self, t: f64) -> f64 {
        (-t * self.mass).exp()
    }

    /// `t·∫₀^ε x dν(x) = t·∫₀^ε (ν̄(x) − ν̄(ε)) dx`.
    pub fn mean_bias(&self, t: f64) -> Result<f64> {
        let tol = crate::numeric::Tolerance::new(1e-300, 1e-8);
        let eps = self.log_epsilon;
        // ∫ over log x with the same chunked walk used by phi_from_tail
        let g = |l: f64| l.exp() * (self.tail.tail_at_log(l) - self.mass);
        let mut total = 0.0;
        let mut edge = eps;
        for _ in 0..400 {
            let chunk = crate::numeric::integrate(g, edge - 8.0, edge, tol)?.value;
            total += chunk;
            edge -= 8.0;
            if chunk.abs() <= 1e-14 * total.abs() {
                return Ok(t * total);
            }
        }
        Err(Error::NumericalFailure { op: "mean_bias".into(), estimate: total })
    }

    /// One draw of `log Y_t`.
    pub fn draw_log(&self, t: f64, rng: &mut RngState) -> f64 {
        let rate = t * self.mass;
        if rate <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let count = Poisson::new(rate).expect("positive finite rate").sample(rng) as u64;
        self.sum_jumps(count, rng)
    }

    fn sum_jumps(&self, count: u64, rng: &mut RngState) -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for _ in 0..count {
            let y = rng.open_uniform() * self.mass;
            acc = log_add_exp(acc, self.tail.log_inverse_tail(y));
        }
        acc
    }

    /// One jump size above the cutoff, log-scale.
    pub fn draw_log_jump(&self, rng: &mut RngState) -> f64 {
        let y = rng.open_uniform() * self.mass;
        self.tail.log_inverse_tail(y)
    }
}

/// One compound-Poisson draw of `log Y_t` with cutoff `exp(log_epsilon)`.
pub fn sample_cutoff_cp(tail: &LevyTail, log_epsilon: f64, t: f64, rng: &mut RngState) -> Result<f64> {
    require_positive("t", t)?;
    Ok(CompoundPoisson::new(tail, log_epsilon)?.draw_log(t, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Exact sampler when the model has one, else compound Poisson.
    #[default]
    Auto,
    Exact,
    CompoundPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    #[serde(default)]
    pub method: SamplingMethod,
    /// log of the compound-Poisson cutoff ε.
    #[serde(default = "default_log_epsilon")]
    pub log_epsilon: f64,
}

fn default_log_epsilon() -> f64 {
    (1e-6f64).ln()
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { method: SamplingMethod::Auto, log_epsilon: default_log_epsilon() }
    }
}

impl SamplingOptions {
    pub fn compound_poisson(log_epsilon: f64) -> Self {
        SamplingOptions { method: SamplingMethod::CompoundPoisson, log_epsilon }
    }
}

/// `n` draws of `Y_t` under `seed`.
pub fn sample_marginal(model: &SubordinatorModel, t: f64, n: usize, seed: u64, opts: &SamplingOptions) -> Result<Samples> {
    require_positive("t", t)?;
    if n == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let use_exact = match opts.method {
        SamplingMethod::Exact => true,
        SamplingMethod::CompoundPoisson => false,
        SamplingMethod::Auto => model.sampler().is_some(),
    };
    if use_exact {
        let sampler = model
            .sampler()
            .ok_or_else(|| Error::UnsupportedModel(format!("{} has no exact sampler", model.descriptor())))?;
        return Ok(Samples::from_log_values(draw_parallel(n, seed, |rng| sampler(t, rng))));
    }
    let tail = model
        .tail()
        .ok_or_else(|| Error::UnsupportedModel(format!("{} has neither a sampler nor a Levy tail", model.descriptor())))?;
    let cp = CompoundPoisson::new(tail, opts.log_epsilon)?;
    Ok(Samples::from_log_values(draw_parallel(n, seed, |rng| cp.draw_log(t, rng))))
}

/// A fully specified sampling run, round-trippable through JSON configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub model: ModelExpr,
    pub t: f64,
    pub n: usize,
    #[serde(default)]
    pub sampling: SamplingOptions,
    pub seed: u64,
}

impl SamplePlan {
    pub fn validate(&self) -> Result<()> {
        require_positive("t", self.t)?;
        if self.n == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        if !(self.sampling.log_epsilon < 0.0) {
            return Err(invalid("cutoff must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Samples> {
        self.validate()?;
        let model = self.model.build()?;
        sample_marginal(&model, self.t, self.n, self.seed, &self.sampling)
    }
}
