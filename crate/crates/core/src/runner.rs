//! Config-driven experiment runner behind the command-line tool.
//!
//! A config is one JSON document:
//!
//! ```json
//! {"seed": 7, "experiments": [
//!   {"kind": "pareto_limit",
//!    "model": {"kind": "leaf", "name": "gamma", "params": {"gamma": 1, "lambda": 1}},
//!    "params": {"t_list": [0.1, 0.01], "n": 100000},
//!    "assertions": {"statistic": {"max": 0.05}}}
//! ]}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog::{make_stable_nef, GeneralFamily};
use crate::criteria::{
    check_s2, check_sandwich_ol, check_sandwich_ol2, default_general_l_grid, default_log_s_grid, default_log_x_grid,
    estimate_gamma_general_l, estimate_gamma_s5, estimate_gamma_s6, estimate_gamma_s7, estimate_gamma_s8, Criterion,
    LimitEstimate, Verdict,
};
use crate::error::Error;
use crate::laws::pareto_cdf_unchecked;
use crate::model::SubordinatorModel;
use crate::montecarlo::{
    check_family_limit, ecdf_curve, estimate_ergodic_functional, experiment_affine, experiment_drift,
    experiment_general_limit, experiment_min_rule, experiment_mixture, experiment_pareto_limit, experiment_product_rule,
    neg_t_power_ecdf, support_check, t_l_ecdf, write_curve_csv, CurvePoint, KsReport, TestFunction,
    DEFAULT_START_VALUE,
};
use crate::scale::ScaleFunction;
use crate::simulate::{derive_seed, sample_marginal, to_neg_t_power, SamplingOptions};
use crate::transforms::{ModelExpr, LEAVES};

pub const DEFAULT_SEED: u64 = 20_240_601;
const CURVE_POINTS: usize = 500;

/// Why a run stopped before producing a report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    /// 2 for schema and i/o problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) | RunError::Io(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    fn from_error(context: &str, e: Error) -> Self {
        match e {
            Error::NumericalFailure { .. } | Error::OutOfRange(_) => RunError::Numerical(format!("{context}: {e}")),
            _ => RunError::Schema(format!("{context}: {e}")),
        }
    }
}

/// Inclusive bounds; either side may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Range {
    fn contains(&self, v: f64) -> bool {
        !v.is_nan() && self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    /// Bounds on the headline statistic (at the smallest t for t lists).
    #[serde(default)]
    pub statistic: Option<Range>,
    #[serde(default)]
    pub gamma_hat: Option<Range>,
    #[serde(default)]
    pub verdict: Option<Verdict>,
    /// control_statistic ≥ ratio · ks_statistic at the smallest t.
    #[serde(default)]
    pub control_ratio_min: Option<f64>,
    /// Statistics along a t list must not grow by more than this factor.
    #[serde(default)]
    pub trend_slack: Option<f64>,
    /// Bounds on numeric fields of the experiment details.
    #[serde(default)]
    pub details: BTreeMap<String, Range>,
}

impl Assertions {
    fn is_empty(&self) -> bool {
        *self == Assertions::default()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: Option<u64>,
    experiments: Vec<RawExperiment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    model: Option<ModelExpr>,
    #[serde(default)]
    model2: Option<ModelExpr>,
    #[serde(default)]
    params: Value,
    #[serde(default)]
    assertions: Assertions,
}

fn default_n() -> usize {
    100_000
}

fn default_t_list() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.01]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateParams {
    criterion: Criterion,
    #[serde(default)]
    grid: Option<Vec<f64>>,
    #[serde(default = "one")]
    scale_power: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct S2Params {
    #[serde(default)]
    gamma: Option<f64>,
    t_grid: Vec<f64>,
    u_grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SandwichParams {
    z_grid: Vec<f64>,
    s_grid: Vec<f64>,
    z2_grid: Vec<f64>,
    x_grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitParams {
    #[serde(default = "default_t_list")]
    t_list: Vec<f64>,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    sampling: SamplingOptions,
    #[serde(default)]
    csv: bool,
    /// Generalized limit only.
    #[serde(default)]
    scale_power: Option<u32>,
    #[serde(default)]
    gamma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyParams {
    family: String,
    a: f64,
    theta: f64,
    t_grid: Vec<f64>,
    u_grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingleParams {
    t: f64,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    sampling: SamplingOptions,
    #[serde(default)]
    a: Option<f64>,
    #[serde(default)]
    b: Option<f64>,
    #[serde(default)]
    q: Option<f64>,
    #[serde(default)]
    start_value: Option<f64>,
    #[serde(default)]
    window: Option<f64>,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    function: Option<TestFunction>,
}

#[derive(Debug, Clone)]
enum Plan {
    Estimate(EstimateParams),
    S2(S2Params),
    Sandwich(SandwichParams),
    ParetoLimit(LimitParams),
    GeneralLimit(LimitParams),
    FamilyLimit(FamilyParams),
    MinRule(SingleParams),
    ProductRule(SingleParams),
    Affine(SingleParams),
    Mixture(SingleParams),
    Drift(SingleParams),
    Support(SingleParams),
    Ergodic(SingleParams),
}

/// Experiment kinds with whether they need `model` and `model2`.
pub const EXPERIMENT_KINDS: &[(&str, bool, bool)] = &[
    ("estimate", true, false),
    ("s2", true, false),
    ("sandwich", true, false),
    ("pareto_limit", true, false),
    ("general_limit", true, false),
    ("family_limit", false, false),
    ("min_rule", true, true),
    ("product_rule", true, true),
    ("affine", true, false),
    ("mixture", true, false),
    ("drift", true, false),
    ("support", true, false),
    ("ergodic", true, false),
];

/// A validated experiment with its models built.
pub struct Experiment {
    index: usize,
    name: String,
    kind: String,
    params_echo: Value,
    model: Option<SubordinatorModel>,
    model2: Option<SubordinatorModel>,
    plan: Plan,
    assertions: Assertions,
}

/// A parsed and validated config.
pub struct Config {
    /// Seed from the config file, if it set one.
    pub seed: Option<u64>,
    experiments: Vec<Experiment>,
}

fn typed<T: DeserializeOwned>(context: &str, params: &Value) -> Result<T, RunError> {
    let v = if params.is_null() { json!({}) } else { params.clone() };
    serde_json::from_value(v).map_err(|e| RunError::Schema(format!("{context}: params: {e}")))
}

impl Config {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Config, RunError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, RunError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| RunError::Schema(e.to_string()))?;
        let experiments = raw
            .experiments
            .into_iter()
            .enumerate()
            .map(|(i, e)| Experiment::validate(i, e))
            .collect::<Result<_, _>>()?;
        Ok(Config { seed: raw.seed, experiments })
    }

    pub fn len(&self) -> usize {
        self.experiments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiments.is_empty()
    }
}

impl Experiment {
    fn validate(index: usize, raw: RawExperiment) -> Result<Experiment, RunError> {
        let ctx = format!("experiments[{index}] ({})", raw.kind);
        let (_, needs_model, needs_model2) = EXPERIMENT_KINDS
            .iter()
            .find(|(k, _, _)| *k == raw.kind)
            .copied()
            .ok_or_else(|| RunError::Schema(format!("{ctx}: unknown experiment kind")))?;
        let build = |expr: &Option<ModelExpr>, field: &str, needed: bool| -> Result<Option<SubordinatorModel>, RunError> {
            match (expr, needed) {
                (Some(e), true) => e.build().map(Some).map_err(|err| RunError::Schema(format!("{ctx}: {field}: {err}"))),
                (None, true) => Err(RunError::Schema(format!("{ctx}: missing field `{field}`"))),
                (Some(_), false) => Err(RunError::Schema(format!("{ctx}: unexpected field `{field}`"))),
                (None, false) => Ok(None),
            }
        };
        let model = build(&raw.model, "model", needs_model)?;
        let model2 = build(&raw.model2, "model2", needs_model2)?;
        let p = &raw.params;
        let plan = match raw.kind.as_str() {
            "estimate" => Plan::Estimate(typed(&ctx, p)?),
            "s2" => Plan::S2(typed(&ctx, p)?),
            "sandwich" => Plan::Sandwich(typed(&ctx, p)?),
            "pareto_limit" => Plan::ParetoLimit(typed(&ctx, p)?),
            "general_limit" => {
                let lp: LimitParams = typed(&ctx, p)?;
                if lp.gamma.is_none() {
                    return Err(RunError::Schema(format!("{ctx}: params: missing field `gamma`")));
                }
                Plan::GeneralLimit(lp)
            }
            "family_limit" => Plan::FamilyLimit(typed(&ctx, p)?),
            "min_rule" => Plan::MinRule(typed(&ctx, p)?),
            "product_rule" => Plan::ProductRule(typed(&ctx, p)?),
            "affine" => Plan::Affine(typed(&ctx, p)?),
            "mixture" => Plan::Mixture(typed(&ctx, p)?),
            "drift" => Plan::Drift(typed(&ctx, p)?),
            "support" => Plan::Support(typed(&ctx, p)?),
            "ergodic" => Plan::Ergodic(typed(&ctx, p)?),
            _ => unreachable!("checked against EXPERIMENT_KINDS"),
        };
        Ok(Experiment {
            index,
            name: raw.name.unwrap_or_else(|| raw.kind.clone()),
            kind: raw.kind,
            params_echo: raw.params,
            model,
            model2,
            plan,
            assertions: raw.assertions,
        })
    }
}

/// One row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub experiment: String,
    pub kind: String,
    pub model: String,
    pub params: Value,
    pub t: Option<f64>,
    pub n: Option<usize>,
    pub statistic: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub threshold: Option<Assertions>,
    /// None when no assertion applies to this row.
    pub pass: Option<bool>,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Seconds since the Unix epoch; the only field that differs between reruns.
    pub timestamp: u64,
    pub seed: u64,
    pub pass: bool,
    pub results: Vec<ReportEntry>,
    #[serde(skip)]
    pub curves: Vec<(String, Vec<CurvePoint>)>,
}

struct Outcome {
    rows: Vec<ReportEntry>,
    curves: Vec<(String, Vec<CurvePoint>)>,
}

fn details_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl Experiment {
    fn model_label(&self) -> String {
        match (&self.model, &self.model2) {
            (Some(a), Some(b)) => format!("{} ; {}", a.descriptor(), b.descriptor()),
            (Some(a), None) => a.descriptor(),
            _ => String::new(),
        }
    }

    fn row(&self, t: Option<f64>, n: Option<usize>, statistic: Option<f64>, gamma_hat: Option<f64>, details: Value) -> ReportEntry {
        ReportEntry {
            experiment: self.name.clone(),
            kind: self.kind.clone(),
            model: self.model_label(),
            params: self.params_echo.clone(),
            t,
            n,
            statistic,
            gamma_hat,
            threshold: None,
            pass: None,
            details,
        }
    }

    fn run(&self, seed: u64) -> Result<Outcome, RunError> {
        let ctx = format!("experiments[{}] ({})", self.index, self.kind);
        let err = |e: Error| RunError::from_error(&ctx, e);
        let model = || self.model.as_ref().expect("validated");
        let mut curves = Vec::new();
        let rows = match &self.plan {
            Plan::Estimate(p) => vec![self.run_estimate(model(), p).map_err(err)?],
            Plan::S2(p) => {
                let m = model();
                let phi = m.phi().ok_or_else(|| err(Error::UnsupportedModel(format!("{} has no phi", m.descriptor()))))?;
                let gamma = p
                    .gamma
                    .or(m.known_gamma())
                    .ok_or_else(|| err(Error::UnsupportedModel("s2 needs a limit index".into())))?;
                let r = check_s2(phi, &|u| pareto_cdf_unchecked(gamma, u), &p.t_grid, &p.u_grid).map_err(err)?;
                let t_min = p.t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
                vec![self.row(Some(t_min), None, Some(r.max_deviation), None, details_value(&r))]
            }
            Plan::Sandwich(p) => {
                let m = model();
                let (cdf, phi) = match (m.cdf1(), m.phi()) {
                    (Some(c), Some(f)) => (c, f),
                    _ => return Err(err(Error::UnsupportedModel(format!("{} needs cdf1 and phi", m.descriptor())))),
                };
                let v1 = check_sandwich_ol(cdf.as_ref(), phi, &p.z_grid, &p.s_grid);
                let v2 = check_sandwich_ol2(cdf.as_ref(), phi, &p.z2_grid, &p.x_grid).map_err(err)?;
                let count = (v1.len() + v2.len()) as f64;
                vec![self.row(None, None, Some(count), None, json!({"laplace_side": v1, "distribution_side": v2}))]
            }
            Plan::ParetoLimit(p) => {
                let m = model();
                let reps = experiment_pareto_limit(m, &p.t_list, p.n, seed, &p.sampling).map_err(err)?;
                if p.csv {
                    for r in &reps {
                        let emp = neg_t_power_ecdf(m, r.t, p.n, r.seed, &p.sampling).map_err(err)?;
                        let target = r.target;
                        curves.push((format!("t{}", r.t), ecdf_curve(&emp, &|x| target.cdf(x), CURVE_POINTS)));
                    }
                }
                self.ks_rows(&reps)
            }
            Plan::GeneralLimit(p) => {
                let m = model();
                let scale = ScaleFunction::neg_log_power(p.scale_power.unwrap_or(1)).map_err(err)?;
                let gamma = p.gamma.expect("validated");
                let reps = experiment_general_limit(m, &scale, gamma, &p.t_list, p.n, seed, &p.sampling).map_err(err)?;
                if p.csv {
                    for r in &reps {
                        let emp = t_l_ecdf(m, &scale, r.t, p.n, r.seed, &p.sampling).map_err(err)?;
                        let target = r.target;
                        curves.push((format!("t{}", r.t), ecdf_curve(&emp, &|x| target.cdf(x), CURVE_POINTS)));
                    }
                }
                self.ks_rows(&reps)
            }
            Plan::FamilyLimit(p) => {
                let fam: GeneralFamily = match p.family.as_str() {
                    "stable_nef" => make_stable_nef(p.a, p.theta).map_err(err)?,
                    other => return Err(RunError::Schema(format!("{ctx}: unknown family '{other}'"))),
                };
                let r = check_family_limit(&fam, &p.t_grid, &p.u_grid).map_err(err)?;
                let t_min = p.t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut row = self.row(Some(t_min), None, Some(r.max_deviation), None, details_value(&r));
                row.model = format!("{}(a={}, theta={})", p.family, p.a, p.theta);
                vec![row]
            }
            Plan::MinRule(p) | Plan::ProductRule(p) => {
                let (a, b) = (model(), self.model2.as_ref().expect("validated"));
                let r = if matches!(self.plan, Plan::MinRule(_)) {
                    experiment_min_rule(a, b, p.t, p.n, seed, &p.sampling)
                } else {
                    experiment_product_rule(a, b, p.t, p.n, seed, &p.sampling)
                }
                .map_err(err)?;
                self.ks_rows(&[r])
            }
            Plan::Affine(p) => {
                let a = p.a.unwrap_or(2.0);
                let b = p.b.unwrap_or(f64::INFINITY);
                let r = experiment_affine(model(), a, b, p.t, p.n, seed, &p.sampling).map_err(err)?;
                self.ks_rows(&[r])
            }
            Plan::Mixture(p) => {
                let q = p.q.ok_or_else(|| RunError::Schema(format!("{ctx}: params: missing field `q`")))?;
                let b = p.start_value.unwrap_or(DEFAULT_START_VALUE);
                let r = experiment_mixture(model(), q, b, p.t, p.n, seed, &p.sampling).map_err(err)?;
                vec![self.row(Some(p.t), Some(r.ks.n), Some(r.ks.ks_statistic), None, details_value(&r))]
            }
            Plan::Drift(p) => {
                let r = experiment_drift(model(), p.t, p.n, seed, p.window.unwrap_or(0.05), &p.sampling).map_err(err)?;
                vec![self.row(Some(p.t), Some(r.n), Some(r.inside), None, details_value(&r))]
            }
            Plan::Support(p) => {
                let delta = p.delta.unwrap_or(0.1);
                let samples = sample_marginal(model(), p.t, p.n, seed, &p.sampling).map_err(err)?;
                let frac = support_check(&to_neg_t_power(&samples, p.t).map_err(err)?, delta).map_err(err)?;
                vec![self.row(Some(p.t), Some(p.n), Some(frac), None, json!({"delta": delta, "fraction_below": frac}))]
            }
            Plan::Ergodic(p) => {
                let f = p.function.ok_or_else(|| RunError::Schema(format!("{ctx}: params: missing field `function`")))?;
                let r = estimate_ergodic_functional(model(), &f, p.t, p.n, seed, &p.sampling).map_err(err)?;
                let rel = r.target.map(|t| if t == 0.0 { (r.estimate - t).abs() } else { (r.estimate - t).abs() / t.abs() });
                vec![self.row(Some(p.t), Some(r.n), rel, None, details_value(&r))]
            }
        };
        Ok(Outcome { rows, curves })
    }

    fn run_estimate(&self, m: &SubordinatorModel, p: &EstimateParams) -> Result<ReportEntry, Error> {
        let missing = |what: &str| Error::UnsupportedModel(format!("{} has no {what}", m.descriptor()));
        let est: LimitEstimate = match p.criterion {
            Criterion::S5 => {
                let g = p.grid.clone().unwrap_or_else(default_log_s_grid);
                estimate_gamma_s5(m.phi().ok_or_else(|| missing("phi"))?, &g)?
            }
            Criterion::S6 => {
                let g = p.grid.clone().unwrap_or_else(default_log_x_grid);
                estimate_gamma_s6(m.cdf1().ok_or_else(|| missing("cdf1"))?.as_ref(), &g)?
            }
            Criterion::S7 => {
                let g = p.grid.clone().unwrap_or_else(default_log_x_grid);
                estimate_gamma_s7(m.tail().ok_or_else(|| missing("tail"))?, &g)?
            }
            Criterion::S8 => {
                let g = p.grid.clone().unwrap_or_else(default_log_x_grid);
                estimate_gamma_s8(m.density1().ok_or_else(|| missing("density1"))?.as_ref(), &g)?
            }
            Criterion::GL => {
                let g = p.grid.clone().unwrap_or_else(default_general_l_grid);
                let scale = ScaleFunction::neg_log_power(p.scale_power)?;
                estimate_gamma_general_l(m.phi().ok_or_else(|| missing("phi"))?, &scale, &g)?
            }
            Criterion::S2 => return Err(Error::InvalidParameter("use the s2 experiment kind for criterion S2".into())),
        };
        Ok(self.row(None, None, None, est.gamma_hat, details_value(&est)))
    }

    fn ks_rows(&self, reps: &[KsReport]) -> Vec<ReportEntry> {
        reps.iter()
            .map(|r| {
                let mut row = self.row(Some(r.t), Some(r.n), Some(r.ks_statistic), None, details_value(r));
                row.model = r.model.clone();
                row
            })
            .collect()
    }

    /// Evaluate the assertions on the rows; the headline row is the one with
    /// the smallest t (or the only row).
    fn judge(&self, rows: &mut [ReportEntry]) {
        let a = &self.assertions;
        if a.is_empty() || rows.is_empty() {
            return;
        }
        let head = (0..rows.len())
            .min_by(|&i, &j| rows[i].t.unwrap_or(0.0).total_cmp(&rows[j].t.unwrap_or(0.0)))
            .expect("nonempty");
        let mut ok = true;
        if let Some(r) = a.statistic {
            ok &= rows[head].statistic.is_some_and(|v| r.contains(v));
        }
        if let Some(r) = a.gamma_hat {
            ok &= rows[head].gamma_hat.is_some_and(|v| r.contains(v));
        }
        if let Some(v) = a.verdict {
            let got = rows[head].details.get("verdict").and_then(|x| serde_json::from_value::<Verdict>(x.clone()).ok());
            ok &= got == Some(v);
        }
        if let Some(ratio) = a.control_ratio_min {
            let d = &rows[head].details;
            let ks = d.get("ks_statistic").and_then(Value::as_f64);
            let control = d.get("control_statistic").and_then(Value::as_f64);
            ok &= matches!((ks, control), (Some(k), Some(c)) if c >= ratio * k);
        }
        if let Some(slack) = a.trend_slack {
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.sort_by(|&i, &j| rows[j].t.unwrap_or(0.0).total_cmp(&rows[i].t.unwrap_or(0.0)));
            ok &= order.windows(2).all(|w| match (rows[w[0]].statistic, rows[w[1]].statistic) {
                (Some(x), Some(y)) => y <= slack * x,
                _ => false,
            });
        }
        for (field, r) in &a.details {
            ok &= rows[head].details.get(field).and_then(Value::as_f64).is_some_and(|v| r.contains(v));
        }
        rows[head].threshold = Some(a.clone());
        rows[head].pass = Some(ok);
    }
}

/// Run every experiment; experiment `i` draws from `derive_seed(seed, i)`.
/// The seed is `seed_override`, else the config seed, else [`DEFAULT_SEED`].
pub fn run_config(config: &Config, seed_override: Option<u64>) -> Result<Report, RunError> {
    let seed = seed_override.or(config.seed).unwrap_or(DEFAULT_SEED);
    let outcomes: Vec<Result<Outcome, RunError>> = config
        .experiments
        .par_iter()
        .map(|e| {
            let mut out = e.run(derive_seed(seed, e.index as u64))?;
            e.judge(&mut out.rows);
            for c in &mut out.curves {
                c.0 = format!("{:02}_{}_{}", e.index, e.name, c.0);
            }
            Ok(out)
        })
        .collect();
    let mut results = Vec::new();
    let mut curves = Vec::new();
    for o in outcomes {
        let o = o?;
        results.extend(o.rows);
        curves.extend(o.curves);
    }
    let pass = results.iter().all(|r| r.pass != Some(false));
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(Report { timestamp, seed, pass, results, curves })
}

/// Write `report.json` and one CSV per exported curve into `dir`.
pub fn write_outputs(report: &Report, dir: impl AsRef<Path>) -> Result<(), RunError> {
    let dir = dir.as_ref();
    let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(report).map_err(|e| RunError::Io(e.to_string()))?;
    fs::write(dir.join("report.json"), text + "\n").map_err(io)?;
    for (name, curve) in &report.curves {
        let safe: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' }).collect();
        let file = fs::File::create(dir.join(format!("{safe}.csv"))).map_err(io)?;
        write_curve_csv(std::io::BufWriter::new(file), curve).map_err(io)?;
    }
    Ok(())
}

/// Remove every `timestamp` field from a JSON document.
pub fn strip_timestamps(json_text: &str) -> String {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(map) => {
                map.remove("timestamp");
                map.values_mut().for_each(strip);
            }
            Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    match serde_json::from_str::<Value>(json_text) {
        Ok(mut v) => {
            strip(&mut v);
            v.to_string()
        }
        Err(_) => json_text.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelEntry {
    pub name: &'static str,
    pub params: Vec<&'static str>,
    /// Representations at the listed example parameters.
    pub representations: Vec<&'static str>,
    pub example_params: BTreeMap<String, f64>,
    pub known_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogListing {
    pub models: Vec<ModelEntry>,
    pub transforms: Vec<&'static str>,
    pub criteria: Vec<&'static str>,
    pub experiments: Vec<&'static str>,
    pub families: Vec<&'static str>,
}

fn example_value(param: &str) -> f64 {
    match param {
        "alpha" => 0.5,
        "b" => 2.0,
        _ => 1.0,
    }
}

pub fn list_catalog() -> CatalogListing {
    let models = LEAVES
        .iter()
        .map(|(name, params)| {
            let example: BTreeMap<String, f64> = params.iter().map(|p| (p.to_string(), example_value(p))).collect();
            let built = ModelExpr::Leaf { name: name.to_string(), params: example.clone() }.build().expect("catalog example builds");
            ModelEntry {
                name,
                params: params.to_vec(),
                representations: built.representations(),
                example_params: example,
                known_gamma: built.known_gamma(),
            }
        })
        .collect();
    CatalogListing {
        models,
        transforms: vec![
            "{\"kind\": \"leaf\", \"name\": <model>, \"params\": {..}}",
            "{\"kind\": \"thorin\", \"atoms\": [[y, mass], ..]}",
            "{\"kind\": \"tilt\", \"theta\": <f64 >= 0>, \"model\": <expr>}",
            "{\"kind\": \"compose_outer\", \"outer\": <expr>, \"inner\": <expr>}",
            "{\"kind\": \"compose_inner\", \"outer\": <expr>, \"inner\": <expr>}",
            "{\"kind\": \"add\", \"left\": <expr>, \"right\": <expr>}",
            "{\"kind\": \"drift\", \"c\": <f64 > 0>, \"model\": <expr>}",
        ],
        criteria: vec![
            "S2: t*Phi(u^(1/t)) -> -log(1 - F*(u))",
            "S5: Phi(s)/log s -> gamma as s -> inf",
            "S6: log F(x)/log x -> gamma as x -> 0",
            "S7: tail(x)/(-log x) -> gamma as x -> 0",
            "S8: log f(x)/log x -> gamma - 1 as x -> 0",
            "GL: Phi(1/s)/L(s) -> gamma as s -> 0",
        ],
        experiments: EXPERIMENT_KINDS.iter().map(|(k, _, _)| *k).collect(),
        families: vec!["stable_nef(a, theta)"],
    }
}

/// Human-readable form of [`list_catalog`].
pub fn render_catalog(listing: &CatalogListing) -> String {
    let mut out = String::from("models (representations at the example parameters):\n");
    for m in &listing.models {
        let ps: Vec<String> = m.example_params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let gamma = m.known_gamma.map_or("-".to_string(), |g| g.to_string());
        out.push_str(&format!(
            "  {:<15} params [{}]  example ({})  gamma {}  exposes {{{}}}\n",
            m.name,
            m.params.join(", "),
            ps.join(", "),
            gamma,
            m.representations.join(", ")
        ));
    }
    out.push_str("transform grammar (model expressions nest):\n");
    for t in &listing.transforms {
        out.push_str(&format!("  {t}\n"));
    }
    out.push_str("criteria:\n");
    for c in &listing.criteria {
        out.push_str(&format!("  {c}\n"));
    }
    out.push_str(&format!("experiment kinds: {}\n", listing.experiments.join(", ")));
    out.push_str(&format!("families: {}\n", listing.families.join(", ")));
    out
}
