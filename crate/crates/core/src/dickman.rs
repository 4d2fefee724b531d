//! The Dickman process: Lévy density γ/x on (0, 1].
//!
//! For γ = 1 the marginal density of Y₁ is e^{−C}ρ(x), with ρ the Dickman
//! function solving zρ′(z) = −ρ(z − 1), ρ ≡ 1 on [0, 1].

use std::sync::{Arc, OnceLock};

use crate::error::{require_positive, Error, Result};
use crate::model::{phi_from_tail_log, LaplaceExponent, LevyTail, SubordinatorModel};
use crate::numeric::special::EULER_GAMMA;
use crate::numeric::{log_add_exp, Tolerance};
use crate::simulate::RngState;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_Z_MAX: f64 = 40.0;

/// Tabulated Dickman function on [0, z_max] with piecewise-cubic interpolation.
#[derive(Debug, Clone)]
pub struct DickmanFunction {
    step: f64,
    per_unit: usize,
    z_max: f64,
    values: Vec<f64>,
}

impl DickmanFunction {
    /// Solve the delay equation by the method of steps. `1/step` must be an
    /// integer so that every unit interval starts on a knot.
    pub fn new(step: f64, z_max: f64) -> Result<Self> {
        require_positive("step", step)?;
        require_positive("z_max", z_max)?;
        let per_unit = (1.0 / step).round() as usize;
        if per_unit < 4 || ((per_unit as f64) * step - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("1/step must be an integer >= 4, got step {step}")));
        }
        let step = 1.0 / per_unit as f64;
        let knots = (z_max * per_unit as f64).ceil() as usize;
        let mut table = DickmanFunction { step, per_unit, z_max: knots as f64 * step, values: vec![1.0; knots + 1] };
        let g = |table: &DickmanFunction, z: f64| table.interpolate(z - 1.0) / z;
        for k in per_unit..knots {
            let z = k as f64 * step;
            // ρ′ does not depend on ρ(z), so the classical RK4 step reduces
            // to Simpson's rule on the delayed term.
            let f0 = table.values[k - per_unit] / z;
            let fm = g(&table, z + 0.5 * step);
            let f1 = table.values[k + 1 - per_unit] / (z + step);
            table.values[k + 1] = table.values[k] - step / 6.0 * (f0 + 4.0 * fm + f1);
        }
        Ok(table)
    }

    /// The shared default table (step 10⁻³, z_max 40).
    pub fn standard() -> &'static DickmanFunction {
        static TABLE: OnceLock<DickmanFunction> = OnceLock::new();
        TABLE.get_or_init(|| DickmanFunction::new(DEFAULT_STEP, DEFAULT_Z_MAX).expect("valid default grid"))
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if z.is_nan() || z < 0.0 || z > self.z_max {
            return Err(Error::OutOfRange(format!("Dickman function tabulated on [0, {}], got {z}", self.z_max)));
        }
        Ok(self.interpolate(z))
    }

    /// Cubic Lagrange interpolation whose stencil never crosses an integer:
    /// ρ has a derivative jump at every integer knot.
    fn interpolate(&self, z: f64) -> f64 {
        if z <= 1.0 {
            return 1.0;
        }
        let pos = z / self.step;
        let j = (pos.floor() as usize).min(self.values.len() - 2);
        if (pos - j as f64).abs() < 1e-12 {
            return self.values[j];
        }
        let seg_start = (j / self.per_unit) * self.per_unit;
        let seg_end = (seg_start + self.per_unit).min(self.values.len() - 1);
        let first = j.saturating_sub(1).max(seg_start).min(seg_end.saturating_sub(3));
        let mut acc = 0.0;
        for a in first..first + 4 {
            let mut w = 1.0;
            for b in first..first + 4 {
                if a != b {
                    w *= (pos - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * self.values[a];
        }
        acc
    }
}

/// ρ(z) from the standard table.
pub fn dickman_rho(z: f64) -> Result<f64> {
    DickmanFunction::standard().eval(z)
}

/// Density of the unit Dickman distribution, e^{−C}ρ(x).
pub fn dickman_density(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Ok(0.0);
    }
    Ok((-EULER_GAMMA).exp() * dickman_rho(x)?)
}

/// Default recursion depth ⌈60·max(1, γ)⌉.
pub fn default_depth(gamma: f64) -> usize {
    (60.0 * gamma.max(1.0)).ceil() as usize
}

/// Mean lost by truncating the series after `depth` terms:
/// Σ_{i>d} (γ/(γ+1))^i = (γ+1)(γ/(γ+1))^{d+1}.
pub fn recursion_truncation_bias(gamma: f64, depth: usize) -> f64 {
    let r = gamma / (gamma + 1.0);
    (gamma + 1.0) * r.powi(depth as i32 + 1)
}

/// Σ_{i≤d} (U₁⋯U_i)^{1/γ} for the supplied uniforms, in log form.
pub fn dickman_partial_sum_log(gamma: f64, uniforms: impl IntoIterator<Item = f64>) -> f64 {
    let mut log_prod = 0.0;
    let mut acc = f64::NEG_INFINITY;
    for u in uniforms {
        log_prod += u.ln() / gamma;
        acc = log_add_exp(acc, log_prod);
    }
    acc
}

/// log of one draw of Σ_{i=1..d} (U₁⋯U_i)^{1/γ}.
///
/// Terms decrease, so the remaining sum is at most `(d − i)` times the
/// current term; the loop stops once that bound is below e^{−40} of the
/// running total.
pub fn sample_dickman_recursion_log(gamma: f64, depth: usize, rng: &mut RngState) -> f64 {
    let mut log_prod = 0.0;
    let mut acc = f64::NEG_INFINITY;
    for i in 1..=depth {
        log_prod += rng.open_uniform().ln() / gamma;
        acc = log_add_exp(acc, log_prod);
        let remaining = (depth - i) as f64;
        if remaining == 0.0 || log_prod + remaining.ln() < acc - 40.0 {
            break;
        }
    }
    acc
}

/// One draw of the truncated series; see [`recursion_truncation_bias`].
pub fn sample_dickman_recursion(gamma: f64, depth: usize, rng: &mut RngState) -> Result<f64> {
    require_positive("gamma", gamma)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("recursion depth must be at least 1".into()));
    }
    Ok(sample_dickman_recursion_log(gamma, depth, rng).exp())
}

/// The Dickman process with parameter γ. `Y_t` is generalized Dickman with
/// parameter tγ, which the recursion sampler draws directly.
pub fn make_dickman(gamma: f64) -> Result<SubordinatorModel> {
    require_positive("gamma", gamma)?;
    let tail = LevyTail::from_log_fn(move |l: f64| if l >= 0.0 { 0.0 } else { -gamma * l })
        .with_support_upper(1.0)
        .with_log_inverse(move |y: f64| -y / gamma);
    let quad_tail = tail.clone();
    let phi = LaplaceExponent::from_log_fn(move |l: f64| {
        phi_from_tail_log(&quad_tail, l, Tolerance::new(1e-13, 1e-11)).unwrap_or(f64::NAN)
    });
    let mut model = SubordinatorModel::new("dickman")
        .with_param("gamma", gamma)
        .with_phi(phi)
        .with_tail(tail)
        .with_sampler(Arc::new(move |t: f64, rng: &mut RngState| {
            let g = t * gamma;
            sample_dickman_recursion_log(g, default_depth(g), rng)
        }))
        .with_known_gamma(Some(gamma));
    if gamma == 1.0 {
        model = model.with_density1(|x: f64| dickman_density(x).unwrap_or(0.0));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rho_examples() {
        assert_eq!(dickman_rho(0.5).unwrap(), 1.0);
        assert_eq!(dickman_rho(1.0).unwrap(), 1.0);
        assert!((dickman_rho(1.5).unwrap() - (1.0 - 1.5f64.ln())).abs() < 1e-10);
        assert!((dickman_rho(2.0).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-8);
        assert!(dickman_rho(41.0).is_err());
        assert!(dickman_rho(-0.1).is_err());
    }

    #[test]
    fn rho_matches_closed_form_on_second_interval() {
        // ρ(z) = 1 − log z + ∫₂^z log(w−1)/w dw for z ∈ [2, 3]; at z = 3 the
        // reference value is 0.0486083882911316…
        assert!((dickman_rho(3.0).unwrap() - 0.048_608_388_291_131_6).abs() < 1e-8);
        // ρ(4) = 0.00491092564776…, ρ(5) = 0.000354724700…
        assert!((dickman_rho(4.0).unwrap() - 0.004_910_925_648).abs() < 1e-8);
        assert!((dickman_rho(5.0).unwrap() - 0.000_354_724_700_4).abs() < 1e-9);
    }

    #[test]
    fn rho_is_positive_and_nonincreasing() {
        let table = DickmanFunction::standard();
        let mut prev = 1.0;
        let mut z = 1.0;
        while z <= table.z_max() {
            let v = table.eval(z).unwrap();
            assert!(v > 0.0 && v <= prev, "z = {z}");
            prev = v;
            z += 0.0137;
        }
    }

    #[test]
    fn density_examples() {
        assert_relative_eq!(dickman_density(0.5).unwrap(), 0.561_459_483_566_885_1, max_relative = 1e-12);
        assert!(dickman_density(2.5).unwrap() <= dickman_density(1.5).unwrap());
    }

    #[test]
    fn partial_sum_single_term() {
        let v = dickman_partial_sum_log(0.5, [0.25]).exp();
        assert_relative_eq!(v, 0.0625, max_relative = 1e-14);
    }

    #[test]
    fn truncation_bias_is_geometric_tail() {
        let direct: f64 = (61..2000).map(|i| 0.5f64.powi(i)).sum();
        assert_relative_eq!(recursion_truncation_bias(1.0, 60), direct, max_relative = 1e-12);
        assert!(recursion_truncation_bias(4.0, default_depth(4.0)) < 1e-9);
    }

    #[test]
    fn dickman_tail_examples() {
        let m = make_dickman(2.0).unwrap();
        let tail = m.tail().unwrap();
        assert_eq!(tail.tail(1.0), 0.0);
        assert_relative_eq!(tail.tail(0.1), 2.0 * 10f64.ln(), max_relative = 1e-14);
        let x: f64 = 1e-6;
        assert_eq!(tail.tail(x) / x.ln(), -2.0);
        assert!(make_dickman(0.0).is_err());
    }
}
