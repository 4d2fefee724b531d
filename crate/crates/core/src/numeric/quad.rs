//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Absolute and relative targets; the integral converges once the summed
/// error estimate drops below `max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const MAX_SEGMENTS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += wk * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut heap = BinaryHeap::new();
    let (v, e) = gauss_kronrod(&f, lo, hi);
    let mut total = v;
    let mut total_err = e;
    let mut evaluations = 15;
    heap.push(Segment { a: lo, b: hi, value: v, error: e });

    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::NumericalFailure { op: "integrate".into(), estimate: total_err });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::NumericalFailure { op: "integrate".into(), estimate: total_err });
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine precision
            heap.push(seg);
            return Err(Error::NumericalFailure { op: "integrate".into(), estimate: total_err });
        }
        let (v1, e1) = gauss_kronrod(&f, seg.a, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, seg.b);
        evaluations += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
        if heap.len() % 64 == 0 {
            // re-sum to shed accumulated rounding
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(Integral { value: sign * total, error: total_err, evaluations })
}

/// Integrate `f` over `[a, ∞)` through the map `x = a + u/(1−u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Integral> {
    let mapped = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u;
        let x = a + u / w;
        let v = f(x) / (w * w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(mapped, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn log_singularity_converges() {
        let r = integrate(|x: f64| -x.ln(), 0.0, 1.0, Tolerance::new(1e-12, 1e-12)).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x: f64| x.cos(), std::f64::consts::FRAC_PI_2, 0.0, Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, -1.0, max_relative = 1e-10);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, Tolerance::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn nonintegrable_reports_failure() {
        let err = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::new(1e-12, 1e-12)).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { .. }));
    }
}
