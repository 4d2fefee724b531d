/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// log(e^a + e^b) without overflow. `-inf` is the additive identity.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Exponential integral E₁(x) = ∫ₓ^∞ e^{−u}/u du for x > 0.
///
/// Power series below x = 1, modified Lentz continued fraction above.
pub fn expint_e1(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x > 745.0 {
        return 0.0;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let contrib = term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Generalized Euler integral Ein(s) = ∫₀^s (1 − e^{−u})/u du = E₁(s) + log s + γ_E.
pub fn ein(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s < 1.0 {
        // alternating series, no cancellation against log s
        let mut sum = 0.0;
        let mut term = -1.0;
        for k in 1..200 {
            term *= -s / k as f64;
            let contrib = term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        expint_e1(s) + s.ln() + EULER_GAMMA
    }
}
