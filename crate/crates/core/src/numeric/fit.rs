use serde::{Deserialize, Serialize};

/// Ordinary least-squares fit of `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

pub fn affine_fit(x: &[f64], y: &[f64]) -> Option<AffineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum();
    Some(AffineFit {
        intercept,
        slope,
        residual: (ss / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = [0.1, 0.2, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = affine_fit(&x, &y).unwrap();
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn rejects_constant_abscissa() {
        assert!(affine_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
