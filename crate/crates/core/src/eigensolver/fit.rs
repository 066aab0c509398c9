use serde::{Deserialize, Serialize};

use super::spectrum::EigenPair;
use crate::error::{Error, Result};

/// `E(n) = a0 + a1 n + a2 n²`, all coefficients in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub rms_residual: f64,
    /// Mean of the fitted eigenvalues, eV.
    pub mean_value: f64,
}

impl QuadraticFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.a0 + n * (self.a1 + n * self.a2)
    }

    /// Ratio of the quadratic (box-like) to the linear (oscillator-like)
    /// coefficient.
    pub fn well_fraction(&self) -> f64 {
        self.a2 / self.a1
    }
}

/// Least-squares quadratic in `n` over the physical eigenvalues.
pub fn fit_quadratic(pairs: &[EigenPair]) -> Result<QuadraticFit> {
    let n: Vec<f64> = pairs.iter().map(|p| p.n as f64).collect();
    let e: Vec<f64> = pairs.iter().map(|p| p.e_physical_ev).collect();
    fit_quadratic_points(&n, &e)
}

/// Householder QR on the design matrix with `n` rescaled to `[0, 1]`.
pub fn fit_quadratic_points(n: &[f64], e: &[f64]) -> Result<QuadraticFit> {
    if n.len() != e.len() {
        return Err(Error::Fit(format!("{} abscissae for {} values", n.len(), e.len())));
    }
    let m = n.len();
    if m < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {m}")));
    }
    let scale = n.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Fit("abscissae are all zero or not finite".into()));
    }
    let mut cols: Vec<Vec<f64>> = (0..3)
        .map(|p| n.iter().map(|v| (v / scale).powi(p)).collect())
        .collect();
    let mut rhs = e.to_vec();

    let mut r = [[0.0f64; 3]; 3];
    for k in 0..3 {
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv > 0.0 {
            let reflect = |col: &mut [f64]| {
                let d: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vv;
                col.iter_mut().zip(&v).for_each(|(c, a)| *c -= d * a);
            };
            for col in cols.iter_mut().skip(k) {
                reflect(&mut col[k..]);
            }
            reflect(&mut rhs[k..]);
        }
        for (j, col) in cols.iter().enumerate().skip(k) {
            r[k][j] = col[k];
        }
    }
    let diag_max = (0..3).fold(0.0f64, |s, k| s.max(r[k][k].abs()));
    if (0..3).any(|k| r[k][k].abs() <= 1e-12 * diag_max) {
        return Err(Error::Fit("design matrix is rank deficient".into()));
    }
    let mut c = [0.0f64; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| r[k][j] * c[j]).sum();
        c[k] = (rhs[k] - s) / r[k][k];
    }
    let fit = QuadraticFit {
        a0: c[0],
        a1: c[1] / scale,
        a2: c[2] / (scale * scale),
        rms_residual: 0.0,
        mean_value: e.iter().sum::<f64>() / m as f64,
    };
    let ss: f64 = n.iter().zip(e).map(|(x, y)| (fit.eval(*x) - y).powi(2)).sum();
    Ok(QuadraticFit {
        rms_residual: (ss / m as f64).sqrt(),
        ..fit
    })
}
