//! Uniform symmetric grid on [-L, L] and composite Simpson quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform grid over `[-half_width, half_width]` with an odd number of
/// points, so that `u = 0` is a sample and `u[mid + j] == -u[mid - j]`
/// holds bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    step: f64,
    mid: usize,
}

impl Grid {
    /// Builds a grid whose step is `half_width / round(half_width / step)`.
    /// The requested step is adjusted by at most one part in `mid` so the
    /// end points land exactly on `±half_width`.
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("L", format!("must be positive, got {half_width}")));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("h", format!("must be positive, got {step}")));
        }
        let mid = (half_width / step).round() as usize;
        if mid < 2 {
            return Err(invalid("h", format!("step {step} leaves fewer than 5 grid points")));
        }
        Ok(Self {
            half_width,
            step: half_width / mid as f64,
            mid,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Index of `u = 0`.
    pub fn mid(&self) -> usize {
        self.mid
    }

    pub fn len(&self) -> usize {
        2 * self.mid + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.mid {
            0.0
        } else if i < self.mid {
            -((self.mid - i) as f64 * self.step)
        } else {
            (i - self.mid) as f64 * self.step
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Composite Simpson rule over the full grid (the point count is always odd).
    pub fn integrate(&self, f: &[f64]) -> f64 {
        simpson(f, self.step)
    }

    /// Simpson quadrature of `f(u) g(u)`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), g.len());
        simpson_by(f.len(), self.step, |i| f[i] * g[i])
    }

    /// Whether two grids sample identical points.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.mid == other.mid && self.step == other.step
    }
}

/// Composite Simpson's rule for an odd number of equally spaced samples.
///
/// # Panics
/// If `f.len()` is even or smaller than 3.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    simpson_by(f.len(), h, |i| f[i])
}

pub(crate) fn simpson_by(n: usize, h: f64, f: impl Fn(usize) -> f64) -> f64 {
    assert!(n >= 3 && n % 2 == 1, "Simpson's rule needs an odd sample count >= 3, got {n}");
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n - 1 {
        if i % 2 == 1 {
            odd += f(i);
        } else {
            even += f(i);
        }
    }
    h / 3.0 * (f(0) + 4.0 * odd + 2.0 * even + f(n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_mirror_symmetric() {
        let g = Grid::new(10.0, 1e-3).unwrap();
        assert_eq!(g.len(), 20_001);
        assert_eq!(g.point(0), -10.0);
        assert_eq!(g.point(g.len() - 1), 10.0);
        for j in 0..=g.mid() {
            assert_eq!(g.point(g.mid() + j), -g.point(g.mid() - j));
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let g = Grid::new(2.0, 0.25).unwrap();
        let f: Vec<f64> = g.points().iter().map(|u| 3.0 * u * u * u - u * u + 2.0).collect();
        // ∫_{-2}^{2} (3u³ - u² + 2) du = -16/3 + 8
        assert!((g.integrate(&f) - (8.0 - 16.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn simpson_converges_fourth_order() {
        let err = |h: f64| {
            let g = Grid::new(1.0, h).unwrap();
            let f: Vec<f64> = g.points().iter().map(|u| u.exp()).collect();
            (g.integrate(&f) - (1f64.exp() - (-1f64).exp())).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0.0, 0.1).is_err());
        assert!(Grid::new(1.0, -0.1).is_err());
        assert!(Grid::new(1.0, 0.9).is_err());
    }
}
