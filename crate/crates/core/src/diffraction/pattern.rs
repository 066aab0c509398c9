use serde::{Deserialize, Serialize};

use super::planner::order_probability;
use crate::error::{invalid, Error, Result};
use crate::evolution::DensityProfile;
use crate::grid::simpson_by;

pub const DEFAULT_PROMINENCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub u: f64,
    pub amplitude: f64,
    pub prominence: f64,
    pub order: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionPattern {
    /// Ordered by position.
    pub peaks: Vec<Peak>,
    /// Mean gap between adjacent peaks; zero with fewer than two peaks.
    pub spacing: f64,
    pub source_time: f64,
}

impl DiffractionPattern {
    pub fn gaps(&self) -> Vec<f64> {
        self.peaks.windows(2).map(|w| w[1].u - w[0].u).collect()
    }

    /// Largest relative deviation of an adjacent gap from the mean gap.
    pub fn gap_spread(&self) -> f64 {
        if self.spacing <= 0.0 {
            return 0.0;
        }
        self.gaps()
            .iter()
            .map(|g| (g - self.spacing).abs() / self.spacing)
            .fold(0.0, f64::max)
    }

    pub fn orders(&self) -> Vec<i64> {
        self.peaks.iter().map(|p| p.order).collect()
    }

    pub fn max_order(&self) -> i64 {
        self.peaks.iter().map(|p| p.order.abs()).max().unwrap_or(0)
    }

    /// Whether every order `m` present has its partner `-m`.
    pub fn orders_symmetric(&self) -> bool {
        let orders = self.orders();
        orders.iter().all(|m| orders.contains(&-m))
    }

    pub fn peak(&self, order: i64) -> Option<&Peak> {
        self.peaks.iter().find(|p| p.order == order)
    }
}

/// Local maxima of `x`; the middle sample is reported for flat tops.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Height of a peak above the higher of the two lowest points separating
/// it from taller terrain (or the profile edge) on either side.
fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Peaks whose prominence is at least `min_prominence` times the profile
/// maximum. The tallest peak is order 0; orders count outward by position.
pub fn detect_peaks(profile: &DensityProfile, min_prominence: f64) -> Result<DiffractionPattern> {
    if profile.rho.is_empty() || profile.rho.len() != profile.u.len() {
        return Err(invalid("profile", "density profile is empty or inconsistent"));
    }
    if !(0.0..1.0).contains(&min_prominence) {
        return Err(invalid("prominence", format!("must be in [0, 1), got {min_prominence}")));
    }
    let rho = &profile.rho;
    let top = rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = min_prominence * top;
    let mut peaks: Vec<Peak> = local_maxima(rho)
        .into_iter()
        .map(|i| (i, prominence(rho, i)))
        .filter(|(_, p)| *p > 0.0 && *p >= threshold)
        .map(|(i, p)| Peak {
            index: i,
            u: profile.u[i],
            amplitude: rho[i],
            prominence: p,
            order: 0,
        })
        .collect();
    // Order 0 is the tallest peak; near-ties go to the one closest to the
    // centroid of the density.
    let tallest = peaks.iter().map(|p| p.amplitude).fold(0.0, f64::max);
    let mass: f64 = rho.iter().sum();
    let centroid = profile.u.iter().zip(rho).map(|(u, r)| u * r).sum::<f64>() / mass;
    let centre = peaks
        .iter()
        .enumerate()
        .filter(|(_, p)| p.amplitude >= tallest * (1.0 - 1e-9))
        .min_by(|a, b| (a.1.u - centroid).abs().total_cmp(&(b.1.u - centroid).abs()))
        .map(|(k, _)| k);
    if let Some(centre) = centre {
        for (k, p) in peaks.iter_mut().enumerate() {
            p.order = k as i64 - centre as i64;
        }
    }
    let spacing = if peaks.len() >= 2 {
        (peaks[peaks.len() - 1].u - peaks[0].u) / (peaks.len() - 1) as f64
    } else {
        0.0
    };
    Ok(DiffractionPattern {
        peaks,
        spacing,
        source_time: profile.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTolerance {
    pub min_total_weight: f64,
}

impl Default for AmplitudeTolerance {
    fn default() -> Self {
        Self {
            min_total_weight: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderComparison {
    /// Non-negative order `|m|`.
    pub order: i64,
    /// Empirical weight, averaged over `±m` where both are present.
    pub weight: f64,
    pub probability: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeReport {
    pub beta_int: f64,
    pub rows: Vec<OrderComparison>,
    /// Weights of every detected peak, in pattern order.
    pub peak_weights: Vec<(i64, f64)>,
    pub total_weight: f64,
    /// Largest `|w_m - w_-m| / max(w_m, w_-m)`.
    pub symmetry_deviation: f64,
    pub rank_order_matches: bool,
    pub passed: bool,
}

/// Integrates `ρ` over `±spacing/4` around each peak and compares the
/// weights with `J_m(β)²`.
pub fn amplitude_check(
    pattern: &DiffractionPattern,
    profile: &DensityProfile,
    beta_int: f64,
    tolerance: &AmplitudeTolerance,
) -> Result<AmplitudeReport> {
    if pattern.peaks.len() < 3 {
        return Err(Error::InsufficientPattern {
            peaks: pattern.peaks.len(),
        });
    }
    let half = ((pattern.spacing / 4.0) / profile.step).floor() as usize;
    if half == 0 {
        return Err(invalid("spacing", "peak spacing is below four grid steps"));
    }
    let rho = &profile.rho;
    let peak_weights: Vec<(i64, f64)> = pattern
        .peaks
        .iter()
        .map(|p| {
            let lo = p.index.saturating_sub(half);
            let hi = (p.index + half).min(rho.len() - 1);
            // Keep an odd sample count for Simpson's rule.
            let hi = if (hi - lo) % 2 == 1 { hi - 1 } else { hi };
            let w = if hi - lo >= 2 {
                simpson_by(hi - lo + 1, profile.step, |i| rho[lo + i])
            } else {
                0.0
            };
            (p.order, w)
        })
        .collect();
    let weight_of = |m: i64| peak_weights.iter().find(|(o, _)| *o == m).map(|(_, w)| *w);

    let max_order = pattern.max_order().max(2);
    let mut rows = Vec::new();
    let mut symmetry_deviation: f64 = 0.0;
    for m in 0..=max_order {
        let (plus, minus) = (weight_of(m), weight_of(-m));
        let weight = match (plus, minus) {
            (Some(a), Some(b)) => {
                if m > 0 && a.max(b) > 0.0 {
                    symmetry_deviation = symmetry_deviation.max((a - b).abs() / a.max(b));
                }
                if m == 0 {
                    a
                } else {
                    0.5 * (a + b)
                }
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => 0.0,
        };
        let probability = order_probability(m, beta_int)?;
        rows.push(OrderComparison {
            order: m,
            weight,
            probability,
            ratio: if probability > 0.0 { weight / probability } else { f64::NAN },
        });
    }
    let rank = |v: Vec<f64>| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|a, b| v[*b].total_cmp(&v[*a]));
        idx
    };
    let rank_order_matches = rank(rows[..3].iter().map(|r| r.weight).collect())
        == rank(rows[..3].iter().map(|r| r.probability).collect());
    let total_weight: f64 = peak_weights.iter().map(|(_, w)| w).sum();
    Ok(AmplitudeReport {
        beta_int,
        passed: rank_order_matches && total_weight >= tolerance.min_total_weight,
        rows,
        peak_weights,
        total_weight,
        symmetry_deviation,
        rank_order_matches,
    })
}
