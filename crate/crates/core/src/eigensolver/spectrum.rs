use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::shooting::{
    count_at_or_below, integrate_from_midpoint, integrate_from_wall, HalfTable, Real, Trajectory,
};
use crate::constants::EV;
use crate::error::{invalid, Error, Result};
use crate::physics::ScaledSystem;

/// Default energy step of the coarse scan.
pub const DEFAULT_SCAN_STEP: f64 = 0.5;

/// Levels closer than this (in `E'`) to a neighbour are refined and
/// reconstructed in double-double precision.
pub const CLUSTER_GAP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity of the `n`-th state of a symmetric box.
    pub fn of_index(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `+1` for even, `-1` for odd.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// Energy interval known to contain eigenvalue `index`.
///
/// For odd levels `ψ(0)` changes sign across the interval, for even levels
/// `φ(0)` does. Members of unresolved multiplets share the same interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub index: usize,
    pub parity: Parity,
}

/// Coarse scan of `[e_min, e_max]`. One bracket is emitted per eigenvalue
/// inside the range, in increasing order of index, so parities alternate.
pub fn scan_spectrum(e_min: f64, e_max: f64, step: f64, sys: &ScaledSystem) -> Result<Vec<Bracket>> {
    let table = HalfTable::new(sys);
    scan_with(&table, e_min, e_max, step)
}

fn scan_with(table: &HalfTable, e_min: f64, e_max: f64, step: f64) -> Result<Vec<Bracket>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    if !(e_min.is_finite() && e_max.is_finite()) {
        return Err(invalid("E_max", "scan limits must be finite"));
    }
    if e_max <= e_min {
        return Ok(Vec::new());
    }
    let intervals = ((e_max - e_min) / step).ceil() as usize;
    let energies: Vec<f64> = (0..=intervals)
        .map(|j| (e_min + j as f64 * step).min(e_max))
        .collect();
    let counts = energies
        .par_iter()
        .map(|&e| count_at_or_below(table, e))
        .collect::<Result<Vec<_>>>()?;
    let mut brackets = Vec::new();
    for j in 0..intervals {
        // The counting function is monotone; a decrease means the grid
        // cannot follow the oscillation at this energy.
        if counts[j + 1] < counts[j] {
            return Err(invalid(
                "h",
                format!(
                    "eigenvalue count decreased between E' = {} and {}; refine the grid step",
                    energies[j],
                    energies[j + 1]
                ),
            ));
        }
        for index in counts[j]..counts[j + 1] {
            brackets.push(Bracket {
                lo: energies[j],
                hi: energies[j + 1],
                index,
                parity: Parity::of_index(index),
            });
        }
    }
    Ok(brackets)
}

/// Bisection on the midpoint condition until the bracket is no wider than
/// the system's `e_prime_resolution`. Returns the bracket midpoint.
pub fn refine_eigenvalue(bracket: &Bracket, sys: &ScaledSystem) -> Result<f64> {
    let table = HalfTable::new(sys);
    let (lo, hi) = refine_with(&table, bracket, sys.e_prime_resolution)?;
    Ok(0.5 * (lo + hi))
}

fn refine_with(table: &HalfTable, bracket: &Bracket, width: f64) -> Result<(f64, f64)> {
    let n = bracket.index;
    let bad = || Error::InvalidBracket {
        lo: bracket.lo,
        hi: bracket.hi,
        index: n,
    };
    if bracket.parity != Parity::of_index(n) || bracket.lo.is_nan() || bracket.hi.is_nan() || bracket.lo >= bracket.hi {
        return Err(bad());
    }
    if count_at_or_below(table, bracket.lo)? > n || count_at_or_below(table, bracket.hi)? <= n {
        return Err(bad());
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_at_or_below(table, mid)? > n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Continues a bracket in double-double arithmetic. The f64 bracket is
/// widened first if the more precise counting function disagrees with it.
fn refine_extended(table: &HalfTable, lo: f64, hi: f64, index: usize) -> Result<TwoFloat> {
    let mut lo = TwoFloat::from(lo);
    let mut hi = TwoFloat::from(hi);
    let mut pad = (hi - lo).hi().max(f64::EPSILON * lo.hi().abs().max(1.0));
    let mut tries = 0;
    while count_at_or_below(table, lo)? > index && tries < 60 {
        lo -= pad;
        pad *= 2.0;
        tries += 1;
    }
    let mut pad = (hi - lo).hi();
    while count_at_or_below(table, hi)? <= index && tries < 120 {
        hi += pad;
        pad *= 2.0;
        tries += 1;
    }
    let scale = hi.hi().abs().max(1.0);
    for _ in 0..200 {
        if (hi - lo).hi() <= 1e-30 * scale {
            break;
        }
        let mid = (lo + hi) * 0.5;
        if mid <= lo || mid >= hi {
            break;
        }
        if count_at_or_below(table, mid)? > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) * 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub n: usize,
    pub parity: Parity,
    pub e_prime: f64,
    pub e_physical_ev: f64,
    /// `√(2 m E)/ħ`, 1/m.
    pub k_per_m: f64,
    /// Normalized samples on the system grid, `ψ(±L) = 0`.
    pub psi: Vec<f64>,
}

/// Builds the normalized eigenfunction for a refined eigenvalue: the
/// wall solution and the parity solution from the midpoint are matched
/// where both are largest, mirrored onto the full grid, and normalized
/// with Simpson's rule.
pub fn assemble_eigenpair(
    n: usize,
    e_prime: f64,
    parity: Parity,
    sys: &ScaledSystem,
) -> Result<EigenPair> {
    let table = HalfTable::new(sys);
    assemble_with(&table, sys, n, e_prime, e_prime, parity)
}

fn assemble_with<T: Real>(
    table: &HalfTable,
    sys: &ScaledSystem,
    n: usize,
    e: T,
    e_prime: f64,
    parity: Parity,
) -> Result<EigenPair> {
    let left = integrate_from_wall(table, e)?;
    let right = integrate_from_midpoint(table, e, parity == Parity::Even)?;
    let half = match_halves(&left, &right, table.mid);

    let len = sys.grid.len();
    let mid = table.mid;
    let mut psi = vec![0.0; len];
    psi[..=mid].copy_from_slice(&half);
    for j in 1..=mid {
        psi[mid + j] = parity.sign() * half[mid - j];
    }
    psi[0] = 0.0;
    psi[len - 1] = 0.0;
    if parity == Parity::Odd {
        psi[mid] = 0.0;
    }

    let norm = sys.grid.inner(&psi, &psi).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::NumericOverflow { u: 0.0 });
    }
    let peak = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let first = psi.iter().find(|v| v.abs() > 1e-6 * peak).copied().unwrap_or(1.0);
    let scale = first.signum() / norm;
    psi.iter_mut().for_each(|v| *v *= scale);

    let nodes = count_nodes(&psi);
    if nodes != n {
        return Err(Error::MisorderedSpectrum { index: n, nodes });
    }
    let energy = sys.physical_energy(e_prime);
    Ok(EigenPair {
        n,
        parity,
        e_prime,
        e_physical_ev: energy / EV,
        k_per_m: sys.wave_vector(e_prime),
        psi,
    })
}

/// Joins the two half-domain solutions at the sample where the product of
/// their magnitudes peaks and rescales the result to unit maximum.
fn match_halves(left: &Trajectory, right: &Trajectory, mid: usize) -> Vec<f64> {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..=mid {
        let score = left.log_norm(i) + right.log_norm(i);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    let (pl, fl) = (left.psi[best], left.phi[best]);
    let (pr, fr) = (right.psi[best], right.phi[best]);
    let ratio = (pl * pr + fl * fr) / (pl * pl + fl * fl);
    let shift = right.exp[best] - left.exp[best];

    let mut mant = Vec::with_capacity(mid + 1);
    let mut exps = Vec::with_capacity(mid + 1);
    for i in 0..=mid {
        if i <= best {
            mant.push(ratio * left.psi[i]);
            exps.push(left.exp[i] + shift);
        } else {
            mant.push(right.psi[i]);
            exps.push(right.exp[i]);
        }
    }
    let top = mant
        .iter()
        .zip(&exps)
        .filter(|(m, _)| **m != 0.0)
        .map(|(m, e)| m.abs().log2() + *e as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let top = top.round() as i64;
    mant.iter()
        .zip(&exps)
        .map(|(m, e)| {
            let k = (e - top).clamp(-2000, 0) as i32;
            m * 2f64.powi(k)
        })
        .collect()
}

/// Sign changes across the samples, skipping exact zeros.
pub fn count_nodes(samples: &[f64]) -> usize {
    let mut nodes = 0;
    let mut last = 0.0f64;
    for &v in samples {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            nodes += 1;
        }
        last = v.signum();
    }
    nodes
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub scan_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            scan_step: DEFAULT_SCAN_STEP,
        }
    }
}

/// The lowest eigenpairs of a scaled system, ordered by index.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub system: ScaledSystem,
    pub pairs: Vec<EigenPair>,
    /// Indices that were refined and reconstructed in double-double precision.
    pub extended: Vec<usize>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `⟨ψ_m, ψ_n⟩` by Simpson quadrature.
    pub fn overlap(&self, m: usize, n: usize) -> f64 {
        self.system.grid.inner(&self.pairs[m].psi, &self.pairs[n].psi)
    }

    pub fn e_primes(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.e_prime).collect()
    }
}

/// Computes the lowest `n_states` eigenpairs.
pub fn solve_spectrum(sys: &ScaledSystem, n_states: usize, opts: &SolveOptions) -> Result<Spectrum> {
    if n_states == 0 {
        return Err(invalid("n_states", "must be at least 1"));
    }
    let table = HalfTable::new(sys);
    // One extra level so the last requested one has a known upper neighbour.
    let wanted = n_states + 1;
    let brackets = find_brackets(&table, sys, wanted, opts.scan_step)?;

    let refined = brackets
        .par_iter()
        .map(|b| refine_with(&table, b, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = refined.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();

    let clustered: Vec<bool> = (0..n_states)
        .map(|n| {
            let up = values[n + 1] - values[n];
            let down = if n > 0 { values[n] - values[n - 1] } else { f64::INFINITY };
            up.min(down) < CLUSTER_GAP
        })
        .collect();

    let pairs = (0..n_states)
        .into_par_iter()
        .map(|n| {
            let parity = Parity::of_index(n);
            if clustered[n] {
                let (lo, hi) = refined[n];
                let e = refine_extended(&table, lo, hi, n)?;
                assemble_with(&table, sys, n, e, e.hi() + e.lo(), parity)
            } else {
                assemble_with(&table, sys, n, values[n], values[n], parity)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let extended = (0..n_states).filter(|&n| clustered[n]).collect();
    Ok(Spectrum {
        system: sys.clone(),
        pairs,
        extended,
    })
}

fn find_brackets(
    table: &HalfTable,
    sys: &ScaledSystem,
    wanted: usize,
    step: f64,
) -> Result<Vec<Bracket>> {
    // Free-box estimate of the highest wanted level, lifted by the potential maximum.
    let kmax = (wanted as f64 + 1.0) * std::f64::consts::PI / (2.0 * sys.half_width());
    let mut hi = (sys.potential_scale + kmax * kmax) * 1.1 + 10.0 * step;
    let mut lo = 0.0;
    let mut out = Vec::with_capacity(wanted);
    loop {
        let chunk = scan_with(table, lo, hi, step)?;
        out.extend(chunk.into_iter().filter(|b| b.index < wanted));
        if out.len() >= wanted {
            break;
        }
        if hi > 1e12 {
            return Err(invalid("n_states", format!("could not bracket {wanted} levels")));
        }
        lo = hi;
        hi *= 1.5;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{build_scaled_system, ParticleSpecies, PonderomotiveField};
    use std::f64::consts::PI;

    fn free_system(half_width: f64, h: f64) -> ScaledSystem {
        let field = PonderomotiveField {
            v0: 1e-22,
            k: 1e7,
            intensity: 1.0,
            a0: 1.0,
        };
        build_scaled_system(&field, &ParticleSpecies::electron(1.0), 500.0, half_width, h)
            .unwrap()
            .without_potential()
    }

    fn free_level(n: usize, half_width: f64) -> f64 {
        ((n as f64 + 1.0) * PI / (2.0 * half_width)).powi(2)
    }

    #[test]
    fn node_counter() {
        assert_eq!(count_nodes(&[0.0, 1.0, 0.0, -1.0, -2.0, 3.0, 0.0]), 2);
        assert_eq!(count_nodes(&[0.0, 0.0]), 0);
        assert_eq!(count_nodes(&[1.0, 2.0, 3.0]), 0);
    }

    #[test]
    fn empty_scan() {
        let sys = free_system(1.0, 1e-2);
        assert!(scan_spectrum(3.0, 3.0, 0.5, &sys).unwrap().is_empty());
        assert!(scan_spectrum(0.0, 1.0, 0.0, &sys).is_err());
    }

    #[test]
    fn scan_brackets_alternate() {
        let sys = free_system(1.0, 1e-3);
        let b = scan_spectrum(0.0, 200.0, 0.5, &sys).unwrap();
        // (nπ/2)² < 200 for n = 1..9
        assert_eq!(b.len(), 9);
        for (i, br) in b.iter().enumerate() {
            assert_eq!(br.index, i);
            assert_eq!(br.parity, Parity::of_index(i));
            let e = free_level(i, 1.0);
            assert!(br.lo < e && e <= br.hi);
        }
    }

    #[test]
    fn refinement_width_and_accuracy() {
        let sys = free_system(1.0, 1e-3);
        for b in scan_spectrum(0.0, 100.0, 0.5, &sys).unwrap() {
            let e = refine_eigenvalue(&b, &sys).unwrap();
            let exact = free_level(b.index, 1.0);
            assert!((e / exact - 1.0).abs() < 1e-9, "n = {}: {e} vs {exact}", b.index);
        }
    }

    #[test]
    fn bracket_without_crossing_is_rejected() {
        let sys = free_system(1.0, 1e-3);
        let b = Bracket {
            lo: 3.0,
            hi: 4.0,
            index: 0,
            parity: Parity::Even,
        };
        assert!(matches!(refine_eigenvalue(&b, &sys), Err(Error::InvalidBracket { .. })));
        let wrong_parity = Bracket {
            lo: 2.0,
            hi: 3.0,
            index: 0,
            parity: Parity::Odd,
        };
        assert!(refine_eigenvalue(&wrong_parity, &sys).is_err());
    }

    #[test]
    fn free_box_eigenfunctions_are_sines() {
        let sys = free_system(1.0, 1e-3);
        let basis = solve_spectrum(&sys, 6, &SolveOptions::default()).unwrap();
        let u = sys.grid.points();
        for p in &basis.pairs {
            let kn = (p.n as f64 + 1.0) * PI / 2.0;
            let mut exact: Vec<f64> = u.iter().map(|x| (kn * (x + 1.0)).sin()).collect();
            let norm = sys.grid.inner(&exact, &exact).sqrt();
            let sign = if p.psi[1] * exact[1] < 0.0 { -1.0 } else { 1.0 };
            exact.iter_mut().for_each(|v| *v *= sign / norm);
            let err = p.psi.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-7, "n = {}: sup error {err}", p.n);
        }
    }

    #[test]
    fn wrong_parity_is_detected_by_node_count() {
        let sys = free_system(1.0, 1e-3);
        let e1 = free_level(1, 1.0);
        assert!(assemble_eigenpair(1, e1, Parity::Odd, &sys).is_ok());
        assert!(matches!(
            assemble_eigenpair(2, e1, Parity::Odd, &sys),
            Err(Error::MisorderedSpectrum { .. })
        ));
    }
}
