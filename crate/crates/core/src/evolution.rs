//! Wave-packet propagation in the box eigenbasis.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constants::HBAR;
use crate::eigensolver::Spectrum;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

pub const DEFAULT_SIGMA: f64 = 0.07;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialPacket {
    pub sigma: f64,
    pub u0: f64,
    pub grid: Grid,
    pub samples: Vec<Complex64>,
}

/// Normalized Gaussian `exp(-(u - u0)² / (2σ²))` on the grid.
pub fn make_gaussian(sigma: f64, u0: f64, grid: &Grid) -> Result<InitialPacket> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let l = grid.half_width();
    if !(u0 > -l && u0 < l) {
        return Err(invalid("u0", format!("must lie inside (-{l}, {l}), got {u0}")));
    }
    let u = grid.points();
    let points = u.iter().filter(|x| (*x - u0).abs() <= 3.0 * sigma).count();
    if points < 10 {
        return Err(Error::UnderResolvedPacket { points });
    }
    let mut re: Vec<f64> = u
        .iter()
        .map(|x| (-(x - u0) * (x - u0) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm = grid.inner(&re, &re).sqrt();
    re.iter_mut().for_each(|v| *v /= norm);
    Ok(InitialPacket {
        sigma,
        u0,
        grid: grid.clone(),
        samples: re.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    })
}

impl InitialPacket {
    pub fn norm_squared(&self) -> f64 {
        self.grid.integrate(&self.samples.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>())
    }

    /// `⟨(u - u0)²⟩` under `|ψ|²`; `σ²/2` for the Gaussian amplitude.
    pub fn second_moment(&self) -> f64 {
        let f: Vec<f64> = self
            .grid
            .points()
            .iter()
            .zip(&self.samples)
            .map(|(u, c)| (u - self.u0).powi(2) * c.norm_sqr())
            .collect();
        self.grid.integrate(&f) / self.norm_squared()
    }
}

/// Expansion coefficients `c_n` at absolute time `t` (s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub coeffs: Vec<Complex64>,
    pub basis_id: String,
    pub t: f64,
}

impl SpectralState {
    /// `Σ |c_n|²`.
    pub fn weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Short fingerprint of a basis: grid, scales and eigenvalues.
pub fn basis_id(basis: &Spectrum) -> String {
    let sys = &basis.system;
    let mut h = Sha256::new();
    for v in [sys.a, sys.alpha, sys.osc_const, sys.half_width(), sys.step(), sys.potential_scale, sys.v0, sys.mass] {
        h.update(v.to_le_bytes());
    }
    for p in &basis.pairs {
        h.update(p.e_prime.to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// `c_n = ∫ ψ_n(u) ψ_e(u, 0) du`, stamped `t = 0`.
pub fn project(packet: &InitialPacket, basis: &Spectrum) -> Result<SpectralState> {
    let grid = &basis.system.grid;
    if !packet.grid.same_as(grid) || packet.samples.len() != grid.len() {
        return Err(Error::IncompatibleGrid(format!(
            "packet has {} points with step {}, basis has {} with step {}",
            packet.samples.len(),
            packet.grid.step(),
            grid.len(),
            grid.step()
        )));
    }
    let re: Vec<f64> = packet.samples.iter().map(|c| c.re).collect();
    let im: Vec<f64> = packet.samples.iter().map(|c| c.im).collect();
    let has_im = im.iter().any(|v| *v != 0.0);
    let coeffs = basis
        .pairs
        .par_iter()
        .map(|p| {
            let r = grid.inner(&p.psi, &re);
            let i = if has_im { grid.inner(&p.psi, &im) } else { 0.0 };
            Complex64::new(r, i)
        })
        .collect();
    Ok(SpectralState {
        coeffs,
        basis_id: basis_id(basis),
        t: 0.0,
    })
}

/// Advances the state to absolute time `t`:
/// `c_n(t) = c_n(t_s) exp(-i E_n (t - t_s) / ħ)`.
pub fn evolve(state: &SpectralState, t: f64, basis: &Spectrum) -> Result<SpectralState> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be non-negative, got {t}")));
    }
    check_size(state, basis)?;
    let dt = t - state.t;
    let coeffs = state
        .coeffs
        .iter()
        .zip(&basis.pairs)
        .map(|(c, p)| {
            let phase = basis.system.physical_energy(p.e_prime) * dt / HBAR;
            c * Complex64::from_polar(1.0, -phase)
        })
        .collect();
    Ok(SpectralState {
        coeffs,
        basis_id: state.basis_id.clone(),
        t,
    })
}

/// `Σ |c_n|² E_n`, J.
pub fn energy_expectation(state: &SpectralState, basis: &Spectrum) -> f64 {
    state
        .coeffs
        .iter()
        .zip(&basis.pairs)
        .map(|(c, p)| c.norm_sqr() * basis.system.physical_energy(p.e_prime))
        .sum()
}

fn check_size(state: &SpectralState, basis: &Spectrum) -> Result<()> {
    if state.coeffs.len() > basis.len() {
        return Err(Error::IncompatibleGrid(format!(
            "{} coefficients for a basis of {} states",
            state.coeffs.len(),
            basis.len()
        )));
    }
    Ok(())
}

/// `ψ_e(u, t) = Σ c_n ψ_n(u)` on the basis grid.
pub fn reconstruct(state: &SpectralState, basis: &Spectrum) -> Result<Vec<Complex64>> {
    check_size(state, basis)?;
    let len = basis.system.grid.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    out.par_chunks_mut(1024).enumerate().for_each(|(k, chunk)| {
        let start = k * 1024;
        for (c, p) in state.coeffs.iter().zip(&basis.pairs) {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for (j, v) in chunk.iter_mut().enumerate() {
                *v += c * p.psi[start + j];
            }
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub u: Vec<f64>,
    pub rho: Vec<f64>,
    pub t: f64,
    pub step: f64,
}

impl DensityProfile {
    /// `∫ ρ du` by Simpson's rule.
    pub fn norm(&self) -> f64 {
        crate::grid::simpson(&self.rho, self.step)
    }

    /// `max |ρ(u) - ρ(-u)|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.rho.len();
        (0..n / 2)
            .map(|j| (self.rho[j] - self.rho[n - 1 - j]).abs())
            .fold(0.0, f64::max)
    }
}

/// `ρ(u, t) = |ψ_e(u, t)|²`.
pub fn density(state: &SpectralState, basis: &Spectrum) -> Result<DensityProfile> {
    let psi = reconstruct(state, basis)?;
    Ok(DensityProfile {
        u: basis.system.grid.points(),
        rho: psi.iter().map(|c| c.norm_sqr()).collect(),
        t: state.t,
        step: basis.system.step(),
    })
}

/// Partial completeness sum `g_N(u) = Σ_{n<N} ψ_n(u) ψ_n(u0)`, with
/// `ψ_n(u0)` taken at the grid sample nearest `u0`.
pub fn completeness_kernel(u0: f64, n: usize, basis: &Spectrum) -> Result<Vec<f64>> {
    if n == 0 || n > basis.len() {
        return Err(invalid("N", format!("must be in 1..={}, got {n}", basis.len())));
    }
    let grid = &basis.system.grid;
    let l = grid.half_width();
    if u0.is_nan() || u0.abs() > l {
        return Err(invalid("u0", format!("must lie in [-{l}, {l}], got {u0}")));
    }
    let i0 = ((u0 + l) / grid.step()).round() as usize;
    let mut g = vec![0.0; grid.len()];
    for p in &basis.pairs[..n] {
        let w = p.psi[i0];
        g.iter_mut().zip(&p.psi).for_each(|(a, b)| *a += w * b);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve_spectrum, SolveOptions};
    use crate::physics::{build_scaled_system, ParticleSpecies, PonderomotiveField};
    use std::f64::consts::PI;

    fn field() -> PonderomotiveField {
        PonderomotiveField {
            v0: 1e-22,
            k: 1e7,
            intensity: 1.0,
            a0: 1.0,
        }
    }

    // Free box on [-1, 1]: levels are known exactly, so the basis is cheap.
    fn free_basis(n: usize) -> Spectrum {
        free_basis_with_step(n, 1e-3)
    }

    fn free_basis_with_step(n: usize, h: f64) -> Spectrum {
        let sys = build_scaled_system(&field(), &ParticleSpecies::electron(1.0), 500.0, 1.0, h)
            .unwrap()
            .without_potential();
        solve_spectrum(&sys, n, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn gaussian_is_normalized_and_even() {
        let g = Grid::new(10.0, 1e-3).unwrap();
        let p = make_gaussian(0.07, 0.0, &g).unwrap();
        assert!((p.norm_squared() - 1.0).abs() < 1e-8);
        let m = g.mid();
        let peak = p.samples.iter().map(|c| c.re).fold(0.0, f64::max);
        assert_eq!(p.samples[m].re, peak);
        for j in 0..m {
            assert_eq!(p.samples[m + j], p.samples[m - j]);
        }
    }

    #[test]
    fn gaussian_second_moment() {
        let g = Grid::new(10.0, 1e-3).unwrap();
        let p = make_gaussian(0.5, 0.3, &g).unwrap();
        assert!((p.second_moment() / 0.125 - 1.0).abs() < 1e-2);
        // The amplitude itself, read as a weight, has variance σ².
        let w: Vec<f64> = p.samples.iter().map(|c| c.re).collect();
        let m2: Vec<f64> = g.points().iter().zip(&w).map(|(u, v)| (u - 0.3).powi(2) * v).collect();
        assert!((g.integrate(&m2) / g.integrate(&w) / 0.25 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn gaussian_errors() {
        let g = Grid::new(10.0, 1e-3).unwrap();
        assert!(matches!(make_gaussian(1e-3, 0.0, &g), Err(Error::UnderResolvedPacket { .. })));
        assert!(make_gaussian(0.0, 0.0, &g).is_err());
        assert!(make_gaussian(0.1, 10.0, &g).is_err());
    }

    #[test]
    fn projection_of_basis_member_is_a_unit_vector() {
        let basis = free_basis(20);
        let packet = InitialPacket {
            sigma: 1.0,
            u0: 0.0,
            grid: basis.system.grid.clone(),
            samples: basis.pairs[7].psi.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        };
        let s = project(&packet, &basis).unwrap();
        for (n, c) in s.coeffs.iter().enumerate() {
            let expect = if n == 7 { 1.0 } else { 0.0 };
            assert!((c - expect).norm() < 1e-6, "c_{n} = {c}");
        }
    }

    #[test]
    fn even_packet_has_no_odd_components() {
        let basis = free_basis(40);
        let packet = make_gaussian(0.1, 0.0, &basis.system.grid).unwrap();
        let s = project(&packet, &basis).unwrap();
        for (n, c) in s.coeffs.iter().enumerate().filter(|(n, _)| n % 2 == 1) {
            assert!(c.norm() < 1e-12, "c_{n} = {c}");
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let basis = free_basis(4);
        let packet = make_gaussian(0.1, 0.0, &Grid::new(1.0, 2e-3).unwrap()).unwrap();
        assert!(matches!(project(&packet, &basis), Err(Error::IncompatibleGrid(_))));
    }

    #[test]
    fn free_box_phases_match_analytic_levels() {
        let basis = free_basis(10);
        let packet = make_gaussian(0.2, 0.1, &basis.system.grid).unwrap();
        let s0 = project(&packet, &basis).unwrap();
        let t = 3e-13;
        let s = evolve(&s0, t, &basis).unwrap();
        let unit = basis.system.energy_unit();
        for (n, (a, b)) in s0.coeffs.iter().zip(&s.coeffs).enumerate() {
            let e = unit * ((n as f64 + 1.0) * PI / 2.0).powi(2);
            let expect = a * Complex64::from_polar(1.0, -e * t / HBAR);
            assert!((b - expect).norm() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn evolution_identity_and_group_property() {
        let basis = free_basis(30);
        let packet = make_gaussian(0.15, 0.2, &basis.system.grid).unwrap();
        let s0 = project(&packet, &basis).unwrap();
        assert_eq!(evolve(&s0, 0.0, &basis).unwrap().coeffs, s0.coeffs);

        let (t1, t2) = (2.5e-13, 7e-13);
        let direct = evolve(&s0, t2, &basis).unwrap();
        let staged = evolve(&evolve(&s0, t1, &basis).unwrap(), t2, &basis).unwrap();
        for (a, b) in direct.coeffs.iter().zip(&staged.coeffs) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!((direct.weight() - s0.weight()).abs() < 1e-14);
        let e0 = energy_expectation(&s0, &basis);
        assert!((energy_expectation(&direct, &basis) / e0 - 1.0).abs() < 1e-14);
        assert!(evolve(&s0, -1.0, &basis).is_err());
    }

    #[test]
    fn reconstruction_at_time_zero() {
        // Fine enough that the RK4 eigenfunctions reproduce the packet to 1e-8.
        let basis = free_basis_with_step(120, 2.5e-4);
        let packet = make_gaussian(0.15, 0.0, &basis.system.grid).unwrap();
        let s = project(&packet, &basis).unwrap();
        let psi = reconstruct(&s, &basis).unwrap();
        let err = psi
            .iter()
            .zip(&packet.samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err < 1e-8, "sup error {err}");
        let rho = density(&s, &basis).unwrap();
        assert!((rho.norm() - s.weight()).abs() < 1e-6);
        assert!(rho.asymmetry() < 1e-12);
    }

    #[test]
    fn kernel_basics() {
        let basis = free_basis(60);
        let g1 = completeness_kernel(0.0, 1, &basis).unwrap();
        let m = basis.system.grid.mid();
        let p0 = &basis.pairs[0].psi;
        for (a, b) in g1.iter().zip(p0) {
            assert_eq!(*a, b * p0[m]);
        }
        let u0 = 0.3;
        let g = completeness_kernel(u0, 60, &basis).unwrap();
        let i0 = ((u0 + 1.0) / basis.system.step()).round() as usize;
        let repro = basis.system.grid.inner(&g, &basis.pairs[3].psi);
        assert!((repro - basis.pairs[3].psi[i0]).abs() < 1e-3);
        assert!(completeness_kernel(0.0, 0, &basis).is_err());
        assert!(completeness_kernel(0.0, 61, &basis).is_err());
    }
}
