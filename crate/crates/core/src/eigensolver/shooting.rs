//! Fourth-order Runge-Kutta integration of the scaled equation written as
//! the first-order pair `ψ' = φ`, `φ' = -(E' - V(u)) ψ`.
//!
//! Integration is generic over the working precision so that members of
//! tunnelling multiplets, whose splittings fall below f64 resolution, can
//! be refined and reconstructed in double-double arithmetic.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::physics::ScaledSystem;

/// Magnitude of `(ψ, φ)` above which the state is rescaled by `2^-500`.
pub const OVERFLOW_GUARD: f64 = 1e150;
const UNDERFLOW_GUARD: f64 = 1e-150;
const RESCALE_EXP: i32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingState {
    pub psi: f64,
    pub phi: f64,
}

impl ShootingState {
    pub fn new(psi: f64, phi: f64) -> Self {
        Self { psi, phi }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.phi.is_finite()
    }
}

/// One classical RK4 step of length `h` starting at `u`.
pub fn rk4_step(
    state: ShootingState,
    u: f64,
    h: f64,
    e_prime: f64,
    sys: &ScaledSystem,
) -> Result<ShootingState> {
    if !state.is_finite() {
        return Err(Error::NumericOverflow { u });
    }
    let q0 = e_prime - sys.potential(u);
    let qm = e_prime - sys.potential(u + 0.5 * h);
    let q1 = e_prime - sys.potential(u + h);
    let (psi, phi) = step(state.psi, state.phi, h, q0, qm, q1);
    let next = ShootingState { psi, phi };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NumericOverflow { u: u + h })
    }
}

/// Working precision of the shooting integrator.
pub(crate) trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn of(x: f64) -> Self;
    fn approx(self) -> f64;
}

impl Real for f64 {
    #[inline(always)]
    fn of(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn approx(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    #[inline(always)]
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }
    #[inline(always)]
    fn approx(self) -> f64 {
        f64::from(self)
    }
}

#[inline(always)]
fn step<T: Real>(psi: T, phi: T, h: f64, q0: T, qm: T, q1: T) -> (T, T) {
    let hh = 0.5 * h;
    let k1p = phi;
    let k1f = -(q0 * psi);
    let k2p = phi + k1f * hh;
    let k2f = -(qm * (psi + k1p * hh));
    let k3p = phi + k2f * hh;
    let k3f = -(qm * (psi + k2p * hh));
    let k4p = phi + k3f * h;
    let k4f = -(q1 * (psi + k3p * h));
    let h6 = h / 6.0;
    (
        psi + (k1p + (k2p + k3p) * 2.0 + k4p) * h6,
        phi + (k1f + (k2f + k3f) * 2.0 + k4f) * h6,
    )
}

/// Potential sampled at every half step of the left half `[-L, 0]`:
/// entry `2i` is `V(u_i)`, entry `2i + 1` is `V(u_i + h/2)`.
#[derive(Debug, Clone)]
pub(crate) struct HalfTable {
    pub values: Vec<f64>,
    pub h: f64,
    pub mid: usize,
}

impl HalfTable {
    pub fn new(sys: &ScaledSystem) -> Self {
        let grid = &sys.grid;
        let mid = grid.mid();
        let h = grid.step();
        let mut values = Vec::with_capacity(2 * mid + 1);
        for i in 0..mid {
            let u = grid.point(i);
            values.push(sys.potential(u));
            values.push(sys.potential(u + 0.5 * h));
        }
        values.push(sys.potential(0.0));
        Self { values, h, mid }
    }
}

/// Wavefunction and derivative at `u = 0` from a left-boundary shot,
/// with the sign-change count of `ψ` on `(-L, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointShot {
    pub psi0: f64,
    pub phi0: f64,
    /// Sign changes of `ψ` strictly inside `(-L, 0)`.
    pub zeros: usize,
    /// `log2` of the factor removed by renormalization.
    pub log2_scale: i64,
}

impl MidpointShot {
    /// `floor(2θ/π)` for the Prüfer angle `θ` at the midpoint, which equals
    /// the number of eigenvalues of the full box that are `<= E'`.
    pub fn eigenvalues_at_or_below(&self) -> usize {
        if self.psi0 == 0.0 {
            return 2 * (self.zeros + 1);
        }
        let s = if self.zeros.is_multiple_of(2) { 1.0 } else { -1.0 };
        2 * self.zeros + usize::from(s * self.phi0 <= 0.0)
    }
}

/// Integrates from `u = -L` with `ψ = 0`, `φ = 1` to the midpoint.
pub(crate) fn shoot<T: Real>(table: &HalfTable, e: T) -> Result<(T, T, usize, i64)> {
    let mut psi = T::of(0.0);
    let mut phi = T::of(1.0);
    let mut zeros = 0usize;
    let mut last_sign = 1.0f64;
    let mut log2_scale = 0i64;
    let v = &table.values;
    let h = table.h;
    for i in 0..table.mid {
        let q0 = e - v[2 * i];
        let qm = e - v[2 * i + 1];
        let q1 = e - v[2 * i + 2];
        (psi, phi) = step(psi, phi, h, q0, qm, q1);
        let p = psi.approx();
        let f = phi.approx();
        let mag = p.abs() + f.abs();
        if !mag.is_finite() {
            return Err(Error::NumericOverflow {
                u: -table.h * (table.mid - i - 1) as f64,
            });
        }
        if mag > OVERFLOW_GUARD {
            let s = (-RESCALE_EXP as f64).exp2();
            psi = psi * s;
            phi = phi * s;
            log2_scale += RESCALE_EXP as i64;
        } else if mag < UNDERFLOW_GUARD && mag > 0.0 {
            let s = (RESCALE_EXP as f64).exp2();
            psi = psi * s;
            phi = phi * s;
            log2_scale -= RESCALE_EXP as i64;
        }
        // A flip on the final step is a zero strictly before u = 0; an exact
        // zero at u = 0 is handled by the caller.
        if p != 0.0 {
            let sign = p.signum();
            if sign != last_sign {
                zeros += 1;
                last_sign = sign;
            }
        }
    }
    Ok((psi, phi, zeros, log2_scale))
}

/// Integrates `ψ(-L) = 0`, `φ(-L) = 1` to `u = 0` at `E'`.
pub fn shoot_to_midpoint(e_prime: f64, sys: &ScaledSystem) -> Result<MidpointShot> {
    let table = HalfTable::new(sys);
    midpoint_shot(&table, e_prime)
}

pub(crate) fn midpoint_shot(table: &HalfTable, e_prime: f64) -> Result<MidpointShot> {
    let (psi, phi, zeros, log2_scale) = shoot(table, e_prime)?;
    Ok(MidpointShot {
        psi0: psi,
        phi0: phi,
        zeros,
        log2_scale,
    })
}

/// Eigenvalue count `<= E` evaluated in the given precision.
pub(crate) fn count_at_or_below<T: Real>(table: &HalfTable, e: T) -> Result<usize> {
    let (psi, phi, zeros, log2_scale) = shoot(table, e)?;
    Ok(MidpointShot {
        psi0: psi.approx(),
        phi0: phi.approx(),
        zeros,
        log2_scale,
    }
    .eigenvalues_at_or_below())
}

/// Solution samples on the left half grid stored as mantissa and binary
/// exponent, `value = mantissa * 2^exp`.
pub(crate) struct Trajectory {
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub exp: Vec<i64>,
}

impl Trajectory {
    fn with_len(n: usize) -> Self {
        Self {
            psi: vec![0.0; n],
            phi: vec![0.0; n],
            exp: vec![0; n],
        }
    }

    /// `ln |(ψ, φ)|` at sample `i`.
    pub fn log_norm(&self, i: usize) -> f64 {
        let m = self.psi[i].hypot(self.phi[i]);
        m.ln() + self.exp[i] as f64 * std::f64::consts::LN_2
    }
}

fn record<T: Real>(traj: &mut Trajectory, i: usize, psi: &mut T, phi: &mut T, exp: &mut i64) {
    let mag = psi.approx().abs() + phi.approx().abs();
    if mag > OVERFLOW_GUARD {
        let s = (-RESCALE_EXP as f64).exp2();
        *psi = *psi * s;
        *phi = *phi * s;
        *exp += RESCALE_EXP as i64;
    } else if mag < UNDERFLOW_GUARD && mag > 0.0 {
        let s = (RESCALE_EXP as f64).exp2();
        *psi = *psi * s;
        *phi = *phi * s;
        *exp -= RESCALE_EXP as i64;
    }
    traj.psi[i] = psi.approx();
    traj.phi[i] = phi.approx();
    traj.exp[i] = *exp;
}

/// Left-boundary solution at every grid point of `[-L, 0]`.
pub(crate) fn integrate_from_wall<T: Real>(table: &HalfTable, e: T) -> Result<Trajectory> {
    let n = table.mid + 1;
    let mut traj = Trajectory::with_len(n);
    let mut psi = T::of(0.0);
    let mut phi = T::of(1.0);
    let mut exp = 0i64;
    record(&mut traj, 0, &mut psi, &mut phi, &mut exp);
    let v = &table.values;
    for i in 0..table.mid {
        let q0 = e - v[2 * i];
        let qm = e - v[2 * i + 1];
        let q1 = e - v[2 * i + 2];
        (psi, phi) = step(psi, phi, table.h, q0, qm, q1);
        record(&mut traj, i + 1, &mut psi, &mut phi, &mut exp);
        if !traj.psi[i + 1].is_finite() || !traj.phi[i + 1].is_finite() {
            return Err(Error::NumericOverflow { u: 0.0 });
        }
    }
    Ok(traj)
}

/// Solution leaving `u = 0` with the parity condition, integrated back to `-L`.
pub(crate) fn integrate_from_midpoint<T: Real>(
    table: &HalfTable,
    e: T,
    even: bool,
) -> Result<Trajectory> {
    let n = table.mid + 1;
    let mut traj = Trajectory::with_len(n);
    let (mut psi, mut phi) = if even {
        (T::of(1.0), T::of(0.0))
    } else {
        (T::of(0.0), T::of(1.0))
    };
    let mut exp = 0i64;
    record(&mut traj, table.mid, &mut psi, &mut phi, &mut exp);
    let v = &table.values;
    let h = -table.h;
    for i in (0..table.mid).rev() {
        let q0 = e - v[2 * i + 2];
        let qm = e - v[2 * i + 1];
        let q1 = e - v[2 * i];
        (psi, phi) = step(psi, phi, h, q0, qm, q1);
        record(&mut traj, i, &mut psi, &mut phi, &mut exp);
        if !traj.psi[i].is_finite() || !traj.phi[i].is_finite() {
            return Err(Error::NumericOverflow { u: -table.h * (table.mid - i) as f64 });
        }
    }
    Ok(traj)
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

    fn max_sine_error(h: f64) -> f64 {
        let sys = free_system(10.0, h);
        let steps = (PI / h).round() as usize;
        let h = PI / steps as f64;
        let mut s = ShootingState::new(0.0, 1.0);
        let mut err = 0.0f64;
        for i in 0..steps {
            let u = i as f64 * h;
            s = rk4_step(s, u, h, 1.0, &sys).unwrap();
            err = err.max((s.psi - (u + h).sin()).abs());
        }
        err
    }

    #[test]
    fn free_wave_matches_sine() {
        assert!(max_sine_error(1e-3) < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let ratio = max_sine_error(0.02) / max_sine_error(0.01);
        assert!(ratio >= 12.0, "ratio {ratio}");
    }

    #[test]
    fn zero_curvature_is_linear() {
        let sys = free_system(10.0, 0.5);
        let mut s = ShootingState::new(0.25, 2.0);
        for i in 0..8 {
            s = rk4_step(s, i as f64 * 0.5, 0.5, 0.0, &sys).unwrap();
            let u = (i + 1) as f64 * 0.5;
            assert!((s.psi - (0.25 + 2.0 * u)).abs() < 1e-14);
            assert_eq!(s.phi, 2.0);
        }
    }

    #[test]
    fn non_finite_state_is_an_error() {
        let sys = free_system(10.0, 0.5);
        let s = ShootingState::new(f64::NAN, 1.0);
        assert!(matches!(rk4_step(s, 0.0, 0.1, 1.0, &sys), Err(Error::NumericOverflow { .. })));
    }

    #[test]
    fn guard_keeps_deep_barrier_shots_finite() {
        // E' far below a tall barrier: exponential growth over the whole box.
        let mut sys = free_system(10.0, 1e-3);
        sys.potential_scale = 5e4;
        let shot = shoot_to_midpoint(1.0, &sys).unwrap();
        assert!(shot.psi0.is_finite() && shot.phi0.is_finite());
        assert!(shot.log2_scale > 0);
    }

    #[test]
    fn midpoint_counts_in_free_box() {
        // Free box of width 2L: E'_n = ((n + 1) π / 2L)².
        let sys = free_system(1.0, 1e-3);
        let level = |n: usize| ((n as f64 + 1.0) * PI / 2.0).powi(2);
        for n in 0..6 {
            let below = shoot_to_midpoint(level(n) - 1e-3, &sys).unwrap();
            let above = shoot_to_midpoint(level(n) + 1e-3, &sys).unwrap();
            assert_eq!(below.eigenvalues_at_or_below(), n);
            assert_eq!(above.eigenvalues_at_or_below(), n + 1);
            if n % 2 == 1 {
                assert!(below.psi0 * above.psi0 < 0.0, "odd level {n}: ψ(0) must change sign");
            } else {
                assert!(below.phi0 * above.phi0 < 0.0, "even level {n}: φ(0) must change sign");
            }
        }
    }

    #[test]
    fn double_double_agrees_with_f64_away_from_levels() {
        let sys = free_system(10.0, 1e-3);
        let table = HalfTable::new(&sys);
        let (p64, f64v, z64, _) = shoot(&table, 3.7).unwrap();
        let (pdd, fdd, zdd, _) = shoot(&table, TwoFloat::from(3.7)).unwrap();
        assert_eq!(z64, zdd);
        assert!((p64 - pdd.approx()).abs() < 1e-9);
        assert!((f64v - fdd.approx()).abs() < 1e-9);
    }
}
