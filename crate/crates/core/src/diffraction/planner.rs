use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_all;
use crate::constants::{HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{invalid, Result};
use crate::physics::{interaction_time, ponderomotive_strength, LaserConfig, ParticleSpecies};

/// Orders reported in a plan, `m = 0..=4`.
pub const PLANNED_ORDERS: usize = 5;

/// Which Planck constant enters the matter wavelength of the fringe-width
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FringeConvention {
    /// `λ = ħ / p`
    #[default]
    Hbar,
    /// `λ = h / p`
    H,
}

/// `J_|m|(β)²`.
pub fn order_probability(m: i64, beta_int: f64) -> Result<f64> {
    if !(beta_int >= 0.0 && beta_int.is_finite()) {
        return Err(invalid("beta_int", format!("must be non-negative, got {beta_int}")));
    }
    let m = m.unsigned_abs() as usize;
    let j = bessel_j_all(m, beta_int)[m];
    Ok(j * j)
}

/// `J_m(β)²` for `m = 0..=m_max`.
pub fn order_probabilities(m_max: usize, beta_int: f64) -> Result<Vec<f64>> {
    order_probability(0, beta_int)?;
    Ok(bessel_j_all(m_max, beta_int).into_iter().map(|j| j * j).collect())
}

/// `β d`, which does not depend on the waist.
fn beta_times_waist(laser: &LaserConfig, species: &ParticleSpecies) -> f64 {
    let q = species.charge_magnitude;
    let c3 = SPEED_OF_LIGHT.powi(3);
    q * q * laser.wavelength * laser.wavelength * laser.peak_power()
        / (2.0 * PI.powi(3) * VACUUM_PERMITTIVITY * c3 * HBAR)
        / species.momentum()
}

/// `β = e² λ² P / (2π³ ε0 c³ ħ d √(2 m E_i))`.
pub fn interaction_strength(laser: &LaserConfig, species: &ParticleSpecies) -> Result<f64> {
    laser.validate()?;
    species.validate()?;
    Ok(beta_times_waist(laser, species) / laser.waist_d)
}

/// `β = V0 τ / ħ` from the depth of the potential and the transit time.
pub fn interaction_strength_from_depth(laser: &LaserConfig, species: &ParticleSpecies) -> Result<f64> {
    let field = ponderomotive_strength(laser, species)?;
    Ok(field.v0 * interaction_time(laser, species) / HBAR)
}

/// Waist at which `β = 1`; the configured waist is ignored.
pub fn waist_for_unit_beta(laser: &LaserConfig, species: &ParticleSpecies) -> Result<f64> {
    laser.validate()?;
    species.validate()?;
    Ok(beta_times_waist(laser, species))
}

pub fn de_broglie_wavelength(species: &ParticleSpecies, convention: FringeConvention) -> f64 {
    let hbar_like = match convention {
        FringeConvention::Hbar => HBAR,
        FringeConvention::H => 2.0 * PI * HBAR,
    };
    hbar_like / species.momentum()
}

/// `W = 2 λ_dB D / λ`.
pub fn fringe_width(
    species: &ParticleSpecies,
    laser: &LaserConfig,
    convention: FringeConvention,
) -> Result<f64> {
    laser.validate()?;
    species.validate()?;
    Ok(2.0 * de_broglie_wavelength(species, convention) * laser.detector_distance_d / laser.wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Laser waist `d`, m.
    WaistD,
    /// Incident energy, eV.
    IncidentEnergy,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::WaistD => "waist_d_m",
            SweepParameter::IncidentEnergy => "incident_energy_ev",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub beta_int: f64,
    pub fringe_width: f64,
    pub order_probs: Vec<f64>,
}

/// Evenly spaced values from `start` to `stop`; a single value when `count == 1`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

pub fn sweep(
    parameter: SweepParameter,
    values: &[f64],
    laser: &LaserConfig,
    species: &ParticleSpecies,
    convention: FringeConvention,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid("sweep.count", "sweep range is empty"));
    }
    values
        .par_iter()
        .map(|&value| {
            let (laser, species) = match parameter {
                SweepParameter::WaistD => (laser.with_waist(value), species.clone()),
                SweepParameter::IncidentEnergy => (laser.clone(), species.with_energy(value)),
            };
            let beta_int = interaction_strength(&laser, &species)?;
            Ok(SweepRow {
                value,
                beta_int,
                fringe_width: fringe_width(&species, &laser, convention)?,
                order_probs: order_probabilities(PLANNED_ORDERS - 1, beta_int)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub species: String,
    pub incident_energy_ev: f64,
    pub beta_int: f64,
    /// s
    pub tau: f64,
    pub v0_ev: f64,
    /// `J_m(β)²`, `m = 0..=4`.
    pub order_probs: Vec<f64>,
    /// m
    pub fringe_width_w: f64,
    /// Waist giving `β = 1`, m.
    pub recommended_waist_d: f64,
    /// m
    pub detector_step: f64,
    pub convention: FringeConvention,
    pub tau_ps: f64,
    pub fringe_width_um: f64,
    pub recommended_waist_um: f64,
    pub detector_step_um: f64,
}

/// Detector sampling: ten steps per fringe.
pub const STEPS_PER_FRINGE: f64 = 10.0;

pub fn plan(laser: &LaserConfig, species: &ParticleSpecies, convention: FringeConvention) -> Result<PlanReport> {
    let beta_int = interaction_strength(laser, species)?;
    let tau = interaction_time(laser, species);
    let field = ponderomotive_strength(laser, species)?;
    let w = fringe_width(species, laser, convention)?;
    let d = waist_for_unit_beta(laser, species)?;
    let step = w / STEPS_PER_FRINGE;
    Ok(PlanReport {
        species: species.label.clone(),
        incident_energy_ev: species.incident_energy_ev,
        beta_int,
        tau,
        v0_ev: field.v0_ev(),
        order_probs: order_probabilities(PLANNED_ORDERS - 1, beta_int)?,
        fringe_width_w: w,
        recommended_waist_d: d,
        detector_step: step,
        convention,
        tau_ps: tau * 1e12,
        fringe_width_um: w * 1e6,
        recommended_waist_um: d * 1e6,
        detector_step_um: step * 1e6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn proton_laser() -> (LaserConfig, ParticleSpecies) {
        (LaserConfig::default().with_waist(560e-6), ParticleSpecies::proton(50.0))
    }

    #[test]
    fn probabilities_at_zero_coupling() {
        assert_eq!(order_probability(0, 0.0).unwrap(), 1.0);
        for m in 1..5 {
            assert_eq!(order_probability(m, 0.0).unwrap(), 0.0);
        }
        assert!(order_probability(0, -1.0).is_err());
        assert_eq!(order_probability(-3, 2.0).unwrap(), order_probability(3, 2.0).unwrap());
    }

    #[test]
    fn proton_design_point() {
        let (laser, p) = proton_laser();
        let beta = interaction_strength(&laser, &p).unwrap();
        assert!((beta - 1.0).abs() < 0.05, "beta {beta}");
        let d = waist_for_unit_beta(&laser, &p).unwrap();
        assert!((d / 560e-6 - 1.0).abs() < 0.05, "d {d}");
        let beta_at_d = interaction_strength(&laser.with_waist(d), &p).unwrap();
        assert!((beta_at_d - 1.0).abs() < 1e-10);
    }

    #[test]
    fn waist_scales_as_inverse_root_energy() {
        let (laser, p) = proton_laser();
        let d1 = waist_for_unit_beta(&laser, &p).unwrap();
        let d4 = waist_for_unit_beta(&laser, &p.with_energy(200.0)).unwrap();
        assert!((d4 / d1 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_pulse_energy_gives_zero_beta() {
        let (mut laser, p) = proton_laser();
        laser.pulse_energy = 0.0;
        assert_eq!(interaction_strength(&laser, &p).unwrap(), 0.0);
    }

    #[test]
    fn fringe_widths() {
        let laser = LaserConfig::default();
        let w = fringe_width(&ParticleSpecies::proton(50.0), &laser, FringeConvention::Hbar).unwrap();
        assert!(w > 1e-6 && w < 1e-5, "W = {w}");
        let wh = fringe_width(&ParticleSpecies::proton(50.0), &laser, FringeConvention::H).unwrap();
        assert!((wh / w - 2.0 * PI).abs() < 1e-12);
        let w2 = fringe_width(&ParticleSpecies::proton(100.0), &laser, FringeConvention::Hbar).unwrap();
        assert!((w / w2 - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn helium_fringes_are_narrower() {
        let laser = LaserConfig::default();
        let (h, he) = (ParticleSpecies::proton(1.0), ParticleSpecies::helium_ion(1.0));
        let ratio_exact = (h.mass / he.mass).sqrt();
        for e in [10.0, 50.0, 120.0, 500.0] {
            let wh = fringe_width(&h.with_energy(e), &laser, FringeConvention::Hbar).unwrap();
            let whe = fringe_width(&he.with_energy(e), &laser, FringeConvention::Hbar).unwrap();
            assert!(whe < wh);
            assert!((whe / wh / ratio_exact - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn waist_sweep_crosses_unity() {
        let (laser, p) = proton_laser();
        let rows = sweep(SweepParameter::WaistD, &linspace(100e-6, 2e-3, 200), &laser, &p, FringeConvention::Hbar)
            .unwrap();
        assert!(rows.windows(2).all(|w| w[1].beta_int < w[0].beta_int));
        let cross = rows.windows(2).find(|w| w[0].beta_int >= 1.0 && w[1].beta_int < 1.0).unwrap();
        assert!((cross[0].value / 560e-6 - 1.0).abs() < 0.05);
    }

    #[test]
    fn energy_sweep_narrows_fringes() {
        let laser = LaserConfig::default();
        for s in [ParticleSpecies::proton(1.0), ParticleSpecies::helium_ion(1.0)] {
            let rows = sweep(SweepParameter::IncidentEnergy, &linspace(10.0, 500.0, 50), &laser, &s, FringeConvention::Hbar)
                .unwrap();
            assert!(rows.windows(2).all(|w| w[1].fringe_width < w[0].fringe_width));
        }
    }

    #[test]
    fn single_point_sweep_matches_direct_calls() {
        let (laser, p) = proton_laser();
        let rows = sweep(SweepParameter::WaistD, &linspace(3e-4, 9e-4, 1), &laser, &p, FringeConvention::Hbar).unwrap();
        assert_eq!(rows.len(), 1);
        let direct = interaction_strength(&laser.with_waist(3e-4), &p).unwrap();
        assert_eq!(rows[0].beta_int, direct);
        assert_eq!(rows[0].order_probs[2], order_probability(2, direct).unwrap());
    }

    #[test]
    fn plan_report_fields() {
        let (laser, p) = proton_laser();
        let r = plan(&laser, &p, FringeConvention::Hbar).unwrap();
        assert!((r.recommended_waist_d / 5.6e-4 - 1.0).abs() < 0.05);
        assert_eq!(r.order_probs.len(), PLANNED_ORDERS);
        assert!(r.order_probs.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!((r.detector_step * 10.0 - r.fringe_width_w).abs() < 1e-20);
    }

    proptest! {
        #[test]
        fn closed_form_agrees_with_depth_times_time(
            wavelength in 200e-9f64..2e-6,
            energy in 1e-3f64..1.0,
            width in 1e-9f64..1e-7,
            waist in 1e-5f64..1e-3,
            ei in 1.0f64..1e4,
            species in 0usize..3,
        ) {
            let laser = LaserConfig {
                wavelength,
                pulse_energy: energy,
                pulse_width: width,
                waist_d: waist,
                ..LaserConfig::default()
            };
            let s = match species {
                0 => ParticleSpecies::electron(ei),
                1 => ParticleSpecies::proton(ei),
                _ => ParticleSpecies::helium_ion(ei),
            };
            let a = interaction_strength(&laser, &s).unwrap();
            let b = interaction_strength_from_depth(&laser, &s).unwrap();
            prop_assert!((a / b - 1.0).abs() < 0.02);
        }

        #[test]
        fn beta_decreases_with_waist_and_energy(
            d1 in 1e-5f64..1e-3, f in 1.01f64..10.0, e1 in 1.0f64..1e3,
        ) {
            let laser = LaserConfig::default();
            let p = ParticleSpecies::proton(e1);
            let b = |d: f64, e: f64| interaction_strength(&laser.with_waist(d), &p.with_energy(e)).unwrap();
            prop_assert!(b(d1 * f, e1) < b(d1, e1));
            prop_assert!(b(d1, e1 * f) < b(d1, e1));
        }
    }
}
