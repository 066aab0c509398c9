//! Laser and particle parameters, the ponderomotive potential they produce,
//! and the dimensionless system handed to the eigensolver.
//!
//! All quantities are SI internally; energies are converted to eV only at
//! the edges (`*_ev` accessors and output files).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{
    ELECTRON_MASS, ELEMENTARY_CHARGE, EV, HBAR, HELIUM4_ION_MASS, PROTON_MASS, SPEED_OF_LIGHT,
    VACUUM_PERMITTIVITY,
};
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Speed of the electrons in the reference run: 125 µm crossed in 0.8 ps.
pub const REFERENCE_ELECTRON_SPEED: f64 = 1.5625e8;

/// Two counter-propagating pulsed beams focused to a waist `waist_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserConfig {
    /// m
    pub wavelength: f64,
    /// J per pulse
    pub pulse_energy: f64,
    /// s
    pub pulse_width: f64,
    /// Beam waist at the interaction region, m.
    pub waist_d: f64,
    /// Coefficient `a` of the focusing parabola `x² = 4a(z - d/2)`, m.
    pub curvature_a: f64,
    /// Distance from the interaction region to the detector, m.
    pub detector_distance_d: f64,
}

impl Default for LaserConfig {
    /// Frequency-doubled Nd:YAG, 0.2 J in 10 ns, focused to 125 µm.
    fn default() -> Self {
        Self {
            wavelength: 532e-9,
            pulse_energy: 0.2,
            pulse_width: 10e-9,
            waist_d: 125e-6,
            curvature_a: 3.4e-3,
            detector_distance_d: 1.0,
        }
    }
}

impl LaserConfig {
    pub fn validate(&self) -> Result<()> {
        positive("laser.wavelength", self.wavelength)?;
        positive("laser.pulse_width", self.pulse_width)?;
        positive("laser.waist_d", self.waist_d)?;
        positive("laser.curvature_a", self.curvature_a)?;
        positive("laser.detector_distance_d", self.detector_distance_d)?;
        if !(self.pulse_energy >= 0.0 && self.pulse_energy.is_finite()) {
            return Err(invalid(
                "laser.pulse_energy",
                format!("must be non-negative, got {}", self.pulse_energy),
            ));
        }
        Ok(())
    }

    /// Pulse energy over pulse width, W.
    pub fn peak_power(&self) -> f64 {
        self.pulse_energy / self.pulse_width
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }

    /// On-axis intensity at the focus, `4P / (π d²)`.
    pub fn peak_intensity(&self) -> f64 {
        4.0 * self.peak_power() / (PI * self.waist_d * self.waist_d)
    }

    pub fn with_waist(&self, waist_d: f64) -> Self {
        Self {
            waist_d,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpecies {
    pub label: String,
    /// kg
    pub mass: f64,
    /// C
    pub charge_magnitude: f64,
    /// Kinetic energy of the incoming beam, eV.
    pub incident_energy_ev: f64,
}

impl ParticleSpecies {
    pub fn electron(incident_energy_ev: f64) -> Self {
        Self::new("electron", ELECTRON_MASS, incident_energy_ev)
    }

    pub fn proton(incident_energy_ev: f64) -> Self {
        Self::new("H+", PROTON_MASS, incident_energy_ev)
    }

    pub fn helium_ion(incident_energy_ev: f64) -> Self {
        Self::new("He+", HELIUM4_ION_MASS, incident_energy_ev)
    }

    /// Electron whose non-relativistic speed is [`REFERENCE_ELECTRON_SPEED`].
    pub fn reference_electron() -> Self {
        Self::electron(energy_for_speed(ELECTRON_MASS, REFERENCE_ELECTRON_SPEED) / EV)
    }

    /// Looks up a known species by label (`electron`/`e-`, `H+`/`proton`, `He+`).
    pub fn from_label(label: &str, incident_energy_ev: f64) -> Result<Self> {
        match label.trim() {
            "electron" | "e-" | "e" => Ok(Self::electron(incident_energy_ev)),
            "H+" | "proton" | "p" => Ok(Self::proton(incident_energy_ev)),
            "He+" | "helium+" => Ok(Self::helium_ion(incident_energy_ev)),
            other => Err(Error::Config {
                key: "species.label".into(),
                reason: format!("unknown species `{other}` (expected electron, H+ or He+)"),
            }),
        }
    }

    fn new(label: &str, mass: f64, incident_energy_ev: f64) -> Self {
        Self {
            label: label.to_string(),
            mass,
            charge_magnitude: ELEMENTARY_CHARGE,
            incident_energy_ev,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("species.mass", self.mass)?;
        positive("species.charge_magnitude", self.charge_magnitude)?;
        positive("species.incident_energy_ev", self.incident_energy_ev)?;
        Ok(())
    }

    pub fn incident_energy(&self) -> f64 {
        self.incident_energy_ev * EV
    }

    /// Non-relativistic speed `√(2E/m)`.
    pub fn speed(&self) -> f64 {
        (2.0 * self.incident_energy() / self.mass).sqrt()
    }

    pub fn momentum(&self) -> f64 {
        (2.0 * self.mass * self.incident_energy()).sqrt()
    }

    pub fn with_energy(&self, incident_energy_ev: f64) -> Self {
        Self {
            incident_energy_ev,
            ..self.clone()
        }
    }
}

/// Kinetic energy (J) of a particle of mass `mass` moving at `speed`.
pub fn energy_for_speed(mass: f64, speed: f64) -> f64 {
    0.5 * mass * speed * speed
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PonderomotiveField {
    /// Potential depth, J.
    pub v0: f64,
    /// Laser wavenumber, 1/m.
    pub k: f64,
    /// W/m²
    pub intensity: f64,
    /// Vector-potential amplitude, V·s/m.
    pub a0: f64,
}

impl PonderomotiveField {
    pub fn v0_ev(&self) -> f64 {
        self.v0 / EV
    }

    /// `V0 cos²(kx)`, J.
    pub fn potential(&self, x: f64) -> f64 {
        let c = (self.k * x).cos();
        self.v0 * c * c
    }
}

/// Depth of the cycle-averaged potential `V0 = e² I / (2 m ε0 c ω²)` at the focus.
pub fn ponderomotive_strength(
    laser: &LaserConfig,
    species: &ParticleSpecies,
) -> Result<PonderomotiveField> {
    laser.validate()?;
    species.validate()?;
    let omega = laser.angular_frequency();
    let intensity = laser.peak_intensity();
    let q = species.charge_magnitude;
    let v0 = q * q * intensity
        / (2.0 * species.mass * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * omega * omega);
    let a0 = (2.0 * intensity / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * omega * omega)).sqrt();
    Ok(PonderomotiveField {
        v0,
        k: laser.wavenumber(),
        intensity,
        a0,
    })
}

/// Standing-wave fields `(E_z, B_y)` derived from `A_z = A0 cos(kx) sin(ωt)`.
pub fn standing_wave_fields(x: f64, t: f64, field: &PonderomotiveField, omega: f64) -> (f64, f64) {
    let ez = -field.a0 * omega * (field.k * x).cos() * (omega * t).cos();
    let by = field.a0 * field.k * (field.k * x).sin() * (omega * t).sin();
    (ez, by)
}

/// `F_P = -dV_p/dx = V0 k sin(2kx)`, N.
pub fn ponderomotive_force(x: f64, field: &PonderomotiveField) -> f64 {
    field.v0 * field.k * (2.0 * field.k * x).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceComparison {
    /// Coulomb repulsion of two elementary charges at separation `s`, N.
    pub coulomb: f64,
    /// `max|F_P| / F_c`.
    pub ratio: f64,
}

pub fn coulomb_vs_ponderomotive(s: f64, field: &PonderomotiveField) -> Result<ForceComparison> {
    positive("s", s)?;
    let e = ELEMENTARY_CHARGE;
    let coulomb = e * e / (4.0 * PI * VACUUM_PERMITTIVITY * s * s);
    Ok(ForceComparison {
        coulomb,
        ratio: field.v0 * field.k / coulomb,
    })
}

/// Transverse intensity profile of the parabolically focused beam,
/// `4P / (π (x²/2a + d)²)`.
pub fn focused_intensity(x: f64, laser: &LaserConfig) -> f64 {
    let w = x * x / (2.0 * laser.curvature_a) + laser.waist_d;
    4.0 * laser.peak_power() / (PI * w * w)
}

/// Transit time `d / v` across the waist.
pub fn interaction_time(laser: &LaserConfig, species: &ParticleSpecies) -> f64 {
    laser.waist_d / species.speed()
}

/// Dimensionless form of the confined problem,
/// `ψ'' + (E' - A cos²(c √A u)) ψ = 0` on `[-L, L]` with `u = αx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSystem {
    /// The constant `A`.
    pub a: f64,
    /// `α = √(2 m V0 / (ħ² A))`, 1/m.
    pub alpha: f64,
    /// `c = k ħ / √(2 m V0)`, so the potential argument is `c √A u`.
    pub osc_const: f64,
    pub grid: Grid,
    /// Target width of refined eigenvalue brackets.
    pub e_prime_resolution: f64,
    /// Coefficient multiplying `cos²` in the scaled equation. Equal to `A`
    /// unless the potential has been switched off for oracle checks.
    pub potential_scale: f64,
    /// J
    pub v0: f64,
    /// kg
    pub mass: f64,
}

pub const DEFAULT_A: f64 = 500.0;
pub const DEFAULT_HALF_WIDTH: f64 = 10.0;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_RESOLUTION: f64 = 1e-10;

pub fn build_scaled_system(
    field: &PonderomotiveField,
    species: &ParticleSpecies,
    a: f64,
    half_width: f64,
    step: f64,
) -> Result<ScaledSystem> {
    positive("A", a)?;
    if field.v0 <= 0.0 || !field.v0.is_finite() {
        return Err(Error::DegenerateSystem(format!(
            "V0 = {} J leaves the length scale undefined",
            field.v0
        )));
    }
    let grid = Grid::new(half_width, step)?;
    let two_m_v0 = 2.0 * species.mass * field.v0;
    Ok(ScaledSystem {
        a,
        alpha: (two_m_v0 / (HBAR * HBAR * a)).sqrt(),
        osc_const: field.k * HBAR / two_m_v0.sqrt(),
        grid,
        e_prime_resolution: DEFAULT_RESOLUTION,
        potential_scale: a,
        v0: field.v0,
        mass: species.mass,
    })
}

impl ScaledSystem {
    pub fn half_width(&self) -> f64 {
        self.grid.half_width()
    }

    pub fn step(&self) -> f64 {
        self.grid.step()
    }

    /// Same length and energy scales, potential term removed.
    pub fn without_potential(&self) -> Self {
        Self {
            potential_scale: 0.0,
            ..self.clone()
        }
    }

    /// Angular frequency of `cos(c √A u)` in scaled units.
    pub fn potential_wavenumber(&self) -> f64 {
        self.osc_const * self.a.sqrt()
    }

    pub fn potential(&self, u: f64) -> f64 {
        let c = (self.potential_wavenumber() * u).cos();
        self.potential_scale * c * c
    }

    /// Joules per unit of `E'`, i.e. `V0 / A`.
    pub fn energy_unit(&self) -> f64 {
        self.v0 / self.a
    }

    pub fn physical_energy(&self, e_prime: f64) -> f64 {
        self.energy_unit() * e_prime
    }

    pub fn scaled_energy(&self, energy: f64) -> f64 {
        energy / self.energy_unit()
    }

    /// Box width `2L/α`, m.
    pub fn physical_width(&self) -> f64 {
        2.0 * self.half_width() / self.alpha
    }

    /// Largest `E'` whose free oscillation is sampled by at least 20 points
    /// per wavelength on this grid.
    pub fn max_resolved_e_prime(&self) -> f64 {
        let kmax = 2.0 * PI / (20.0 * self.step());
        kmax * kmax + self.potential_scale
    }

    /// Wavenumber `√(2 m E)/ħ` for a scaled eigenvalue, 1/m.
    pub fn wave_vector(&self, e_prime: f64) -> f64 {
        (2.0 * self.mass * self.physical_energy(e_prime).max(0.0)).sqrt() / HBAR
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {value}")))
    }
}
