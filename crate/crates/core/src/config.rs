//! Run configuration: a single JSON document whose omitted fields take the
//! reference-experiment values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffraction::{FringeConvention, SweepParameter, DEFAULT_PROMINENCE};
use crate::error::{Error, Result};
use crate::evolution::DEFAULT_SIGMA;
use crate::physics::{
    LaserConfig, ParticleSpecies, DEFAULT_A, DEFAULT_HALF_WIDTH, DEFAULT_RESOLUTION, DEFAULT_STEP,
};

/// Incident energy used for ions when the configuration gives none, eV.
pub const DEFAULT_ION_ENERGY_EV: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    /// `electron`, `H+` or `He+`.
    pub label: String,
    /// Defaults to the reference electron speed for electrons and 50 eV for ions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident_energy_ev: Option<f64>,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        Self {
            label: "electron".into(),
            incident_energy_ev: None,
        }
    }
}

impl SpeciesConfig {
    pub fn resolve(&self) -> Result<ParticleSpecies> {
        let probe = ParticleSpecies::from_label(&self.label, 1.0)?;
        let energy = match self.incident_energy_ev {
            Some(e) => e,
            None if probe.label == "electron" => ParticleSpecies::reference_electron().incident_energy_ev,
            None => DEFAULT_ION_ENERGY_EV,
        };
        let species = probe.with_energy(energy);
        species.validate().map_err(keyed)?;
        Ok(species)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaledConfig {
    pub a: f64,
    /// Half-width `L` of the box in scaled units.
    pub l: f64,
    pub h: f64,
    pub n_states: usize,
    pub e_prime_resolution: f64,
    /// Energy step of the coarse eigenvalue scan.
    pub scan_step: f64,
}

impl Default for ScaledConfig {
    fn default() -> Self {
        Self {
            a: DEFAULT_A,
            l: DEFAULT_HALF_WIDTH,
            h: DEFAULT_STEP,
            n_states: 1500,
            e_prime_resolution: DEFAULT_RESOLUTION,
            scan_step: crate::eigensolver::DEFAULT_SCAN_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketConfig {
    pub sigma: f64,
    pub u0: f64,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            u0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::WaistD,
            start: 100e-6,
            stop: 2e-3,
            count: 191,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Minimum peak prominence as a fraction of the density maximum.
    pub prominence: f64,
    pub fringe_convention: FringeConvention,
    pub sweep: SweepConfig,
    /// Number of eigenfunctions written to `eigenstates.csv`.
    pub eigenstate_columns: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            prominence: DEFAULT_PROMINENCE,
            fringe_convention: FringeConvention::Hbar,
            sweep: SweepConfig::default(),
            eigenstate_columns: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub laser: LaserConfig,
    pub species: SpeciesConfig,
    pub scaled: ScaledConfig,
    pub packet: PacketConfig,
    /// Evolution times in seconds; `0`, `τ/2` and `τ` when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            laser: LaserConfig::default(),
            species: SpeciesConfig::default(),
            scaled: ScaledConfig::default(),
            packet: PacketConfig::default(),
            times: None,
            analysis: AnalysisConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn keyed(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::Config {
            key: name.to_string(),
            reason,
        },
        other => other,
    }
}

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn require_positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.laser.validate().map_err(keyed)?;
        self.species.resolve()?;
        let s = &self.scaled;
        require_positive("scaled.a", s.a)?;
        require_positive("scaled.l", s.l)?;
        require_positive("scaled.h", s.h)?;
        require_positive("scaled.e_prime_resolution", s.e_prime_resolution)?;
        require_positive("scaled.scan_step", s.scan_step)?;
        if s.n_states < 1 {
            return Err(config_error("scaled.n_states", "must be at least 1"));
        }
        if s.h * 2.0 > s.l {
            return Err(config_error("scaled.h", format!("step {} leaves fewer than 5 grid points", s.h)));
        }
        require_positive("packet.sigma", self.packet.sigma)?;
        if self.packet.u0.is_nan() || self.packet.u0.abs() >= s.l {
            return Err(config_error("packet.u0", format!("must lie inside (-{0}, {0})", s.l)));
        }
        if let Some(times) = &self.times {
            if times.is_empty() {
                return Err(config_error("times", "must list at least one time"));
            }
            if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
                return Err(config_error("times", format!("times must be non-negative, got {t}")));
            }
        }
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.prominence) {
            return Err(config_error("analysis.prominence", "must be in [0, 1)"));
        }
        let sw = &a.sweep;
        require_positive("analysis.sweep.start", sw.start)?;
        require_positive("analysis.sweep.stop", sw.stop)?;
        if sw.count < 1 {
            return Err(config_error("analysis.sweep.count", "must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config_error("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn species(&self) -> Result<ParticleSpecies> {
        self.species.resolve()
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }

    /// Hash of the fields that determine the eigenbasis.
    pub fn basis_hash(&self) -> String {
        let key = serde_json::json!({
            "laser": self.laser,
            "species": self.species,
            "scaled": self.scaled,
        });
        hex(&Sha256::digest(key.to_string().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("<file>", format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_reference_values() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg.laser.wavelength, 532e-9);
        assert_eq!(cfg.laser.pulse_energy, 0.2);
        assert_eq!(cfg.laser.pulse_width, 10e-9);
        assert_eq!(cfg.laser.waist_d, 125e-6);
        assert_eq!(cfg.scaled.a, 500.0);
        assert_eq!(cfg.scaled.l, 10.0);
        assert_eq!(cfg.scaled.n_states, 1500);
        assert_eq!(cfg.packet.sigma, 0.07);
        assert_eq!(cfg.packet.u0, 0.0);
        assert_eq!(cfg.species().unwrap().label, "electron");
    }

    #[test]
    fn empty_blocks_are_filled() {
        let cfg = RunConfig::from_json(r#"{"laser": {}, "scaled": {}, "packet": {}}"#).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn negative_waist_names_the_key() {
        let err = RunConfig::from_json(r#"{"laser": {"waist_d": -1e-4}}"#).unwrap_err();
        assert!(err.to_string().contains("laser.waist_d"), "{err}");
    }

    #[test]
    fn unknown_species_and_fields() {
        let err = RunConfig::from_json(r#"{"species": {"label": "muon"}}"#).unwrap_err();
        assert!(err.to_string().contains("species.label"), "{err}");
        let err = RunConfig::from_json(r#"{"species": {"incident_energy_ev": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("label"), "{err}");
        assert!(RunConfig::from_json(r#"{"laser": {"colour": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"times": []}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scaled": {"n_states": 0}}"#).is_err());
    }

    #[test]
    fn ion_defaults() {
        let cfg = RunConfig::from_json(r#"{"species": {"label": "H+"}}"#).unwrap();
        assert_eq!(cfg.species().unwrap().incident_energy_ev, DEFAULT_ION_ENERGY_EV);
    }

    #[test]
    fn round_trip() {
        let text = r#"{"species": {"label": "He+", "incident_energy_ev": 80},
                       "times": [0, 4e-13], "scaled": {"n_states": 30}}"#;
        let a = RunConfig::from_json(text).unwrap();
        let b = RunConfig::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_physics() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.packet.sigma = 0.08;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.basis_hash(), b.basis_hash());
        b.scaled.h = 2e-3;
        assert_ne!(a.basis_hash(), b.basis_hash());
    }
}
