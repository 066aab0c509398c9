//! Orchestration of the `solve`, `evolve`, `plan` and `check` stages and
//! their output files.

mod check;
pub mod output;

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use check::{cmd_check, CheckItem, CheckReport, CHECK_BASIS, CHECK_STATES};
use output::{load_basis, num, save_basis, write_json, CsvWriter, RunManifest, CACHE_FILE};

use crate::config::RunConfig;
use crate::constants::{EV, HBAR};
use crate::diffraction::{
    amplitude_check, detect_peaks, linspace, plan, sweep, AmplitudeReport, AmplitudeTolerance,
    DiffractionPattern, PlanReport, SweepRow, PLANNED_ORDERS,
};
use crate::eigensolver::{fit_quadratic, solve_spectrum, QuadraticFit, SolveOptions, Spectrum};
use crate::error::Result;
use crate::evolution::{completeness_kernel, density, evolve, make_gaussian, project, SpectralState};
use crate::physics::{
    build_scaled_system, interaction_time, ponderomotive_strength, LaserConfig, ParticleSpecies,
    PonderomotiveField, ScaledSystem,
};

/// Partial sums written to `completeness.csv`.
pub const COMPLETENESS_COUNTS: [usize; 4] = [100, 500, 1000, 1500];

/// Resolved physical inputs of a run.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub laser: LaserConfig,
    pub species: ParticleSpecies,
    pub field: PonderomotiveField,
    /// Interaction time `d / v`, s.
    pub tau: f64,
}

impl Context {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let species = config.species()?;
        let field = ponderomotive_strength(&config.laser, &species)?;
        Ok(Self {
            laser: config.laser.clone(),
            tau: interaction_time(&config.laser, &species),
            config: config.clone(),
            species,
            field,
        })
    }

    pub fn system(&self) -> Result<ScaledSystem> {
        let s = &self.config.scaled;
        let mut sys = build_scaled_system(&self.field, &self.species, s.a, s.l, s.h)?;
        sys.e_prime_resolution = s.e_prime_resolution;
        Ok(sys)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            scan_step: self.config.scaled.scan_step,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.config
            .times
            .clone()
            .unwrap_or_else(|| vec![0.0, 0.5 * self.tau, self.tau])
    }

    /// `V0 τ / ħ` for the configured run.
    pub fn beta_int(&self) -> f64 {
        self.field.v0 * self.tau / HBAR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub a0_ev: f64,
    pub a1_ev: f64,
    pub a2_ev: f64,
    pub rms_residual_ev: f64,
    pub mean_eigenvalue_ev: f64,
    /// `a2 / a1`.
    pub well_fraction: f64,
    /// `ħ²π² / (2 m W²)` for the bare box of width `W = 2L/α`, eV.
    pub box_level_coefficient_ev: f64,
    pub states: usize,
}

impl FitReport {
    pub fn new(fit: &QuadraticFit, sys: &ScaledSystem, states: usize) -> Self {
        let w = sys.physical_width();
        Self {
            a0_ev: fit.a0,
            a1_ev: fit.a1,
            a2_ev: fit.a2,
            rms_residual_ev: fit.rms_residual,
            mean_eigenvalue_ev: fit.mean_value,
            well_fraction: fit.well_fraction(),
            box_level_coefficient_ev: HBAR * HBAR * PI * PI / (2.0 * sys.mass * w * w) / EV,
            states,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub spectrum: Spectrum,
    pub fit: Option<FitReport>,
    pub from_cache: bool,
    pub files: Vec<String>,
}

/// Solved eigenbasis, reusing `basis.bin` when it was written for the same
/// basis parameters.
pub fn solve_or_load(ctx: &Context, out_dir: &Path) -> Result<(Spectrum, bool)> {
    let sys = ctx.system()?;
    let key = format!("{}:{}", env!("CARGO_PKG_VERSION"), ctx.config.basis_hash());
    let path = out_dir.join(CACHE_FILE);
    if let Some(basis) = load_basis(&path, &key, &sys)? {
        return Ok((basis, true));
    }
    let basis = solve_spectrum(&sys, ctx.config.scaled.n_states, &ctx.solve_options())?;
    output::ensure_dir(out_dir)?;
    save_basis(&path, &key, &basis)?;
    Ok((basis, false))
}

pub fn cmd_solve(config: &RunConfig, out_dir: &Path) -> Result<SolveOutcome> {
    let ctx = Context::new(config)?;
    output::ensure_dir(out_dir)?;
    let mut manifest = RunManifest::open(out_dir, &config.hash());
    let clock = Instant::now();
    let (spectrum, from_cache) = solve_or_load(&ctx, out_dir)?;
    manifest.timings_s.insert("solve".into(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let mut files = vec!["run_config.json".to_string()];
    write_json(&out_dir.join("run_config.json"), config)?;

    let mut w = CsvWriter::create(
        &out_dir.join("eigenvalues.csv"),
        &["n", "parity", "E_prime", "E_eV", "K_per_m"],
    )?;
    for p in &spectrum.pairs {
        w.row(&[
            p.n.to_string(),
            p.parity.as_str().to_string(),
            num(p.e_prime),
            num(p.e_physical_ev),
            num(p.k_per_m),
        ])?;
    }
    w.finish()?;
    files.push("eigenvalues.csv".into());

    let columns = config.analysis.eigenstate_columns.min(spectrum.len());
    let mut header = vec!["u".to_string()];
    header.extend((0..columns).map(|n| format!("psi_{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&out_dir.join("eigenstates.csv"), &header)?;
    let u = spectrum.system.grid.points();
    for (i, x) in u.iter().enumerate() {
        let mut row = vec![num(*x)];
        row.extend(spectrum.pairs[..columns].iter().map(|p| num(p.psi[i])));
        w.row(&row)?;
    }
    w.finish()?;
    files.push("eigenstates.csv".into());

    let counts: Vec<usize> = {
        let c: Vec<usize> = COMPLETENESS_COUNTS
            .iter()
            .copied()
            .filter(|&c| c <= spectrum.len())
            .collect();
        if c.is_empty() {
            vec![spectrum.len()]
        } else {
            c
        }
    };
    let kernels = counts
        .iter()
        .map(|&c| completeness_kernel(config.packet.u0, c, &spectrum))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["u".to_string()];
    header.extend(counts.iter().map(|c| format!("g_{c}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&out_dir.join("completeness.csv"), &header)?;
    for (i, x) in u.iter().enumerate() {
        let mut row = vec![num(*x)];
        row.extend(kernels.iter().map(|g| num(g[i])));
        w.row(&row)?;
    }
    w.finish()?;
    files.push("completeness.csv".into());

    let fit = if spectrum.len() >= 3 {
        let report = FitReport::new(&fit_quadratic(&spectrum.pairs)?, &spectrum.system, spectrum.len());
        write_json(&out_dir.join("fit.json"), &report)?;
        files.push("fit.json".into());
        Some(report)
    } else {
        None
    };
    manifest.timings_s.insert("solve_output".into(), clock.elapsed().as_secs_f64());
    manifest.record_files(out_dir, &files)?;
    manifest.save(out_dir)?;
    Ok(SolveOutcome {
        spectrum,
        fit,
        from_cache,
        files,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub file: String,
    pub t_s: f64,
    pub t_over_tau: f64,
    pub norm: f64,
    pub asymmetry: f64,
    pub peaks: usize,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub initial: SpectralState,
    pub samples: Vec<TimeSample>,
    /// Pattern of the latest requested time.
    pub pattern: DiffractionPattern,
    pub amplitude: Option<AmplitudeReport>,
    pub beta_int: f64,
    pub from_cache: bool,
    pub files: Vec<String>,
}

pub fn cmd_evolve(config: &RunConfig, out_dir: &Path) -> Result<EvolveOutcome> {
    let ctx = Context::new(config)?;
    output::ensure_dir(out_dir)?;
    let mut manifest = RunManifest::open(out_dir, &config.hash());
    let clock = Instant::now();
    let (basis, from_cache) = solve_or_load(&ctx, out_dir)?;
    manifest.timings_s.insert("basis".into(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let packet = make_gaussian(config.packet.sigma, config.packet.u0, &basis.system.grid)?;
    let initial = project(&packet, &basis)?;
    let mut files = vec!["run_config.json".to_string()];
    write_json(&out_dir.join("run_config.json"), config)?;

    let mut w = CsvWriter::create(&out_dir.join("coefficients.csv"), &["n", "re_c", "im_c", "abs2_c"])?;
    for (n, c) in initial.coeffs.iter().enumerate() {
        w.row(&[n.to_string(), num(c.re), num(c.im), num(c.norm_sqr())])?;
    }
    w.finish()?;
    files.push("coefficients.csv".into());

    let mut times = ctx.times();
    times.sort_by(f64::total_cmp);
    let mut samples = Vec::new();
    let mut last = None;
    for (k, &t) in times.iter().enumerate() {
        let state = evolve(&initial, t, &basis)?;
        let profile = density(&state, &basis)?;
        let name = format!("rho_t{k}.csv");
        let mut w = CsvWriter::create(&out_dir.join(&name), &["u", "rho"])?;
        for (x, r) in profile.u.iter().zip(&profile.rho) {
            w.row(&[num(*x), num(*r)])?;
        }
        let norm = profile.norm();
        w.footer("norm", norm)?;
        w.finish()?;
        let pattern = detect_peaks(&profile, config.analysis.prominence)?;
        samples.push(TimeSample {
            file: name.clone(),
            t_s: t,
            t_over_tau: t / ctx.tau,
            norm,
            asymmetry: profile.asymmetry(),
            peaks: pattern.peaks.len(),
        });
        files.push(name);
        last = Some((profile, pattern));
    }
    let (profile, pattern) = last.expect("at least one time");

    let mut w = CsvWriter::create(&out_dir.join("rho_times.csv"), &["file", "t_s", "t_over_tau", "norm", "peaks"])?;
    for s in &samples {
        w.row(&[s.file.clone(), num(s.t_s), num(s.t_over_tau), num(s.norm), s.peaks.to_string()])?;
    }
    w.finish()?;
    files.push("rho_times.csv".into());

    let mut w = CsvWriter::create(&out_dir.join("pattern.csv"), &["u", "amplitude", "order"])?;
    for p in &pattern.peaks {
        w.row(&[num(p.u), num(p.amplitude), p.order.to_string()])?;
    }
    w.finish()?;
    files.push("pattern.csv".into());

    let beta_int = ctx.beta_int();
    let amplitude = amplitude_check(&pattern, &profile, beta_int, &AmplitudeTolerance::default()).ok();
    if let Some(report) = &amplitude {
        write_json(&out_dir.join("amplitude.json"), report)?;
        files.push("amplitude.json".into());
    }
    manifest.timings_s.insert("evolve".into(), clock.elapsed().as_secs_f64());
    manifest.record_files(out_dir, &files)?;
    manifest.save(out_dir)?;
    Ok(EvolveOutcome {
        initial,
        samples,
        pattern,
        amplitude,
        beta_int,
        from_cache,
        files,
    })
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub report: PlanReport,
    pub sweep: Vec<SweepRow>,
    pub files: Vec<String>,
}

pub fn cmd_plan(config: &RunConfig, out_dir: &Path) -> Result<PlanOutcome> {
    config.validate()?;
    let species = config.species()?;
    output::ensure_dir(out_dir)?;
    let mut manifest = RunManifest::open(out_dir, &config.hash());
    let clock = Instant::now();
    let convention = config.analysis.fringe_convention;
    let report = plan(&config.laser, &species, convention)?;
    write_json(&out_dir.join("plan.json"), &report)?;

    let sw = &config.analysis.sweep;
    let values = linspace(sw.start, sw.stop, sw.count);
    let rows = sweep(sw.parameter, &values, &config.laser, &species, convention)?;
    let mut header = vec![sw.parameter.column().to_string(), "beta_int".into(), "fringe_width_m".into()];
    header.extend((0..PLANNED_ORDERS).map(|m| format!("P_{m}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut w = CsvWriter::create(&out_dir.join("sweep.csv"), &header)?;
    for r in &rows {
        let mut row = vec![num(r.value), num(r.beta_int), num(r.fringe_width)];
        row.extend(r.order_probs.iter().map(|p| num(*p)));
        w.row(&row)?;
    }
    w.finish()?;
    let files = vec!["plan.json".to_string(), "sweep.csv".to_string()];
    manifest.timings_s.insert("plan".into(), clock.elapsed().as_secs_f64());
    manifest.record_files(out_dir, &files)?;
    manifest.save(out_dir)?;
    Ok(PlanOutcome {
        report,
        sweep: rows,
        files,
    })
}
