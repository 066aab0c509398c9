//! Reduced-scale invariant suite behind the `check` command.

use std::f64::consts::PI;
use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::Context;
use crate::config::RunConfig;
use crate::constants::{EV, HBAR};
use crate::diffraction::{
    bessel_j_all, bessel_j_series, detect_peaks, fringe_width, interaction_strength,
    interaction_strength_from_depth, FringeConvention,
};
use crate::eigensolver::{count_nodes, solve_spectrum, Parity, Spectrum};
use crate::error::Result;
use crate::evolution::{density, energy_expectation, evolve, make_gaussian, project, reconstruct};
use crate::physics::{
    build_scaled_system, focused_intensity, ponderomotive_force, ponderomotive_strength,
    standing_wave_fields, LaserConfig, ParticleSpecies, ScaledSystem,
};

/// States checked for spectral invariants.
pub const CHECK_STATES: usize = 200;
/// Basis size used for the evolution checks; large enough to hold the
/// reference packet.
pub const CHECK_BASIS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub module: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> Vec<&CheckItem> {
        self.items.iter().filter(|i| !i.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    fn push(&mut self, module: &'static str, name: &str, passed: bool, detail: impl Into<String>) {
        self.items.push(CheckItem {
            module,
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    fn not_run(&mut self, module: &'static str, names: &[&str], why: &str) {
        for n in names {
            self.push(module, n, false, format!("not run: {why}"));
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        for i in &self.items {
            let tag = if i.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag}  {:<20} {:<40} {}", i.module, i.name, i.detail)?;
        }
        let failed = self.failures().len();
        write!(f, "{} checks, {} failed", self.items.len(), failed)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Fourth-order central difference.
fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

pub fn cmd_check(config: &RunConfig) -> Result<CheckReport> {
    let ctx = Context::new(config)?;
    let mut report = CheckReport::default();
    let mut rng = StdRng::seed_from_u64(0x6b64);

    physics_checks(&ctx, &mut report, &mut rng)?;

    let sys = if ctx.field.v0 > 0.0 {
        ctx.system()?
    } else {
        // No potential: keep the reference length and energy scales and
        // solve the bare box.
        let reference = LaserConfig {
            pulse_energy: LaserConfig::default().pulse_energy,
            ..ctx.laser.clone()
        };
        let field = ponderomotive_strength(&reference, &ctx.species)?;
        let s = &config.scaled;
        report.notes.push("V0 = 0: potential switched off, scales from the reference pulse energy".into());
        build_scaled_system(&field, &ctx.species, s.a, s.l, s.h)?.without_potential()
    };

    resolution_checks(&ctx, &sys, &mut report);

    match solve_spectrum(&sys, CHECK_BASIS, &ctx.solve_options()) {
        Ok(basis) => {
            report.push("eigensolver", "spectrum solve", true, format!("{CHECK_BASIS} states"));
            spectrum_checks(&ctx, &basis, &mut report, &mut rng);
            oracle_checks(&ctx, &sys, &mut report);
            evolution_checks(&ctx, &basis, &mut report)?;
        }
        Err(e) => {
            report.push("eigensolver", "spectrum solve", false, e.to_string());
            report.not_run("eigensolver", &SPECTRUM_CHECKS, "spectrum solve failed");
            oracle_checks(&ctx, &sys, &mut report);
            report.not_run("spectral_evolution", &EVOLUTION_CHECKS, "spectrum solve failed");
        }
    }

    planner_checks(&ctx, &mut report, &mut rng)?;
    Ok(report)
}

fn physics_checks(ctx: &Context, report: &mut CheckReport, rng: &mut StdRng) -> Result<()> {
    const M: &str = "physics_params";
    let laser = &ctx.laser;
    let field = &ctx.field;

    let e = ponderomotive_strength(laser, &ParticleSpecies::electron(1.0))?;
    let p = ponderomotive_strength(laser, &ParticleSpecies::proton(1.0))?;
    let mass_ok = e.v0 == 0.0 || rel(p.v0 * crate::constants::PROTON_MASS, e.v0 * crate::constants::ELECTRON_MASS) < 1e-12;
    let doubled = LaserConfig {
        pulse_energy: 2.0 * laser.pulse_energy,
        ..laser.clone()
    };
    let e2 = ponderomotive_strength(&doubled, &ParticleSpecies::electron(1.0))?;
    let linear_ok = e.v0 == 0.0 || rel(e2.v0, 2.0 * e.v0) < 1e-12;
    report.push(M, "V0 scales as 1/m and linearly in I", mass_ok && linear_ok, format!("V0 = {:.6e} eV", field.v0_ev()));

    let omega = laser.angular_frequency();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = rng.random_range(-10.0..10.0) / field.k;
        let t = rng.random_range(-10.0..10.0) / omega;
        let dby = derivative(|t| standing_wave_fields(x, t, field, omega).1, t, 1e-3 / omega);
        let dez = derivative(|x| standing_wave_fields(x, t, field, omega).0, x, 1e-3 / field.k);
        let scale = field.a0 * field.k * omega;
        if scale > 0.0 {
            worst = worst.max((dby - dez).abs() / scale);
        }
    }
    report.push(M, "Maxwell consistency of fields", worst <= 1e-9, format!("max rel dev {worst:.2e}"));

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = rng.random_range(-20.0..20.0) / field.k;
        let grad = derivative(|x| field.potential(x), x, 1e-3 / field.k);
        let scale = field.v0 * field.k;
        if scale > 0.0 {
            worst = worst.max((ponderomotive_force(x, field) + grad).abs() / scale);
        }
    }
    report.push(M, "force equals -dV/dx", worst <= 1e-8, format!("max rel dev {worst:.2e}"));

    if field.v0 > 0.0 {
        let sys = ctx.system()?;
        let alpha2 = 2.0 * sys.mass * sys.v0 / (HBAR * HBAR * sys.a);
        let dev = rel(sys.alpha * sys.alpha, alpha2);
        report.push(M, "alpha^2 = 2 m V0 / (hbar^2 A)", dev < 1e-12, format!("rel dev {dev:.2e}"));

        let half = sys.half_width() / sys.alpha;
        let i0 = focused_intensity(0.0, laser);
        let xs: Vec<f64> = (1..=200).map(|j| half * j as f64 / 200.0).collect();
        let even = xs.iter().all(|x| focused_intensity(*x, laser) == focused_intensity(-x, laser));
        let falling = xs.windows(2).all(|w| focused_intensity(w[1], laser) < focused_intensity(w[0], laser));
        let drop = 1.0 - focused_intensity(half, laser) / i0;
        report.push(
            M,
            "focused intensity over the box",
            even && falling && drop < 0.01,
            format!("even {even}, decreasing {falling}, drop at box edge {drop:.2e}"),
        );
    }
    Ok(())
}

fn resolution_checks(ctx: &Context, sys: &ScaledSystem, report: &mut CheckReport) {
    const M: &str = "eigensolver";
    let k_top = (CHECK_BASIS as f64 + 1.0) * PI / (2.0 * sys.half_width());
    let needed = sys.potential_scale + k_top * k_top;
    let limit = sys.max_resolved_e_prime();
    let h_max = 2.0 * PI / (20.0 * (needed - sys.potential_scale).sqrt());
    report.push(
        M,
        "grid resolves the spectrum",
        needed <= limit,
        if needed <= limit {
            format!("E' up to {needed:.0} resolved (limit {limit:.0})")
        } else {
            format!(
                "step h = {} resolves E' only up to {limit:.0} but {CHECK_BASIS} states reach about {needed:.0}; set scaled.h <= {h_max:.2e}",
                sys.step()
            )
        },
    );

    let halved = ScaledSystem {
        grid: match crate::grid::Grid::new(sys.half_width(), sys.step() / 2.0) {
            Ok(g) => g,
            Err(e) => {
                report.push(M, "step-halving convergence", false, e.to_string());
                return;
            }
        },
        ..sys.clone()
    };
    let low = 10;
    let result = solve_spectrum(sys, low, &ctx.solve_options())
        .and_then(|a| solve_spectrum(&halved, low, &ctx.solve_options()).map(|b| (a, b)));
    match result {
        Ok((a, b)) => {
            let dev = a
                .pairs
                .iter()
                .zip(&b.pairs)
                .map(|(x, y)| rel(x.e_prime, y.e_prime))
                .fold(0.0, f64::max);
            report.push(
                M,
                "step-halving convergence",
                dev <= 1e-6,
                if dev <= 1e-6 {
                    format!("lowest {low} levels move by {dev:.2e} when h is halved")
                } else {
                    format!("lowest {low} levels move by {dev:.2e} when h is halved; reduce scaled.h")
                },
            )
        }
        Err(e) => report.push(M, "step-halving convergence", false, format!("{e}; reduce scaled.h")),
    }
}

const SPECTRUM_CHECKS: [&str; 9] = [
    "parity alternation",
    "node count equals n",
    "eigenvalues nondecreasing",
    "normalization",
    "orthogonality (50 random pairs)",
    "parity symmetry",
    "ground state below V0",
    "K nondecreasing",
    "A invariance (A/2, same physical box)",
];

fn spectrum_checks(ctx: &Context, basis: &Spectrum, report: &mut CheckReport, rng: &mut StdRng) {
    const M: &str = "eigensolver";
    let pairs = &basis.pairs[..CHECK_STATES.min(basis.len())];
    let grid = &basis.system.grid;

    let bad_parity = pairs.iter().filter(|p| p.parity != Parity::of_index(p.n)).count();
    report.push(M, SPECTRUM_CHECKS[0], bad_parity == 0, format!("{} states, {bad_parity} wrong", pairs.len()));

    let bad_nodes = pairs.iter().filter(|p| count_nodes(&p.psi) != p.n).count();
    report.push(M, SPECTRUM_CHECKS[1], bad_nodes == 0, format!("{bad_nodes} mismatches"));

    let descending = pairs.windows(2).filter(|w| w[1].e_prime < w[0].e_prime).count();
    let ties = pairs.windows(2).filter(|w| w[1].e_prime == w[0].e_prime).count();
    report.push(
        M,
        SPECTRUM_CHECKS[2],
        descending == 0,
        format!("{descending} decreasing steps, {ties} pairs equal at f64 precision"),
    );

    let norm = pairs
        .iter()
        .map(|p| (grid.inner(&p.psi, &p.psi) - 1.0).abs())
        .fold(0.0, f64::max);
    report.push(M, SPECTRUM_CHECKS[3], norm <= 1e-8, format!("max |<n|n> - 1| = {norm:.2e}"));

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.random_range(0..pairs.len());
        let mut n = rng.random_range(0..pairs.len());
        if n == m {
            n = (n + 1) % pairs.len();
        }
        worst = worst.max(grid.inner(&pairs[m].psi, &pairs[n].psi).abs());
    }
    report.push(M, SPECTRUM_CHECKS[4], worst <= 1e-6, format!("max |<m|n>| = {worst:.2e}"));

    let sym = pairs
        .iter()
        .map(|p| {
            let len = p.psi.len();
            (0..len)
                .map(|j| (p.psi[j] - p.parity.sign() * p.psi[len - 1 - j]).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let walls = pairs.iter().all(|p| p.psi[0] == 0.0 && p.psi[p.psi.len() - 1] == 0.0);
    report.push(M, SPECTRUM_CHECKS[5], sym <= 1e-6 && walls, format!("max deviation {sym:.2e}, walls exact {walls}"));

    let e0 = basis.system.physical_energy(pairs[0].e_prime);
    if basis.system.potential_scale > 0.0 {
        let ok = e0 > 0.0 && e0 < ctx.field.v0;
        report.push(M, SPECTRUM_CHECKS[6], ok, format!("E0 = {:.4e} eV, V0 = {:.4e} eV", e0 / EV, ctx.field.v0_ev()));
    } else {
        report.push(M, SPECTRUM_CHECKS[6], e0 > 0.0, "no potential; E0 > 0 only");
    }

    let k_ok = pairs.windows(2).all(|w| w[1].k_per_m >= w[0].k_per_m);
    report.push(M, SPECTRUM_CHECKS[7], k_ok, "");

    let sys = &basis.system;
    let count = 51;
    let a2 = sys.a / 2.0;
    let l2 = sys.half_width() * 2f64.sqrt();
    let halved = (|| {
        let field = crate::physics::PonderomotiveField { v0: sys.v0, ..ctx.field };
        let mut other = build_scaled_system(&field, &ctx.species, a2, l2, sys.step())?;
        other.e_prime_resolution = sys.e_prime_resolution;
        if sys.potential_scale == 0.0 {
            other = other.without_potential();
        }
        solve_spectrum(&other, count, &ctx.solve_options())
    })();
    match halved {
        Ok(other) => {
            let dev = basis.pairs[..count]
                .iter()
                .zip(&other.pairs)
                .map(|(a, b)| rel(a.e_physical_ev, b.e_physical_ev))
                .fold(0.0, f64::max);
            report.push(M, SPECTRUM_CHECKS[8], dev <= 1e-4, format!("n <= 50, max rel dev {dev:.2e} (L = {l2:.4})"));
        }
        Err(e) => report.push(M, SPECTRUM_CHECKS[8], false, e.to_string()),
    }
}

fn oracle_checks(ctx: &Context, sys: &ScaledSystem, report: &mut CheckReport) {
    const M: &str = "eigensolver";
    let free = sys.without_potential();
    let count = 100;
    match solve_spectrum(&free, count, &ctx.solve_options()) {
        Ok(basis) => {
            let w = free.physical_width();
            let dev = basis
                .pairs
                .iter()
                .map(|p| {
                    let exact = HBAR * HBAR * PI * PI * (p.n as f64 + 1.0).powi(2) / (2.0 * free.mass * w * w);
                    rel(p.e_physical_ev * EV, exact)
                })
                .fold(0.0, f64::max);
            report.push(M, "infinite-well oracle", dev <= 1e-6, format!("first {count} levels, max rel dev {dev:.2e}"));
        }
        Err(e) => report.push(M, "infinite-well oracle", false, e.to_string()),
    }
}

const EVOLUTION_CHECKS: [&str; 6] = [
    "packet normalization",
    "coefficient weight",
    "unitarity",
    "parity conservation",
    "spectral reconstruction",
    "energy expectation and group property",
];

fn evolution_checks(ctx: &Context, basis: &Spectrum, report: &mut CheckReport) -> Result<()> {
    const M: &str = "spectral_evolution";
    let cfg = &ctx.config.packet;
    let packet = match make_gaussian(cfg.sigma, cfg.u0, &basis.system.grid) {
        Ok(p) => p,
        Err(e) => {
            report.not_run(M, &EVOLUTION_CHECKS, &e.to_string());
            return Ok(());
        }
    };
    let n2 = packet.norm_squared();
    report.push(M, EVOLUTION_CHECKS[0], (n2 - 1.0).abs() <= 1e-8, format!("norm^2 - 1 = {:.2e}", n2 - 1.0));

    let s0 = project(&packet, basis)?;
    let w = s0.weight();
    report.push(M, EVOLUTION_CHECKS[1], w <= 1.0 + 1e-8, format!("sum |c_n|^2 = {w:.12} over {} states", basis.len()));

    let tau = ctx.tau;
    let mut norms = Vec::new();
    let mut asym: f64 = 0.0;
    for t in [0.0, 0.25 * tau, 0.5 * tau, tau] {
        let rho = density(&evolve(&s0, t, basis)?, basis)?;
        norms.push(rho.norm());
        asym = asym.max(rho.asymmetry());
    }
    let drift = norms.iter().map(|n| (n - norms[0]).abs()).fold(0.0, f64::max);
    report.push(M, EVOLUTION_CHECKS[2], drift <= 1e-6, format!("max drift {drift:.2e} over t in {{0, tau/4, tau/2, tau}}"));
    if cfg.u0 == 0.0 {
        report.push(M, EVOLUTION_CHECKS[3], asym <= 1e-6, format!("max |rho(u) - rho(-u)| = {asym:.2e}"));
    } else {
        report.push(M, EVOLUTION_CHECKS[3], true, "skipped: packet not centred");
    }

    let psi = reconstruct(&s0, basis)?;
    let diff: Vec<f64> = psi.iter().zip(&packet.samples).map(|(a, b)| (a - b).norm_sqr()).collect();
    let l2 = basis.system.grid.integrate(&diff).sqrt();
    report.push(M, EVOLUTION_CHECKS[4], l2 <= 1e-2, format!("L2 error {l2:.2e} with {} states", basis.len()));

    let e0 = energy_expectation(&s0, basis);
    let st = evolve(&s0, tau, basis)?;
    let e_dev = rel(energy_expectation(&st, basis), e0);
    let staged = evolve(&evolve(&s0, 0.3 * tau, basis)?, tau, basis)?;
    let group = st
        .coeffs
        .iter()
        .zip(&staged.coeffs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    report.push(
        M,
        EVOLUTION_CHECKS[5],
        e_dev <= 1e-12 && group <= 1e-10,
        format!("energy rel dev {e_dev:.2e}, composition dev {group:.2e}"),
    );

    // Diffraction at the end of the interaction.
    let rho = density(&st, basis)?;
    let pattern = detect_peaks(&rho, ctx.config.analysis.prominence)?;
    let n = pattern.peaks.len();
    let spread = pattern.gap_spread();
    report.push(
        "diffraction_planner",
        "peak equidistance at tau",
        n >= 3 && spread <= 0.05,
        if n >= 3 {
            format!("{n} peaks, gap spread {:.2}%", 100.0 * spread)
        } else {
            format!("only {n} peak(s) at t = tau; equidistance needs at least 3")
        },
    );
    Ok(())
}

fn planner_checks(ctx: &Context, report: &mut CheckReport, rng: &mut StdRng) -> Result<()> {
    const M: &str = "diffraction_planner";
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.0, 5.2] {
        let j = bessel_j_all(60, beta);
        let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        worst = worst.max((s - 1.0).abs());
    }
    report.push(M, "Bessel sum rule", worst <= 1e-9, format!("max |sum - 1| = {worst:.2e}"));

    let mut worst: f64 = 0.0;
    for i in 0..=100 {
        let x = i as f64 * 0.1;
        let j = bessel_j_all(4, x);
        for (m, v) in j.iter().enumerate() {
            worst = worst.max((v * v - bessel_j_series(m, x, 60).powi(2)).abs());
        }
    }
    report.push(M, "P_m recurrence vs series", worst <= 1e-8, format!("beta in [0, 10], m <= 4, max dev {worst:.2e}"));

    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let laser = LaserConfig {
            wavelength: rng.random_range(200e-9..2e-6),
            pulse_energy: rng.random_range(1e-3..1.0),
            waist_d: rng.random_range(1e-5..1e-3),
            ..ctx.laser.clone()
        };
        let species = ctx.species.with_energy(rng.random_range(1.0..1e4));
        let a = interaction_strength(&laser, &species)?;
        let b = interaction_strength_from_depth(&laser, &species)?;
        worst = worst.max(rel(a, b));
    }
    report.push(M, "beta closed form vs V0 tau / hbar", worst <= 0.02, format!("50 draws, max rel dev {worst:.2e}"));

    let base = ParticleSpecies::proton(50.0);
    let laser = &ctx.laser;
    let ds: Vec<f64> = (0..50).map(|i| 1e-4 * 1.05f64.powi(i)).collect();
    let es: Vec<f64> = (0..50).map(|i| 10.0 * 1.08f64.powi(i)).collect();
    let beta_d = ds
        .iter()
        .map(|d| interaction_strength(&laser.with_waist(*d), &base))
        .collect::<Result<Vec<_>>>()?;
    let beta_e = es
        .iter()
        .map(|e| interaction_strength(laser, &base.with_energy(*e)))
        .collect::<Result<Vec<_>>>()?;
    let w_e = es
        .iter()
        .map(|e| fringe_width(&base.with_energy(*e), laser, FringeConvention::Hbar))
        .collect::<Result<Vec<_>>>()?;
    let falling = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let w_h = fringe_width(&base, laser, FringeConvention::Hbar)?;
    let w_he = fringe_width(&ParticleSpecies::helium_ion(50.0), laser, FringeConvention::Hbar)?;
    let ok = (laser.pulse_energy == 0.0 || (falling(&beta_d) && falling(&beta_e))) && falling(&w_e) && w_he < w_h;
    report.push(M, "monotonicity of beta and W", ok, "beta in d and E_i, W in E_i and mass");
    Ok(())
}
