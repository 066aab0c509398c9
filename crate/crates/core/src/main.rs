use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kdsim::config::{load_config, RunConfig};
use kdsim::pipeline::{cmd_check, cmd_evolve, cmd_plan, cmd_solve};

#[derive(Parser)]
#[command(name = "kdsim", version, about = "Kapitza-Dirac diffraction in a confined ponderomotive potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; omitted fields take reference values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the eigenbasis and write spectra, eigenstates and the fit.
    Solve,
    /// Project the packet, evolve it and analyse the diffraction pattern.
    Evolve,
    /// Diffraction-order probabilities and parameter sweep.
    Plan,
    /// Reduced-scale invariant checks.
    Check,
}

fn run(cli: Cli) -> kdsim::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| kdsim::Error::Config {
                key: "--threads".into(),
                reason: e.to_string(),
            })?;
    }
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.out_dir {
        config.output_dir = dir;
    }
    let out = config.output_dir.clone();
    match cli.command {
        Command::Solve => {
            let o = cmd_solve(&config, &out)?;
            println!(
                "{} states{} -> {}",
                o.spectrum.len(),
                if o.from_cache { " (cached basis)" } else { "" },
                out.display()
            );
            if let Some(fit) = o.fit {
                println!(
                    "fit: a0 = {:.4e} eV, a1 = {:.4e} eV, a2 = {:.4e} eV, rms = {:.3e} eV",
                    fit.a0_ev, fit.a1_ev, fit.a2_ev, fit.rms_residual_ev
                );
            }
        }
        Command::Evolve => {
            let o = cmd_evolve(&config, &out)?;
            let w = o.initial.weight();
            println!("weight captured by the basis: {w:.10}");
            if w < 0.99 {
                eprintln!("warning: the basis misses {:.1}% of the packet; raise scaled.n_states", 100.0 * (1.0 - w));
            }
            for s in &o.samples {
                println!(
                    "t/tau = {:.4}: norm {:.10}, {} peak(s) -> {}",
                    s.t_over_tau, s.norm, s.peaks, s.file
                );
            }
            match &o.amplitude {
                Some(a) => println!("amplitude check vs Bessel law (beta = {:.3}): {}", o.beta_int, if a.passed { "pass" } else { "fail" }),
                None => println!("amplitude check skipped: fewer than 3 peaks"),
            }
        }
        Command::Plan => {
            let o = cmd_plan(&config, &out)?;
            let r = &o.report;
            println!("{} at {:.6e} eV: beta = {:.4}, tau = {:.3} ps", r.species, r.incident_energy_ev, r.beta_int, r.tau_ps);
            for (m, p) in r.order_probs.iter().enumerate() {
                println!("  P_{m} = {p:.6}");
            }
            println!(
                "fringe width {:.4} um, detector step {:.4} um, waist for beta = 1: {:.2} um",
                r.fringe_width_um, r.detector_step_um, r.recommended_waist_um
            );
        }
        Command::Check => {
            let report = cmd_check(&config)?;
            println!("{report}");
            return Ok(report.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
