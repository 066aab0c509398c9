use std::sync::OnceLock;

use kdsim::eigensolver::{
    count_nodes, refine_eigenvalue, scan_spectrum, shoot_to_midpoint, solve_spectrum, Bracket,
    Parity, SolveOptions, Spectrum,
};
use kdsim::physics::{build_scaled_system, ponderomotive_strength, LaserConfig, ParticleSpecies, ScaledSystem};

fn reference(a: f64, l: f64) -> ScaledSystem {
    let e = ParticleSpecies::reference_electron();
    let f = ponderomotive_strength(&LaserConfig::default(), &e).unwrap();
    build_scaled_system(&f, &e, a, l, 1e-3).unwrap()
}

fn low_states() -> &'static Spectrum {
    static S: OnceLock<Spectrum> = OnceLock::new();
    S.get_or_init(|| solve_spectrum(&reference(500.0, 10.0), 60, &SolveOptions::default()).unwrap())
}

/// Sign of the midpoint quantity that vanishes at a level of this parity.
fn midpoint_sign(e: f64, parity: Parity, sys: &ScaledSystem) -> f64 {
    let shot = shoot_to_midpoint(e, sys).unwrap();
    match parity {
        Parity::Odd => shot.psi0.signum(),
        Parity::Even => shot.phi0.signum(),
    }
}

/// Repeated fixed-step scans of a bracket with ten times finer steps.
fn staged_grid(b: &Bracket, sys: &ScaledSystem, width: f64) -> f64 {
    let (mut lo, mut hi) = (b.lo, b.hi);
    while hi - lo > width {
        let step = (hi - lo) / 10.0;
        let first = midpoint_sign(lo, b.parity, sys);
        let mut found = false;
        for j in 1..=10 {
            let e = if j == 10 { hi } else { lo + j as f64 * step };
            if midpoint_sign(e, b.parity, sys) != first {
                hi = e;
                lo = if j == 1 { lo } else { lo + (j - 1) as f64 * step };
                found = true;
                break;
            }
        }
        assert!(found, "lost the sign change in [{lo}, {hi}]");
    }
    0.5 * (lo + hi)
}

#[test]
fn bisection_matches_staged_grid() {
    let sys = reference(500.0, 10.0);
    let brackets = scan_spectrum(600.0, 800.0, 0.5, &sys).unwrap();
    assert!(brackets.len() >= 10);
    for b in &brackets {
        let a = refine_eigenvalue(b, &sys).unwrap();
        let s = staged_grid(b, &sys, 1e-10);
        assert!((a - s).abs() <= 1e-9, "level {}: {a} vs {s}", b.index);
    }
}

#[test]
fn scan_agrees_with_dense_sign_changes() {
    let sys = reference(500.0, 10.0);
    let (lo, hi, step) = (600.0, 700.0, 0.5);
    let brackets = scan_spectrum(lo, hi, step, &sys).unwrap();
    let fine = step / 10.0;
    let n = ((hi - lo) / fine).round() as usize;
    let mut crossings = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let signs: Vec<f64> = (0..=n).map(|j| midpoint_sign(lo + j as f64 * fine, parity, &sys)).collect();
        for j in 0..n {
            if signs[j] != signs[j + 1] {
                crossings.push((lo + j as f64 * fine, parity));
            }
        }
    }
    assert_eq!(crossings.len(), brackets.len());
    for (e, parity) in crossings {
        let owners: Vec<&Bracket> = brackets
            .iter()
            .filter(|b| b.lo <= e && e + fine <= b.hi + 1e-9 && b.parity == parity)
            .collect();
        assert_eq!(owners.len(), 1, "crossing at {e}");
    }
}

#[test]
fn ground_state_is_bound() {
    let s = low_states();
    let p = &s.pairs[0];
    assert_eq!(count_nodes(&p.psi), 0);
    let e0 = s.system.physical_energy(p.e_prime);
    assert!(e0 > 0.0 && e0 < s.system.v0);
}

#[test]
fn state_fifteen_is_odd_with_fifteen_nodes() {
    let p = &low_states().pairs[15];
    assert_eq!(p.parity, Parity::Odd);
    assert_eq!(count_nodes(&p.psi), 15);
    let n = p.psi.len();
    for j in 0..n {
        assert!((p.psi[j] + p.psi[n - 1 - j]).abs() < 1e-12);
    }
}

#[test]
fn physical_levels_do_not_depend_on_a() {
    // Keeping the physical box fixed requires L to scale as sqrt(A).
    let half = solve_spectrum(&reference(250.0, 10.0 * 2f64.sqrt()), 51, &SolveOptions::default()).unwrap();
    let full = low_states();
    for n in 0..=50 {
        let a = full.pairs[n].e_physical_ev;
        let b = half.pairs[n].e_physical_ev;
        assert!((a / b - 1.0).abs() < 1e-4, "n = {n}: {a} vs {b}");
    }
}

#[test]
fn spectrum_invariants_on_low_states() {
    let s = low_states();
    let g = &s.system.grid;
    for (i, p) in s.pairs.iter().enumerate() {
        assert_eq!(p.n, i);
        assert_eq!(p.parity, Parity::of_index(i));
        assert_eq!(count_nodes(&p.psi), i);
        assert!((g.inner(&p.psi, &p.psi) - 1.0).abs() < 1e-8);
    }
    for w in s.pairs.windows(2) {
        assert!(w[1].e_prime >= w[0].e_prime);
        assert!(w[1].k_per_m >= w[0].k_per_m);
    }
    for m in 0..s.len() {
        for n in 0..m {
            assert!(s.overlap(m, n).abs() < 1e-6, "<{m}|{n}> = {}", s.overlap(m, n));
        }
    }
}
