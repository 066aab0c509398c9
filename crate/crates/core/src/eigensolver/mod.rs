//! Bound states of the scaled ponderomotive equation in a hard-wall box.

mod fit;
mod shooting;
mod spectrum;

pub use fit::{fit_quadratic, fit_quadratic_points, QuadraticFit};
pub use shooting::{rk4_step, shoot_to_midpoint, MidpointShot, ShootingState, OVERFLOW_GUARD};
pub use spectrum::{
    assemble_eigenpair, count_nodes, refine_eigenvalue, scan_spectrum, solve_spectrum, Bracket,
    EigenPair, Parity, SolveOptions, Spectrum, CLUSTER_GAP, DEFAULT_SCAN_STEP,
};
