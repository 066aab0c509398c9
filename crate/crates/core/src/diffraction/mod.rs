//! Diffraction orders, Bessel order probabilities and beam planning.

pub mod bessel;
mod pattern;
mod planner;

pub use bessel::{bessel_j, bessel_j_all, bessel_j_series};
pub use pattern::{
    amplitude_check, detect_peaks, AmplitudeReport, AmplitudeTolerance, DiffractionPattern,
    OrderComparison, Peak, DEFAULT_PROMINENCE,
};
pub use planner::{
    de_broglie_wavelength, fringe_width, interaction_strength, interaction_strength_from_depth,
    linspace, order_probabilities, order_probability, plan, sweep, waist_for_unit_beta,
    FringeConvention, PlanReport, SweepParameter, SweepRow, PLANNED_ORDERS, STEPS_PER_FRINGE,
};
