//! CODATA 2018 physical constants, SI units.

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Neutral helium-4 atom.
pub const HELIUM4_ATOM_MASS: f64 = 4.002_603_254_13 * ATOMIC_MASS_UNIT;
/// Singly ionized helium-4.
pub const HELIUM4_ION_MASS: f64 = HELIUM4_ATOM_MASS - ELECTRON_MASS;

/// Joules per electron-volt.
pub const EV: f64 = ELEMENTARY_CHARGE;
