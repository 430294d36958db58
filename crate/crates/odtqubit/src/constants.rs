//! Physical constants (CODATA 2018), SI units throughout.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Boltzmann constant, J/K (exact since the 2019 SI redefinition).
pub const K_B: f64 = 1.380649e-23;

/// Speed of light in vacuum, m/s (exact).
pub const C: f64 = 299_792_458.0;

/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.66053906660e-27;

/// The fixed constant set used by every computation in this crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub c: f64,
}

/// CODATA values; immutable by construction.
pub const CODATA: PhysicalConstants = PhysicalConstants {
    hbar: HBAR,
    k_b: K_B,
    c: C,
};
