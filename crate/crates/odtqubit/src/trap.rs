//! Trap geometry and the derived harmonic-oscillator quantities.
//!
//! Two trap kinds are modeled. A red-detuned focused Gaussian beam traps the
//! atom at the intensity maximum with depth U0 and oscillation frequencies
//!
//! ```text
//! omega_x = omega_y = (2/w0) * sqrt(U0/m),    omega_z = (sqrt(2)/L_f) * sqrt(U0/m)
//! ```
//!
//! with `L_f = pi w0^2 / lambda` the Rayleigh length. A blue-detuned optical
//! lattice traps the atom at an intensity minimum with residual bottom
//! potential U0 surrounded by barriers U_q, giving per-axis frequencies
//!
//! ```text
//! omega_q = (sqrt(2) pi / d_q) * sqrt(U_q/m)
//! ```
//!
//! where `d_q` is the lattice period on that axis.

use crate::constants::C;
use crate::error::{Error, Result};
use crate::species::AtomSpecies;

/// One value per trap axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axes {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Axes {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Axes { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Axes { x: v, y: v, z: v }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Axes::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn zip(self, other: Axes, f: impl Fn(f64, f64) -> f64) -> Self {
        Axes::new(f(self.x, other.x), f(self.y, other.y), f(self.z, other.z))
    }

    pub fn sum(self) -> f64 {
        self.x + self.y + self.z
    }

    pub fn scale(self, s: f64) -> Self {
        self.map(|v| v * s)
    }
}

impl From<[f64; 3]> for Axes {
    fn from(a: [f64; 3]) -> Self {
        Axes::new(a[0], a[1], a[2])
    }
}

/// Trap geometry with all lengths in meters and potentials in joules.
#[derive(Clone, Debug, PartialEq)]
pub enum TrapGeometry {
    /// Focused red-detuned Gaussian beam; `depth` is the magnitude of the
    /// potential minimum (U0 > 0).
    RedGaussian { wavelength: f64, waist: f64, depth: f64 },
    /// Blue-detuned optical lattice; `barriers` are the per-axis barrier
    /// heights U_q and `bottom` the residual potential U0 >= 0 at the site.
    BlueLattice { periods: Axes, barriers: Axes, bottom: f64 },
}

impl TrapGeometry {
    pub fn red_gaussian(wavelength: f64, waist: f64, depth: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(waist > 0.0) {
            return Err(Error::validation(format!(
                "red Gaussian trap lengths must be > 0 (wavelength {wavelength} m, waist {waist} m)"
            )));
        }
        if !(depth > 0.0) {
            return Err(Error::validation(format!("red Gaussian trap depth must be > 0 J, got {depth}")));
        }
        Ok(TrapGeometry::RedGaussian { wavelength, waist, depth })
    }

    /// Lattice with explicit barrier heights; covers the perfectly aligned
    /// case `bottom = 0`.
    pub fn blue_lattice(periods: Axes, barriers: Axes, bottom: f64) -> Result<Self> {
        for (label, v) in [("d_x", periods.x), ("d_y", periods.y), ("d_z", periods.z)] {
            if !(v > 0.0) {
                return Err(Error::validation(format!("lattice period {label} must be > 0 m, got {v}")));
            }
        }
        for (label, v) in [("U_x", barriers.x), ("U_y", barriers.y), ("U_z", barriers.z)] {
            if !(v > 0.0) {
                return Err(Error::validation(format!(
                    "lattice barrier {label} must be > 0 J, got {v} (frequencies undefined otherwise)"
                )));
            }
        }
        if !(bottom >= 0.0) {
            return Err(Error::validation(format!("lattice bottom potential must be >= 0 J, got {bottom}")));
        }
        if barriers.x <= bottom || barriers.y <= bottom || barriers.z <= bottom {
            return Err(Error::validation(
                "lattice barriers must exceed the bottom potential".to_string(),
            ));
        }
        Ok(TrapGeometry::BlueLattice { periods, barriers, bottom })
    }

    /// Lattice parametrized by barrier ratios alpha_q = U_q/U0 (> 1) and a
    /// strictly positive bottom potential. With `bottom = 0` the barrier
    /// heights alpha_q * U0 would vanish and the frequencies be undefined, so
    /// that case is rejected; use [`TrapGeometry::blue_lattice`] with explicit
    /// barriers instead.
    pub fn blue_lattice_from_ratios(periods: Axes, ratios: Axes, bottom: f64) -> Result<Self> {
        for (label, v) in [("alpha_x", ratios.x), ("alpha_y", ratios.y), ("alpha_z", ratios.z)] {
            if !(v > 1.0) {
                return Err(Error::validation(format!("barrier ratio {label} must be > 1, got {v}")));
            }
        }
        if !(bottom > 0.0) {
            return Err(Error::validation(
                "ratio-parametrized lattice needs bottom > 0 J; barrier heights (and so the trap frequencies) are undefined otherwise".to_string(),
            ));
        }
        Self::blue_lattice(periods, ratios.scale(bottom), bottom)
    }

    /// The depth figure the differential shift is linear in: U0 for the red
    /// trap, the bottom potential for the lattice.
    pub fn depth(&self) -> f64 {
        match *self {
            TrapGeometry::RedGaussian { depth, .. } => depth,
            TrapGeometry::BlueLattice { bottom, .. } => bottom,
        }
    }

    /// Rayleigh length of the focused beam; `None` for a lattice.
    pub fn rayleigh_length(&self) -> Option<f64> {
        match *self {
            TrapGeometry::RedGaussian { wavelength, waist, .. } => Some(rayleigh_length_unchecked(waist, wavelength)),
            TrapGeometry::BlueLattice { .. } => None,
        }
    }

    /// Barrier-to-bottom ratios; `None` for a red trap or an aligned lattice
    /// with zero bottom.
    pub fn barrier_ratios(&self) -> Option<Axes> {
        match *self {
            TrapGeometry::RedGaussian { .. } => None,
            TrapGeometry::BlueLattice { barriers, bottom, .. } => {
                (bottom > 0.0).then(|| barriers.scale(1.0 / bottom))
            }
        }
    }

    /// Same geometry at a different depth. For the lattice the barrier ratios
    /// are held fixed, so the current bottom must be > 0.
    pub fn with_depth(&self, depth: f64) -> Result<Self> {
        match *self {
            TrapGeometry::RedGaussian { wavelength, waist, .. } => Self::red_gaussian(wavelength, waist, depth),
            TrapGeometry::BlueLattice { periods, .. } => {
                let ratios = self.barrier_ratios().ok_or_else(|| {
                    Error::validation(
                        "cannot rescale a lattice with zero bottom potential: barrier ratios are undefined".to_string(),
                    )
                })?;
                Self::blue_lattice_from_ratios(periods, ratios, depth)
            }
        }
    }

    /// Non-fatal geometry diagnostics. A focus with L_f <= w0 is tighter than
    /// the paraxial picture supports; flagged but not rejected.
    pub fn geometry_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if let TrapGeometry::RedGaussian { wavelength, waist, .. } = *self {
            let lf = rayleigh_length_unchecked(waist, wavelength);
            if lf <= waist {
                warnings.push(format!(
                    "Rayleigh length {lf:.3e} m does not exceed the waist {waist:.3e} m; the paraxial trap model is marginal here"
                ));
            }
        }
        warnings
    }
}

fn rayleigh_length_unchecked(waist: f64, wavelength: f64) -> f64 {
    std::f64::consts::PI * waist * waist / wavelength
}

/// Rayleigh length L_f = pi w0^2 / lambda of a focused Gaussian beam.
pub fn rayleigh_length(waist: f64, wavelength: f64) -> Result<f64> {
    if !(waist > 0.0) || !(wavelength > 0.0) {
        return Err(Error::domain(format!(
            "rayleigh_length needs waist > 0 and wavelength > 0, got waist {waist} m, wavelength {wavelength} m"
        )));
    }
    Ok(rayleigh_length_unchecked(waist, wavelength))
}

/// Ground-state light shift of a two-level atom,
/// `dE = (3 pi c^2 / 2 omega0^3) (Gamma/Delta) I`.
///
/// The sign follows the detuning: red detuning (Delta < 0) lowers the ground
/// state. Resonant light (Delta = 0) has no dispersive shift and is rejected.
pub fn light_shift(intensity: f64, detuning: f64, linewidth: f64, resonance: f64) -> Result<f64> {
    if detuning == 0.0 {
        return Err(Error::domain("resonant light has no dispersive shift".to_string()));
    }
    if !(linewidth > 0.0) {
        return Err(Error::domain(format!("linewidth must be > 0 rad/s, got {linewidth}")));
    }
    if !(resonance > 0.0) {
        return Err(Error::domain(format!("resonance frequency must be > 0 rad/s, got {resonance}")));
    }
    if !(intensity >= 0.0) {
        return Err(Error::domain(format!("intensity must be >= 0 W/m^2, got {intensity}")));
    }
    Ok(3.0 * std::f64::consts::PI * C * C / (2.0 * resonance.powi(3)) * (linewidth / detuning) * intensity)
}

/// Peak intensity that produces a given trap depth, inverting [`light_shift`]
/// for the stored reference line: `I = 2 omega0^3 |Delta| U0 / (3 pi c^2 Gamma)`.
pub fn intensity_for_depth(species: &AtomSpecies, trap_wavelength: f64, depth: f64) -> Result<f64> {
    let line = species.line.ok_or_else(|| {
        Error::validation(format!("species `{}` has no reference line data for the intensity conversion", species.name))
    })?;
    if !(trap_wavelength > 0.0) {
        return Err(Error::domain(format!("trap wavelength must be > 0 m, got {trap_wavelength}")));
    }
    if !(depth >= 0.0) {
        return Err(Error::domain(format!("depth must be >= 0 J, got {depth}")));
    }
    let omega0 = 2.0 * std::f64::consts::PI * C / line.wavelength;
    let omega_trap = 2.0 * std::f64::consts::PI * C / trap_wavelength;
    let detuning = omega_trap - omega0;
    if detuning == 0.0 {
        return Err(Error::domain("trap wavelength coincides with the reference line".to_string()));
    }
    Ok(2.0 * omega0.powi(3) * detuning.abs() * depth / (3.0 * std::f64::consts::PI * C * C * line.linewidth))
}

/// Harmonic oscillation frequencies (rad/s) of the atom in the trap.
pub fn trap_frequencies(species: &AtomSpecies, trap: &TrapGeometry) -> Result<Axes> {
    match *trap {
        TrapGeometry::RedGaussian { wavelength, waist, depth } => {
            let lf = rayleigh_length_unchecked(waist, wavelength);
            let v = (depth / species.mass).sqrt();
            let radial = 2.0 / waist * v;
            let axial = std::f64::consts::SQRT_2 / lf * v;
            Ok(Axes::new(radial, radial, axial))
        }
        TrapGeometry::BlueLattice { periods, barriers, .. } => {
            let freq = |d: f64, u: f64| std::f64::consts::SQRT_2 * std::f64::consts::PI / d * (u / species.mass).sqrt();
            Ok(Axes::new(
                freq(periods.x, barriers.x),
                freq(periods.y, barriers.y),
                freq(periods.z, barriers.z),
            ))
        }
    }
}
