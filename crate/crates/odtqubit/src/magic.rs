//! "Magic" trap depths: stationary points of the differential frequency
//! shift with respect to depth.
//!
//! The depth term of the shift falls linearly in U0 while the vibrational
//! term grows as sqrt(U0), so the total has a maximum at a depth U0_M where
//! d(DFS)/dU0 = 0 and the transition becomes first-order insensitive to
//! intensity noise. Four configurations admit closed forms:
//!
//! ```text
//! same state n:        U0_M = A^2 hbar^2 / (4 m),
//!                      A = (n_x+1/2)/w_x + (n_y+1/2)/w_y + (n_z+1/2)/(sqrt(2) L_f)
//! radial sideband 0-1: U0_M = hbar^2 / (m eta^2 w0^2)
//! axial sideband 0-1:  U0_M = hbar^2 / (2 m eta^2 z_R^2)
//! blue lattice ground: U0_M = pi^2 hbar^2 B^2 / (32 m),  B = sum_q sqrt(alpha_q)/d_q
//! ```
//!
//! Every closed form is cross-checked here against a bracketed root find on
//! the derivative of the corresponding depth curve.

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::species::AtomSpecies;
use crate::spectrum::VibrationalState;
use crate::trap::{Axes, TrapGeometry};

/// Which pair of fiducial states the stationarity is computed for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MagicPairing {
    /// Both hyperfine states share the vibrational state n.
    SameState(VibrationalState),
    /// States paired with n_x = 0 and n_x = 1 (one transverse phonon).
    RadialSideband,
    /// States paired with n_z = 0 and n_z = 1 (one axial phonon).
    AxialSideband,
    /// Blue lattice with the atom in the vibrational ground state.
    BlueGround,
}

/// A magic-depth request: species, a trap template whose depth is the free
/// variable, and the pairing.
#[derive(Clone, Debug)]
pub struct MagicQuery {
    pub species: AtomSpecies,
    pub trap_template: TrapGeometry,
    pub pairing: MagicPairing,
}

impl MagicQuery {
    pub fn new(species: AtomSpecies, trap_template: TrapGeometry, pairing: MagicPairing) -> Result<Self> {
        match (&pairing, &trap_template) {
            (MagicPairing::BlueGround, TrapGeometry::BlueLattice { .. }) => {}
            (MagicPairing::BlueGround, _) => {
                return Err(Error::validation("BlueGround pairing needs a blue lattice template".to_string()))
            }
            (_, TrapGeometry::RedGaussian { .. }) => {}
            (_, _) => {
                return Err(Error::validation("red-trap pairings need a red Gaussian template".to_string()))
            }
        }
        Ok(MagicQuery { species, trap_template, pairing })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionMethod {
    ClosedForm,
    Numeric,
}

/// A solved stationary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagicResult {
    /// Stationary depth U0_M, J.
    pub depth: f64,
    /// Shift at that depth, rad/s.
    pub dfs_at_magic: f64,
    /// |d(DFS)/dU0| at the solution by central difference, rad/s per J.
    pub stationarity_residual: f64,
    pub method: SolutionMethod,
}

impl MagicResult {
    /// Dimensionless residual `|d(DFS)/dU0| * U0 / |DFS|`.
    pub fn relative_residual(&self) -> f64 {
        self.stationarity_residual * self.depth / self.dfs_at_magic.abs()
    }
}

/// A differential shift as a function of trap depth.
pub trait DepthCurve {
    fn dfs(&self, depth: f64) -> f64;

    /// d(DFS)/dU0; the default is a symmetric difference with a
    /// depth-proportional step.
    fn derivative(&self, depth: f64) -> f64 {
        central_difference(&|u| self.dfs(u), depth)
    }
}

const DIFF_STEP: f64 = 1e-6;

fn central_difference(f: &dyn Fn(f64) -> f64, depth: f64) -> f64 {
    let h = DIFF_STEP * depth;
    (f(depth + h) - f(depth - h)) / (2.0 * h)
}

fn second_central_difference(f: &dyn Fn(f64) -> f64, depth: f64) -> f64 {
    let h = DIFF_STEP.sqrt() * depth;
    (f(depth + h) - 2.0 * f(depth) + f(depth - h)) / (h * h)
}

/// Curvature sign probe; a proper magic point is a maximum (negative).
pub fn dfs_curvature(curve: &dyn DepthCurve, depth: f64) -> f64 {
    second_central_difference(&|u| curve.dfs(u), depth)
}

fn result_at(curve: &dyn DepthCurve, depth: f64, method: SolutionMethod) -> MagicResult {
    MagicResult {
        depth,
        dfs_at_magic: curve.dfs(depth),
        stationarity_residual: central_difference(&|u| curve.dfs(u), depth).abs(),
        method,
    }
}

/// Same-vibrational-state shift vs depth for a red Gaussian trap:
/// `-eta U/hbar + eta A sqrt(U/m)`.
#[derive(Clone, Copy, Debug)]
pub struct SameStateCurve {
    eta: f64,
    mass: f64,
    /// A = sum of (n_q + 1/2) over the per-axis confinement lengths, 1/m.
    pub confinement_sum: f64,
}

impl SameStateCurve {
    pub fn new(species: &AtomSpecies, trap: &TrapGeometry, state: VibrationalState) -> Result<Self> {
        let TrapGeometry::RedGaussian { waist, .. } = *trap else {
            return Err(Error::validation("same-state curve applies to the red Gaussian trap".to_string()));
        };
        let lf = trap.rayleigh_length().expect("red trap has a Rayleigh length");
        Ok(Self::elliptical(species, waist, waist, lf, state))
    }

    /// Independent transverse waists; the axial confinement comes from the
    /// supplied focal length.
    pub fn elliptical(species: &AtomSpecies, waist_x: f64, waist_y: f64, focal_length: f64, state: VibrationalState) -> Self {
        let confinement_sum = (state.n_x as f64 + 0.5) / waist_x
            + (state.n_y as f64 + 0.5) / waist_y
            + (state.n_z as f64 + 0.5) / (std::f64::consts::SQRT_2 * focal_length);
        SameStateCurve { eta: species.eta, mass: species.mass, confinement_sum }
    }

    pub fn closed_form_depth(&self) -> f64 {
        let a = self.confinement_sum;
        a * a * HBAR * HBAR / (4.0 * self.mass)
    }
}

impl DepthCurve for SameStateCurve {
    fn dfs(&self, depth: f64) -> f64 {
        -self.eta * depth / HBAR + self.eta * self.confinement_sum * (depth / self.mass).sqrt()
    }

    fn derivative(&self, depth: f64) -> f64 {
        -self.eta / HBAR + self.eta * self.confinement_sum / (2.0 * (depth * self.mass).sqrt())
    }
}

/// Which sideband axis a [`SidebandCurve`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SidebandAxis {
    Radial,
    Axial,
}

/// One-phonon sideband shift vs depth: `-eta U/hbar + omega_axis(U)`, with
/// the optional half-sum of the per-axis frequency differences that the
/// closed forms drop (a relative eta/2 correction).
#[derive(Clone, Copy, Debug)]
pub struct SidebandCurve {
    eta: f64,
    mass: f64,
    /// 2/w0 (radial) or sqrt(2)/z_R (axial), 1/m.
    confinement: f64,
    /// Ground-state confinement sum, for the retained half-deltas.
    ground_sum: f64,
    /// Evaluate the exact form (with half-deltas) instead of the
    /// approximation the closed forms use.
    pub include_half_deltas: bool,
}

impl SidebandCurve {
    pub fn new(species: &AtomSpecies, trap: &TrapGeometry, axis: SidebandAxis) -> Result<Self> {
        let TrapGeometry::RedGaussian { waist, .. } = *trap else {
            return Err(Error::validation("sideband curves apply to the red Gaussian trap".to_string()));
        };
        let lf = trap.rayleigh_length().expect("red trap has a Rayleigh length");
        let confinement = match axis {
            SidebandAxis::Radial => 2.0 / waist,
            SidebandAxis::Axial => std::f64::consts::SQRT_2 / lf,
        };
        let ground_sum = SameStateCurve::elliptical(species, waist, waist, lf, VibrationalState::GROUND).confinement_sum;
        Ok(SidebandCurve {
            eta: species.eta,
            mass: species.mass,
            confinement,
            ground_sum,
            include_half_deltas: false,
        })
    }

    /// The dropped-half-deltas form the closed forms solve.
    pub fn approximate_dfs(&self, depth: f64) -> f64 {
        -self.eta * depth / HBAR + self.confinement * (depth / self.mass).sqrt()
    }

    /// Full form retaining the half-sum of the frequency differences.
    pub fn exact_dfs(&self, depth: f64) -> f64 {
        self.approximate_dfs(depth) + self.half_delta_term(depth)
    }

    /// The retained term itself: `(1/2) sum_q delta_q = eta A(0) sqrt(U/m)`.
    pub fn half_delta_term(&self, depth: f64) -> f64 {
        self.eta * self.ground_sum * (depth / self.mass).sqrt()
    }
}

impl DepthCurve for SidebandCurve {
    fn dfs(&self, depth: f64) -> f64 {
        if self.include_half_deltas {
            self.exact_dfs(depth)
        } else {
            self.approximate_dfs(depth)
        }
    }

    fn derivative(&self, depth: f64) -> f64 {
        let slope = if self.include_half_deltas {
            self.confinement + self.eta * self.ground_sum
        } else {
            self.confinement
        };
        -self.eta / HBAR + slope / (2.0 * (depth * self.mass).sqrt())
    }
}

/// Ground-state shift vs bottom potential in a blue lattice with fixed
/// barrier ratios: `-eta U/hbar + (eta pi/2) sqrt(U/2m) B`.
#[derive(Clone, Copy, Debug)]
pub struct BlueGroundCurve {
    eta: f64,
    mass: f64,
    /// B = sum_q sqrt(alpha_q)/d_q, 1/m.
    pub ratio_sum: f64,
}

impl BlueGroundCurve {
    pub fn new(species: &AtomSpecies, trap: &TrapGeometry) -> Result<Self> {
        let TrapGeometry::BlueLattice { periods, .. } = *trap else {
            return Err(Error::validation("blue-ground curve applies to the blue lattice".to_string()));
        };
        let ratios = trap.barrier_ratios().ok_or_else(|| {
            Error::validation("blue magic depth needs barrier ratios: give the template a positive bottom potential".to_string())
        })?;
        for r in ratios.to_array() {
            if !(r > 1.0) {
                return Err(Error::validation(format!("barrier ratios must exceed 1, got {r}")));
            }
        }
        let ratio_sum = ratios.zip(periods, |a, d| a.sqrt() / d).sum();
        Ok(BlueGroundCurve { eta: species.eta, mass: species.mass, ratio_sum })
    }

    pub fn closed_form_depth(&self) -> f64 {
        let b = self.ratio_sum;
        std::f64::consts::PI * std::f64::consts::PI * HBAR * HBAR * b * b / (32.0 * self.mass)
    }
}

impl DepthCurve for BlueGroundCurve {
    fn dfs(&self, depth: f64) -> f64 {
        -self.eta * depth / HBAR
            + self.eta * std::f64::consts::PI / 2.0 * (depth / (2.0 * self.mass)).sqrt() * self.ratio_sum
    }

    fn derivative(&self, depth: f64) -> f64 {
        -self.eta / HBAR + self.eta * std::f64::consts::PI * self.ratio_sum / (4.0 * (2.0 * self.mass * depth).sqrt())
    }
}

/// Closed-form magic depth for both hyperfine states in vibrational state n.
pub fn magic_depth_same_state(query: &MagicQuery) -> Result<MagicResult> {
    let MagicPairing::SameState(state) = query.pairing else {
        return Err(Error::validation("query pairing is not SameState".to_string()));
    };
    let curve = SameStateCurve::new(&query.species, &query.trap_template, state)?;
    Ok(result_at(&curve, curve.closed_form_depth(), SolutionMethod::ClosedForm))
}

/// Same-state magic depth for an elliptical focus with independent
/// transverse waists; the axial scale is L_f = pi w_x w_y / lambda.
pub fn magic_depth_same_state_elliptical(
    species: &AtomSpecies,
    wavelength: f64,
    waist_x: f64,
    waist_y: f64,
    state: VibrationalState,
) -> Result<MagicResult> {
    if !(wavelength > 0.0 && waist_x > 0.0 && waist_y > 0.0) {
        return Err(Error::validation("elliptical focus needs positive wavelength and waists".to_string()));
    }
    let focal_length = std::f64::consts::PI * waist_x * waist_y / wavelength;
    let curve = SameStateCurve::elliptical(species, waist_x, waist_y, focal_length, state);
    Ok(result_at(&curve, curve.closed_form_depth(), SolutionMethod::ClosedForm))
}

/// Shift-vs-depth curve for a one-phonon sideband pairing.
pub fn sideband_dfs_curve(species: &AtomSpecies, trap: &TrapGeometry, axis: SidebandAxis) -> Result<SidebandCurve> {
    SidebandCurve::new(species, trap, axis)
}

/// Closed-form magic depth `hbar^2/(m eta^2 w0^2)` for the radial sideband.
pub fn magic_depth_radial_sideband(query: &MagicQuery) -> Result<MagicResult> {
    if query.pairing != MagicPairing::RadialSideband {
        return Err(Error::validation("query pairing is not RadialSideband".to_string()));
    }
    let TrapGeometry::RedGaussian { waist, .. } = query.trap_template else {
        return Err(Error::validation("radial sideband needs a red Gaussian template".to_string()));
    };
    let curve = SidebandCurve::new(&query.species, &query.trap_template, SidebandAxis::Radial)?;
    let eta = query.species.eta;
    let depth = HBAR * HBAR / (query.species.mass * eta * eta * waist * waist);
    Ok(result_at(&curve, depth, SolutionMethod::ClosedForm))
}

/// Closed-form magic depth `hbar^2/(2 m eta^2 z_R^2)` for the axial sideband.
pub fn magic_depth_axial_sideband(query: &MagicQuery) -> Result<MagicResult> {
    if query.pairing != MagicPairing::AxialSideband {
        return Err(Error::validation("query pairing is not AxialSideband".to_string()));
    }
    let curve = SidebandCurve::new(&query.species, &query.trap_template, SidebandAxis::Axial)?;
    let z_r = query
        .trap_template
        .rayleigh_length()
        .ok_or_else(|| Error::validation("axial sideband needs a red Gaussian template".to_string()))?;
    let eta = query.species.eta;
    let depth = HBAR * HBAR / (2.0 * query.species.mass * eta * eta * z_r * z_r);
    Ok(result_at(&curve, depth, SolutionMethod::ClosedForm))
}

/// Blue-lattice ground-state result: the magic bottom potential plus the
/// barrier heights it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlueMagicResult {
    pub result: MagicResult,
    /// Barrier heights alpha_q * U0_M, J.
    pub barriers: Axes,
}

/// Closed-form magic bottom potential `pi^2 hbar^2 B^2 / (32 m)` for the
/// ground-state atom in a blue lattice with fixed barrier ratios.
pub fn magic_depth_blue(query: &MagicQuery) -> Result<BlueMagicResult> {
    if query.pairing != MagicPairing::BlueGround {
        return Err(Error::validation("query pairing is not BlueGround".to_string()));
    }
    let curve = BlueGroundCurve::new(&query.species, &query.trap_template)?;
    let ratios = query.trap_template.barrier_ratios().expect("checked by curve constructor");
    let depth = curve.closed_form_depth();
    Ok(BlueMagicResult {
        result: result_at(&curve, depth, SolutionMethod::ClosedForm),
        barriers: ratios.scale(depth),
    })
}

/// Convenience dispatcher over the pairing.
pub fn magic_depth(query: &MagicQuery) -> Result<MagicResult> {
    match query.pairing {
        MagicPairing::SameState(_) => magic_depth_same_state(query),
        MagicPairing::RadialSideband => magic_depth_radial_sideband(query),
        MagicPairing::AxialSideband => magic_depth_axial_sideband(query),
        MagicPairing::BlueGround => magic_depth_blue(query).map(|b| b.result),
    }
}

/// Default search bracket around a closed-form guess.
pub fn default_bracket(guess: f64) -> (f64, f64) {
    (1e-3 * guess, 1e4 * guess)
}

/// Independent stationary-point search: bisect the (analytic or
/// finite-difference) derivative of `curve` inside `bracket` to a relative
/// depth tolerance of 1e-12. Returns `Ok(None)` when the derivative does not
/// change sign in the bracket (no interior stationary point).
pub fn find_stationary_depth_numeric(curve: &dyn DepthCurve, bracket: (f64, f64)) -> Result<Option<MagicResult>> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::validation(format!("bracket must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    let mut g_lo = curve.derivative(lo);
    let g_hi = curve.derivative(hi);
    if !(g_lo.is_finite() && g_hi.is_finite()) {
        return Err(Error::validation("derivative is not finite on the bracket".to_string()));
    }
    if g_lo == 0.0 {
        return Ok(Some(result_at(curve, lo, SolutionMethod::Numeric)));
    }
    if g_hi == 0.0 {
        return Ok(Some(result_at(curve, hi, SolutionMethod::Numeric)));
    }
    if g_lo.signum() == g_hi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-13 * mid {
            break;
        }
        let g_mid = curve.derivative(mid);
        if g_mid == 0.0 {
            return Ok(Some(result_at(curve, mid, SolutionMethod::Numeric)));
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(result_at(curve, 0.5 * (lo + hi), SolutionMethod::Numeric)))
}
