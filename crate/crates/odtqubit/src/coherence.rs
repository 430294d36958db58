//! Ramsey interference, dephasing figures, intensity-noise sensitivity, and
//! pulse-sequence composition.
//!
//! A Ramsey sequence on an atom in vibrational state n precesses at
//! `delta_n = delta_0 + sum_q n_q delta_q`, giving the single-state signal
//! `w = cos(delta_n t)`. Averaging over the Bose distribution has the closed
//! form
//!
//! ```text
//! w(t) = Re[ e^(i delta_0 t) / prod_q (<n_q> + 1 - <n_q> e^(i delta_q t)) ]
//! ```
//!
//! whose fringe amplitude collapses on the few-ms scale yet revives whenever
//! every delta_q t returns to a multiple of 2 pi: the thermal "dephasing" is
//! a deterministic overlap of discrete frequencies, not an irreversible
//! decay. The short-time approximation replaces the product by a Lorentzian
//! envelope and yields the 1/e time
//!
//! ```text
//! T2* = 2 sqrt((e-1)/3) * 2 hbar / (eta k_B T).
//! ```
//!
//! Intensity noise shifts all states together: a depth excursion dU0 moves
//! the transition by -eta dU0/hbar in a red trap (homogeneous dephasing time
//! T2' = sqrt(2) hbar/(eta sigma_U0)), while an aligned blue lattice couples
//! only through the barrier-height dependence of the phonon term, suppressed
//! by (n_q + 1/2) hbar omega_q / (2 U_q).

use std::f64::consts::{E, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::gate::rotation_matrix;
use crate::species::AtomSpecies;
use crate::spectrum::{
    differential_trap_frequency, thermal_average_over_detunings, ThermalEnsemble, VibrationalState,
};
use crate::trap::{trap_frequencies, Axes, TrapGeometry};

/// Everything a Ramsey evaluation needs: the drive offset from the motional
/// ground-state transition, the per-axis frequency differences, and the
/// thermal ensemble.
#[derive(Clone, Debug)]
pub struct RamseyConfig {
    /// delta_0, drive detuning from the n = 0 transition, rad/s.
    pub base_detuning: f64,
    /// delta_q per axis, rad/s.
    pub deltas: Axes,
    pub ensemble: ThermalEnsemble,
    /// eta k_B T / (4 hbar); equals <n_q> delta_q on every axis of a thermal
    /// trap ensemble, and is the rate in the isotropic envelope.
    pub iso_kappa: f64,
}

impl RamseyConfig {
    pub fn for_trap(
        species: &AtomSpecies,
        trap: &TrapGeometry,
        temperature: f64,
        base_detuning: f64,
        tail_eps: f64,
    ) -> Result<Self> {
        if !base_detuning.is_finite() {
            return Err(Error::domain("base detuning must be finite".to_string()));
        }
        let deltas = differential_trap_frequency(species, trap)?;
        let ensemble = ThermalEnsemble::build(species, trap, temperature, tail_eps)?;
        let iso_kappa = species.eta * K_B * temperature / (4.0 * HBAR);
        Ok(RamseyConfig { base_detuning, deltas, ensemble, iso_kappa })
    }

    /// Assemble from explicit parts. The isotropic rate is taken as the mean
    /// of the per-axis <n_q> delta_q, which reproduces eta k_B T/(4 hbar)
    /// exactly for thermal trap ensembles.
    pub fn from_parts(base_detuning: f64, ensemble: ThermalEnsemble, deltas: Axes) -> Self {
        let means = ensemble.mean_occupation();
        let iso_kappa = means.zip(deltas, |n, d| n * d).sum() / 3.0;
        RamseyConfig { base_detuning, deltas, ensemble, iso_kappa }
    }

    /// Per-axis fringe-collapse rates kappa_q = <n_q> delta_q.
    pub fn kappas(&self) -> Axes {
        self.ensemble.mean_occupation().zip(self.deltas, |n, d| n * d)
    }

    /// Detuning of one vibrational state's transition from the drive.
    pub fn state_detuning(&self, state: VibrationalState) -> f64 {
        self.base_detuning + state.occupations().zip(self.deltas, |n, d| n * d).sum()
    }
}

/// Single-state Ramsey signal `cos(delta_n t)`.
pub fn ramsey_single_state(delta_n: f64, t: f64) -> f64 {
    (delta_n * t).cos()
}

/// Thermal Ramsey signal, closed form of the full Bose average (no
/// truncation: uses the untruncated per-axis means).
pub fn ramsey_thermal_exact(config: &RamseyConfig, t: f64) -> f64 {
    let means = config.ensemble.mean_occupation();
    let factor = |mean: f64, delta: f64| {
        Complex64::new(mean + 1.0, 0.0) - mean * Complex64::from_polar(1.0, delta * t)
    };
    let denom = factor(means.x, config.deltas.x) * factor(means.y, config.deltas.y) * factor(means.z, config.deltas.z);
    (Complex64::from_polar(1.0, config.base_detuning * t) / denom).re
}

/// Short-time approximations to the thermal signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShortTimeSignal {
    /// Per-axis form: cos[(delta_0 + sum <n_q> delta_q) t] / (1 + sum (<n_q> delta_q t)^2).
    pub per_axis: f64,
    /// Isotropic form with denominator 1 + 3 (eta k_B T t / 4 hbar)^2.
    pub isotropic: f64,
}

/// Evaluate both short-time forms; valid for t well below 1/delta_q.
pub fn ramsey_short_time(config: &RamseyConfig, t: f64) -> ShortTimeSignal {
    let kappas = config.kappas();
    let phase = ((config.base_detuning + kappas.sum()) * t).cos();
    let per_axis = phase / (1.0 + kappas.map(|k| (k * t) * (k * t)).sum());
    let isotropic = phase / (1.0 + 3.0 * (config.iso_kappa * t) * (config.iso_kappa * t));
    ShortTimeSignal { per_axis, isotropic }
}

/// Exact fringe-amplitude bound
/// `1 / prod_q sqrt(1 + 2 <n_q>(<n_q>+1)(1 - cos delta_q t))`;
/// |w(t)| never exceeds it.
pub fn envelope_exact(config: &RamseyConfig, t: f64) -> f64 {
    let means = config.ensemble.mean_occupation();
    let factor = |mean: f64, delta: f64| 1.0 + 2.0 * mean * (mean + 1.0) * (1.0 - (delta * t).cos());
    1.0 / (factor(means.x, config.deltas.x) * factor(means.y, config.deltas.y) * factor(means.z, config.deltas.z))
        .sqrt()
}

/// Envelope of the per-axis short-time form, `1 / (1 + sum (<n_q> delta_q t)^2)`.
pub fn envelope_short_time(config: &RamseyConfig, t: f64) -> f64 {
    1.0 / (1.0 + config.kappas().map(|k| (k * t) * (k * t)).sum())
}

/// Envelope of the isotropic short-time form.
pub fn envelope_isotropic(config: &RamseyConfig, t: f64) -> f64 {
    1.0 / (1.0 + 3.0 * (config.iso_kappa * t) * (config.iso_kappa * t))
}

/// A dephasing figure that may be genuinely absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoherenceTime {
    Finite(f64),
    /// No dephasing from this mechanism (zero temperature / zero noise).
    Infinite,
}

impl CoherenceTime {
    pub fn secs(self) -> Option<f64> {
        match self {
            CoherenceTime::Finite(t) => Some(t),
            CoherenceTime::Infinite => None,
        }
    }
}

/// Prefactor 2 sqrt((e-1)/3) = 1.5136... of the thermal dephasing time.
pub fn t2_star_prefactor() -> f64 {
    2.0 * ((E - 1.0) / 3.0).sqrt()
}

/// Thermal (fringe-collapse) dephasing time
/// `T2* = 2 sqrt((e-1)/3) * 2 hbar / (eta k_B T)`, the 1/e point of the
/// isotropic short-time envelope. Zero temperature dephases nothing.
pub fn dephasing_time_t2_star(eta: f64, temperature: f64) -> Result<CoherenceTime> {
    if !(eta > 0.0) {
        return Err(Error::domain(format!("eta must be > 0, got {eta}")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::domain(format!("temperature must be >= 0 K, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(CoherenceTime::Infinite);
    }
    Ok(CoherenceTime::Finite(t2_star_prefactor() * 2.0 * HBAR / (eta * K_B * temperature)))
}

/// Homogeneous dephasing time from trap-depth noise,
/// `T2' = sqrt(2)/sigma_DFS` with `sigma_DFS = eta sigma_U0 / hbar`.
pub fn homogeneous_t2(eta: f64, depth_sigma: f64) -> Result<CoherenceTime> {
    if !(eta > 0.0) {
        return Err(Error::domain(format!("eta must be > 0, got {eta}")));
    }
    if !(depth_sigma >= 0.0) {
        return Err(Error::domain(format!("depth standard deviation must be >= 0 J, got {depth_sigma}")));
    }
    if depth_sigma == 0.0 {
        return Ok(CoherenceTime::Infinite);
    }
    Ok(CoherenceTime::Finite(2.0f64.sqrt() * HBAR / (eta * depth_sigma)))
}

/// A commensurate structure detected in the three deltas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Revival {
    /// First full-amplitude revival, 2 pi / gcf, seconds.
    pub time: f64,
    /// Greatest common frequency: every delta_q is an integer multiple of it.
    pub gcf: f64,
    /// The integer multiples (x, y, z).
    pub harmonics: [u64; 3],
}

/// Integer bound for the commensurability search.
pub const REVIVAL_HARMONIC_BOUND: u64 = 1_000_000;

/// Find the largest frequency g such that every delta_q is within `tolerance`
/// (relative) of an integer multiple of g, using continued-fraction
/// convergents of the pairwise ratios with integers bounded by
/// [`REVIVAL_HARMONIC_BOUND`]. Generic trap geometries have irrational
/// frequency ratios, so `None` is an expected, meaningful outcome.
pub fn revival_time(deltas: Axes, tolerance: f64) -> Result<Option<Revival>> {
    if !(tolerance > 0.0 && tolerance <= 1e-2) {
        return Err(Error::domain(format!("revival tolerance must lie in (0, 1e-2], got {tolerance}")));
    }
    let d = deltas.to_array();
    if !d.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return Err(Error::domain("all deltas must be positive and finite".to_string()));
    }

    // smallest delta as the base keeps the ratios >= 1
    let base_idx = (0..3).min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap()).unwrap();
    let others: Vec<usize> = (0..3).filter(|&i| i != base_idx).collect();

    let mut fracs = [(1u64, 1u64); 2];
    for (slot, &i) in fracs.iter_mut().zip(&others) {
        match rational_approximation(d[i] / d[base_idx], tolerance, REVIVAL_HARMONIC_BOUND) {
            Some(pq) => *slot = pq,
            None => return Ok(None),
        }
    }

    let denom = match lcm_checked(fracs[0].1, fracs[1].1, REVIVAL_HARMONIC_BOUND) {
        Some(l) => l,
        None => return Ok(None),
    };
    let mut harmonics = [0u64; 3];
    harmonics[base_idx] = denom;
    for (k, &i) in others.iter().enumerate() {
        let (p, q) = fracs[k];
        let mult = p.checked_mul(denom / q);
        match mult {
            Some(m) if m <= REVIVAL_HARMONIC_BOUND => harmonics[i] = m,
            _ => return Ok(None),
        }
    }

    let gcf = d[base_idx] / denom as f64;
    for i in 0..3 {
        if (d[i] - harmonics[i] as f64 * gcf).abs() > tolerance * d[i] {
            return Ok(None);
        }
    }
    Ok(Some(Revival { time: TAU / gcf, gcf, harmonics }))
}

/// Best rational p/q ~ x (x >= 1) with |x - p/q| <= rel_tol * x and q bounded,
/// via continued-fraction convergents (smallest q first, hence largest gcf).
fn rational_approximation(x: f64, rel_tol: f64, bound: u64) -> Option<(u64, u64)> {
    debug_assert!(x >= 1.0);
    let (mut h0, mut h1) = (1u64, x.floor() as u64);
    let (mut k0, mut k1) = (0u64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if (x - h1 as f64 / k1 as f64).abs() <= rel_tol * x {
            return Some((h1, k1));
        }
        if frac == 0.0 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        if a > bound as f64 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if h2 > bound || k2 > bound {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    ((x - h1 as f64 / k1 as f64).abs() <= rel_tol * x).then_some((h1, k1))
}

fn lcm_checked(a: u64, b: u64, bound: u64) -> Option<u64> {
    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    let l = (a / gcd(a, b)).checked_mul(b)?;
    (l <= bound).then_some(l)
}

/// Shift excursion caused by a trap-depth excursion in a red trap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RedFluctuation {
    /// First-order response including the sqrt(U0) dependence of the phonon
    /// term: `-eta dU0/hbar * (1 - sum (n_q + 1/2) hbar omega_q / (4 U0))`.
    /// The bracket is d(DFS)/dU0 of the shift model itself, so it vanishes
    /// at the magic depth.
    pub exact: f64,
    /// Depth term alone, `-eta dU0/hbar`.
    pub linearized: f64,
}

pub fn dfs_fluctuation_red(
    species: &AtomSpecies,
    trap: &TrapGeometry,
    state: VibrationalState,
    depth_change: f64,
) -> Result<RedFluctuation> {
    let TrapGeometry::RedGaussian { depth, .. } = *trap else {
        return Err(Error::validation("depth-noise response of this form applies to the red Gaussian trap".to_string()));
    };
    let omegas = trap_frequencies(species, trap)?;
    // d omega/dU0 = omega/(2 U0) and delta_q = (eta/2) omega_q give the
    // phonon term's derivative sum (n_q + 1/2) hbar omega_q / (4 U0)
    let phonon_fraction = state.occupations().zip(omegas, |n, w| (n + 0.5) * HBAR * w).sum() / (4.0 * depth);
    let linearized = -species.eta * depth_change / HBAR;
    Ok(RedFluctuation { exact: linearized * (1.0 - phonon_fraction), linearized })
}

/// Shift excursion in a perfectly aligned blue lattice (zero bottom), where
/// only the barrier heights couple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlueFluctuation {
    /// First-order response `eta * sum_q (dU_q/hbar) (n_q + 1/2) hbar
    /// omega_q / (4 U_q)`, rad/s (the derivative of the phonon term in each
    /// barrier height).
    pub value: f64,
    /// |value| relative to the red-trap response `eta dU/hbar` at the mean
    /// barrier excursion; for uniform dU_q this equals
    /// `sum_q (n_q + 1/2) hbar omega_q / (4 U_q)`, far below one.
    pub suppression_ratio: f64,
}

pub fn dfs_fluctuation_blue(
    species: &AtomSpecies,
    trap: &TrapGeometry,
    state: VibrationalState,
    barrier_changes: Axes,
) -> Result<BlueFluctuation> {
    let TrapGeometry::BlueLattice { barriers, bottom, .. } = *trap else {
        return Err(Error::validation("barrier-noise response applies to the blue lattice".to_string()));
    };
    if bottom != 0.0 {
        return Err(Error::validation(format!(
            "barrier-only noise response assumes a perfectly aligned lattice (bottom = 0), got bottom = {bottom} J"
        )));
    }
    let omegas = trap_frequencies(species, trap)?;
    // (dU_q/hbar) * (n_q + 1/2) hbar omega_q / (4 U_q) collapses to
    // dU_q (n_q + 1/2) omega_q / (4 U_q)
    let per_axis = |du: f64, n: f64, omega: f64, barrier: f64| du * (n + 0.5) * omega / (4.0 * barrier);
    let value = species.eta
        * (per_axis(barrier_changes.x, state.n_x as f64, omegas.x, barriers.x)
            + per_axis(barrier_changes.y, state.n_y as f64, omegas.y, barriers.y)
            + per_axis(barrier_changes.z, state.n_z as f64, omegas.z, barriers.z));
    let mean_change = barrier_changes.map(f64::abs).sum() / 3.0;
    let suppression_ratio = if mean_change == 0.0 {
        0.0
    } else {
        value.abs() * HBAR / (species.eta * mean_change)
    };
    Ok(BlueFluctuation { value, suppression_ratio })
}

/// Zero-mean Gaussian intensity-noise model, parametrized by the standard
/// deviation of what actually fluctuates: the trap depth (red traps) or the
/// per-axis barrier heights (blue lattices).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    /// Depth noise with standard deviation sigma_U0, J.
    Depth { sigma: f64 },
    /// Per-axis barrier-height noise, J.
    Barriers { sigma: Axes },
}

impl NoiseModel {
    pub fn depth(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::domain(format!("noise standard deviation must be >= 0 J, got {sigma}")));
        }
        Ok(NoiseModel::Depth { sigma })
    }

    pub fn barriers(sigma: Axes) -> Result<Self> {
        if !sigma.to_array().iter().all(|&s| s >= 0.0) {
            return Err(Error::domain("barrier noise deviations must be >= 0 J".to_string()));
        }
        Ok(NoiseModel::Barriers { sigma })
    }
}

/// What a noise model does to the qubit transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseResponse {
    /// Red-trap depth noise: the shift deviation and the homogeneous
    /// dephasing time it implies.
    Homogeneous { sigma_dfs: f64, t2_prime: CoherenceTime },
    /// Aligned-lattice barrier noise: the suppressed shift excursion at one
    /// standard deviation of each barrier.
    BarrierSuppressed(BlueFluctuation),
}

/// Evaluate a noise model against a trap. Depth noise pairs with the red
/// trap, barrier noise with the aligned blue lattice.
pub fn noise_response(
    species: &AtomSpecies,
    trap: &TrapGeometry,
    state: VibrationalState,
    model: &NoiseModel,
) -> Result<NoiseResponse> {
    match *model {
        NoiseModel::Depth { sigma } => {
            if !matches!(trap, TrapGeometry::RedGaussian { .. }) {
                return Err(Error::validation("depth noise pairs with the red Gaussian trap".to_string()));
            }
            Ok(NoiseResponse::Homogeneous {
                sigma_dfs: species.eta * sigma / HBAR,
                t2_prime: homogeneous_t2(species.eta, sigma)?,
            })
        }
        NoiseModel::Barriers { sigma } => {
            Ok(NoiseResponse::BarrierSuppressed(dfs_fluctuation_blue(species, trap, state, sigma)?))
        }
    }
}

/// One segment of a pulse sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    /// Constant drive at `rabi` for `duration`; the per-state detuning is the
    /// same delta_n as in free precession.
    Pulse { rabi: f64, duration: f64 },
    /// Free precession about the w axis at delta_n.
    Free { duration: f64 },
}

/// pi/2 pulse referenced to the motional ground state: duration pi/(2 rabi).
pub fn pi2_pulse(rabi: f64) -> Segment {
    Segment::Pulse { rabi, duration: std::f64::consts::FRAC_PI_2 / rabi }
}

/// pi pulse: duration pi/rabi.
pub fn pi_pulse(rabi: f64) -> Segment {
    Segment::Pulse { rabi, duration: std::f64::consts::PI / rabi }
}

/// pi/2 — free(delay) — pi/2.
pub fn ramsey_sequence(rabi: f64, delay: f64) -> Vec<Segment> {
    vec![pi2_pulse(rabi), Segment::Free { duration: delay }, pi2_pulse(rabi)]
}

/// pi/2 — free(delay/2) — pi — free(delay/2) — pi/2.
pub fn echo_sequence(rabi: f64, delay: f64) -> Vec<Segment> {
    vec![
        pi2_pulse(rabi),
        Segment::Free { duration: delay / 2.0 },
        pi_pulse(rabi),
        Segment::Free { duration: delay / 2.0 },
        pi2_pulse(rabi),
    ]
}

/// Parse the plain-text sequence format: one segment per line, either
/// `pulse <rabi_rad_s> <duration_s>` or `free <duration_s>`; `#` comments.
pub fn parse_sequence(text: &str) -> Result<Vec<Segment>> {
    let mut segments = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let kind = parts.next().unwrap();
        let mut number = |what: &str| -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::validation(format!("sequence line {lineno}: missing {what}")))?
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("sequence line {lineno}: unparseable {what}")))
        };
        let segment = match kind {
            "pulse" => Segment::Pulse { rabi: number("rabi_rad_s")?, duration: number("duration_s")? },
            "free" => Segment::Free { duration: number("duration_s")? },
            other => {
                return Err(Error::validation(format!(
                    "sequence line {lineno}: unknown segment `{other}` (expected `pulse` or `free`)"
                )))
            }
        };
        if parts.next().is_some() {
            return Err(Error::validation(format!("sequence line {lineno}: trailing fields")));
        }
        segments.push(segment);
    }
    validate_sequence(&segments)?;
    Ok(segments)
}

fn validate_sequence(sequence: &[Segment]) -> Result<()> {
    for (i, seg) in sequence.iter().enumerate() {
        match *seg {
            Segment::Pulse { rabi, duration } => {
                if !(rabi > 0.0) || !rabi.is_finite() {
                    return Err(Error::validation(format!("segment {i}: pulse rabi must be > 0 rad/s, got {rabi}")));
                }
                if !(duration >= 0.0) || !duration.is_finite() {
                    return Err(Error::validation(format!("segment {i}: duration must be >= 0 s, got {duration}")));
                }
            }
            Segment::Free { duration } => {
                if !(duration >= 0.0) || !duration.is_finite() {
                    return Err(Error::validation(format!("segment {i}: duration must be >= 0 s, got {duration}")));
                }
            }
        }
    }
    Ok(())
}

/// Thermal-averaged final population difference <w> after running `sequence`
/// from the w = +1 pole, with every vibrational state evolving at its own
/// static detuning. An empty sequence returns the initial w. For the Ramsey
/// readout convention (signal +1 at zero delay) negate, or use
/// [`simulate_ramsey`].
pub fn simulate_sequence(sequence: &[Segment], config: &RamseyConfig) -> Result<f64> {
    validate_sequence(sequence)?;
    Ok(thermal_average_over_detunings(
        &config.ensemble,
        config.deltas,
        config.base_detuning,
        |delta_n| {
            let mut r = Vector3::new(0.0, 0.0, 1.0);
            for seg in sequence {
                r = match *seg {
                    Segment::Pulse { rabi, duration } => rotation_matrix(rabi, delta_n, duration) * r,
                    Segment::Free { duration } => rotation_matrix(0.0, delta_n, duration) * r,
                };
            }
            r.z
        },
    ))
}

/// Ramsey fringe via explicit pulse simulation: `-<w>` after
/// pi/2 — free(delay) — pi/2, which is +1 at zero delay and reproduces the
/// closed-form thermal signal once `rabi` dominates every delta_n.
pub fn simulate_ramsey(rabi: f64, delay: f64, config: &RamseyConfig) -> Result<f64> {
    Ok(-simulate_sequence(&ramsey_sequence(rabi, delay), config)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species;
    use crate::units::{joules_from_mk, joules_from_uk, rad_s_from_khz};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn standard_red_trap() -> TrapGeometry {
        TrapGeometry::red_gaussian(1.064e-6, 2.1e-6, joules_from_mk(1.0)).unwrap()
    }

    fn config_15uk(base_detuning: f64) -> RamseyConfig {
        RamseyConfig::for_trap(species::cesium_1064(), &standard_red_trap(), 15e-6, base_detuning, 1e-6).unwrap()
    }

    /// Brute-force thermal Ramsey signal: explicit triple sum of
    /// w = cos(delta_n t) over the truncated ensemble. Kept deliberately free
    /// of the product/geometric-series algebra behind the closed form; the
    /// per-state phase is assembled from per-axis tables by angle addition.
    fn ramsey_bruteforce(config: &RamseyConfig, t: f64) -> f64 {
        let e = &config.ensemble;
        let table = |len: usize, delta: f64| -> Vec<Complex64> {
            (0..len).map(|n| Complex64::from_polar(1.0, n as f64 * delta * t)).collect()
        };
        let ex = table(e.x.weights.len(), config.deltas.x);
        let ey = table(e.y.weights.len(), config.deltas.y);
        let ez = table(e.z.weights.len(), config.deltas.z);
        let base = Complex64::from_polar(1.0, config.base_detuning * t);
        let mut acc = crate::numeric::KahanSum::new();
        for (nx, wx) in e.x.weights.iter().enumerate() {
            for (ny, wy) in e.y.weights.iter().enumerate() {
                let pxy = base * ex[nx] * ey[ny];
                let wxy = wx * wy;
                for (nz, wz) in e.z.weights.iter().enumerate() {
                    acc.add(wxy * wz * (pxy * ez[nz]).re);
                }
            }
        }
        acc.value()
    }

    #[test]
    fn single_state_signal() {
        assert_eq!(ramsey_single_state(123.0, 0.0), 1.0);
        assert_relative_eq!(ramsey_single_state(std::f64::consts::PI, 1.0), -1.0, epsilon = 1e-12);
        let config = config_15uk(7.0);
        let d = config.deltas;
        assert_relative_eq!(
            config.state_detuning(VibrationalState::new(3, 0, 0)),
            7.0 + 3.0 * d.x,
            max_relative = 1e-14
        );
    }

    #[test]
    fn exact_signal_at_zero_delay_is_unity() {
        let config = config_15uk(rad_s_from_khz(1.0));
        assert_relative_eq!(ramsey_thermal_exact(&config, 0.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_signal_reduces_to_cosine_at_zero_temperature() {
        let ensemble = ThermalEnsemble::from_means(Axes::splat(0.0), 1e-6).unwrap();
        let config = RamseyConfig::from_parts(350.0, ensemble, Axes::new(20.0, 20.0, 2.3));
        for t in [0.0, 1e-3, 7e-3, 0.3] {
            assert_relative_eq!(ramsey_thermal_exact(&config, t), (350.0 * t).cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn closed_form_matches_bruteforce_sum() {
        let ensemble = ThermalEnsemble::from_means(Axes::new(2.5, 1.0, 6.0), 1e-10).unwrap();
        let config = RamseyConfig::from_parts(400.0, ensemble, Axes::new(17.0, 23.0, 3.1));
        let bound = 1e-8 + 2.0 * config.ensemble.truncation_tail();
        for t in [1e-4, 2.3e-3, 1.7e-2, 0.11] {
            let exact = ramsey_thermal_exact(&config, t);
            let brute = ramsey_bruteforce(&config, t);
            assert!((exact - brute).abs() <= bound, "t = {t}: {exact} vs {brute}");
        }
    }

    #[test]
    fn short_time_forms_coincide_for_thermal_trap_ensembles() {
        // <n_q> delta_q is axis-independent in a thermal trap ensemble, so
        // the per-axis and isotropic denominators are identical
        let config = config_15uk(rad_s_from_khz(1.0));
        let kappas = config.kappas();
        assert_relative_eq!(kappas.x, config.iso_kappa, max_relative = 1e-9);
        assert_relative_eq!(kappas.z, config.iso_kappa, max_relative = 1e-9);
        for t in [1e-4, 1e-3, 5e-3] {
            let s = ramsey_short_time(&config, t);
            assert_relative_eq!(s.per_axis, s.isotropic, max_relative = 1e-8);
        }
        assert_eq!(ramsey_short_time(&config, 0.0).per_axis, 1.0);
    }

    #[test]
    fn short_time_tracks_exact_envelope_early_and_departs_later() {
        // measured behavior of the two printed forms at the 15 uK preset:
        // within 0.05 up to ~0.3 T2*, ~0.093 apart at T2*/2
        let config = config_15uk(rad_s_from_khz(1.0));
        let t2 = dephasing_time_t2_star(species::cesium_1064().eta, 15e-6)
            .unwrap()
            .secs()
            .unwrap();
        let mut dev_early: f64 = 0.0;
        for i in 1..=300 {
            let t = 0.29 * t2 * i as f64 / 300.0;
            dev_early = dev_early.max((envelope_exact(&config, t) - envelope_short_time(&config, t)).abs());
        }
        assert!(dev_early < 0.05, "early deviation {dev_early}");
        let at_half = (envelope_exact(&config, t2 / 2.0) - envelope_short_time(&config, t2 / 2.0)).abs();
        assert!((at_half - 0.0932).abs() < 0.002, "deviation at T2*/2 was {at_half}");
    }

    #[test]
    fn t2_star_prefactor_and_value() {
        assert_relative_eq!(t2_star_prefactor(), 1.513618987045747, max_relative = 1e-12);
        // three significant figures
        assert_eq!(format!("{:.2}", t2_star_prefactor()), "1.51");
        let t2 = dephasing_time_t2_star(1.68e-4, 15e-6).unwrap().secs().unwrap();
        assert_relative_eq!(t2, 9.17569353721659e-3, max_relative = 1e-10);
        // isotropic envelope reaches 1/e exactly at T2*
        let config = config_15uk(0.0);
        assert_relative_eq!(envelope_isotropic(&config, t2), (-1.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn t2_star_scales_inversely_with_temperature() {
        let t1 = dephasing_time_t2_star(1.68e-4, 10e-6).unwrap().secs().unwrap();
        let t2 = dephasing_time_t2_star(1.68e-4, 20e-6).unwrap().secs().unwrap();
        assert_relative_eq!(t1, 2.0 * t2, max_relative = 1e-12);
        assert_eq!(dephasing_time_t2_star(1.68e-4, 0.0).unwrap(), CoherenceTime::Infinite);
    }

    #[test]
    fn homogeneous_t2_values() {
        // sigma_DFS = sqrt(2) rad/s gives exactly one second
        let eta = 1.68e-4;
        let sigma_u0 = 2.0f64.sqrt() * HBAR / eta;
        assert_relative_eq!(homogeneous_t2(eta, sigma_u0).unwrap().secs().unwrap(), 1.0, max_relative = 1e-12);
        // halving the depth noise doubles the time
        let a = homogeneous_t2(1.68e-4, joules_from_uk(10.0)).unwrap().secs().unwrap();
        let b = homogeneous_t2(1.68e-4, joules_from_uk(5.0)).unwrap().secs().unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
        // the sqrt(2) hbar / (eta k_B * 1e-5 K) point evaluates to 6.43 ms
        assert_relative_eq!(a, 6.429816728434709e-3, max_relative = 1e-10);
        assert_eq!(homogeneous_t2(1.68e-4, 0.0).unwrap(), CoherenceTime::Infinite);
    }

    #[test]
    fn integer_deltas_revive_at_pi() {
        let r = revival_time(Axes::new(2.0, 4.0, 6.0), 1e-9).unwrap().unwrap();
        assert_relative_eq!(r.gcf, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.time, std::f64::consts::PI, max_relative = 1e-12);
        assert_eq!(r.harmonics, [1, 2, 3]);
    }

    #[test]
    fn decimal_ratio_deltas_found_within_bound() {
        // 20/2.28 = 500/57 exactly in decimal; the convergents find it
        let r = revival_time(Axes::new(20.0, 20.0, 2.28), 1e-9).unwrap().unwrap();
        assert_eq!(r.harmonics, [500, 500, 57]);
        assert_relative_eq!(r.gcf, 0.04, max_relative = 1e-9);
    }

    #[test]
    fn generic_irrational_ratios_report_none() {
        let deltas = Axes::new(2.0f64.sqrt() * 10.0, 2.0f64.sqrt() * 10.0, std::f64::consts::E);
        assert_eq!(revival_time(deltas, 1e-12).unwrap(), None);
    }

    #[test]
    fn exact_signal_recovers_at_detected_revival() {
        let deltas = Axes::new(20.0, 20.0, 2.5);
        let ensemble = ThermalEnsemble::from_means(Axes::new(4.1, 4.1, 36.0), 1e-8).unwrap();
        let config = RamseyConfig::from_parts(0.0, ensemble, deltas);
        let revival = revival_time(deltas, 1e-9).unwrap().unwrap();
        let recovered = ramsey_thermal_exact(&config, revival.time);
        assert!(recovered >= 0.99, "recovered {recovered}");
        assert!(envelope_exact(&config, revival.time) >= 0.99);
        // mid-way the fringe has collapsed
        assert!(envelope_exact(&config, revival.time / 2.0) < 0.2);
    }

    #[test]
    fn red_noise_response_values() {
        let cs = species::cesium_1064();
        let trap = standard_red_trap();
        let zero = dfs_fluctuation_red(cs, &trap, VibrationalState::GROUND, 0.0).unwrap();
        assert_eq!(zero.exact, 0.0);
        assert_eq!(zero.linearized, 0.0);

        let du = 0.01 * trap.depth();
        let f = dfs_fluctuation_red(cs, &trap, VibrationalState::GROUND, du).unwrap();
        assert_relative_eq!(f.linearized, -cs.eta * du / HBAR, max_relative = 1e-14);
        let correction = 1.0 - f.exact / f.linearized;
        // ground-state phonon derivative fraction, about 5e-4 here
        assert!(correction > 2e-4 && correction < 1e-3, "correction {correction}");
        let omegas = trap_frequencies(cs, &trap).unwrap();
        let expected = omegas.map(|w| 0.5 * HBAR * w).sum() / (4.0 * trap.depth());
        assert_relative_eq!(correction, expected, max_relative = 1e-10);
    }

    #[test]
    fn red_noise_response_vanishes_at_the_magic_depth() {
        let cs = species::cesium_1064();
        let state = VibrationalState::new(300, 300, 2000);
        let q = crate::magic::MagicQuery::new(
            cs.clone(),
            standard_red_trap(),
            crate::magic::MagicPairing::SameState(state),
        )
        .unwrap();
        let magic = crate::magic::magic_depth_same_state(&q).unwrap();
        let trap = standard_red_trap().with_depth(magic.depth).unwrap();
        let f = dfs_fluctuation_red(cs, &trap, state, 0.01 * magic.depth).unwrap();
        assert!(
            f.exact.abs() < 1e-9 * f.linearized.abs(),
            "first-order response at the magic depth: {} vs depth term {}",
            f.exact,
            f.linearized
        );
    }

    #[test]
    fn red_noise_response_is_the_depth_derivative() {
        // compare with a central difference of the full shift in U0,
        // Richardson-style halving to confirm the O(dU^2) convergence
        let cs = species::cesium_1064();
        let trap = standard_red_trap();
        let state = VibrationalState::new(2, 1, 5);
        let u0 = trap.depth();
        let dfs_at = |u: f64| crate::spectrum::dfs_for_state(cs, &trap.with_depth(u).unwrap(), state).unwrap();
        let mut errs = Vec::new();
        for k in [100.0, 200.0] {
            let du = u0 / k;
            let diff = dfs_at(u0 + du) - dfs_at(u0);
            let predicted = dfs_fluctuation_red(cs, &trap, state, du).unwrap().exact;
            errs.push((diff - predicted).abs());
        }
        // halving the step should cut the residual ~4x (second order)
        assert!(errs[1] < errs[0] / 3.0, "errors {errs:?}");
    }

    #[test]
    fn blue_noise_response_and_suppression() {
        let cs = species::cesium_1064();
        let barriers = Axes::splat(joules_from_uk(65.0));
        let trap = TrapGeometry::blue_lattice(Axes::splat(5e-6), barriers, 0.0).unwrap();
        let zero = dfs_fluctuation_blue(cs, &trap, VibrationalState::GROUND, Axes::splat(0.0)).unwrap();
        assert_eq!(zero.value, 0.0);
        assert_eq!(zero.suppression_ratio, 0.0);

        let changes = barriers.scale(0.01);
        let got = dfs_fluctuation_blue(cs, &trap, VibrationalState::GROUND, changes).unwrap();
        let omegas = trap_frequencies(cs, &trap).unwrap();
        let expected = cs.eta * 0.01 * omegas.map(|w| 0.5 * w).sum() / 4.0;
        assert_relative_eq!(got.value, expected, max_relative = 1e-12);
        // suppression equals sum (n+1/2) hbar omega / (4 U_q) for uniform dU
        let by_formula = VibrationalState::GROUND
            .occupations()
            .zip(omegas, |n, w| (n + 0.5) * HBAR * w)
            .zip(barriers, |e, u| e / (4.0 * u))
            .sum();
        assert_relative_eq!(got.suppression_ratio, by_formula, max_relative = 1e-12);
        assert!(got.suppression_ratio < 0.01);

        // misaligned lattice is outside this response model
        let misaligned = TrapGeometry::blue_lattice(Axes::splat(5e-6), barriers, joules_from_uk(1.0)).unwrap();
        assert!(dfs_fluctuation_blue(cs, &misaligned, VibrationalState::GROUND, changes).is_err());
    }

    #[test]
    fn noise_model_dispatch() {
        let cs = species::cesium_1064();
        let red = standard_red_trap();
        let depth_noise = NoiseModel::depth(joules_from_uk(10.0)).unwrap();
        match noise_response(cs, &red, VibrationalState::GROUND, &depth_noise).unwrap() {
            NoiseResponse::Homogeneous { sigma_dfs, t2_prime } => {
                assert_relative_eq!(sigma_dfs, cs.eta * joules_from_uk(10.0) / HBAR, max_relative = 1e-12);
                assert_relative_eq!(t2_prime.secs().unwrap(), 6.429816728434709e-3, max_relative = 1e-10);
            }
            other => panic!("expected homogeneous response, got {other:?}"),
        }

        let barriers = Axes::splat(joules_from_uk(65.0));
        let lattice = TrapGeometry::blue_lattice(Axes::splat(5e-6), barriers, 0.0).unwrap();
        let barrier_noise = NoiseModel::barriers(barriers.scale(0.01)).unwrap();
        match noise_response(cs, &lattice, VibrationalState::GROUND, &barrier_noise).unwrap() {
            NoiseResponse::BarrierSuppressed(f) => assert!(f.suppression_ratio < 3e-3),
            other => panic!("expected suppressed response, got {other:?}"),
        }

        // mismatched pairings are rejected
        assert!(noise_response(cs, &lattice, VibrationalState::GROUND, &depth_noise).is_err());
        assert!(noise_response(cs, &red, VibrationalState::GROUND, &barrier_noise).is_err());
        assert!(NoiseModel::depth(-1.0).is_err());
    }

    #[test]
    fn sequence_parsing() {
        let text = "# a Ramsey pair\npulse 6.283e4 2.5e-5\nfree 1e-3\npulse 6.283e4 2.5e-5\n";
        let seq = parse_sequence(text).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq[1], Segment::Free { duration: 1e-3 });

        assert!(parse_sequence("pulse 100.0\n").is_err());
        assert!(parse_sequence("free abc\n").is_err());
        assert!(parse_sequence("hold 1.0\n").is_err());
        assert!(parse_sequence("free 1.0 extra\n").is_err());
        assert!(parse_sequence("pulse -5.0 1.0\n").is_err());
    }

    #[test]
    fn empty_sequence_returns_initial_population() {
        let config = config_15uk(rad_s_from_khz(1.0));
        assert_eq!(simulate_sequence(&[], &config).unwrap(), 1.0);
    }

    #[test]
    fn simulated_ramsey_matches_closed_form_for_fast_pulses() {
        let ensemble = ThermalEnsemble::from_means(Axes::new(2.0, 2.0, 8.0), 1e-10).unwrap();
        let config = RamseyConfig::from_parts(250.0, ensemble, Axes::new(20.0, 20.0, 2.3));
        let rabi = TAU * 1e9;
        let bound = 1e-6 + 2.0 * config.ensemble.truncation_tail();
        for t in [0.0, 5e-4, 3e-3, 1.1e-2] {
            let simulated = simulate_ramsey(rabi, t, &config).unwrap();
            let closed = ramsey_thermal_exact(&config, t);
            assert!((simulated - closed).abs() <= bound, "t = {t}: {simulated} vs {closed}");
        }
    }

    #[test]
    fn echo_restores_full_amplitude_for_static_detunings() {
        let ensemble = ThermalEnsemble::from_means(Axes::new(4.0, 4.0, 30.0), 1e-8).unwrap();
        let config = RamseyConfig::from_parts(rad_s_from_khz(1.0), ensemble, Axes::new(20.0, 20.0, 2.3));
        let rabi = rad_s_from_khz(100.0);
        for delay in [1e-3, 9e-3, 0.05] {
            let w = simulate_sequence(&echo_sequence(rabi, delay), &config).unwrap();
            assert!(w.abs() >= 0.999, "delay {delay}: amplitude {}", w.abs());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_signal_bounded_by_envelope(
            nx in 0.0f64..8.0, nz in 0.0f64..40.0,
            dx in 1.0f64..50.0, dz in 0.5f64..5.0,
            base in 0.0f64..7000.0,
            t_frac in 0.0f64..1.0,
        ) {
            let ensemble = ThermalEnsemble::from_means(Axes::new(nx, nx, nz), 1e-6).unwrap();
            let config = RamseyConfig::from_parts(base, ensemble, Axes::new(dx, dx, dz));
            let t = t_frac * 0.5;
            let w = ramsey_thermal_exact(&config, t);
            prop_assert!(w.abs() <= 1.0 + 1e-12);
            prop_assert!(w.abs() <= envelope_exact(&config, t) + 1e-12);
        }
    }
}
