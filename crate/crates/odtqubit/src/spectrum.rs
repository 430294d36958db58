//! Vibrational-state-resolved differential frequency shift (DFS) and thermal
//! occupation statistics.
//!
//! The transition frequency between the two fiducial hyperfine states of a
//! trapped atom shifts by
//!
//! ```text
//! DFS(n) = -eta U0 / hbar + sum_q (n_q + 1/2) delta_q,
//! delta_q = (eta/2) omega_q,
//! ```
//!
//! so the shift depends on the motional quantum numbers `n_q`, not just on
//! the trap depth. The first term is linear in U0 while `delta_q` grows as
//! sqrt(U0); that competition is what the `magic` module exploits. For a
//! lattice, U0 is the bottom potential and the `delta_q` come from the
//! barrier heights, so a perfectly aligned lattice (U0 = 0) keeps only the
//! positive vibrational term.
//!
//! A thermal atom occupies state `n` on each axis with Bose weight
//! `P_n = <n>^n / (<n>+1)^(n+1)` where `<n_q> = k_B T / (2 hbar omega_q)`.

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::species::AtomSpecies;
use crate::trap::{intensity_for_depth, trap_frequencies, Axes, TrapGeometry};
use crate::units::mk_from_joules;

/// Per-axis phonon occupation numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VibrationalState {
    pub n_x: u32,
    pub n_y: u32,
    pub n_z: u32,
}

impl VibrationalState {
    pub const GROUND: VibrationalState = VibrationalState { n_x: 0, n_y: 0, n_z: 0 };

    pub const fn new(n_x: u32, n_y: u32, n_z: u32) -> Self {
        VibrationalState { n_x, n_y, n_z }
    }

    pub fn occupations(self) -> Axes {
        Axes::new(self.n_x as f64, self.n_y as f64, self.n_z as f64)
    }
}

/// Per-axis differences delta_q = (eta/2) omega_q between the oscillation
/// frequencies seen by the two fiducial states.
pub fn differential_trap_frequency(species: &AtomSpecies, trap: &TrapGeometry) -> Result<Axes> {
    Ok(trap_frequencies(species, trap)?.scale(species.eta / 2.0))
}

/// The depth term `-eta U0 / hbar` of the shift (U0 = bottom potential for a
/// lattice); this is the whole DFS when motion is ignored.
pub fn dfs_depth_term(species: &AtomSpecies, trap: &TrapGeometry) -> f64 {
    -species.eta * trap.depth() / HBAR
}

/// Full shift for one vibrational state.
pub fn dfs_for_state(species: &AtomSpecies, trap: &TrapGeometry, state: VibrationalState) -> Result<f64> {
    let deltas = differential_trap_frequency(species, trap)?;
    let vibrational = state
        .occupations()
        .zip(deltas, |n, d| (n + 0.5) * d)
        .sum();
    Ok(dfs_depth_term(species, trap) + vibrational)
}

/// Exact two-level depth ratio U1/U2 = Delta/(Delta - omega_hfs). Diagnostic
/// only; everything else uses the far-off-resonance form with the stored eta.
pub fn exact_depth_ratio(detuning: f64, hyperfine_splitting: f64) -> Result<f64> {
    if detuning == 0.0 || detuning == hyperfine_splitting {
        return Err(Error::domain("depth ratio undefined at zero detuning".to_string()));
    }
    Ok(detuning / (detuning - hyperfine_splitting))
}

/// Mean phonon number `<n> = k_B T / (2 hbar omega)` of a thermal atom.
pub fn mean_occupation(temperature: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!("oscillation frequency must be > 0 rad/s, got {omega}")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::domain(format!("temperature must be >= 0 K, got {temperature}")));
    }
    Ok(K_B * temperature / (2.0 * HBAR * omega))
}

/// Bose weight `P_n = <n>^n / (<n>+1)^(n+1)`.
pub fn bose_population(mean: f64, n: u32) -> f64 {
    debug_assert!(mean >= 0.0);
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ratio: f64 = mean / (mean + 1.0);
    ratio.powi(n as i32) / (mean + 1.0)
}

/// Truncated, renormalized Bose distribution for one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisDistribution {
    /// Mean occupation the distribution was built from.
    pub mean: f64,
    /// Largest retained phonon number.
    pub n_max: u32,
    /// Weights for n = 0..=n_max, renormalized to sum to 1.
    pub weights: Vec<f64>,
    /// Probability mass dropped by the truncation (before renormalization).
    pub tail: f64,
}

impl AxisDistribution {
    /// Truncate at the smallest `n_max` whose cumulative Bose mass reaches
    /// `1 - tail_eps`, then renormalize.
    pub fn from_mean(mean: f64, tail_eps: f64) -> Result<Self> {
        if !(mean >= 0.0) {
            return Err(Error::domain(format!("mean occupation must be >= 0, got {mean}")));
        }
        if !(tail_eps > 0.0 && tail_eps < 1.0) {
            return Err(Error::domain(format!("tail_eps must lie in (0, 1), got {tail_eps}")));
        }
        if mean == 0.0 {
            return Ok(AxisDistribution { mean, n_max: 0, weights: vec![1.0], tail: 0.0 });
        }
        let ratio = mean / (mean + 1.0);
        // geometric tail after n_max terms is ratio^(n_max + 1)
        let mut n_max = ((tail_eps.ln() / ratio.ln()).ceil() as i64 - 1).max(0) as u32;
        while ratio.powi(n_max as i32 + 1) > tail_eps {
            n_max += 1;
        }
        while n_max > 0 && ratio.powi(n_max as i32) <= tail_eps {
            n_max -= 1;
        }
        let mut weights: Vec<f64> = (0..=n_max).map(|n| bose_population(mean, n)).collect();
        let mut sum = KahanSum::new();
        for &w in &weights {
            sum.add(w);
        }
        let norm = sum.value();
        for w in &mut weights {
            *w /= norm;
        }
        let tail = ratio.powi(n_max as i32 + 1);
        Ok(AxisDistribution { mean, n_max, weights, tail })
    }
}

/// Thermal occupation of the three trap axes, truncated and renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalEnsemble {
    /// Physical temperature, when the ensemble came from one.
    pub temperature: Option<f64>,
    pub tail_eps: f64,
    pub x: AxisDistribution,
    pub y: AxisDistribution,
    pub z: AxisDistribution,
}

impl ThermalEnsemble {
    /// Thermal ensemble of `species` in `trap` at `temperature`.
    pub fn build(species: &AtomSpecies, trap: &TrapGeometry, temperature: f64, tail_eps: f64) -> Result<Self> {
        let freqs = trap_frequencies(species, trap)?;
        let mean = |omega: f64| mean_occupation(temperature, omega);
        Ok(ThermalEnsemble {
            temperature: Some(temperature),
            tail_eps,
            x: AxisDistribution::from_mean(mean(freqs.x)?, tail_eps)?,
            y: AxisDistribution::from_mean(mean(freqs.y)?, tail_eps)?,
            z: AxisDistribution::from_mean(mean(freqs.z)?, tail_eps)?,
        })
    }

    /// Ensemble from explicit per-axis means (no trap attached).
    pub fn from_means(means: Axes, tail_eps: f64) -> Result<Self> {
        Ok(ThermalEnsemble {
            temperature: None,
            tail_eps,
            x: AxisDistribution::from_mean(means.x, tail_eps)?,
            y: AxisDistribution::from_mean(means.y, tail_eps)?,
            z: AxisDistribution::from_mean(means.z, tail_eps)?,
        })
    }

    pub fn mean_occupation(&self) -> Axes {
        Axes::new(self.x.mean, self.y.mean, self.z.mean)
    }

    /// Total pre-renormalization probability mass dropped across the axes;
    /// an upper bound on what truncation can move any thermal average of a
    /// quantity bounded by 1.
    pub fn truncation_tail(&self) -> f64 {
        self.x.tail + self.y.tail + self.z.tail
    }

    pub fn state_count(&self) -> u64 {
        self.x.weights.len() as u64 * self.y.weights.len() as u64 * self.z.weights.len() as u64
    }

    /// Visit every retained state in ascending (n_x, n_y, n_z) order with its
    /// renormalized weight.
    pub fn for_each_state(&self, mut f: impl FnMut(VibrationalState, f64)) {
        for (nx, wx) in self.x.weights.iter().enumerate() {
            for (ny, wy) in self.y.weights.iter().enumerate() {
                let wxy = wx * wy;
                for (nz, wz) in self.z.weights.iter().enumerate() {
                    f(VibrationalState::new(nx as u32, ny as u32, nz as u32), wxy * wz);
                }
            }
        }
    }
}

/// One line of a resolved shift spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumEntry {
    pub state: VibrationalState,
    /// Shift for that state, rad/s.
    pub dfs: f64,
    /// Thermal weight of the state.
    pub weight: f64,
}

/// The DFS spectrum of a thermal atom: the scalar pieces plus one entry per
/// retained vibrational state (ascending state order).
#[derive(Clone, Debug, PartialEq)]
pub struct DfsSpectrum {
    /// `-eta U0 / hbar`, rad/s.
    pub depth_term: f64,
    /// delta_q per axis, rad/s.
    pub deltas: Axes,
    pub entries: Vec<SpectrumEntry>,
}

impl DfsSpectrum {
    pub fn build(species: &AtomSpecies, trap: &TrapGeometry, ensemble: &ThermalEnsemble) -> Result<Self> {
        const MAX_STATES: u64 = 20_000_000;
        if ensemble.state_count() > MAX_STATES {
            return Err(Error::validation(format!(
                "ensemble retains {} states; a materialized spectrum this large is unreasonable, iterate with for_each_state instead",
                ensemble.state_count()
            )));
        }
        let depth_term = dfs_depth_term(species, trap);
        let deltas = differential_trap_frequency(species, trap)?;
        let mut entries = Vec::with_capacity(ensemble.state_count() as usize);
        ensemble.for_each_state(|state, weight| {
            let dfs = depth_term + state.occupations().zip(deltas, |n, d| (n + 0.5) * d).sum();
            entries.push(SpectrumEntry { state, dfs, weight });
        });
        Ok(DfsSpectrum { depth_term, deltas, entries })
    }

    /// Thermal mean of the shift over the retained states.
    pub fn mean_dfs(&self) -> f64 {
        let mut acc = KahanSum::new();
        for e in &self.entries {
            acc.add(e.weight * e.dfs);
        }
        acc.value()
    }

    pub fn total_weight(&self) -> f64 {
        let mut acc = KahanSum::new();
        for e in &self.entries {
            acc.add(e.weight);
        }
        acc.value()
    }
}

/// What the depth scan averages over.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanTarget {
    /// A fixed vibrational state.
    State(VibrationalState),
    /// A thermal ensemble rebuilt at every depth (the frequencies, and so the
    /// means, change with depth).
    Ensemble { temperature: f64, tail_eps: f64 },
}

/// One row of a depth scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DfsScanRow {
    /// Depth, J.
    pub depth: f64,
    /// Depth over k_B, mK.
    pub depth_mk: f64,
    /// Shift with the vibrational term included, rad/s.
    pub quantized: f64,
    /// Depth term alone (motion ignored), rad/s.
    pub classical: f64,
    /// Peak intensity producing that depth, W/m^2, when line data is present.
    pub intensity: Option<f64>,
}

/// Scan the shift over trap depths. `emit_intensity` adds the converted
/// intensity column and requires reference-line data on the species.
pub fn dfs_vs_depth_scan(
    species: &AtomSpecies,
    trap_template: &TrapGeometry,
    target: &ScanTarget,
    depth_grid: &[f64],
    emit_intensity: bool,
) -> Result<Vec<DfsScanRow>> {
    if depth_grid.is_empty() {
        return Err(Error::validation("depth grid is empty".to_string()));
    }
    if !depth_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::validation("depth grid must be strictly increasing".to_string()));
    }
    if !(depth_grid[0] > 0.0) {
        return Err(Error::validation("depth grid must be strictly positive".to_string()));
    }
    let trap_wavelength = match (emit_intensity, trap_template) {
        (false, _) => None,
        (true, TrapGeometry::RedGaussian { wavelength, .. }) => Some(*wavelength),
        (true, TrapGeometry::BlueLattice { .. }) => species.trap_wavelength,
    };
    if emit_intensity && trap_wavelength.is_none() {
        return Err(Error::validation(
            "intensity column needs a trap wavelength (lattice species must record trap_wavelength_m)".to_string(),
        ));
    }

    depth_grid
        .iter()
        .map(|&depth| {
            let trap = trap_template.with_depth(depth)?;
            let classical = dfs_depth_term(species, &trap);
            let quantized = match target {
                ScanTarget::State(state) => dfs_for_state(species, &trap, *state)?,
                ScanTarget::Ensemble { temperature, tail_eps } => {
                    let ensemble = ThermalEnsemble::build(species, &trap, *temperature, *tail_eps)?;
                    let deltas = differential_trap_frequency(species, &trap)?;
                    let mean_n = truncated_mean(&ensemble);
                    classical + mean_n.zip(deltas, |n, d| (n + 0.5) * d).sum()
                }
            };
            let intensity = trap_wavelength
                .map(|wl| intensity_for_depth(species, wl, depth))
                .transpose()?;
            Ok(DfsScanRow { depth, depth_mk: mk_from_joules(depth), quantized, classical, intensity })
        })
        .collect()
}

/// Thermal average of `f(base + n_x d_x + n_y d_y + n_z d_z)` over the
/// truncated ensemble, in a fixed ascending state order with compensated
/// summation so results are deterministic. When the transverse deltas are
/// exactly degenerate the x/y axes are folded into one distribution over
/// s = n_x + n_y, which collapses the state count without changing which
/// detunings appear.
pub(crate) fn thermal_average_over_detunings(
    ensemble: &ThermalEnsemble,
    deltas: Axes,
    base: f64,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    let mut acc = KahanSum::new();
    if deltas.x == deltas.y {
        let radial = convolve(&ensemble.x.weights, &ensemble.y.weights);
        for (s, ws) in radial.iter().enumerate() {
            let partial = base + s as f64 * deltas.x;
            for (nz, wz) in ensemble.z.weights.iter().enumerate() {
                acc.add(ws * wz * f(partial + nz as f64 * deltas.z));
            }
        }
    } else {
        for (nx, wx) in ensemble.x.weights.iter().enumerate() {
            let px = base + nx as f64 * deltas.x;
            for (ny, wy) in ensemble.y.weights.iter().enumerate() {
                let pxy = px + ny as f64 * deltas.y;
                let wxy = wx * wy;
                for (nz, wz) in ensemble.z.weights.iter().enumerate() {
                    acc.add(wxy * wz * f(pxy + nz as f64 * deltas.z));
                }
            }
        }
    }
    acc.value()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (s, slot) in out.iter_mut().enumerate() {
        let lo = s.saturating_sub(b.len() - 1);
        let hi = s.min(a.len() - 1);
        let mut acc = KahanSum::new();
        for k in lo..=hi {
            acc.add(a[k] * b[s - k]);
        }
        *slot = acc.value();
    }
    out
}

/// Mean occupation of the truncated, renormalized distribution (differs from
/// the untruncated mean only by the tail mass).
fn truncated_mean(ensemble: &ThermalEnsemble) -> Axes {
    let axis_mean = |axis: &AxisDistribution| {
        let mut acc = KahanSum::new();
        for (n, w) in axis.weights.iter().enumerate() {
            acc.add(n as f64 * w);
        }
        acc.value()
    };
    Axes::new(axis_mean(&ensemble.x), axis_mean(&ensemble.y), axis_mean(&ensemble.z))
}
