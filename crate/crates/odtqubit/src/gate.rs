//! Coherent rotations on the Bloch sphere and the fidelity of a thermal
//! pi/2 pulse.
//!
//! The state vector R = (u, v, w) of the driven two-level atom obeys
//!
//! ```text
//! du/dt = D' v
//! dv/dt = -D' u + O w        (O = Rabi frequency, D' = detuning)
//! dw/dt = -O v
//! ```
//!
//! i.e. dR/dt = R x W with drive vector W = (O, 0, D'). All rotation
//! matrices in this module follow that orientation. The drive is resonant
//! with the motional ground state, so an atom in vibrational state n sees
//! the detuning D' = sum_q n_q delta_q and a pi/2 pulse of fixed duration
//! t = pi/(2 O0) over-rotates it by theta = (pi/2) sqrt(O0^2 + D'^2)/O0
//! about a tilted axis. Averaging the resulting fidelity over the Bose
//! distribution gives the thermal gate error.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::species::AtomSpecies;
use crate::spectrum::{differential_trap_frequency, thermal_average_over_detunings, ThermalEnsemble};
use crate::trap::{Axes, TrapGeometry};

/// Bloch vector (u, v, w): coherences and population difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochVector {
    pub const fn new(u: f64, v: f64, w: f64) -> Self {
        BlochVector { u, v, w }
    }

    /// The |F2> pole, w = +1.
    pub const UP: BlochVector = BlochVector::new(0.0, 0.0, 1.0);

    pub fn norm(self) -> f64 {
        Vector3::from(self).norm()
    }
}

impl From<BlochVector> for Vector3<f64> {
    fn from(r: BlochVector) -> Self {
        Vector3::new(r.u, r.v, r.w)
    }
}

impl From<Vector3<f64>> for BlochVector {
    fn from(v: Vector3<f64>) -> Self {
        BlochVector::new(v.x, v.y, v.z)
    }
}

/// The resonant pi/2 rotation: a quarter turn about the u axis that takes
/// (0,0,1) to (0,1,0).
pub fn resonant_pi2_matrix() -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, //
        0.0, -1.0, 0.0,
    )
}

/// Rotation angle theta = (pi/2) sqrt(O0^2 + D'^2)/O0 accumulated by a pulse
/// of duration pi/(2 O0) at detuning D'.
pub fn pulse_rotation_angle(rabi: f64, detuning: f64) -> f64 {
    FRAC_PI_2 * detuning.hypot(rabi) / rabi
}

/// Closed-form detuned pi/2 pulse: rotation by [`pulse_rotation_angle`] about
/// the tilted drive axis (O0, 0, D')/norm, oriented per the Bloch equations.
pub fn detuned_pulse_matrix(rabi: f64, detuning: f64) -> Result<Matrix3<f64>> {
    if !(rabi > 0.0) {
        return Err(Error::domain(format!("Rabi frequency must be > 0 rad/s, got {rabi}")));
    }
    let n2 = rabi * rabi + detuning * detuning;
    let n = n2.sqrt();
    let theta = pulse_rotation_angle(rabi, detuning);
    let (sin, cos) = theta.sin_cos();
    Ok(Matrix3::new(
        (rabi * rabi + detuning * detuning * cos) / n2,
        detuning * sin / n,
        rabi * detuning * (1.0 - cos) / n2,
        -detuning * sin / n,
        cos,
        rabi * sin / n,
        rabi * detuning * (1.0 - cos) / n2,
        -rabi * sin / n,
        (rabi * rabi * cos + detuning * detuning) / n2,
    ))
}

/// Evolution matrix for a constant drive segment of arbitrary duration:
/// rotation by |W| t about W/|W| with W = (rabi, 0, detuning), same
/// orientation as [`detuned_pulse_matrix`]. `rabi = 0` gives free precession
/// about the w axis.
pub fn rotation_matrix(rabi: f64, detuning: f64, duration: f64) -> Matrix3<f64> {
    let n = detuning.hypot(rabi);
    let angle = n * duration;
    if angle == 0.0 {
        return Matrix3::identity();
    }
    let (a, b) = (rabi / n, detuning / n); // axis (a, 0, b)
    let (sin, cos) = angle.sin_cos();
    let k = 1.0 - cos;
    Matrix3::new(
        cos + k * a * a,
        b * sin,
        k * a * b,
        -b * sin,
        cos,
        a * sin,
        k * a * b,
        -a * sin,
        cos + k * b * b,
    )
}

/// Bloch-overlap fidelity of a rotation against the ideal one, averaged over
/// the three basis vectors: F = (1/3) tr(actual^T ideal). Not clamped; large
/// over-rotations legitimately give negative values.
pub fn bloch_overlap_fidelity(actual: &Matrix3<f64>, ideal: &Matrix3<f64>) -> f64 {
    (actual.transpose() * ideal).trace() / 3.0
}

/// Closed-form pulse fidelity
/// F(theta) = (1/3) [ (pi/2theta)^2 (1 - cos theta) + cos theta + (pi/theta) sin theta ],
/// the basis-averaged overlap between the detuned pulse and the resonant one.
pub fn pulse_fidelity(theta: f64) -> f64 {
    debug_assert!(theta >= FRAC_PI_2);
    let (sin, cos) = theta.sin_cos();
    let half_ratio = PI / (2.0 * theta);
    (half_ratio * half_ratio * (1.0 - cos) + cos + 2.0 * half_ratio * sin) / 3.0
}

/// Tolerances for the adaptive integrator.
#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rel_tol: 1e-10, abs_tol: 1e-12, max_steps: 1_000_000 }
    }
}

/// Numerically integrate the Bloch equations for a constant drive
/// W = (rabi, 0, detuning) with an adaptive Dormand–Prince 5(4) pair.
///
/// This is the independent check for the closed-form rotations; production
/// paths never call it.
pub fn integrate_bloch(
    rabi: f64,
    detuning: f64,
    initial: BlochVector,
    duration: f64,
    control: &StepControl,
) -> Result<BlochVector> {
    if !(duration >= 0.0) || !duration.is_finite() || !rabi.is_finite() || !detuning.is_finite() {
        return Err(Error::domain("integrate_bloch needs finite inputs and duration >= 0".to_string()));
    }
    let w = Vector3::new(rabi, 0.0, detuning);
    let f = |y: &Vector3<f64>| y.cross(&w);

    let mut y: Vector3<f64> = initial.into();
    if duration == 0.0 {
        return Ok(y.into());
    }
    let mut t = 0.0;
    let rate = w.norm();
    let mut h = if rate > 0.0 { (0.05 / rate).min(duration) } else { duration };

    for _ in 0..control.max_steps {
        if t >= duration {
            return Ok(y.into());
        }
        h = h.min(duration - t);
        if h < duration * 1e-16 {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }

        let k1 = f(&y);
        let k2 = f(&(y + h * (A21 * k1)));
        let k3 = f(&(y + h * (A31 * k1 + A32 * k2)));
        let k4 = f(&(y + h * (A41 * k1 + A42 * k2 + A43 * k3)));
        let k5 = f(&(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)));
        let k6 = f(&(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)));
        let y5 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(&y5);
        let err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        let mut err: f64 = 0.0;
        for i in 0..3 {
            let scale = control.abs_tol + control.rel_tol * y[i].abs().max(y5[i].abs());
            err += (err_vec[i] / scale).powi(2);
        }
        err = (err / 3.0).sqrt();

        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
    }
    Err(Error::Integration(format!(
        "did not reach t = {duration} within {} steps",
        control.max_steps
    )))
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Thermal pi/2 fidelity and its complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalFidelity {
    pub fidelity: f64,
    pub infidelity: f64,
}

/// Average the pulse fidelity over an explicit ensemble with per-axis
/// frequency differences `deltas`.
pub fn thermal_gate_fidelity_with(ensemble: &ThermalEnsemble, deltas: Axes, rabi: f64) -> Result<ThermalFidelity> {
    if !(rabi > 0.0) {
        return Err(Error::domain(format!("Rabi frequency must be > 0 rad/s, got {rabi}")));
    }
    let fidelity = thermal_average_over_detunings(ensemble, deltas, 0.0, |detuning| {
        pulse_fidelity(pulse_rotation_angle(rabi, detuning))
    });
    Ok(ThermalFidelity { fidelity, infidelity: 1.0 - fidelity })
}

/// Thermal pi/2-pulse fidelity for a species in a trap at a temperature.
pub fn thermal_gate_fidelity(
    species: &AtomSpecies,
    trap: &TrapGeometry,
    temperature: f64,
    rabi: f64,
    tail_eps: f64,
) -> Result<ThermalFidelity> {
    let ensemble = ThermalEnsemble::build(species, trap, temperature, tail_eps)?;
    let deltas = differential_trap_frequency(species, trap)?;
    thermal_gate_fidelity_with(&ensemble, deltas, rabi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species;
    use crate::units::{joules_from_mk, rad_s_from_khz};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn standard_red_trap() -> TrapGeometry {
        TrapGeometry::red_gaussian(1.064e-6, 2.1e-6, joules_from_mk(1.0)).unwrap()
    }

    fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn resonant_pulse_actions() {
        let m = resonant_pi2_matrix();
        let up = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(m * up, Vector3::new(0.0, 1.0, 0.0));
        // two quarter turns flip the population
        assert_eq!(m * (m * up), Vector3::new(0.0, 0.0, -1.0));
        assert!(max_abs_diff(&(m.transpose() * m), &Matrix3::identity()) < 1e-15);
        assert_relative_eq!(m.determinant(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn detuned_matrix_reduces_to_resonant() {
        let m = detuned_pulse_matrix(1e5, 0.0).unwrap();
        assert!(max_abs_diff(&m, &resonant_pi2_matrix()) < 1e-15);
    }

    #[test]
    fn detuned_matrix_at_equal_rabi_and_detuning() {
        // independent evaluation of the closed form at D' = O0
        let rabi = 2.0 * PI * 1e4;
        let theta = FRAC_PI_2 * 2.0f64.sqrt();
        let (s, c) = theta.sin_cos();
        let expected = Matrix3::new(
            (1.0 + c) / 2.0,
            s / 2.0f64.sqrt(),
            (1.0 - c) / 2.0,
            -s / 2.0f64.sqrt(),
            c,
            s / 2.0f64.sqrt(),
            (1.0 - c) / 2.0,
            -s / 2.0f64.sqrt(),
            (1.0 + c) / 2.0,
        );
        let m = detuned_pulse_matrix(rabi, rabi).unwrap();
        assert!(max_abs_diff(&m, &expected) < 1e-14);
        assert_relative_eq!(pulse_rotation_angle(rabi, rabi), theta, max_relative = 1e-15);
    }

    #[test]
    fn drive_axis_is_fixed() {
        for (rabi, det) in [(1e5, 0.0), (1e5, 3e4), (2e4, -2e5), (7e3, 7e3)] {
            let m = detuned_pulse_matrix(rabi, det).unwrap();
            let axis = Vector3::new(rabi, 0.0, det).normalize();
            assert!((m * axis - axis).norm() < 1e-13);
        }
    }

    #[test]
    fn pulse_matrix_is_the_general_rotation_at_pi2_duration() {
        for (rabi, det) in [(1e5, 0.0), (1e5, 4.2e4), (3e4, -2e5)] {
            let closed = detuned_pulse_matrix(rabi, det).unwrap();
            let general = rotation_matrix(rabi, det, FRAC_PI_2 / rabi);
            assert!(max_abs_diff(&closed, &general) < 1e-13);
        }
    }

    #[test]
    fn free_precession_matches_analytic_solution() {
        // O = 0, D' = delta, starting on u: (cos dt, -sin dt, 0)
        let delta = 2.0 * PI * 750.0;
        let t = 3.3e-3;
        let m = rotation_matrix(0.0, delta, t);
        let got = m * Vector3::new(1.0, 0.0, 0.0);
        assert_relative_eq!(got.x, (delta * t).cos(), max_relative = 1e-12);
        assert_relative_eq!(got.y, -(delta * t).sin(), max_relative = 1e-12);
        assert!(got.z.abs() < 1e-15);

        let ode = integrate_bloch(0.0, delta, BlochVector::new(1.0, 0.0, 0.0), t, &StepControl::default()).unwrap();
        assert_relative_eq!(ode.u, (delta * t).cos(), epsilon = 1e-9);
        assert_relative_eq!(ode.v, -(delta * t).sin(), epsilon = 1e-9);
    }

    #[test]
    fn zero_generator_is_identity_evolution() {
        let r = BlochVector::new(0.3, -0.2, 0.5);
        let out = integrate_bloch(0.0, 0.0, r, 12.0, &StepControl::default()).unwrap();
        assert_eq!(out, r);
        assert_eq!(rotation_matrix(0.0, 0.0, 5.0), Matrix3::identity());
    }

    #[test]
    fn ode_agrees_with_closed_form_pulse() {
        let ctrl = StepControl::default();
        for (rabi, det) in [(2.0 * PI * 1e4, 0.0), (2.0 * PI * 1e4, 2.0 * PI * 3e3), (5e4, -4.9e5)] {
            let m = detuned_pulse_matrix(rabi, det).unwrap();
            let t = FRAC_PI_2 / rabi;
            for init in [BlochVector::UP, BlochVector::new(1.0, 0.0, 0.0), BlochVector::new(0.0, 1.0, 0.0)] {
                let ode = integrate_bloch(rabi, det, init, t, &ctrl).unwrap();
                let closed: Vector3<f64> = m * Vector3::from(init);
                assert!((Vector3::from(ode) - closed).norm() < 1e-8, "rabi {rabi} det {det}");
                assert!((ode.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fidelity_special_values() {
        assert_relative_eq!(pulse_fidelity(FRAC_PI_2), 1.0, epsilon = 1e-15);
        assert_relative_eq!(pulse_fidelity(FRAC_PI_2 * 2.0f64.sqrt()), 0.4408100612017979, max_relative = 1e-12);
    }

    #[test]
    fn fidelity_matches_matrix_trace_oracle() {
        let rabi = 2.0 * PI * 5e3;
        for det in [0.0, 0.3 * rabi, rabi, -2.7 * rabi, 9.0 * rabi] {
            let closed = pulse_fidelity(pulse_rotation_angle(rabi, det));
            let via_trace =
                bloch_overlap_fidelity(&detuned_pulse_matrix(rabi, det).unwrap(), &resonant_pi2_matrix());
            assert_relative_eq!(closed, via_trace, epsilon = 1e-13);
        }
    }

    #[test]
    fn infidelity_is_quadratic_in_relative_detuning() {
        // log-log slope of 1 - F vs D'/O0 over [1e-4, 1e-2]
        let rabi = 1.0;
        let xs: [f64; 5] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| (x.ln(), (1.0 - pulse_fidelity(pulse_rotation_angle(rabi, x * rabi))).ln()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let slope = pts.iter().map(|p| (p.0 - sx / n) * (p.1 - sy / n)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - sx / n).powi(2)).sum::<f64>();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn zero_temperature_gate_is_perfect() {
        let cs = species::cesium_1064();
        let f = thermal_gate_fidelity(cs, &standard_red_trap(), 0.0, rad_s_from_khz(10.0), 1e-6).unwrap();
        assert!(f.infidelity.abs() < 1e-12);
    }

    #[test]
    fn thermal_fidelity_matches_three_term_hand_sum() {
        // single hot axis, mean 1, truncated at n = 2 (tail_eps 0.2 keeps
        // ratio^3 = 1/8 below the bound), weights renormalized by 7/8
        let ensemble = ThermalEnsemble::from_means(Axes::new(1.0, 0.0, 0.0), 0.2).unwrap();
        assert_eq!(ensemble.x.n_max, 2);
        let deltas = Axes::new(40.0, 0.0, 0.0);
        let rabi = 100.0;
        let got = thermal_gate_fidelity_with(&ensemble, deltas, rabi).unwrap();
        let p = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        let hand: f64 = (0..3)
            .map(|n| p[n] * pulse_fidelity(pulse_rotation_angle(rabi, n as f64 * deltas.x)))
            .sum();
        assert_relative_eq!(got.fidelity, hand, max_relative = 1e-13);
    }

    #[test]
    fn thermal_infidelity_monotone_in_temperature() {
        let cs = species::cesium_1064();
        let trap = standard_red_trap();
        let rabi = rad_s_from_khz(10.0);
        let mut last = -1.0;
        for t_uk in [0.0, 2.0, 5.0, 15.0, 30.0, 50.0] {
            let f = thermal_gate_fidelity(cs, &trap, t_uk * 1e-6, rabi, 1e-6).unwrap();
            assert!(f.infidelity >= last - 1e-15, "T = {t_uk} uK");
            last = f.infidelity;
        }
    }

    #[test]
    fn thermal_fidelity_stable_under_tail_refinement() {
        let cs = species::cesium_1064();
        let trap = standard_red_trap();
        let rabi = rad_s_from_khz(10.0);
        let coarse = thermal_gate_fidelity(cs, &trap, 15e-6, rabi, 1e-6).unwrap();
        let fine = thermal_gate_fidelity(cs, &trap, 15e-6, rabi, 1e-9).unwrap();
        assert!((coarse.fidelity - fine.fidelity).abs() < 1e-7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pulse_matrices_are_proper_rotations(
            rabi in 1e3f64..1e7,
            ratio in -10.0f64..10.0,
        ) {
            let m = detuned_pulse_matrix(rabi, ratio * rabi).unwrap();
            prop_assert!(max_abs_diff(&(m.transpose() * m), &Matrix3::identity()) < 1e-12);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ode_and_matrix_agree_on_random_drives(
            rabi in 1e3f64..1e6,
            ratio in -10.0f64..10.0,
        ) {
            let det = ratio * rabi;
            let m = detuned_pulse_matrix(rabi, det).unwrap();
            let ode = integrate_bloch(rabi, det, BlochVector::UP, FRAC_PI_2 / rabi, &StepControl::default()).unwrap();
            let closed = m * Vector3::from(BlochVector::UP);
            prop_assert!((Vector3::from(ode) - closed).norm() < 1e-8);
        }
    }
}
