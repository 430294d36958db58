//! Unit conversions at the crate boundary.
//!
//! Everything inside the crate is strict SI: energies in joules, lengths in
//! meters, times in seconds, frequencies in rad/s. A depth or temperature
//! quoted "in mK" means E/k_B, the usual trap convention; a frequency quoted
//! "in MHz" is an ordinary (non-angular) frequency. These helpers do the
//! conversions explicitly so that ħ-vs-h and linear-vs-angular mistakes
//! cannot hide inside formulas.

use std::f64::consts::TAU;

use crate::constants::K_B;

/// Trap depth or thermal energy from a millikelvin figure: E = k_B · T.
pub fn joules_from_mk(mk: f64) -> f64 {
    K_B * mk * 1e-3
}

/// Trap depth or thermal energy from a microkelvin figure.
pub fn joules_from_uk(uk: f64) -> f64 {
    K_B * uk * 1e-6
}

pub fn mk_from_joules(joules: f64) -> f64 {
    joules / K_B * 1e3
}

pub fn uk_from_joules(joules: f64) -> f64 {
    joules / K_B * 1e6
}

/// Angular frequency from an ordinary frequency in Hz.
pub fn rad_s_from_hz(hz: f64) -> f64 {
    TAU * hz
}

pub fn rad_s_from_khz(khz: f64) -> f64 {
    TAU * khz * 1e3
}

pub fn rad_s_from_mhz(mhz: f64) -> f64 {
    TAU * mhz * 1e6
}

pub fn hz_from_rad_s(rad_s: f64) -> f64 {
    rad_s / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        assert!((mk_from_joules(joules_from_mk(1.7)) - 1.7).abs() < 1e-12);
        assert!((uk_from_joules(joules_from_uk(42.0)) - 42.0).abs() < 1e-9);
        assert!((hz_from_rad_s(rad_s_from_mhz(5.22)) - 5.22e6).abs() < 1e-3);
    }

    #[test]
    fn millikelvin_is_kb_scaled() {
        assert_eq!(joules_from_mk(1.0), K_B * 1e-3);
        assert_eq!(joules_from_uk(1.0), K_B * 1e-6);
    }
}
