//! Quantum-oscillator model of an optically trapped neutral atom qubit.
//!
//! A neutral atom in an optical dipole trap stores a qubit in two hyperfine
//! ground states. Because the two states see slightly different trap depths
//! (parametrized by `eta = |omega_hfs / Delta|`), they also oscillate at
//! slightly different frequencies, so the qubit transition shifts by an
//! amount that depends on the motional quantum numbers of the atom — not
//! just on the trap intensity. This crate models the consequences:
//!
//! * [`trap`] — trap geometries (red Gaussian focus, blue lattice), derived
//!   oscillation frequencies, light shift, species presets in [`species`];
//! * [`spectrum`] — the state-resolved differential frequency shift and the
//!   thermal (Bose) occupation statistics behind every average;
//! * [`gate`] — pi/2 rotations on the Bloch sphere, their fidelity for a
//!   thermal atom, and an adaptive Runge–Kutta oracle for the closed forms;
//! * [`coherence`] — Ramsey fringes (exact and short-time), dephasing times
//!   T2* and T2', fringe revivals, intensity-noise sensitivity, and pulse
//!   sequences (Ramsey, spin echo);
//! * [`magic`] — trap depths where the shift is stationary in depth, making
//!   the qubit first-order insensitive to intensity noise;
//! * [`report`] — deterministic CSV/JSON table output shared by all tools.
//!
//! Everything is strict SI internally; [`units`] converts at the boundary.
//! All operations are pure functions of immutable inputs and safe to call
//! concurrently.

// validations use `!(x > 0.0)` so that NaN fails them; `x <= 0.0` would not
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod constants;
mod error;
pub mod gate;
pub mod magic;
mod numeric;
pub mod report;
pub mod species;
pub mod spectrum;
pub mod trap;
pub mod units;

pub use error::{Error, Result};
pub use species::AtomSpecies;
pub use spectrum::{ThermalEnsemble, VibrationalState};
pub use trap::{Axes, TrapGeometry};
