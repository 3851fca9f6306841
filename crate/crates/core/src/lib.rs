//! Physical-layer simulation of reconfigurable-metasurface (R-MTS) transceivers
//! that signal through index modulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`metaatom`]: reflection coefficient of a single tunable meta-atom, from
//!   its surface admittance or from tabulated full-wave data.
//! - [`aperture`]: phase codings of an `M x N` surface, far-field patterns,
//!   directivity and beam steering.
//! - [`spacetime`]: periodic time codings and the frequency harmonics they
//!   generate.
//! - [`channel`]: LoS / Rayleigh / Rician channel draws, AWGN and RIS phase
//!   alignment.
//! - [`im_schemes`]: bit mappers, demappers and rate formulas for the index
//!   modulation families.
//! - [`detection`]: maximum-likelihood detection and ergodic capacity.
//! - [`harness`]: config-driven Monte Carlo experiments and CSV exports.

pub mod aperture;
pub mod channel;
pub mod detection;
pub mod error;
pub mod harness;
pub mod im_schemes;
pub mod math;
pub mod metaatom;
pub mod rng;
pub mod spacetime;

pub use error::{Error, Result};
pub use num_complex::Complex64;
