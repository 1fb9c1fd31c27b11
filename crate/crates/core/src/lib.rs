//! Sub-Nyquist generalized eigenvalue estimation.
//!
//! A multi-tone signal `x(t)` and a filtered copy `ψ(t)` are sampled on the
//! same uniform grid. Their Hankel matrices form a pencil `Ψu = λXu` whose
//! eigenvalues are the filter responses `β(f_i)` at the true component
//! frequencies. Because `β` does not wrap the way `e^{j2πfΔt}` does, the
//! frequencies come out unaliased no matter how slowly the data is sampled.
//! The same idea, with a time-weighted Hankel, recovers linear-FM chirp
//! parameters from a signal and its derivative.
//!
//! Modules:
//! - [`signal`]: parametric specs and dual-channel synthesis
//! - [`filters`]: filter responses and their inverses
//! - [`record`]: the dual-channel text file format
//! - [`pencil`]: Hankel pencil estimation of tones
//! - [`chirp`]: two-parameter chirp estimation and Doppler kinematics
//! - [`bench`]: Monte Carlo harness, FFT baseline and reproduction experiments

pub mod bench;
pub mod chirp;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod numfmt;
pub mod pencil;
pub mod record;
pub mod reference;
pub mod signal;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64;
