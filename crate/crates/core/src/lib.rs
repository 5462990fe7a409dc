//! Effective-temperature diagnostics for variational quantum states.
//!
//! Exact XXZ spectra ([`model`]), five variational ansatz families
//! ([`ansatz`]) trained by gradient methods ([`optimize`]) against energy or
//! fidelity losses ([`objectives`]), and the spectral analysis of the trained
//! states ([`spectral`]): the slope of `ln|c_i|²` against `ε_i` read as an
//! inverse temperature.

pub mod ansatz;
pub mod autodiff;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod objectives;
pub mod optimize;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
