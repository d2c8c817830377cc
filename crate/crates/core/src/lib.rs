//! Link-level Monte Carlo simulator for jamming a zero-forcing multi-user
//! MISO downlink with an illegitimate intelligent reflecting surface (IRS).
//!
//! The crate covers channel generation ([`channel`]), zero-forcing precoding
//! and link metrics ([`beamforming`]), IRS reflect vectors ([`reflect`]), the
//! CSI-aided passive jammer solved on the complex circle manifold
//! ([`pj_opt`]) and the experiment engine that runs the four schemes over
//! parameter sweeps ([`sim`]).
//!
//! All metrics are analytic: no data symbols or noise samples are drawn.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
mod error;
pub mod pj_opt;
pub mod reflect;
pub mod rng;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
pub use nalgebra;
pub use num_complex::Complex64;

/// Dense complex matrix used for every channel and precoder.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
