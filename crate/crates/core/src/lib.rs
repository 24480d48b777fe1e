//! Pulse design for Weyl-Heisenberg (Gabor) multicarrier transmission over
//! WSSUS doubly dispersive channels.
//!
//! The crate discretizes time-frequency shifts, the position and momentum
//! operators and the pseudo-differential operators built from them on a
//! periodic sampling grid, evaluates the channel-averaged gain
//! `E[|<g, H gamma>|^2]` through the channel's completely positive map, and
//! solves the resulting eigenproblems. A Monte-Carlo channel simulator in
//! [`sim`] cross-checks every averaged quantity against random channel draws.
//!
//! Module map:
//!
//! - [`grid`], [`signal`]: sampled signals, shifts, dilations, Hermite functions
//! - [`scattering`]: scattering-function models, quadrature and moments
//! - [`weyl`]: operator matrices (X, D, Weyl operators, spreading
//!   representation, local approximation, oscillator semigroup)
//! - [`cp_map`]: the averaged channel map, its adjoint and the fidelity
//! - [`optimizer`]: pulse design pipelines
//! - [`sim`]: Monte-Carlo WSSUS verification
//! - [`io`]: CSV / JSON / binary file formats

pub mod cp_map;
pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod scattering;
pub mod signal;
pub mod sim;
mod spectral;
pub mod weyl;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use num_complex::Complex64;
pub use scattering::{ScatteringGrid, Moments};
pub use signal::{LatticeParams, Signal};
pub use weyl::OperatorMatrix;
