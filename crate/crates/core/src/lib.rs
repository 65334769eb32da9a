//! Bayesian decomposition of a signal `f = g + h` into a piecewise-constant
//! part `g` and a smooth part `h`, observed through a periodic blur with
//! additive Gaussian noise.
//!
//! The building blocks are:
//!
//! * [`wavelet`]: periodic orthonormal Haar/Daubechies transforms in 1D and 2D.
//! * [`operators`]: the periodic Gaussian blur and forward-difference gradients.
//! * [`priors`]: Besov priors (density, gradient, sampling) and the
//!   hierarchical Gaussian gradient prior.
//! * [`linalg`]: matrix-free CGLS for stacked least-squares systems.
//! * [`samplers`]: NUTS, randomize-then-optimize, and the two Gibbs schemes.
//! * [`diagnostics`]: ACF, ESS, credible intervals and friends.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod priors;
pub mod problem;
pub mod rng;
pub mod samplers;
pub mod wavelet;

pub use error::{Error, Result};
pub use grid::{Grid, Signal};
pub use problem::{add_noise, DecompProblem};
pub use rng::RngHandle;
