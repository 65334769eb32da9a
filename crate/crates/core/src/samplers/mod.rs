//! Posterior samplers.
//!
//! * [`nuts`]: No-U-Turn sampler for smooth-ish targets such as the fixed-strength
//!   two-Besov posterior ([`TwoBesovPosterior`]).
//! * [`rto`]: randomize-then-optimize draws from the Gaussian conditionals.
//! * [`hyper`]: conjugate inverse-gamma / gamma hyperparameter updates.
//! * [`gibbs`]: the hierarchical Gaussian-Besov and two-Besov Gibbs schemes.

pub mod chain;
pub mod gibbs;
pub mod hyper;
pub mod nuts;
pub mod posterior;
pub mod rto;

pub use chain::{ChainMeta, ChainStore, SampleMatrix};
pub use gibbs::{
    gibbs_gaussian_besov, gibbs_two_besov, recenter_components, GaussianBesovHyper, GibbsConfig,
    GibbsInit, TwoBesovHyper,
};
pub use hyper::{sample_hyper_lambda_besov, sample_hyper_lambda_diag, sample_hyper_lambda_h};
pub use nuts::{nuts_sample, NutsConfig};
pub use posterior::{GaussianTarget, GradientTarget, SingleBesovPosterior, TwoBesovPosterior};
pub use rto::{rto_sample_g, rto_sample_h, RtoDraw};
