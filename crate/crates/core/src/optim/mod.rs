//! Stochastic gradient ascent on the ELBO.

pub mod adam;
pub mod config;
pub mod elbo;
pub mod fit;
pub mod laplace;

pub use adam::{adam_step, AdamState};
pub use config::{AdamConfig, GradientMode, OptimizerConfig, SkewInit};
pub use elbo::{elbo_closed_form, elbo_estimate};
pub use fit::{fit_csn, fit_csn_with, fit_gaussian, FitResult, NaturalGradFn, TraceRecord};
