//! Variational inference with a closed skew normal (CSN) subclass.
//!
//! The family `theta = C (D_kappa w2 + D_alpha (|w1| - b)) + mu` has mean
//! `mu`, covariance `C C^T` and one skewness parameter per coordinate. The
//! crate provides its density, sampling, entropy and moments ([`csn`]),
//! reparametrization and natural gradients ([`gradient`]), target models
//! ([`models`]), a stochastic optimiser ([`optim`]) and accuracy metrics
//! ([`metrics`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod csn;
pub mod error;
pub mod gradient;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod optim;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use error::{CsnError, Result};
