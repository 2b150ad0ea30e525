//! ELBO gradient estimators, chain rules between skew coordinates, and
//! natural gradients.

pub mod chain;
pub mod fisher;
pub mod natural;
pub mod noise;
pub mod param_gradient;
pub mod reparam;

pub use crate::csn::reparam_draw;
pub use chain::{
    alpha_cubed_to_lambda, chain_to_alpha_cubed, chain_to_lambda_cubed, natural_chain_alpha_cubed, natural_chain_lambda_cubed,
};
pub use fisher::{fisher_oracle, log_q_joint, oracle_natural_gradient, score_logq_joint, FisherOracleWorkspace};
pub use natural::{natural_grad, natural_grad_cholesky, natural_grad_lu};
pub use noise::NoisePair;
pub use param_gradient::ParamGradient;
pub use reparam::{euclidean_grad_estimate, pathwise_gradient, pathwise_sample, PathwiseSample};
