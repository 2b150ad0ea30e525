//! Chain rules between the `lambda`, `lambda^3` and `alpha^3` skew
//! coordinates, for Euclidean and natural gradients.

use crate::csn::AuxQuantities;
use nalgebra::DVector;

/// Below this `|alpha_i|` the `alpha^3` chain factor is numerically
/// indeterminate and updates for that coordinate are taken in `lambda`.
pub const ALPHA_FLOOR: f64 = 1e-4;

/// `d alpha^3 / d lambda = 3 alpha^2 kappa^3`.
pub fn alpha_cubed_jacobian(aux: &AuxQuantities) -> DVector<f64> {
    DVector::from_fn(aux.alpha.len(), |i, _| 3.0 * aux.alpha[i].powi(2) * aux.kappa[i].powi(3))
}

/// `d lambda^3 / d lambda = 3 lambda^2`.
pub fn lambda_cubed_jacobian(lambda: &DVector<f64>) -> DVector<f64> {
    lambda.map(|l| 3.0 * l * l)
}

/// Euclidean gradient in `alpha^3`: `grad_lambda / (3 alpha^2 kappa^3)`.
///
/// Coordinates with `alpha_i = 0` have no finite chain factor and come back
/// non-finite; callers fall back to `lambda` there (see [`ALPHA_FLOOR`]).
pub fn chain_to_alpha_cubed(grad_lambda: &DVector<f64>, aux: &AuxQuantities) -> DVector<f64> {
    grad_lambda.component_div(&alpha_cubed_jacobian(aux))
}

/// Inverse of [`chain_to_alpha_cubed`].
pub fn alpha_cubed_to_lambda(grad_alpha_cubed: &DVector<f64>, aux: &AuxQuantities) -> DVector<f64> {
    grad_alpha_cubed.component_mul(&alpha_cubed_jacobian(aux))
}

/// Euclidean gradient in `lambda^3`: `grad_lambda / (3 lambda^2)`.
pub fn chain_to_lambda_cubed(grad_lambda: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    grad_lambda.component_div(&lambda_cubed_jacobian(lambda))
}

/// Natural gradient in `alpha^3`: `3 alpha^2 kappa^3 * nat_grad_lambda`.
pub fn natural_chain_alpha_cubed(nat_grad_lambda: &DVector<f64>, aux: &AuxQuantities) -> DVector<f64> {
    nat_grad_lambda.component_mul(&alpha_cubed_jacobian(aux))
}

/// Natural gradient in `lambda^3`: `3 lambda^2 * nat_grad_lambda`.
pub fn natural_chain_lambda_cubed(nat_grad_lambda: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    nat_grad_lambda.component_mul(&lambda_cubed_jacobian(lambda))
}
