//! Closed-form natural gradients against a dense solve with the Fisher information.

use csnvi::csn::{FactorKind, Parametrization, SkewParams};
use csnvi::gradient::{euclidean_grad_estimate, natural_grad, oracle_natural_gradient, NoisePair, ParamGradient};
use csnvi::models::{synthetic, Dataset, NormalPriors, NormalSampleModel};
use csnvi::rng::stream;
use nalgebra::{DMatrix, DVector};

fn main() -> csnvi::Result<()> {
    let Dataset::NormalSample { y } = synthetic::normal_sample_default(1) else { unreachable!() };
    let model = NormalSampleModel::new(y, NormalPriors::default())?;
    for form in [FactorKind::Cholesky, FactorKind::Lu] {
        let l = DMatrix::from_row_slice(2, 2, &[5.0, 0.0, 0.1, 0.5]);
        let mu = DVector::from_vec(vec![100.0, 5.2]);
        let lambda = DVector::from_vec(vec![0.5, 1.0]);
        let q = match form {
            FactorKind::Cholesky => SkewParams::cholesky(mu, l, lambda, Parametrization::Lambda)?,
            FactorKind::Lu => SkewParams::lu(mu, l, DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]), lambda, Parametrization::Lambda)?,
        };
        // Average a few hundred single-draw estimates of the ELBO gradient.
        let mut rng = stream(3, 0);
        let mut g = ParamGradient::zeros_like(&q);
        for _ in 0..500 {
            g.add_assign(&euclidean_grad_estimate(&q, &model, &NoisePair::draw(&mut rng, 2)));
        }
        let g = g.scale(1.0 / 500.0);
        let closed = natural_grad(&g, &q).to_vec();
        let dense = oracle_natural_gradient(&q, &g)?.to_vec();
        println!("{form:?}: euclidean {:.4?}", g.to_vec().as_slice());
        println!("{form:?}: natural   {:.4?}", closed.as_slice());
        println!("{form:?}: max |closed form - dense solve| = {:.2e}", (closed - dense).amax());
    }
    Ok(())
}
