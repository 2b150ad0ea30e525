//! Mean and log-variance of a normal sample: Gaussian, Cholesky and LU
//! skew-normal fits with Euclidean and natural gradients.

use csnvi::csn::FactorKind;
use csnvi::models::{synthetic, Dataset, NormalPriors, NormalSampleModel};
use csnvi::optim::{elbo_closed_form, fit_csn, fit_gaussian, FitResult, GradientMode, OptimizerConfig};

fn report(name: &str, fit: &FitResult, model: &NormalSampleModel) {
    let q = fit.dense_params().expect("dense fit");
    println!(
        "{name:<22} windowed ELBO {:.4} (se {:.4})  exact {:.4}  lambda {:.3?}  {:.2}s",
        fit.elbo,
        fit.elbo_std_error,
        elbo_closed_form(q, model).expect("closed form"),
        q.lambda().as_slice(),
        fit.wall_seconds
    );
}

fn main() -> csnvi::Result<()> {
    let Dataset::NormalSample { y } = synthetic::normal_sample_default(5) else { unreachable!() };
    let model = NormalSampleModel::new(y, NormalPriors::default())?;
    for mode in [GradientMode::EuclideanAdam, GradientMode::NaturalConstant] {
        println!("{mode:?}");
        let cfg = OptimizerConfig { seed: 5, mode, ..Default::default() };
        let g = fit_gaussian(&model, &cfg)?;
        report("gaussian", &g, &model);
        report("csn (Cholesky)", &fit_csn(&model, &cfg, Some(&g))?, &model);
        report("csn (LU)", &fit_csn(&model, &OptimizerConfig { factor: FactorKind::Lu, ..cfg }, Some(&g))?, &model);
    }
    Ok(())
}
