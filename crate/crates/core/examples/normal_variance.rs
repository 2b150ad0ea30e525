//! Log-variance of a normal sample with known mean: Gaussian and skew-normal
//! approximations scored against the exact posterior.

use csnvi::csn::log_density;
use csnvi::metrics::{iae_accuracy, DensityGrid, GRID_POINTS};
use csnvi::models::{synthetic, Dataset, NormalPriors, NormalVarianceModel};
use csnvi::optim::{elbo_closed_form, fit_csn, fit_gaussian, FitResult, OptimizerConfig};
use nalgebra::DVector;

fn main() -> csnvi::Result<()> {
    let Dataset::NormalSample { y } = synthetic::normal_variance_default(42) else { unreachable!() };
    let model = NormalVarianceModel::new(y, NormalPriors::default())?;
    let cfg = OptimizerConfig { seed: 42, ..Default::default() };
    let gaussian = fit_gaussian(&model, &cfg)?;
    let csn = fit_csn(&model, &cfg, Some(&gaussian))?;

    let exact = model.exact_posterior_grid(GRID_POINTS);
    let score = |name: &str, fit: &FitResult| {
        let q = fit.dense_params().expect("dense fit");
        let dens = exact.x.iter().map(|&t| log_density(q, &DVector::from_element(1, t)).exp()).collect();
        let (iae, acc) = iae_accuracy(&DensityGrid::new(exact.x.clone(), dens).expect("valid grid"), &exact);
        println!(
            "{name:<9} ELBO {:.4}  windowed {:.4} (se {:.4})  IAE {iae:.4}  accuracy {acc:.1}%  lambda {:.3}",
            elbo_closed_form(q, &model).expect("closed form"),
            fit.elbo,
            fit.elbo_std_error,
            q.lambda()[0]
        );
    };
    score("gaussian", &gaussian);
    score("csn", &csn);
    println!("log evidence {:.4}", model.log_evidence());
    Ok(())
}
