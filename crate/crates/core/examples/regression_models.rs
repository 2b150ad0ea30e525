//! Gaussian and skew-normal fits for the logistic, zero-inflated negative
//! binomial and Weibull survival models on generated data.

use csnvi::models::{synthetic, Dataset, LogisticModel, TargetModel, WeibullModel, ZinbModel};
use csnvi::optim::{fit_csn, fit_gaussian, OptimizerConfig};

fn compare(model: &dyn TargetModel, truth: &[f64]) -> csnvi::Result<()> {
    let cfg = OptimizerConfig { seed: 2, iterations: 20_000, step: 0.005, ..Default::default() };
    let g = fit_gaussian(model, &cfg)?;
    let c = fit_csn(model, &cfg, Some(&g))?;
    println!("{} (d = {})", model.name(), model.dim());
    println!("  gaussian ELBO {:.3} (se {:.3})", g.elbo, g.elbo_std_error);
    println!("  csn      ELBO {:.3} (se {:.3})", c.elbo, c.elbo_std_error);
    println!("  posterior mean {:.3?}", c.params.mean().as_slice());
    println!("  generating     {truth:.3?}");
    Ok(())
}

fn main() -> csnvi::Result<()> {
    let Dataset::Logistic { y, trials, x } = synthetic::logistic(2, 300, 3) else { unreachable!() };
    compare(&LogisticModel::new(y, trials, x, 100.0)?, &synthetic::logistic_beta(3))?;

    let Dataset::Zinb { y, x, z } = synthetic::zinb(2, 500) else { unreachable!() };
    let mut truth = [synthetic::ZINB_BETA.as_slice(), synthetic::ZINB_GAMMA.as_slice()].concat();
    truth.push(synthetic::ZINB_ALPHA.ln());
    compare(&ZinbModel::new(y, x, z, 100.0)?, &truth)?;

    let Dataset::Survival { t, events, x, z } = synthetic::survival(2, 300) else { unreachable!() };
    let truth = [synthetic::SURVIVAL_BETA.as_slice(), synthetic::SURVIVAL_GAMMA.as_slice()].concat();
    compare(&WeibullModel::new(t, events, x, z, 100.0)?, &truth)
}
