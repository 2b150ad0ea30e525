//! Random-intercept Poisson GLMM with one skew-normal block per subject and
//! one for the fixed effects and random-effect scale.

use csnvi::models::{synthetic, Dataset, GlmmModel, TargetModel};
use csnvi::optim::{fit_csn, fit_gaussian, OptimizerConfig};

fn main() -> csnvi::Result<()> {
    let Dataset::Glmm { y, x, z, groups, link } = synthetic::poisson_glmm(11, 60, 1.0) else { unreachable!() };
    let model = GlmmModel::new(y, x, z, &groups, link, 10.0, 10.0)?;
    println!("{} subjects, dimension {}, {} blocks", model.n_subjects(), model.dim(), model.block_layout().len());
    let cfg = OptimizerConfig { seed: 11, iterations: 20_000, step: 0.01, ..Default::default() };
    let g = fit_gaussian(&model, &cfg)?;
    let c = fit_csn(&model, &cfg, Some(&g))?;
    for (name, fit) in [("gaussian", &g), ("csn", &c)] {
        let global = fit.params.blocks.last().expect("global block");
        println!(
            "{name:<8} ELBO {:.3} (se {:.3})  beta mean {:.3?}  log-scale mean {:.3}  {:.1}s",
            fit.elbo,
            fit.elbo_std_error,
            &global.mu().as_slice()[..2],
            global.mu()[2],
            fit.wall_seconds
        );
    }
    println!("generating beta {:?}", synthetic::POISSON_GLMM_BETA);
    Ok(())
}
