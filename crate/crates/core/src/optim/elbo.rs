use crate::csn::{entropy, SkewParams};
use crate::gradient::NoisePair;
use crate::models::{BlockParams, TargetModel};
use rand::Rng;

/// Monte Carlo ELBO `E_q h(theta)` with its standard error.
pub fn elbo_estimate<R: Rng + ?Sized>(params: &BlockParams, model: &dyn TargetModel, n_samples: usize, rng: &mut R) -> (f64, f64) {
    let d = params.dim();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let theta = params.draw(&NoisePair::draw(rng, d));
        let h = model.log_joint(&theta) - params.log_density(&theta);
        sum += h;
        sum_sq += h * h;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// `E_q ln p + H(q)` when the model has a closed-form expectation.
pub fn elbo_closed_form(params: &SkewParams, model: &dyn TargetModel) -> Option<f64> {
    model.closed_form_expected_logp(params).map(|e| e + entropy(params))
}
