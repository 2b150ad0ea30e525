use super::config::AdamConfig;
use nalgebra::DVector;

/// First and second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: DVector<f64>,
    pub v: DVector<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> AdamState {
        AdamState { m: DVector::zeros(n), v: DVector::zeros(n), t: 0 }
    }
}

/// One bias-corrected Adam ascent step; returns the new state and the
/// update to add to the parameters.
pub fn adam_step(state: &AdamState, grad: &DVector<f64>, step: f64, cfg: &AdamConfig) -> (AdamState, DVector<f64>) {
    let t = state.t + 1;
    let m = &state.m * cfg.beta1 + grad * (1.0 - cfg.beta1);
    let v = &state.v * cfg.beta2 + grad.component_mul(grad) * (1.0 - cfg.beta2);
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    let update = DVector::from_fn(grad.len(), |i, _| step * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.eps));
    (AdamState { m, v, t }, update)
}
