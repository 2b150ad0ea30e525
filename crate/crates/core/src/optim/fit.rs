//! The optimisation loop.

use super::adam::{adam_step, AdamState};
use super::config::{GradientMode, OptimizerConfig};
use super::laplace::laplace;
use crate::csn::params::alpha_cubed_limit;
use crate::csn::{alpha_cubed_from_lambda, FactorKind, Parametrization, SkewParam, SkewParams};
use crate::error::{CsnError, Result};
use crate::gradient::chain::{alpha_cubed_jacobian, lambda_cubed_jacobian, ALPHA_FLOOR};
use crate::gradient::{natural_grad, pathwise_gradient, NoisePair, ParamGradient};
use crate::linalg::{tri_len, vech, vech_inv, vech_u, vech_u_inv};
use crate::models::{BlockLayout, BlockParams, TargetModel};
use crate::rng::stream;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Natural-gradient map applied to each block's `lambda`-space gradient.
pub type NaturalGradFn = fn(&ParamGradient, &SkewParams) -> ParamGradient;

/// Summary of one window of iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub window: usize,
    /// Mean of the per-iteration ELBO estimates in the window.
    pub elbo: f64,
    /// Standard error of that mean.
    pub std_error: f64,
    /// Iterations completed at the end of the window.
    pub time: usize,
    /// Euclidean norm of `lambda` over all blocks.
    pub skew_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BlockParams,
    /// Mean ELBO estimate of the last window.
    pub elbo: f64,
    pub elbo_std_error: f64,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    /// Whether the plateau criterion held when the loop ended.
    pub converged: bool,
    pub wall_seconds: f64,
}

impl FitResult {
    /// The single factor of a dense fit.
    pub fn dense_params(&self) -> Option<&SkewParams> {
        match self.params.blocks.as_slice() {
            [p] => Some(p),
            _ => None,
        }
    }
}

/// Coordinates of one block as optimised: `(mu, skew, vech L, vech_u U)`.
fn pack(p: &SkewParams) -> DVector<f64> {
    let mut v: Vec<f64> = p.mu().iter().copied().collect();
    v.extend(p.skew().values().iter());
    v.extend(vech(p.l()).iter());
    if let Some(u) = p.u() {
        v.extend(vech_u(u).iter());
    }
    DVector::from_vec(v)
}

fn packed_len(d: usize, form: FactorKind) -> usize {
    2 * d + tri_len(d) + if form == FactorKind::Lu { d * (d - 1) / 2 } else { 0 }
}

fn unpack(v: &DVector<f64>, d: usize, form: FactorKind, kind: Parametrization) -> Result<SkewParams> {
    let t = tri_len(d);
    let mu = v.rows(0, d).into_owned();
    let skew_v = v.rows(d, d).into_owned();
    let l = vech_inv(&v.rows(2 * d, t).into_owned(), d);
    let skew = match kind {
        Parametrization::Lambda => SkewParam::Lambda(skew_v),
        Parametrization::LambdaCubed => SkewParam::LambdaCubed(skew_v),
        Parametrization::AlphaCubed => {
            let lim = alpha_cubed_limit();
            SkewParam::AlphaCubed(skew_v.map(|a| a.clamp(-lim, lim)))
        }
    };
    let factor = match form {
        FactorKind::Cholesky => crate::csn::FactorForm::Cholesky { l },
        FactorKind::Lu => {
            let mut u = vech_u_inv(&v.rows(2 * d + t, d * (d - 1) / 2).into_owned(), d);
            u.fill_diagonal(1.0);
            crate::csn::FactorForm::Lu { l, u }
        }
    };
    SkewParams::new(mu, factor, skew)
}

/// Gradient in the optimised coordinates, plus the skew coordinates that
/// fall back to `lambda` because their chain factor vanishes.
fn working_gradient(g: &ParamGradient, p: &SkewParams, natural: bool, update_skew: bool) -> (DVector<f64>, Vec<bool>) {
    let d = p.dim();
    let small = |v: &DVector<f64>| v.iter().map(|x| x.abs() < ALPHA_FLOOR).collect::<Vec<_>>();
    let (jac, fallback) = match p.parametrization() {
        Parametrization::Lambda => (None, vec![false; d]),
        Parametrization::AlphaCubed => (Some(alpha_cubed_jacobian(p.aux())), small(&p.aux().alpha)),
        Parametrization::LambdaCubed => (Some(lambda_cubed_jacobian(p.lambda())), small(p.lambda())),
    };
    let skew = DVector::from_fn(d, |i, _| {
        if !update_skew {
            return 0.0;
        }
        match &jac {
            Some(j) if !fallback[i] => {
                if natural {
                    g.d_skew[i] * j[i]
                } else {
                    g.d_skew[i] / j[i]
                }
            }
            _ => g.d_skew[i],
        }
    });
    let mut w = g.clone();
    w.d_skew = skew;
    (w.to_vec(), fallback)
}

fn apply_update(p: &SkewParams, delta: &DVector<f64>, fallback: &[bool]) -> Result<SkewParams> {
    let d = p.dim();
    let mut v = pack(p) + delta;
    for i in (0..d).filter(|&i| fallback[i]) {
        let lam = p.lambda()[i] + delta[d + i];
        v[d + i] = match p.parametrization() {
            Parametrization::AlphaCubed => alpha_cubed_from_lambda(lam),
            Parametrization::LambdaCubed => lam * lam * lam,
            Parametrization::Lambda => lam,
        };
    }
    unpack(&v, d, p.factor().kind(), p.parametrization())
}

fn snapshot(params: &BlockParams) -> String {
    serde_json::to_string(params).unwrap_or_else(|_| "<unserialisable>".into())
}

/// Running sums for one trace window.
#[derive(Default)]
struct Window {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Window {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean_se(&self) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum / n;
        if self.n < 2 {
            return (mean, f64::NAN);
        }
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

fn plateau(trace: &[TraceRecord]) -> bool {
    let k = trace.len();
    if k < 6 {
        return false;
    }
    let (a, b) = (trace[k - 6].elbo, trace[k - 1].elbo);
    (b - a).abs() < 1e-4 * a.abs()
}

fn run(model: &dyn TargetModel, cfg: &OptimizerConfig, init: BlockParams, natural_fn: NaturalGradFn) -> Result<FitResult> {
    cfg.validate()?;
    if init.dim() != model.dim() {
        return Err(CsnError::Dimension(format!("variational dimension {} vs model {}", init.dim(), model.dim())));
    }
    let started = Instant::now();
    let natural = cfg.mode == GradientMode::NaturalConstant;
    let mut params = init;
    let layout = params.layout();
    let ranges = layout.ranges();
    let lens: Vec<usize> = params.blocks.iter().map(|b| packed_len(b.dim(), b.factor().kind())).collect();
    let total: usize = lens.iter().sum();
    let mut adam = AdamState::new(total);
    let mut rng = stream(cfg.seed, 0);
    let d = model.dim();
    let mut trace = Vec::new();
    let mut window = Window::default();
    let mut converged = false;
    let mut done = 0;
    let abort = |what: &str, it: usize, params: &BlockParams, trace: &[TraceRecord]| {
        let last = trace.last().map(|t: &TraceRecord| t.elbo).unwrap_or(f64::NAN);
        CsnError::Numerical(format!(
            "non-finite {what} at iteration {it} (last windowed ELBO {last}); parameters: {}",
            snapshot(params)
        ))
    };
    for it in 0..cfg.iterations {
        let mut grads: Vec<ParamGradient> = params.blocks.iter().map(ParamGradient::zeros_like).collect();
        let mut h_sum = 0.0;
        for _ in 0..cfg.mc_samples_per_step {
            let noise = NoisePair::draw(&mut rng, d);
            let parts = noise.split(&layout.sizes);
            let theta = params.draw(&noise);
            let (lp, glp) = model.log_joint_and_grad(&theta);
            let h = lp - params.log_density(&theta);
            if !h.is_finite() {
                return Err(abort("ELBO estimate", it, &params, &trace));
            }
            h_sum += h;
            let grad_h = glp - params.grad_theta_log_density(&theta);
            for ((g, (b, r)), nz) in grads.iter_mut().zip(params.blocks.iter().zip(&ranges)).zip(&parts) {
                g.add_assign(&pathwise_gradient(b, nz, &grad_h.rows(r.start, r.len()).into_owned()));
            }
        }
        let s = 1.0 / cfg.mc_samples_per_step as f64;
        let mut work = DVector::zeros(total);
        let mut fallbacks = Vec::with_capacity(params.blocks.len());
        let mut at = 0;
        for (g, b) in grads.iter().zip(&params.blocks) {
            let g = g.scale(s);
            let g = if natural { natural_fn(&g, b) } else { g };
            let (w, fb) = working_gradient(&g, b, natural, cfg.update_skew);
            work.rows_mut(at, w.len()).copy_from(&w);
            at += w.len();
            fallbacks.push(fb);
        }
        if work.iter().any(|v| !v.is_finite()) {
            return Err(abort("gradient", it, &params, &trace));
        }
        let delta = if natural {
            work * cfg.step
        } else {
            let (state, u) = adam_step(&adam, &work, cfg.step, &cfg.adam);
            adam = state;
            u
        };
        let mut at = 0;
        let mut next = Vec::with_capacity(params.blocks.len());
        for ((b, len), fb) in params.blocks.iter().zip(&lens).zip(&fallbacks) {
            let upd = apply_update(b, &delta.rows(at, *len).into_owned(), fb)
                .map_err(|e| CsnError::Numerical(format!("update failed at iteration {it}: {e}")))?;
            next.push(upd);
            at += len;
        }
        params = BlockParams { blocks: next };
        window.push(h_sum * s);
        done = it + 1;
        if window.n == cfg.trace_window || done == cfg.iterations {
            let (elbo, std_error) = window.mean_se();
            let skew_norm = params.blocks.iter().map(|b| b.lambda().norm_squared()).sum::<f64>().sqrt();
            let snap = cfg
                .snapshot_params
                .then(|| params.blocks.iter().flat_map(|b| pack(b).iter().copied().collect::<Vec<_>>()).collect());
            trace.push(TraceRecord { window: trace.len(), elbo, std_error, time: done, skew_norm, params: snap });
            window = Window::default();
            converged = plateau(&trace);
            if cfg.plateau_stop && converged {
                break;
            }
        }
    }
    let (elbo, elbo_std_error) = trace.last().map(|t| (t.elbo, t.std_error)).unwrap_or((f64::NAN, f64::NAN));
    Ok(FitResult {
        params,
        elbo,
        elbo_std_error,
        trace,
        iterations: done,
        converged,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Laplace-based Gaussian starting point: per block `(mu, L)`.
fn laplace_start(model: &dyn TargetModel, layout: &BlockLayout) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let ranges = layout.ranges();
    match laplace(model, &DVector::zeros(model.dim()), layout) {
        Ok(lap) => ranges
            .iter()
            .zip(lap.factors)
            .map(|(r, l)| (lap.mode.rows(r.start, r.len()).into_owned(), l))
            .collect(),
        Err(_) => ranges
            .iter()
            .map(|r| (DVector::zeros(r.len()), DMatrix::identity(r.len(), r.len()) * 0.1))
            .collect(),
    }
}

/// Per-block `(mu, L, optional U)` starting values.
type Start = Vec<(DVector<f64>, DMatrix<f64>, Option<DMatrix<f64>>)>;

fn build_blocks(
    start: Start,
    lambda: &[f64],
    form: FactorKind,
    kind: Parametrization,
) -> Result<BlockParams> {
    let mut at = 0;
    let mut blocks = Vec::with_capacity(start.len());
    for (mu, l, u) in start {
        let d = mu.len();
        let lam = DVector::from_row_slice(&lambda[at..at + d]);
        at += d;
        blocks.push(match form {
            FactorKind::Cholesky => SkewParams::cholesky(mu, l, lam, kind)?,
            FactorKind::Lu => SkewParams::lu(mu, l, u.unwrap_or_else(|| DMatrix::identity(d, d)), lam, kind)?,
        });
    }
    BlockParams::new(blocks)
}

/// Gaussian variational fit: the same loop with `lambda` pinned at zero.
pub fn fit_gaussian(model: &dyn TargetModel, config: &OptimizerConfig) -> Result<FitResult> {
    let cfg = OptimizerConfig {
        parametrization: Parametrization::Lambda,
        factor: FactorKind::Cholesky,
        update_skew: false,
        ..config.clone()
    };
    let start = laplace_start(model, &model.block_layout()).into_iter().map(|(m, l)| (m, l, None)).collect();
    let init = build_blocks(start, &vec![0.0; model.dim()], FactorKind::Cholesky, Parametrization::Lambda)?;
    run(model, &cfg, init, natural_grad)
}

/// CSN fit with the closed-form natural gradients.
pub fn fit_csn(model: &dyn TargetModel, config: &OptimizerConfig, warm_start: Option<&FitResult>) -> Result<FitResult> {
    fit_csn_with(model, config, warm_start, natural_grad)
}

/// CSN fit with an explicit natural-gradient map.
///
/// `(mu, L)` come from `warm_start` (with `U = I`) or a Laplace
/// approximation; the skewness starts at `config.skew_init` in `lambda`.
pub fn fit_csn_with(
    model: &dyn TargetModel,
    config: &OptimizerConfig,
    warm_start: Option<&FitResult>,
    natural_fn: NaturalGradFn,
) -> Result<FitResult> {
    let lambda = config.skew_init.expand(model.dim())?;
    let start: Start = match warm_start {
        Some(w) => {
            if w.params.dim() != model.dim() {
                return Err(CsnError::Dimension("warm start does not match the model dimension".into()));
            }
            w.params
                .blocks
                .iter()
                .map(|b| {
                    let u = if config.factor == FactorKind::Lu { b.u().cloned() } else { None };
                    let l = if config.factor == FactorKind::Cholesky && b.u().is_some() {
                        // An LU warm start becomes lower triangular through Sigma's Cholesky factor.
                        b.sigma().cholesky().map(|c| c.l()).unwrap_or_else(|| b.l().clone())
                    } else {
                        b.l().clone()
                    };
                    (b.mu().clone(), l, u)
                })
                .collect()
        }
        None => laplace_start(model, &model.block_layout()).into_iter().map(|(m, l)| (m, l, None)).collect(),
    };
    let init = build_blocks(start, &lambda, config.factor, config.parametrization)?;
    run(model, config, init, natural_fn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::synthetic::{self, Dataset};
    use crate::models::{NormalPriors, NormalSampleModel};

    /// `y_i ~ N(theta, 1)`, `theta ~ N(0, s0^2)`: Gaussian posterior.
    struct Conjugate {
        y: Vec<f64>,
        s0: f64,
    }

    impl Conjugate {
        fn posterior(&self) -> (f64, f64) {
            let prec = self.y.len() as f64 + 1.0 / (self.s0 * self.s0);
            (self.y.iter().sum::<f64>() / prec, 1.0 / prec.sqrt())
        }

        fn log_evidence(&self) -> f64 {
            let n = self.y.len() as f64;
            let (m, s) = self.posterior();
            let ss: f64 = self.y.iter().map(|v| v * v).sum();
            -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * ss + 0.5 * m * m / (s * s) + (s / self.s0).ln()
        }
    }

    impl TargetModel for Conjugate {
        fn dim(&self) -> usize {
            1
        }
        fn log_joint(&self, t: &DVector<f64>) -> f64 {
            let n = self.y.len() as f64;
            let ss: f64 = self.y.iter().map(|v| (v - t[0]).powi(2)).sum();
            -0.5 * (n + 1.0) * (2.0 * std::f64::consts::PI).ln() - 0.5 * ss - self.s0.ln() - t[0] * t[0] / (2.0 * self.s0 * self.s0)
        }
        fn grad_log_joint(&self, t: &DVector<f64>) -> DVector<f64> {
            let g: f64 = self.y.iter().map(|v| v - t[0]).sum();
            DVector::from_element(1, g - t[0] / (self.s0 * self.s0))
        }
        fn name(&self) -> &str {
            "conjugate"
        }
    }

    fn conjugate() -> Conjugate {
        Conjugate { y: vec![0.3, 1.2, -0.4, 0.9, 2.1], s0: 3.0 }
    }

    fn normal_sample() -> NormalSampleModel {
        let Dataset::NormalSample { y } = synthetic::normal_sample_default(3) else { unreachable!() };
        NormalSampleModel::new(y, NormalPriors::default()).unwrap()
    }

    #[test]
    fn gaussian_fit_recovers_conjugate_posterior() {
        let m = conjugate();
        let cfg = OptimizerConfig { iterations: 50_000, seed: 1, ..Default::default() };
        let fit = fit_gaussian(&m, &cfg).unwrap();
        let p = fit.dense_params().unwrap();
        let (pm, ps) = m.posterior();
        assert!((p.mu()[0] - pm).abs() < 1e-2, "{} vs {pm}", p.mu()[0]);
        assert!((p.l()[(0, 0)].abs() - ps).abs() < 1e-2);
        let exact = crate::optim::elbo_closed_form(p, &m);
        assert!(exact.is_none());
        let (e, _) = crate::optim::elbo_estimate(&fit.params, &m, 100_000, &mut stream(2, 0));
        assert!((e - m.log_evidence()).abs() < 1e-3, "{e} vs {}", m.log_evidence());
    }

    #[test]
    fn gaussian_reduction_is_bit_exact() {
        let m = normal_sample();
        let cfg = OptimizerConfig { iterations: 3000, trace_window: 100, seed: 5, ..Default::default() };
        let g = fit_gaussian(&m, &cfg).unwrap();
        let reduced = OptimizerConfig {
            parametrization: Parametrization::Lambda,
            skew_init: crate::optim::SkewInit::Scalar(0.0),
            update_skew: false,
            ..cfg
        };
        let c = fit_csn(&m, &reduced, None).unwrap();
        for (a, b) in g.trace.iter().zip(&c.trace) {
            assert_eq!(a.elbo.to_bits(), b.elbo.to_bits());
        }
        assert_eq!(g.params, c.params);
    }

    #[test]
    fn deterministic_and_lu_keeps_unit_diagonal() {
        let m = normal_sample();
        let cfg = OptimizerConfig {
            iterations: 2000,
            trace_window: 100,
            seed: 7,
            factor: FactorKind::Lu,
            snapshot_params: true,
            ..Default::default()
        };
        let a = fit_csn(&m, &cfg, None).unwrap();
        let b = fit_csn(&m, &cfg, None).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.params, b.params);
        let u = a.dense_params().unwrap().u().unwrap();
        assert_eq!(u[(0, 0)], 1.0);
        assert_eq!(u[(1, 1)], 1.0);
        assert_eq!(u[(1, 0)], 0.0);
        assert_eq!(a.trace.len(), 20);
        assert_eq!(a.trace[19].time, 2000);
    }

    #[test]
    fn windowed_elbo_rises_and_csn_nests_gaussian() {
        let m = normal_sample();
        let cfg = OptimizerConfig { iterations: 20_000, trace_window: 1000, seed: 11, ..Default::default() };
        let g = fit_gaussian(&m, &cfg).unwrap();
        let violations = g.trace.windows(2).skip(2).filter(|w| w[1].elbo < w[0].elbo - 2.0 * w[0].std_error).count();
        assert!(violations <= g.trace.len() / 10 + 1, "{violations}");
        for mode in [GradientMode::EuclideanAdam, GradientMode::NaturalConstant] {
            let c = fit_csn(&m, &OptimizerConfig { mode, ..cfg.clone() }, Some(&g)).unwrap();
            assert!(c.elbo >= g.elbo - 2.0 * g.elbo_std_error.hypot(c.elbo_std_error), "{mode:?}: {} vs {}", c.elbo, g.elbo);
        }
    }

    #[test]
    fn plateau_stops_early() {
        let m = conjugate();
        let cfg = OptimizerConfig { iterations: 200_000, trace_window: 500, plateau_stop: true, seed: 3, ..Default::default() };
        let fit = fit_gaussian(&m, &cfg).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations < 200_000);
    }

    #[test]
    fn alpha_cubed_stays_in_domain() {
        let m = normal_sample();
        let cfg = OptimizerConfig { iterations: 3000, step: 0.5, trace_window: 100, seed: 2, skew_init: crate::optim::SkewInit::Scalar(40.0), ..Default::default() };
        let fit = fit_csn(&m, &cfg, None).unwrap();
        let lim = alpha_cubed_limit();
        assert!(fit.dense_params().unwrap().skew().values().iter().all(|a| a.abs() <= lim));
    }
}
