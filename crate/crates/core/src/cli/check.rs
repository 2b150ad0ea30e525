//! Built-in verification battery.

use crate::cli::data::build_model;
use crate::cli::config::RunConfig;
use crate::csn::{entropy, grad_theta_log_density, log_density, mean_cov, sample, tilted_moments, Parametrization, SkewParams};
use crate::gradient::{natural_grad_cholesky, natural_grad_lu, oracle_natural_gradient, ParamGradient};
use crate::models::finite_difference_gradient;
use crate::optim::NaturalGradFn;
use crate::quadrature::trapezoid;
use crate::rng::{stream, Stream};
use nalgebra::{DMatrix, DVector};
use rand::RngExt;

/// Options for [`run_battery`]; the natural-gradient maps are injectable so
/// a deliberately broken implementation can be shown to fail.
#[derive(Clone, Copy)]
pub struct CheckOptions {
    /// Restrict to `d <= 2` and smaller Monte Carlo sizes.
    pub quick: bool,
    pub seed: u64,
    pub natural_cholesky: NaturalGradFn,
    pub natural_lu: NaturalGradFn,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { quick: false, seed: 0, natural_cholesky: natural_grad_cholesky, natural_lu: natural_grad_lu }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn row(name: &str, passed: bool, detail: String) -> CheckRow {
    CheckRow { name: name.to_owned(), passed, detail }
}

fn random_params(rng: &mut Stream, d: usize, lu: bool) -> SkewParams {
    let l = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => 0.0,
        std::cmp::Ordering::Equal => rng.random_range(0.5..1.5),
        std::cmp::Ordering::Greater => rng.random_range(-0.8..0.8),
    });
    let lam = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
    let mu = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    if lu {
        let u = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else if i < j { rng.random_range(-0.8..0.8) } else { 0.0 });
        SkewParams::lu(mu, l, u, lam, Parametrization::Lambda).expect("valid random parameters")
    } else {
        SkewParams::cholesky(mu, l, lam, Parametrization::Lambda).expect("valid random parameters")
    }
}

fn model_gradients(opts: &CheckOptions) -> CheckRow {
    let mut worst = 0.0_f64;
    let mut worst_name = String::new();
    let mut rng = stream(opts.seed, 20);
    for kind in ["normal-sample", "normal-variance", "poisson-glm", "logistic", "zinb", "survival", "glmm"] {
        let spec = RunConfig::from_toml(&format!("[model]\nkind = \"{kind}\"\n[model.synthetic]\nn = 12\n"))
            .expect("static config")
            .model;
        let data = super::data::load_dataset(&spec, opts.seed).expect("synthetic data");
        let model = build_model(&spec, data).expect("synthetic model");
        for _ in 0..3 {
            let theta = DVector::from_fn(model.dim(), |_, _| rng.random_range(-0.5..0.5));
            let g = model.grad_log_joint(&theta);
            let fd = finite_difference_gradient(model.as_ref(), &theta);
            let err = (&g - &fd).amax() / g.amax().max(1.0);
            if !(err <= worst) {
                worst = err;
                worst_name = kind.to_owned();
            }
        }
    }
    let mut q_err = 0.0_f64;
    for d in 1..=if opts.quick { 2 } else { 3 } {
        let p = random_params(&mut rng, d, d > 1);
        let theta = p.mu() + DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let g = grad_theta_log_density(&p, &theta);
        let fd = DVector::from_fn(d, |i, _| {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[i] += 1e-5;
            dn[i] -= 1e-5;
            (log_density(&p, &up) - log_density(&p, &dn)) / 2e-5
        });
        q_err = q_err.max((&g - &fd).amax() / g.amax().max(1.0));
    }
    row(
        "finite-difference gradients",
        worst < 1e-6 && q_err < 1e-6,
        format!("worst model rel err {worst:.1e} ({worst_name}); log q rel err {q_err:.1e}"),
    )
}

fn fisher_oracle_rows(opts: &CheckOptions) -> Vec<CheckRow> {
    let max_d = if opts.quick { 2 } else { 4 };
    let points = if opts.quick { 5 } else { 20 };
    let mut rng = stream(opts.seed, 21);
    let mut out = Vec::new();
    for (lu, name, f) in [(false, "natural gradient vs Fisher oracle (Cholesky)", opts.natural_cholesky), (true, "natural gradient vs Fisher oracle (LU)", opts.natural_lu)] {
        let mut worst = 0.0_f64;
        let mut failed = None;
        for d in 1..=max_d {
            for _ in 0..points {
                let p = random_params(&mut rng, d, lu);
                let n = ParamGradient::zeros_like(&p).len();
                let g = ParamGradient::from_vec(&DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)), d, p.factor().kind());
                let want = match oracle_natural_gradient(&p, &g) {
                    Ok(w) => w.to_vec(),
                    Err(e) => {
                        failed = Some(format!("oracle failed at d={d}: {e}"));
                        continue;
                    }
                };
                let got = f(&g, &p).to_vec();
                let err = (&got - &want).amax() / want.amax().max(1.0);
                if !(err <= worst) {
                    worst = err;
                }
            }
        }
        let passed = failed.is_none() && worst < 1e-8;
        out.push(row(name, passed, failed.unwrap_or_else(|| format!("d <= {max_d}, max rel err {worst:.1e}"))));
    }
    out
}

fn entropy_quadrature() -> CheckRow {
    let (lo, hi, n) = (-14.0, 14.0, 28_001);
    let h = (hi - lo) / (n - 1) as f64;
    let mut worst = 0.0_f64;
    for lam in [-3.0, -1.0, 0.0, 1.0, 3.0] {
        let p = SkewParams::cholesky(
            DVector::from_element(1, 0.2),
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, lam),
            Parametrization::Lambda,
        )
        .expect("valid parameters");
        let vals: Vec<f64> = (0..n)
            .map(|k| {
                let lq = log_density(&p, &DVector::from_element(1, lo + k as f64 * h));
                -lq.exp() * lq
            })
            .collect();
        worst = worst.max((entropy(&p) - trapezoid(&vals, h)).abs());
    }
    row("entropy vs quadrature", worst < 1e-8, format!("max abs err {worst:.1e}"))
}

fn test_params() -> SkewParams {
    SkewParams::cholesky(
        DVector::from_vec(vec![0.5, -1.0]),
        DMatrix::from_row_slice(2, 2, &[1.2, 0.0, -0.4, 0.7]),
        DVector::from_vec(vec![2.0, -1.0]),
        Parametrization::Lambda,
    )
    .expect("valid parameters")
}

fn tilted_mc(opts: &CheckOptions) -> CheckRow {
    let p = test_params();
    let s = DVector::from_vec(vec![0.3, -0.2]);
    let n = if opts.quick { 50_000 } else { 400_000 };
    let vals: Vec<f64> = sample(&p, &mut stream(opts.seed, 22), n).iter().map(|t| s.dot(t).exp()).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let m = tilted_moments(&p, &s).log_m.exp();
    let z = (mean - m) / se;
    row("moment generating function vs Monte Carlo", z.abs() < 4.0, format!("M = {m:.6}, MC = {mean:.6}, z = {z:.2}"))
}

fn sampling_moments(opts: &CheckOptions) -> CheckRow {
    let p = test_params();
    let n = if opts.quick { 50_000 } else { 400_000 };
    let draws = sample(&p, &mut stream(opts.seed, 23), n);
    let (m, c) = mean_cov(&p);
    let nf = n as f64;
    let emp_mean = draws.iter().fold(DVector::zeros(2), |a, x| a + x) / nf;
    let mut worst = 0.0_f64;
    for i in 0..2 {
        let xs: Vec<f64> = draws.iter().map(|x| x[i]).collect();
        let var = xs.iter().map(|v| (v - emp_mean[i]).powi(2)).sum::<f64>() / (nf - 1.0);
        worst = worst.max(((emp_mean[i] - m[i]) / (var / nf).sqrt()).abs());
        for j in 0..=i {
            let prods: Vec<f64> = draws.iter().map(|x| (x[i] - m[i]) * (x[j] - m[j])).collect();
            let pm = prods.iter().sum::<f64>() / nf;
            let pv = prods.iter().map(|v| (v - pm).powi(2)).sum::<f64>() / (nf - 1.0);
            worst = worst.max(((pm - c[(i, j)]) / (pv / nf).sqrt()).abs());
        }
    }
    row("sampling mean and covariance", worst < 4.0, format!("max |z| = {worst:.2} over {n} draws"))
}

/// Run every check; the battery passes iff every row does.
pub fn run_battery(opts: &CheckOptions) -> Vec<CheckRow> {
    let mut rows = vec![model_gradients(opts)];
    rows.extend(fisher_oracle_rows(opts));
    rows.push(entropy_quadrature());
    rows.push(tilted_mc(opts));
    rows.push(sampling_moments(opts));
    rows
}

pub fn format_table(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    rows.iter()
        .map(|r| format!("{:<width$}  {}  {}\n", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail))
        .collect()
}
