//! Gauss-Legendre and Gauss-Hermite rules plus a composite Legendre integrator.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// `n`-point Gauss-Hermite rule for the standard normal weight:
/// `sum w_i f(x_i) ~ E f(U)`, `U ~ N(0, 1)`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    // Newton iteration on orthonormal physicists' Hermite polynomials, then
    // rescale nodes by sqrt(2) and weights by 1/sqrt(pi).
    let mut x_phys = vec![0.0; n];
    let mut w_phys = vec![0.0; n];
    let m = n.div_ceil(2);
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x_phys[0],
            3 => 1.91 * z - 0.91 * x_phys[1],
            _ => 2.0 * z - x_phys[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x_phys[i] = z;
        x_phys[n - 1 - i] = -z;
        w_phys[i] = 2.0 / (pp * pp);
        w_phys[n - 1 - i] = w_phys[i];
    }
    let s = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    let mut nodes: Vec<f64> = x_phys.iter().map(|x| x * s).collect();
    let mut weights: Vec<f64> = w_phys.iter().map(|w| w * inv_sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    Rule { nodes, weights }
}

/// Cached 64-point standard-normal Gauss-Hermite rule.
pub fn gh64() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite_normal(64))
}

/// Cached 20-point Gauss-Legendre rule.
pub fn gl20() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Composite 20-point Gauss-Legendre integral of `f` over `[a, b]` with
/// `panels` equal panels.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gl20();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Nodes and weights of the composite rule used by [`composite_gl`].
pub fn composite_gl_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = gl20();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.nodes.len());
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Locate the mode of a unimodal log density `f` by a scan of
/// `[-scan, scan]` and return `(mode, f(mode), lo, hi)` with
/// `f(lo) = f(hi) = f(mode) - drop` (found by bracketing and bisection).
pub fn log_level_bounds<F: Fn(f64) -> f64>(f: F, scan: f64, drop: f64) -> (f64, f64, f64, f64) {
    let steps = 8000;
    let h = 2.0 * scan / steps as f64;
    let (mut mode, mut fmax) = (0.0, f64::NEG_INFINITY);
    for k in 0..=steps {
        let x = -scan + k as f64 * h;
        let v = f(x);
        if v > fmax {
            mode = x;
            fmax = v;
        }
    }
    // Golden-section refinement inside the bracketing cell.
    let (mut a, mut b) = (mode - h, mode + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let m = 0.5 * (a + b);
    if f(m) > fmax {
        mode = m;
        fmax = f(m);
    }
    let target = fmax - drop;
    let side = |dir: f64| {
        let mut step = 1.0;
        let mut inner = mode;
        let mut outer = mode + dir * step;
        while f(outer) > target {
            inner = outer;
            step *= 2.0;
            outer = mode + dir * step;
            if step > 1e12 {
                return outer;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if f(mid) > target {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        0.5 * (inner + outer)
    };
    (mode, fmax, side(-1.0), side(1.0))
}

/// Composite trapezoid rule on an equally spaced grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}
