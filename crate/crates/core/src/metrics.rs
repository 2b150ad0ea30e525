//! Approximation-quality metrics: integrated absolute error and accuracy
//! of 1-D marginals, Gaussian kernel density estimates, and the maximum
//! mean discrepancy with its `M*` transform.

use crate::error::{CsnError, Result};
use crate::quadrature::trapezoid;
use crate::special::norm_pdf;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Default number of abscissae for density grids.
pub const GRID_POINTS: usize = 1024;

/// Values of a density on a uniform, strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityGrid {
    pub fn new(x: Vec<f64>, density: Vec<f64>) -> Result<DensityGrid> {
        if x.len() != density.len() || x.len() < 2 {
            return Err(CsnError::InvalidArgument("grid needs at least two points and matching lengths".into()));
        }
        let step = x[1] - x[0];
        if !(step > 0.0) {
            return Err(CsnError::InvalidArgument("grid abscissae must increase".into()));
        }
        let span = x[x.len() - 1] - x[0];
        for (k, w) in x.windows(2).enumerate() {
            if (w[1] - w[0] - step).abs() > 1e-6 * span {
                return Err(CsnError::InvalidArgument(format!("grid is not uniform at index {k}")));
            }
        }
        if let Some(k) = density.iter().position(|v| !(*v >= 0.0)) {
            return Err(CsnError::InvalidArgument(format!("density value {k} is negative or NaN")));
        }
        Ok(DensityGrid { x, density })
    }

    /// Evaluate `f` on `n` equally spaced points of `[lo, hi]`.
    pub fn from_fn<F: FnMut(f64) -> f64>(lo: f64, hi: f64, n: usize, mut f: F) -> DensityGrid {
        let step = (hi - lo) / (n - 1) as f64;
        let x: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        let density = x.iter().map(|&t| f(t).max(0.0)).collect();
        DensityGrid { x, density }
    }

    pub fn step(&self) -> f64 {
        (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Trapezoid-rule integral.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.density, self.step())
    }

    /// `true` when the integral lies in `[0.99, 1.01]`.
    pub fn is_normalised(&self) -> bool {
        (0.99..=1.01).contains(&self.integral())
    }

    /// Linear interpolation, zero outside the grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        if t < self.lo() || t > self.hi() {
            return 0.0;
        }
        let pos = (t - self.lo()) / self.step();
        let k = (pos.floor() as usize).min(self.x.len() - 2);
        let frac = pos - k as f64;
        self.density[k] * (1.0 - frac) + self.density[k + 1] * frac
    }

    fn shares_abscissae(&self, other: &DensityGrid) -> bool {
        self.x.len() == other.x.len() && self.x.iter().zip(&other.x).all(|(a, b)| a == b)
    }
}

/// Integrated absolute error and accuracy `(1 - IAE/2) * 100`.
///
/// Grids with different abscissae are both resampled onto a common grid
/// covering the union of their ranges at the finer of the two spacings.
pub fn iae_accuracy(q: &DensityGrid, gold: &DensityGrid) -> (f64, f64) {
    let iae = if q.shares_abscissae(gold) {
        let diff: Vec<f64> = q.density.iter().zip(&gold.density).map(|(a, b)| (a - b).abs()).collect();
        trapezoid(&diff, q.step())
    } else {
        let lo = q.lo().min(gold.lo());
        let hi = q.hi().max(gold.hi());
        let step = q.step().min(gold.step());
        let n = (((hi - lo) / step).ceil() as usize + 1).max(2);
        let grid = DensityGrid::from_fn(lo, hi, n, |t| (q.interpolate(t) - gold.interpolate(t)).abs());
        grid.integral()
    };
    (iae, (1.0 - iae / 2.0) * 100.0)
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if k + 1 < sorted.len() {
        sorted[k] * (1.0 - frac) + sorted[k + 1] * frac
    } else {
        sorted[k]
    }
}

/// Silverman's rule `0.9 min(sd, IQR / 1.34) n^{-1/5}`; falls back to the
/// non-zero spread measure, and to 1 for a single point.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 1.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_sd(samples);
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return 1.0,
    };
    0.9 * spread * (samples.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate on [`GRID_POINTS`] points spanning the
/// data range plus three bandwidths either side.
///
/// Large samples are linearly binned onto the grid first; the kernel sum
/// then runs over grid counts, which is exact up to `O(step^2)`.
pub fn kde_1d(samples: &[f64], bandwidth: Option<f64>) -> Result<DensityGrid> {
    if samples.is_empty() {
        return Err(CsnError::InvalidArgument("kde_1d needs at least one sample".into()));
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(samples));
    if !(h > 0.0) {
        return Err(CsnError::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let n = GRID_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
    let scale = 1.0 / (samples.len() as f64 * h);
    let density = if samples.len() * n <= 4_000_000 {
        x.iter()
            .map(|&t| samples.iter().map(|&s| norm_pdf((t - s) / h)).sum::<f64>() * scale)
            .collect()
    } else {
        let mut counts = vec![0.0; n];
        for &s in samples {
            let pos = (s - lo) / step;
            let k = (pos.floor() as usize).min(n - 2);
            let frac = pos - k as f64;
            counts[k] += 1.0 - frac;
            counts[k + 1] += frac;
        }
        let reach = ((8.0 * h / step).ceil() as usize).min(n - 1);
        let kernel: Vec<f64> = (0..=reach).map(|k| norm_pdf(k as f64 * step / h)).collect();
        (0..n)
            .map(|i| {
                let a = i.saturating_sub(reach);
                let b = (i + reach).min(n - 1);
                (a..=b).map(|j| counts[j] * kernel[i.abs_diff(j)]).sum::<f64>() * scale
            })
            .collect()
    };
    Ok(DensityGrid { x, density })
}

/// Result of [`mmd_mstar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdResult {
    pub mmd: f64,
    pub m_star: f64,
    pub bandwidth: f64,
    /// Estimated standard error of the U-statistic.
    pub std_error: f64,
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of pairwise Euclidean distances in the pooled sample.
pub fn median_heuristic(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let pooled: Vec<&DVector<f64>> = a.iter().chain(b.iter()).collect();
    let mut d = Vec::with_capacity(pooled.len() * (pooled.len() - 1) / 2);
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            d.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    quantile_sorted(&d, 0.5)
}

/// Unbiased MMD U-statistic with an RBF kernel and `M* = -ln(max(MMD, 0) + 1e-5)`.
pub fn mmd_mstar(a: &[DVector<f64>], b: &[DVector<f64>], bandwidth: Option<f64>) -> Result<MmdResult> {
    let m = a.len();
    if m < 2 || b.len() != m {
        return Err(CsnError::InvalidArgument(format!(
            "MMD needs two samples of equal size m >= 2 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|v| v.len() != a[0].len()) {
        return Err(CsnError::Dimension("MMD samples must share a dimension".into()));
    }
    let h = match bandwidth {
        Some(h) => h,
        None => median_heuristic(a, b),
    };
    if !(h > 0.0) {
        return Err(CsnError::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    let k = |x: &DVector<f64>, y: &DVector<f64>| (-sq_dist(x, y) / (2.0 * h * h)).exp();
    let mut row_means = vec![0.0; m];
    let mut total = 0.0;
    let mut total_sq = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let hij = k(&a[i], &a[j]) + k(&b[i], &b[j]) - k(&a[i], &b[j]) - k(&a[j], &b[i]);
            row += hij;
            total_sq += hij * hij;
        }
        total += row;
        row_means[i] = row / (m - 1) as f64;
    }
    let pairs = (m * (m - 1)) as f64;
    let mmd = total / pairs;
    let mean_row = row_means.iter().sum::<f64>() / m as f64;
    let var_row = row_means.iter().map(|r| (r - mean_row).powi(2)).sum::<f64>() / (m - 1) as f64;
    let std_error = (4.0 * var_row / m as f64 + 2.0 * (total_sq / pairs) / pairs).sqrt();
    let m_star = -(mmd.max(0.0) + 1e-5).ln();
    Ok(MmdResult { mmd, m_star, bandwidth: h, std_error })
}
