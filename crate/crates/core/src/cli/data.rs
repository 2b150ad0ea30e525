//! CSV ingestion and model construction.

use super::config::{ModelKind, ModelSpec};
use crate::error::{CsnError, Result};
use crate::models::synthetic::{self, Dataset};
use crate::models::{
    GlmmModel, Link, LogisticModel, NormalPriors, NormalSampleModel, NormalVarianceModel, PoissonGlmModel, TargetModel,
    WeibullModel, ZinbModel, DEFAULT_SIGMA0_SQ,
};
use nalgebra::DMatrix;
use std::path::Path;

/// Numeric columns of a CSV file in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str, path: &Path) -> Result<Vec<f64>> {
        self.column(name)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| CsnError::Data(format!("{}: missing column `{name}`", path.display())))
    }

    /// Columns whose header starts with `prefix`, as a matrix.
    fn prefixed(&self, prefix: &str, intercept: bool) -> DMatrix<f64> {
        let cols: Vec<&Vec<f64>> =
            self.headers.iter().zip(&self.columns).filter(|(h, _)| h.starts_with(prefix)).map(|(_, c)| c).collect();
        let n = self.rows();
        let extra = intercept as usize;
        DMatrix::from_fn(n, cols.len() + extra, |i, j| if j < extra { 1.0 } else { cols[j - extra][i] })
    }
}

/// Read a CSV with a header row; every field must parse as a number.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CsnError::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CsnError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CsnError::Data(format!("{}: {e}", path.display())))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CsnError::Data(format!("{}: row {} column `{}`: `{field}` is not a number", path.display(), r + 1, headers[j]))
            })?;
            columns[j].push(v);
        }
    }
    Ok(Table { headers, columns })
}

/// Relabel groups `0, 1, ...` in order of first appearance.
fn relabel(groups: &[f64], path: &Path) -> Result<Vec<usize>> {
    let mut seen: Vec<f64> = Vec::new();
    groups
        .iter()
        .map(|&g| {
            if g.fract() != 0.0 {
                return Err(CsnError::Data(format!("{}: group label {g} is not an integer", path.display())));
            }
            Ok(match seen.iter().position(|&s| s == g) {
                Some(i) => i,
                None => {
                    seen.push(g);
                    seen.len() - 1
                }
            })
        })
        .collect()
}

fn dataset_from_table(spec: &ModelSpec, t: &Table, path: &Path) -> Result<Dataset> {
    let ic = spec.intercept;
    Ok(match spec.kind {
        ModelKind::NormalSample | ModelKind::NormalVariance => Dataset::NormalSample { y: t.require("y", path)? },
        ModelKind::PoissonGlm => Dataset::PoissonGlm {
            y: t.require("y", path)?,
            x: t.prefixed("x_", ic),
            log_offset: t.column("log_offset").map_or_else(|| vec![0.0; t.rows()], <[f64]>::to_vec),
        },
        ModelKind::Logistic => Dataset::Logistic {
            y: t.require("y", path)?,
            trials: t.column("trials").map_or_else(|| vec![1.0; t.rows()], <[f64]>::to_vec),
            x: t.prefixed("x_", ic),
        },
        ModelKind::Zinb => Dataset::Zinb { y: t.require("y", path)?, x: t.prefixed("x_", ic), z: t.prefixed("z_", ic) },
        ModelKind::Survival => Dataset::Survival {
            t: t.require("t", path)?,
            events: t.require("event", path)?,
            x: t.prefixed("x_", ic),
            z: t.prefixed("z_", ic),
        },
        ModelKind::Glmm => Dataset::Glmm {
            y: t.require("y", path)?,
            x: t.prefixed("x_", ic),
            z: t.prefixed("z_", ic),
            groups: relabel(&t.require("group", path)?, path)?,
            link: spec.link.unwrap_or(Link::Log),
        },
    })
}

fn synthetic_dataset(spec: &ModelSpec, run_seed: u64) -> Dataset {
    let s = &spec.synthetic;
    let seed = s.seed.unwrap_or(run_seed);
    match spec.kind {
        ModelKind::NormalSample => synthetic::normal_sample(
            seed,
            s.n.unwrap_or(synthetic::NORMAL_SAMPLE_SIZE),
            synthetic::NORMAL_SAMPLE_MEAN,
            synthetic::NORMAL_SAMPLE_VARIANCE,
        ),
        ModelKind::NormalVariance => {
            synthetic::normal_sample(seed, s.n.unwrap_or(synthetic::NORMAL_SAMPLE_SIZE), 0.0, synthetic::NORMAL_SAMPLE_VARIANCE)
        }
        ModelKind::PoissonGlm => synthetic::poisson_glm(seed, s.n.unwrap_or(200)),
        ModelKind::Logistic => synthetic::logistic(seed, s.n.unwrap_or(200), s.columns.unwrap_or(3)),
        ModelKind::Zinb => synthetic::zinb(seed, s.n.unwrap_or(500)),
        ModelKind::Survival => synthetic::survival(seed, s.n.unwrap_or(300)),
        ModelKind::Glmm => match spec.link.unwrap_or(Link::Log) {
            Link::Log => synthetic::poisson_glmm(seed, s.n.unwrap_or(100), s.sigma_b.unwrap_or(1.0)),
            Link::Logit => synthetic::bernoulli_glmm(seed, s.n.unwrap_or(100), s.visits.unwrap_or(7), s.sigma_b.unwrap_or(1.0)),
        },
    }
}

/// The dataset named by the spec: its CSV if given, else generated.
pub fn load_dataset(spec: &ModelSpec, run_seed: u64) -> Result<Dataset> {
    match &spec.data {
        Some(path) => {
            if !path.exists() {
                return Err(CsnError::Data(format!("data file {} does not exist", path.display())));
            }
            dataset_from_table(spec, &read_table(path)?, path)
        }
        None => Ok(synthetic_dataset(spec, run_seed)),
    }
}

fn wrong_shape(kind: ModelKind) -> CsnError {
    CsnError::Data(format!("dataset does not match model kind {kind:?}"))
}

/// Instantiate the target model; invalid data surfaces as `CsnError::Data`.
pub fn build_model(spec: &ModelSpec, data: Dataset) -> Result<Box<dyn TargetModel>> {
    let s2 = spec.sigma0_sq.unwrap_or(DEFAULT_SIGMA0_SQ);
    let as_data = |e: CsnError| match e {
        CsnError::Dimension(m) | CsnError::InvalidArgument(m) => CsnError::Data(m),
        e => e,
    };
    let priors = || {
        let d = NormalPriors::default();
        NormalPriors { a0: spec.a0.unwrap_or(d.a0), b0: spec.b0.unwrap_or(d.b0), sigma0_sq: spec.sigma0_sq.unwrap_or(d.sigma0_sq) }
    };
    let model: Box<dyn TargetModel> = match (spec.kind, data) {
        (ModelKind::NormalSample, Dataset::NormalSample { y }) => Box::new(NormalSampleModel::new(y, priors()).map_err(as_data)?),
        (ModelKind::NormalVariance, Dataset::NormalSample { y }) => {
            Box::new(NormalVarianceModel::new(y, priors()).map_err(as_data)?)
        }
        (ModelKind::PoissonGlm, Dataset::PoissonGlm { y, x, log_offset }) => {
            Box::new(PoissonGlmModel::new(y, x, log_offset, s2).map_err(as_data)?)
        }
        (ModelKind::Logistic, Dataset::Logistic { y, trials, x }) => Box::new(LogisticModel::new(y, trials, x, s2).map_err(as_data)?),
        (ModelKind::Zinb, Dataset::Zinb { y, x, z }) => Box::new(ZinbModel::new(y, x, z, s2).map_err(as_data)?),
        (ModelKind::Survival, Dataset::Survival { t, events, x, z }) => {
            Box::new(WeibullModel::new(t, events, x, z, s2).map_err(as_data)?)
        }
        (ModelKind::Glmm, Dataset::Glmm { y, x, z, groups, link }) => Box::new(
            GlmmModel::new(y, x, z, &groups, link, s2.sqrt(), spec.sigma_zeta.unwrap_or(DEFAULT_SIGMA0_SQ.sqrt()))
                .map_err(as_data)?,
        ),
        (kind, _) => return Err(wrong_shape(kind)),
    };
    Ok(model)
}
