//! Command-line front end: `fit`, `sample`, `density`, `metrics`, `check`.
//!
//! Exit codes: 0 success, 1 failed check battery, 2 configuration or usage
//! error, 3 data or I/O error, 4 numerical abort.

pub mod check;
pub mod config;
pub mod data;
pub mod io;

use crate::csn::{marginal_log_density, mean_cov};
use crate::error::CsnError;
use crate::metrics::{iae_accuracy, mmd_mstar, DensityGrid, GRID_POINTS};
use crate::optim::{fit_csn, fit_gaussian, FitResult};
use crate::rng::stream;
use clap::{Parser, Subcommand};
use config::{Family, RunConfig};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "csnvi", version, about = "Skew-normal variational inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a variational approximation; writes params.json, trace.csv and meta.json.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw from fitted parameters into samples.csv.
    Sample {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Exact marginal density of one coordinate (1-based) into density.csv.
    Density {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        coordinate: usize,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long, default_value_t = GRID_POINTS)]
        points: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// MMD and M* between two sample files, or IAE between two density grids.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Inputs are `x,density` grids rather than samples.
        #[arg(long)]
        grids: bool,
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification battery.
    Check {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<CsnError> for Failure {
    fn from(e: CsnError) -> Self {
        let code = match e {
            CsnError::Data(_) | CsnError::Dimension(_) | CsnError::Io(_) => 3,
            CsnError::Numerical(_) => 4,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure { code: 2, message: msg.into() }
}

fn data_error(msg: impl Into<String>) -> Failure {
    Failure { code: 3, message: msg.into() }
}

/// `CSNVI_THREADS`, default 1. The fit loop itself is sequential.
pub fn threads() -> Result<usize, Failure> {
    match std::env::var("CSNVI_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(config_error(format!("CSNVI_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| data_error(format!("cannot create {}: {e}", dir.display())))
}

/// Fit the configured model; returns the fit and the Gaussian warm start if one was run.
pub fn run_fit(cfg: &RunConfig) -> Result<(FitResult, Option<FitResult>), Failure> {
    cfg.validate()?;
    let data = data::load_dataset(&cfg.model, cfg.seed())?;
    let model = data::build_model(&cfg.model, data)?;
    let opt = cfg.resolved_optimizer();
    Ok(match cfg.family {
        Family::Gaussian => (fit_gaussian(model.as_ref(), &opt)?, None),
        Family::CsnCholesky | Family::CsnLu if cfg.warm_start => {
            let g = fit_gaussian(model.as_ref(), &opt)?;
            (fit_csn(model.as_ref(), &opt, Some(&g))?, Some(g))
        }
        _ => (fit_csn(model.as_ref(), &opt, None)?, None),
    })
}

pub fn cmd_fit(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<String, Failure> {
    let mut cfg = RunConfig::load(config)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    cfg.seed = Some(cfg.seed());
    let threads = threads()?;
    let (fit, warm) = run_fit(&cfg)?;
    create_dir(&cfg.out)?;
    io::write_params(&cfg.out.join("params.json"), &fit.params)?;
    io::write_trace(&cfg.out.join("trace.csv"), &fit.trace)?;
    let meta = json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "optimizer": cfg.resolved_optimizer(),
        "threads": threads,
        "dim": fit.params.dim(),
        "elbo": fit.elbo,
        "elbo_std_error": fit.elbo_std_error,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "wall_seconds": fit.wall_seconds,
        "gaussian_warm_start": warm.as_ref().map(|g| json!({"elbo": g.elbo, "elbo_std_error": g.elbo_std_error, "wall_seconds": g.wall_seconds})),
    });
    io::write_json(&cfg.out.join("meta.json"), &meta)?;
    Ok(format!(
        "ELBO {:.6} (se {:.2e}) after {} iterations; wrote {}",
        fit.elbo,
        fit.elbo_std_error,
        fit.iterations,
        cfg.out.display()
    ))
}

pub fn cmd_sample(params: &Path, n: usize, seed: u64, out: &Path) -> Result<String, Failure> {
    let p = io::read_params(params)?;
    let draws = p.sample(&mut stream(seed, 0), n);
    create_dir(out)?;
    let path = out.join("samples.csv");
    io::write_samples(&path, &draws, p.dim())?;
    Ok(format!("wrote {n} draws to {}", path.display()))
}

pub fn cmd_density(params: &Path, coordinate: usize, lo: Option<f64>, hi: Option<f64>, points: usize, out: &Path) -> Result<String, Failure> {
    let p = io::read_params(params)?;
    if coordinate == 0 || coordinate > p.dim() {
        return Err(config_error(format!("coordinate {coordinate} is outside 1..={}", p.dim())));
    }
    if points < 2 {
        return Err(config_error("--points must be at least 2"));
    }
    let ranges = p.layout().ranges();
    let (b, r) = ranges.iter().enumerate().find(|(_, r)| r.contains(&(coordinate - 1))).expect("coordinate within layout");
    let block = &p.blocks[b];
    let i = coordinate - 1 - r.start;
    let (m, c) = mean_cov(block);
    let sd = c[(i, i)].sqrt();
    let (lo, hi) = (lo.unwrap_or(m[i] - 8.0 * sd), hi.unwrap_or(m[i] + 8.0 * sd));
    if !(lo < hi) {
        return Err(config_error(format!("grid bounds must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let x: Vec<f64> = (0..points).map(|k| lo + k as f64 * step).collect();
    let density = x.iter().map(|&v| marginal_log_density(block, i, v).map(f64::exp)).collect::<Result<Vec<_>, _>>()?;
    let grid = DensityGrid::new(x, density)?;
    create_dir(out)?;
    let path = out.join("density.csv");
    io::write_grid(&path, &grid)?;
    Ok(format!("wrote {} (integral {:.6})", path.display(), grid.integral()))
}

pub fn cmd_metrics(a: &Path, b: &Path, grids: bool, bandwidth: Option<f64>, out: Option<&Path>) -> Result<String, Failure> {
    let value = if grids {
        let (qa, qb) = (io::read_grid(a)?, io::read_grid(b)?);
        let (iae, acc) = iae_accuracy(&qa, &qb);
        json!({"iae": iae, "accuracy_percent": acc})
    } else {
        let (sa, sb) = (io::read_samples(a)?, io::read_samples(b)?);
        let (da, db) = (sa.first().map_or(0, |x| x.len()), sb.first().map_or(0, |x| x.len()));
        if da != db {
            return Err(data_error(format!("{} has {da} columns but {} has {db}", a.display(), b.display())));
        }
        if sa.len() != sb.len() {
            return Err(data_error(format!("{} has {} rows but {} has {}", a.display(), sa.len(), b.display(), sb.len())));
        }
        let r = mmd_mstar(&sa, &sb, bandwidth)?;
        json!({"mmd": r.mmd, "m_star": r.m_star, "bandwidth": r.bandwidth, "std_error": r.std_error})
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        io::write_json(&dir.join("metrics.json"), &value)?;
    }
    Ok(serde_json::to_string_pretty(&value).expect("json values serialise"))
}

pub fn cmd_check(quick: bool, seed: u64) -> Result<String, Failure> {
    let rows = check::run_battery(&check::CheckOptions { quick, seed, ..Default::default() });
    let table = check::format_table(&rows);
    if rows.iter().all(|r| r.passed) {
        Ok(table)
    } else {
        Err(Failure { code: 1, message: table })
    }
}

/// Dispatch a parsed command line; prints the outcome and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Fit { config, seed, out } => cmd_fit(&config, seed, out),
        Command::Sample { params, n, seed, out } => cmd_sample(&params, n, seed, &out),
        Command::Density { params, coordinate, lo, hi, points, out } => cmd_density(&params, coordinate, lo, hi, points, &out),
        Command::Metrics { a, b, grids, bandwidth, out } => cmd_metrics(&a, &b, grids, bandwidth, out.as_deref()),
        Command::Check { quick, seed } => cmd_check(quick, seed),
    };
    match result {
        Ok(msg) => {
            println!("{}", msg.trim_end());
            0
        }
        Err(f) if f.code == 1 => {
            println!("{}", f.message.trim_end());
            eprintln!("error: verification battery failed");
            1
        }
        Err(f) => {
            eprintln!("error: {}", f.message.trim_end());
            f.code
        }
    }
}
