//! Artifact readers and writers.

use super::data::read_table;
use crate::csn::SkewParams;
use crate::error::{CsnError, Result};
use crate::metrics::DensityGrid;
use crate::models::BlockParams;
use crate::optim::TraceRecord;
use nalgebra::DVector;
use std::fmt::Write as _;
use std::path::Path;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CsnError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut s = String::from("window,elbo,time,skew_norm,std_error\n");
    for t in trace {
        let _ = writeln!(s, "{},{},{},{},{}", t.window, fmt_f64(t.elbo), t.time, fmt_f64(t.skew_norm), fmt_f64(t.std_error));
    }
    write(path, &s)
}

pub fn write_samples(path: &Path, draws: &[DVector<f64>], d: usize) -> Result<()> {
    let header: Vec<String> = (1..=d).map(|i| format!("theta{i}")).collect();
    let mut s = header.join(",");
    s.push('\n');
    for x in draws {
        let row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    write(path, &s)
}

pub fn write_grid(path: &Path, grid: &DensityGrid) -> Result<()> {
    let mut s = String::from("x,density\n");
    for (x, p) in grid.x.iter().zip(&grid.density) {
        let _ = writeln!(s, "{},{}", fmt_f64(*x), fmt_f64(*p));
    }
    write(path, &s)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CsnError::Numerical(e.to_string()))?;
    s.push('\n');
    write(path, &s)
}

/// Dense fits are written as a single factor, block fits as `{"blocks": [...]}`.
pub fn write_params(path: &Path, params: &BlockParams) -> Result<()> {
    match params.blocks.as_slice() {
        [p] => write_json(path, p),
        _ => write_json(path, params),
    }
}

pub fn read_params(path: &Path) -> Result<BlockParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CsnError::Data(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CsnError::Data(format!("{}: {e}", path.display())))?;
    let parsed = if value.get("blocks").is_some() {
        serde_json::from_value::<BlockParams>(value).map_err(|e| e.to_string())
    } else {
        serde_json::from_value::<SkewParams>(value).map(BlockParams::dense).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CsnError::Data(format!("{}: {e}", path.display())))
}

pub fn read_samples(path: &Path) -> Result<Vec<DVector<f64>>> {
    let t = read_table(path)?;
    Ok((0..t.rows()).map(|i| DVector::from_fn(t.columns.len(), |j, _| t.columns[j][i])).collect())
}

pub fn read_grid(path: &Path) -> Result<DensityGrid> {
    let t = read_table(path)?;
    let col = |n: &str| {
        t.column(n).map(<[f64]>::to_vec).ok_or_else(|| CsnError::Data(format!("{}: missing column `{n}`", path.display())))
    };
    DensityGrid::new(col("x")?, col("density")?).map_err(|e| CsnError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csn::Parametrization;
    use nalgebra::DMatrix;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, f64::MIN_POSITIVE, 123_456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn params_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = SkewParams::lu(
            DVector::from_vec(vec![1.0, -2.0]),
            DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.3, 0.7]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]),
            DVector::from_vec(vec![0.4, -1.3]),
            Parametrization::AlphaCubed,
        )
        .unwrap();
        let dense = BlockParams::dense(p.clone());
        write_params(&dir.path().join("a.json"), &dense).unwrap();
        assert_eq!(read_params(&dir.path().join("a.json")).unwrap(), dense);
        let blocks = BlockParams::new(vec![p.clone(), p]).unwrap();
        write_params(&dir.path().join("b.json"), &blocks).unwrap();
        assert_eq!(read_params(&dir.path().join("b.json")).unwrap(), blocks);
    }
}
