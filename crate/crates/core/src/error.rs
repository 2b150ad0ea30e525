use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps `Config` to exit code 2, `Data` to 3 and `Numerical` to 4.
#[derive(Debug, Error)]
pub enum CsnError {
    #[error("skew component {index} = {value} is outside the admissible open interval (-{bound}, {bound})")]
    SkewDomain { index: usize, value: f64, bound: f64 },

    #[error("factor is singular: diagonal entry {index} of L is {value}")]
    SingularFactor { index: usize, value: f64 },

    #[error("U must be unit upper triangular: entry ({row}, {col}) is {value}")]
    NotUnitUpper { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("exact marginal density is limited to d <= {cap} (got d = {dim}); draw samples and use kde_1d instead")]
    UnsupportedDimension { dim: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CsnError>;
