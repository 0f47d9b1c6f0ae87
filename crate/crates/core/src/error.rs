use thiserror::Error;

/// Every failure the toolkit can report.
///
/// Variants split into configuration problems (bad input, exit code 2 in the
/// CLI) and numerical problems (exit code 3); see [`Error::is_config`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("frame length minus prefix ({payload}) is not a multiple of the cell length ({cell})")]
    NonIntegerCellCount { payload: usize, cell: usize },
    #[error("symbol index {m} lies outside the frame [{lo}, {hi}]")]
    IndexOutOfFrame { m: i64, lo: i64, hi: i64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bit count {bits} is not a multiple of {per_symbol} bits per symbol")]
    BitCountMismatch { bits: usize, per_symbol: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("geometry violates l_c = n_t + l_d (l_c={l_c}, n_t={n_t}, l_d={l_d})")]
    InvalidGeometry { l_c: usize, n_t: usize, l_d: usize },
    #[error("weighted selection matrix has numerical rank {rank}, expected {expected}")]
    RankDeficientWeights { rank: usize, expected: usize },
    #[error("Wiener autocorrelation matrix is singular (process and noise variance both zero)")]
    SingularK,
    #[error("channel amplitude is zero at ({k}, {l})")]
    ZeroAmplitude { k: usize, l: usize },
    #[error("observation covariance is singular")]
    SingularCovariance,
    #[error("Fisher information matrix is singular")]
    SingularFim,
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("detector normal matrix is singular")]
    SingularSystem,
    #[error("exhaustive search over {0} candidates exceeds the limit")]
    SearchSpaceTooLarge(u128),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::NonIntegerCellCount { .. }
                | Error::InvalidGeometry { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
