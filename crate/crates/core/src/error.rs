use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("index {index} out of range for {n_sites} sites")]
    IndexOutOfRange { index: usize, n_sites: usize },

    #[error("memory guard: {entries} entries exceeds limit {limit}")]
    MemoryGuard { entries: u128, limit: u128 },

    #[error("time {t} is outside the guaranteed interval [0, {radius})")]
    RadiusExceeded { t: f64, radius: f64 },

    #[error("Taylor series did not converge after {terms} terms (last term norm {tail:e})")]
    NoConvergence { terms: usize, tail: f64 },

    #[error("Ruelle bound violated: margin {margin} at t = {time}")]
    RuelleViolated { margin: f64, time: f64 },

    #[error("non-finite state at t = {time}")]
    NonfiniteState { time: f64 },

    #[error("series diverges: t*M/gap = {ratio} is not below 1/e")]
    DivergentSeries { ratio: f64 },

    #[error("finite-difference estimate unreliable: symmetry residual {residual:e}")]
    FiniteDifferencePrecision { residual: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name of the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::GridMismatch(_) => "grid-mismatch",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::MemoryGuard { .. } => "memory-guard",
            Error::RadiusExceeded { .. } => "radius-exceeded",
            Error::NoConvergence { .. } => "no-convergence",
            Error::RuelleViolated { .. } => "ruelle-violated",
            Error::NonfiniteState { .. } => "nonfinite-state",
            Error::DivergentSeries { .. } => "divergent-series",
            Error::FiniteDifferencePrecision { .. } => "fd-precision",
            Error::Parse { .. } | Error::UnknownKey { .. } => "parse-error",
            Error::Io(_) | Error::Csv(_) => "io-error",
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::UnknownKey { .. } => 2,
            Error::RadiusExceeded { .. } => 3,
            Error::RuelleViolated { .. } => 4,
            Error::NonfiniteState { .. } => 5,
            Error::NoConvergence { .. } | Error::DivergentSeries { .. } => 6,
            Error::Io(_) | Error::Csv(_) => 7,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
