use thiserror::Error;

/// Errors raised by the simulator.
///
/// Variants fall into three families which the CLI maps onto exit codes:
/// validation problems (bad parameters, malformed manifests), numerical
/// failures (integrator drift, eigensolver or fit non-convergence) and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized: |norm^2 - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error(
        "norm drift {drift:.3e} exceeds tolerance {tolerance:.3e} over [{t0}, {t1}]; \
         retry with a smaller dt"
    )]
    NormDrift {
        drift: f64,
        tolerance: f64,
        t0: f64,
        t1: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("adiabaticity violated at t = {time}: ground-state population {population:.6} < {threshold}")]
    Adiabaticity {
        time: f64,
        population: f64,
        threshold: f64,
    },

    #[error("sinusoid fit failed: {0}")]
    Fit(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::NotNormalized { .. }
                | Error::Manifest(_)
        )
    }

    /// True for failures of an otherwise valid computation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. }
                | Error::EigenNoConvergence { .. }
                | Error::Adiabaticity { .. }
                | Error::Fit(_)
                | Error::Optimization(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
