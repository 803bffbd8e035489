use thiserror::Error;

/// Errors produced by the solver, the simulator and the configuration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An altitude lies outside `[h_min, h_max]`.
    #[error("altitude {altitude} m outside [{h_min}, {h_max}] m")]
    Range {
        altitude: f64,
        h_min: f64,
        h_max: f64,
    },

    /// A configuration value is missing or violates its invariant.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// The explicit step would lose positivity.
    #[error("CFL violated: dt·(|v|/dh + σ²/dh²) = {courant:.6} > 1; largest admissible dt is {max_dt:.6e} s")]
    Stability { courant: f64, max_dt: f64 },

    /// A non-finite value was produced while sweeping.
    #[error("divergence at time index {t}, altitude index {h}")]
    Divergence { t: usize, h: usize },

    /// The fixed-point loop failed inside a kernel.
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// The measured power carries no interference above the own link.
    #[error("no interference: residual {residual:e} W is not positive")]
    NoInterference { residual: f64 },

    /// The measured interference exceeds anything reachable at zero distance.
    #[error("infeasible measurement: residual {residual:e} W exceeds supremum {supremum:e} W")]
    InfeasibleMeasurement { residual: f64, supremum: f64 },

    /// Filesystem or CSV failure.
    #[error("io error on {path}: {reason}")]
    Io { path: String, reason: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when this error (or the error it wraps) is a numerical divergence.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::Iteration { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
