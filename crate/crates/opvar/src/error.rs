use thiserror::Error;

/// Errors from model construction, fitting, sampling and quantile estimation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter, schedule, window or dataset failed its construction invariant.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// An observed loss lies below the reporting threshold in force at its time.
    #[error("loss {loss} at record {index} is below its reporting threshold {threshold}")]
    BelowThreshold {
        index: usize,
        loss: f64,
        threshold: f64,
    },

    /// An operation's argument is outside the domain it is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The dataset contains no events, so the requested estimate is undefined.
    #[error("no events: the requested estimate is undefined on an empty dataset")]
    NoEvents,

    /// Data with no usable variation (e.g. all losses identical).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The negative Hessian is singular or not positive definite.
    #[error("information matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A chain is too short for the requested summary or quantile procedure.
    #[error("chain too short: {0}")]
    ChainTooShort(String),

    /// A Monte Carlo sample is too small to estimate the requested quantile.
    #[error("{draws} draws are too few to estimate the {level} quantile")]
    TooFewDraws { draws: usize, level: f64 },

    /// The Panjer grid does not capture enough probability mass for the level.
    #[error(
        "grid too small: cumulative mass {achieved_mass} leaves residual {residual}, \
         which exceeds the bound {bound} for level {level}"
    )]
    GridTooSmall {
        achieved_mass: f64,
        residual: f64,
        bound: f64,
        level: f64,
    },

    /// Too many posterior draws failed the grid-mass condition.
    #[error("{failed} of {total} posterior draws failed the grid-mass condition")]
    TooManyGridFailures { failed: usize, total: usize },

    /// A numeric operation over- or underflowed beyond recovery.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
