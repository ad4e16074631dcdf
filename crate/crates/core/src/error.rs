use thiserror::Error;

/// Errors produced by dataset ingestion, numerical kernels, and analysis
/// operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at row `{id}`, column {column}")]
    NonFiniteValue { id: String, column: usize },

    #[error("unknown style label `{0}` (merge map is strict)")]
    UnknownStyleLabel(String),

    #[error("invalid metadata for `{id}`: {reason}")]
    InvalidMeta { id: String, reason: String },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("matrix is not symmetric (max asymmetry {max_asym:e} exceeds tolerance)")]
    NotSymmetric { max_asym: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    DidNotConverge { what: String, iterations: usize },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("degenerate data: total variance is zero")]
    DegenerateData,

    #[error("rank deficient: requested {requested} components but numerical rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("k={k} too large for {n} points (need 1 <= k <= n-1)")]
    KTooLarge { k: usize, n: usize },

    #[error("neighbor graph is disconnected ({components} components); increase k")]
    DisconnectedGraph { components: usize },

    #[error("eigensolver failure: {0}")]
    SolverFailure(String),

    #[error("constant series: correlation undefined")]
    ConstantSeries,

    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate embedding: all points coincide with the center")]
    DegenerateEmbedding,

    #[error("unknown style `{0}`")]
    UnknownStyle(String),

    #[error("style `{style}` has {got} paintings, need at least {needed}")]
    TooFewPaintings {
        style: String,
        needed: usize,
        got: usize,
    },

    #[error("no usable year annotations in dataset")]
    MissingYears,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Distinguishes numerical failures from input/validation errors.
    /// The CLI maps validation errors to exit code 1 and numerical
    /// failures to exit code 2.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DidNotConverge { .. }
                | Error::NotPositiveSemidefinite { .. }
                | Error::DegenerateData
                | Error::DisconnectedGraph { .. }
                | Error::SolverFailure(_)
                | Error::DegenerateEmbedding
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
