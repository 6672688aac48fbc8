use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("duplicate run: {run_id} ({eval_set})")]
    DuplicateRun { run_id: String, eval_set: String },

    #[error("invariant violation on `{field}`: {detail}")]
    InvariantViolation { field: String, detail: String },

    #[error("objective is non-finite at the evaluated parameters")]
    NonFiniteObjective,

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("no initialization converged to a finite objective")]
    AllInitsFailed,

    #[error("invalid fit: {0}")]
    InvalidFit(String),

    #[error("all per-budget minima sit on the token-grid boundary; widen the grid")]
    DegenerateGrid,

    #[error("singular budget relation: 1 - offset*p must be positive (got {0})")]
    SingularRelation(f64),

    #[error("series `{0}` is empty or has fewer than 2 points")]
    EmptySeries(String),

    #[error("observed losses have zero variance; r_squared is undefined")]
    ZeroVariance,

    #[error("expert {expert} in layer {layer} received no tokens")]
    EmptyExpert { layer: usize, expert: usize },

    #[error("no expert in layer {layer} received any tokens")]
    AllExpertsEmpty { layer: usize },

    #[error("layer {layer} does not exist (table has {num_layers} layers)")]
    LayerNotFound { layer: usize, num_layers: usize },

    #[error("all points share one sparsity level; fix lambda, delta and gamma or add data")]
    DegenerateSparsity,

    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },

    #[error("bootstrap iteration {index} failed: {source}")]
    BootstrapIteration {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invariant(field: &str, detail: impl Into<String>) -> Self {
        Error::InvariantViolation {
            field: field.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
