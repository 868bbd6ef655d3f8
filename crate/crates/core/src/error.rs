use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series would be empty: {0}")]
    EmptySeries(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("unknown series `{0}`")]
    UnknownSeries(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("collinear regressors: {}", .columns.join(", "))]
    Collinear { columns: Vec<String> },

    #[error("coordinate descent did not converge after {iterations} sweeps (max change {max_change:e})")]
    NotConverged { iterations: usize, max_change: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("nothing to evaluate: {0}")]
    EmptyEvaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
