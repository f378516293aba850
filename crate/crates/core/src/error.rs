use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: line {line}: timestamp cadence: {message}")]
    Cadence {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("data integrity: {0}")]
    Integrity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("target capacity factor {target} is unreachable; attainable ceiling is {ceiling}")]
    UnreachableCuf { target: f64, ceiling: f64 },

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("levelized cost undefined: discounted energy is zero")]
    UndefinedCost,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
