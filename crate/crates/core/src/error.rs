use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate projection input")]
    DegenerateProjection,
    #[error("undefined dihedral: consecutive points are collinear")]
    UndefinedDihedral,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("bound requires shared precision")]
    HeterogeneousPrecision,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("residue count mismatch: state has {state}, prediction has {prediction}")]
    ResidueCountMismatch { state: usize, prediction: usize },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
