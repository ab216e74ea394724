use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("coefficient `{name}` is not finite at x = {x}")]
    NonFinite { name: &'static str, x: f64 },

    #[error("unknown problem `{name}`; valid names: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error(
        "Bakhvalov-Shishkin transition clamp is active ({detail}); \
         use the Shishkin mesh for this parameter set"
    )]
    BsClampActive { detail: String },

    #[error("mesh construction failed: {0}")]
    MeshConstruction(String),

    #[error("system/mesh mismatch: {0}")]
    Mismatch(String),

    #[error("singular pivot block at row {row} (|det| = {det:e})")]
    SingularPivot { row: usize, det: f64 },

    #[error("dense reference solve failed: {0}")]
    DenseSolve(String),

    #[error("x = {0} lies outside [0, 1]")]
    OutOfDomain(f64),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
