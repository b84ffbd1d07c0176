use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate probe: alpha^2 = 0 carries no parity information")]
    DegenerateProbe,

    #[error("impossible outcome {outcome}: probability {probability:e} below tolerance")]
    ImpossibleOutcome {
        outcome: &'static str,
        probability: f64,
    },

    #[error("pipeline order violated: {0}")]
    PipelineOrder(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("no optimum: {0}")]
    NoOptimum(String),

    #[error("invalid channel spec: {0}")]
    InvalidSpec(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
