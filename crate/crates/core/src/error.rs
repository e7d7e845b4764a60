use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{name} = {value} is not coprime to modulus {modulus}")]
    NotCoprime {
        name: &'static str,
        value: i64,
        modulus: i64,
    },

    #[error("character modulus {character} does not divide {modulus}")]
    ModulusMismatch { character: u64, modulus: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence: {what} (achieved error bound {achieved:e})")]
    NoConvergence { what: String, achieved: f64 },

    #[error("need {needed} coefficients, only {available} available")]
    InsufficientCoefficients { needed: usize, available: usize },

    #[error("no stationary point on the support; use the nonstationary decay check")]
    NoStationaryPoint,

    #[error("{0} sign changes of the phase derivative; stationary point is not unique")]
    MultipleStationaryPoints(usize),

    #[error("Hecke operator has a repeated eigenvalue at weight {0}")]
    RepeatedEigenvalue(u32),

    #[error("pole of Gamma at s = {0}")]
    GammaPole(f64),

    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
