use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of {what} at {at}")]
    Pole { what: &'static str, at: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("character is not primitive (modulus {modulus}, conductor {conductor})")]
    NotPrimitive { modulus: u64, conductor: u64 },

    #[error("shifts outside the convergence region of {factor}: {detail}")]
    OutOfRegion { factor: &'static str, detail: String },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("requested accuracy {requested:e} not reachable, achieved bound {achieved:e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("missing coefficient data: {0}")]
    MissingCoefficients(String),

    #[error("singular curve: {0}")]
    SingularCurve(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
