use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// An operator (or a stage/correction matrix built from one) has a
    /// vanishing Fourier symbol at some admissible frequency.
    #[error("singular operator: |symbol| = {magnitude:.3e} at omega = {omega:.6}{context}")]
    Singular {
        omega: f64,
        magnitude: f64,
        context: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid Butcher tableau: {0}")]
    Tableau(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
