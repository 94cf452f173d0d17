use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Shapes, modes or factor products disagree.
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("rank error: {0}")]
    Rank(String),

    /// A dense object would exceed the configured element cap.
    #[error("size error: {what} needs {elements} elements, cap is {cap}")]
    Size {
        what: String,
        elements: u128,
        cap: u128,
    },

    /// The dense baseline cannot be formed under the element cap.
    #[error("baseline-infeasible: {what} needs {elements} elements, cap is {cap}")]
    BaselineInfeasible {
        what: String,
        elements: u128,
        cap: u128,
    },

    #[error("solver error: {message} (condition estimate {condition:e})")]
    Solver { message: String, condition: f64 },

    #[error("training diverged at step {step}: loss {loss:e}")]
    Training { step: usize, loss: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
