use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{axis} = {value} is outside the table range [{min}, {max}]")]
    OutOfRange {
        axis: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("malformed response table: {0}")]
    Table(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// `|sin(theta_r)| > 1`: the requested gradient only excites evanescent waves.
    #[error("unsteerable gradient: required sin(theta) = {0:.6}")]
    Unsteerable(f64),

    #[error("harmonic m = {m} aliases for a {steps}-step sequence (need |m| < L/2)")]
    Aliasing { m: i32, steps: usize },

    #[error("circular shift of {0} steps is not an integer")]
    FractionalShift(f64),

    #[error("directivity is undefined for an all-zero field")]
    ZeroField,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },

    #[error("invalid codeword: {0}")]
    InvalidCodeword(String),

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that stem from user input rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Infeasible(_)
                | Error::Aliasing { .. }
                | Error::Unsteerable(_)
                | Error::FractionalShift(_)
                | Error::Table(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
