use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("detuning must be positive for the dispersive treatment, got {0:.6e} rad/s")]
    NonPositiveDetuning(f64),

    #[error("truncation at nmax = {nmax} leaves tail mass {tail:.3e} (tolerance {tol:.1e})")]
    Truncation { nmax: usize, tail: f64, tol: f64 },

    #[error("operator is not Hermitian (max |H - H†| = {0:.3e})")]
    NotHermitian(f64),

    #[error("|alpha| = {0} < 1/2: no phase in [0, pi] separates the two components")]
    AlphaTooSmall(f64),

    #[error("outcome {outcome} has probability {probability:.3e}; the conditional state is undefined")]
    DegenerateBranch { outcome: char, probability: f64 },

    #[error("density matrix has eigenvalue {0:.3e} below the positivity floor")]
    NotPositive(f64),

    #[error("trace drifted by {drift:.3e} at t = {t:.4e} s (step {step})")]
    TraceDrift { drift: f64, t: f64, step: usize },

    #[error("step size violates stability guard: {0}")]
    StepSize(String),

    #[error("quadrature did not converge: step-halving changed values by {0:.3e}")]
    Quadrature(f64),

    #[error("objective is flat in Q; the data carry no quality-factor information")]
    NonIdentifiable,

    #[error("best fit Q = {0:.6e} sits on the bracket edge")]
    BracketEdge(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { name, reason: reason.into() }
}
