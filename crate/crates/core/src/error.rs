use thiserror::Error;

/// Everything that can go wrong inside a solve.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    #[error("non-physical state: density {density}, pressure {pressure}")]
    Physicality { density: f64, pressure: f64 },

    #[error("flux inversion failed after {iterations} iterations (residual {residual:e})")]
    InversionFailure { iterations: usize, residual: f64 },

    /// An eigenvalue of the flux Jacobian is too close to zero for the
    /// inversion to be trusted. `index` is the grid index reached, when known.
    #[error("near-sonic state: eigenvalue {eigenvalue:e} of field {field} (grid index {index:?})")]
    NearSonic {
        eigenvalue: f64,
        field: usize,
        index: Option<usize>,
    },

    #[error("no entropy-admissible jump: {0}")]
    NoJump(String),

    #[error("root finder failed: {what} (residual {residual:e})")]
    Numerical { what: String, residual: f64 },

    #[error("solution structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("need at least {needed} points, got {got}")]
    Arity { needed: usize, got: usize },

    #[error("CFL violation: ratio {ratio:.4} exceeds {limit:.4}")]
    Cfl { ratio: f64, limit: f64 },

    #[error("paraxial march broke down at (x={x}, y={y}): flow no longer supersonic in x")]
    ParaxialBreakdown { x: f64, y: f64 },

    #[error("shock tracking failed at column {column}: {reason}")]
    Tracking { column: usize, reason: String },

    #[error("time march stagnated after {steps} steps (update {residual:e})")]
    Stagnation { steps: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for SolverError {
    fn from(e: std::io::Error) -> Self {
        SolverError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SolverError>;
