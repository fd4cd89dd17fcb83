use thiserror::Error;

/// Errors raised by contract checks across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eps must lie in (0, 1], got {0}")]
    InvalidEps(f64),
    #[error("class count k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("net would have {size} points, above the cap of {cap}")]
    NetTooLarge { size: u128, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("not a probability vector: {0}")]
    NotNormalizable(String),
    #[error("gain {value} at coordinate {index} exceeds bound {bound}")]
    GainOutOfBounds { index: usize, value: f64, bound: f64 },
    #[error("point outside the box [-1,1]: coordinate {index} = {value}")]
    OutOfBox { index: usize, value: f64 },
    #[error("adjoint vector has sup-norm {norm}, above R = {bound}")]
    AdjointOutOfBounds { norm: f64, bound: f64 },
    #[error("matrix game solver hit {iterations} iterations with certificate gap {gap} > {eps}")]
    SolverDidNotConverge { iterations: usize, gap: f64, eps: f64 },
    #[error("unknown regret kind `{0}`")]
    UnknownRegretKind(String),
    #[error("unknown loss `{0}`")]
    UnknownLoss(String),
    #[error("unknown comparator family `{0}`")]
    UnknownFamily(String),
    #[error("non-convex input: slope decreases by {jump} at breakpoint {at}")]
    NegativeSlopeJump { at: f64, jump: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("sample source exhausted after {0} rounds")]
    SampleExhausted(usize),
    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Attach the round index at which a contract check failed.
    pub fn at_round(self, round: usize) -> Error {
        match self {
            Error::AtRound { .. } => self,
            other => Error::AtRound { round, source: Box::new(other) },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
