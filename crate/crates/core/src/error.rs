use thiserror::Error;

#[derive(Debug, Error)]
pub enum CubatureError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weight function returned {value} at {point:?}; weights must be finite and non-negative")]
    NegativeWeight { value: f64, point: Vec<f64> },

    #[error("weight function is infinite at {0:?}")]
    SingularWeight(Vec<f64>),

    #[error("basis function {basis} is not finite at node {node}")]
    NonFiniteBasis { basis: usize, node: usize },

    #[error("first basis function must be the constant 1: {0}")]
    NotConstantOne(String),

    #[error("rejection budget exhausted: {found} of {requested} in-domain points after {draws} ambient draws")]
    RejectionBudget {
        requested: usize,
        found: usize,
        draws: usize,
    },

    #[error("too many dimensions for Halton points: {0} (at most {1} supported)")]
    HaltonDimension(usize, usize),

    #[error("no sample point hit the domain; it appears to be degenerate")]
    DegenerateDomain,

    #[error("moment of the constant function is {0}; the integral must be positive on constants")]
    NonPositiveMass(f64),

    #[error("analytic moments are not available for this domain, weight and space")]
    MomentsUnsupported,

    #[error("Gram-Schmidt breakdown at basis index {index}: nodes are not unisolvent")]
    Breakdown { index: usize },

    #[error("node cap {cap} exceeded before a nonnegative rule was found (last minimum weight: {})",
        last_min_weight.map_or("no unisolvent attempt".to_string(), |w| format!("{w:e}")))]
    NodeCapExceeded { cap: usize, last_min_weight: Option<f64> },

    #[error("null space of the basis matrix is numerically trivial")]
    TrivialNullSpace,

    #[error("Steinitz step produced sigma = {0}; expected a positive value")]
    NonPositiveSigma(f64),

    #[error("exactness residual drifted to {residual:e} (budget {budget:e})")]
    ResidualDrift { residual: f64, budget: f64 },

    #[error("cubature invariant violated: {0}")]
    Invariant(String),

    #[error("function value is not finite at node {0}")]
    NonFiniteValue(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CubatureError> = std::result::Result<T, E>;
