use thiserror::Error;

/// Errors produced by model construction, normalizer evaluation, simulation,
/// zero finding and cascade sampling.
#[derive(Debug, Error)]
pub enum GremError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The derived critical temperatures are not strictly increasing.
    #[error("convexity violation: sigma_{k} = {current:.6} does not exceed sigma_{} = {previous:.6}", k - 1)]
    ConvexityViolation {
        k: usize,
        previous: f64,
        current: f64,
    },

    #[error("leaf budget exceeded: N_n = {requested} > {budget} (override with GREM_LEAF_BUDGET)")]
    LeafBudgetExceeded { requested: u128, budget: u64 },

    #[error("overflow computing branching numbers at n = {0}")]
    Overflow(u32),

    #[error("Newton iteration for u did not converge (N = {0})")]
    NonConvergence(f64),

    #[error("beta lies on a phase boundary where {0} is undefined")]
    PhaseBoundary(String),

    #[error("unknown normalizer kind: {0}")]
    UnknownKind(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("argument outside admissible domain: {0}")]
    DomainError(String),

    #[error("z_d too close to the pole at 1 (|z_d - 1| = {0:.2e})")]
    PoleProximity(f64),

    #[error("zero on integration contour after {0} jitter attempts")]
    BoundaryZero(usize),

    #[error("winding number {0:.4} not close to an integer at maximal contour resolution")]
    NonIntegerWinding(f64),

    #[error("|Z_n| underflowed to zero at beta = {0}")]
    ZeroValue(String),

    #[error("point is not on the requested boundary: {0}")]
    GeometryError(String),

    #[error("unknown limit law: {0}")]
    UnknownLaw(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GremError>;
