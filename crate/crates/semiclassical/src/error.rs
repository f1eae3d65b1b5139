use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation produced a non-finite value ({0})")]
    NonFinite(String),
    #[error("bracket nesting exceeds the supported derivative depth")]
    DepthExceeded,
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("duplicate chart name `{0}`")]
    DuplicateName(String),
    #[error("a canonical chart needs at least one pair")]
    NoPairs,
    #[error("missing value for `{0}`")]
    MissingValue(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("singular chart point: {0}")]
    SingularChart(String),
    #[error("negative discriminant: {0}")]
    NegativeDiscriminant(String),
    #[error("invalid moment index `{0}`")]
    InvalidIndex(String),
    #[error("monomial degree {0} exceeds the oracle cap of 6")]
    DegreeTooLarge(u32),
    #[error("missing moment `{0}`")]
    MissingMoment(String),
    #[error("cannot generate `{0}`: no base moment to start the recursion from")]
    MissingPredecessor(String),
    #[error("potential `{0}` is not differentiable")]
    SmoothnessRequired(String),
    #[error("no minimum found")]
    NoMinimumFound,
    #[error("eigenvalue computation did not converge: {0}")]
    NonConvergedEigen(String),
    #[error("trajectory reached a chart singularity at t = {t}")]
    SingularityStop { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("cutoff too small: tail estimate {tail:e} above tolerance {tol:e}")]
    CutoffTooSmall { tail: f64, tol: f64 },
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("complex normal-mode frequency")]
    ComplexFrequency,
    #[error("density below floor at q = {q}")]
    DensityFloorHit { q: f64 },
    #[error("Hermite series is not converging")]
    SeriesDiverging,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
