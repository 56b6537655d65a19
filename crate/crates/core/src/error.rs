use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("field `{field}` violates its declared bound at z = {point:?}: {detail}")]
    FieldUnbounded {
        field: String,
        point: Vec<f64>,
        detail: String,
    },
    #[error("exponent condition violated: {0}")]
    ConditionHrViolated(String),
    #[error("unknown catalog field `{0}`")]
    UnknownField(String),
    #[error("bad parameters for `{field}`: {reason}")]
    BadParams { field: String, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is degenerate for normal coordinates (x+y = 0 or x-y = 0)")]
    DegeneratePoint,
    #[error("point lies outside the certified tube: |theta| = {theta} >= {theta0}")]
    OutsideTube { theta: f64, theta0: f64 },
    #[error("point is not on the quadric: |x·y| = {residual:e}")]
    NotOnQuadric { residual: f64 },
    #[error("could not build an orthonormal tangent frame")]
    FrameConstructionFailed,
    #[error("slab half-width {eps_slab} exceeds theta0/4 = {limit}")]
    SlabTooWide { eps_slab: f64, limit: f64 },
    #[error("radial profile is not integrable: {0}")]
    NonIntegrableProfile(String),

    #[error("nu = {0} outside (0, 1]")]
    NuOutOfRange(f64),
    #[error("analytic bound {bound:e} violated by empirical value {empirical:e}")]
    BoundViolated { bound: f64, empirical: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergent(String),

    #[error("surface-integral methods disagree: charts {charts} vs thin slab {thin_slab} (tolerance {tolerance:e})")]
    MethodsDisagree {
        charts: f64,
        thin_slab: f64,
        tolerance: f64,
    },
    #[error("remainder ratio grows beyond tolerance at nu = {nu}: {ratio} > {limit}")]
    RemainderUnbounded { nu: f64, ratio: f64, limit: f64 },

    #[error("norm exponent m = {m} must exceed 2d - 2 = {threshold}")]
    NormExponentTooSmall { m: f64, threshold: f64 },
    #[error("field `{0}` is not compactly supported")]
    NotCompactlySupported(String),
    #[error("field `{0}` does not vanish near the origin")]
    SupportTouchesOrigin(String),
    #[error("principal value did not converge: {0}")]
    PvNonConvergent(String),
    #[error("integrand decays too slowly: {0}")]
    DecayInsufficient(String),

    #[error("lambda = {lambda} needs {nodes} nodes, above the budget of {budget}")]
    ResolutionExceeded { lambda: f64, nodes: u64, budget: u64 },
    #[error("Hessian is degenerate at the critical point")]
    DegenerateHessian,
    #[error("critical point lies on the support boundary")]
    CriticalPointOnSupportBoundary,
    #[error("unsupported: {0}")]
    Unsupported(String),
}
