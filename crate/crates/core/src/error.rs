use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("region is empty")]
    EmptyRegion,

    #[error("duplicate site {0:?} in region")]
    DuplicateSite(Vec<i64>),

    #[error("inner region is not contained in the ambient region (first offending site {0:?})")]
    NotSubset(Vec<i64>),

    #[error("energy {energy} is within {distance:e} of the spectrum")]
    NearSingular { energy: f64, distance: f64 },

    #[error("linear solve residual {residual:e} exceeds tolerance")]
    SolveResidual { residual: f64 },

    #[error("absorption at stage {stage} (prior stage {prior_stage}) did not settle within {limit} steps")]
    AbsorptionOverflow {
        stage: usize,
        prior_stage: usize,
        limit: usize,
    },

    #[error("blocks centered at {a:?} and {b:?} (doubled coordinates) overlap")]
    BlockOverlap { a: Vec<i64>, b: Vec<i64> },

    #[error("centers have different half-integer classes; blocks cannot share one template")]
    MixedCenterParity,

    #[error("block reaches ℓ¹ radius {reached} but the budget is {budget}")]
    PaddingBudget { reached: f64, budget: f64 },

    #[error("enclosure grew beyond {budget} of the original region")]
    EnclosureBudget { budget: f64 },

    #[error("no mirror image: both signs miss the bound {bound:e} (best {best:e})")]
    MirrorNotFound { bound: f64, best: f64 },

    #[error("no common μ ∈ {{0, 1/2}} for the class-B centers (bound {bound:e})")]
    InconsistentMu { bound: f64 },

    #[error("case 2 chosen at consecutive stages {stage} and {next}")]
    ConsecutiveCase2 { stage: usize, next: usize },

    #[error("energy window holds {count} eigenvalues at θ = {theta}; intruder {intruder}")]
    WindowOverfull {
        count: usize,
        theta: f64,
        intruder: f64,
    },

    #[error("eigenvalue {energy} is degenerate (gap {gap:e})")]
    Degenerate { energy: f64, gap: f64 },

    #[error("expected a two-dimensional near-degenerate eigenspace, found dimension {0}")]
    DegeneracyDimension(usize),

    #[error("operator does not commute with the reflection (‖[R,H]‖ = {0:e})")]
    NotReflectionSymmetric(f64),

    #[error("eigenspace has a single parity; cannot split into symmetric and antisymmetric parts")]
    ParityPure,

    #[error("partner eigenvector required for the two-level split")]
    MissingPartner,

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
