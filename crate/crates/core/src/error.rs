use thiserror::Error;

/// Errors raised by the construction and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("ambiguous square-root branch at sample {index}")]
    AmbiguousBranch { index: usize },
    #[error("square root of a vanishing value at sample {index}")]
    ZeroEncountered { index: usize },
    #[error("degenerate least-squares fit: {0}")]
    DegenerateFit(String),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("too many vertices: {count} > {limit}")]
    TooManyVertices { count: usize, limit: usize },
    #[error("point {re} + {im}i is outside the open unit disk")]
    OutsideDisk { re: f64, im: f64 },
    #[error("indeterminate quotient g'/h' at {re} + {im}i")]
    IndeterminateQuotient { re: f64, im: f64 },
    #[error("no single-valued square root of the dilatation: {0}")]
    NoGlobalBranch(String),
    #[error("edge signs cannot be matched by either branch: {0}")]
    InconsistentSigns(String),
    #[error("image path leaves the domain: {0}")]
    PathLeavesDomain(String),
    #[error("probe ray misses the interior of edge {edge}")]
    RayMissesEdge { edge: usize },
    #[error("index {0} is not a jump point")]
    NotAJumpPoint(usize),
    #[error("degenerate arc: endpoints coincide")]
    DegenerateArc,
    #[error("reflection hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("level set is empty in the given box")]
    EmptyLevelSet,
    #[error("lightlike polygon does not project onto the domain boundary")]
    ProjectionMismatch,
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_in_disk(w: num_complex::Complex64) -> Result<()> {
    if w.norm() < 1.0 && w.re.is_finite() && w.im.is_finite() {
        Ok(())
    } else {
        Err(Error::OutsideDisk { re: w.re, im: w.im })
    }
}
