use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("escaped mass {escaped:.3e} exceeds tolerance {tolerance:.3e}")]
    EscapedMass { escaped: f64, tolerance: f64 },
    #[error("ball unresolved by grid: radius {radius} < 2h = {minimum}")]
    BallUnresolved { radius: f64, minimum: f64 },
    #[error("frame degenerate: smallest Gram eigenvalue {0:.3e}")]
    FrameDegenerate(f64),
    #[error("family not s-localized: {0}")]
    NotLocalized(String),
    #[error("center mismatch: {0}")]
    CenterMismatch(String),
    #[error("orthonormality residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotOrthonormal { residual: f64, tolerance: f64 },
    #[error("norm underflow: only {remaining} cutoffs above the floor, need at least 4")]
    Underflow { remaining: usize },
    #[error("empty tail at cutoff {0}")]
    EmptyTail(f64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("box too small: {0}")]
    BoxTooSmall(String),
    #[error("unresolved wells: spacing {spacing} > a/8 = {limit}")]
    UnresolvedWells { spacing: f64, limit: f64 },
    #[error("stale island: spectrum belongs to a different Hamiltonian")]
    StaleIsland,
    #[error("degenerate centers: {0}")]
    DegenerateCenters(String),
    #[error("deformation too strong: xi = {0} (must be < 1/2)")]
    DeformationTooStrong(f64),
    #[error("mapped point exits box: {0}")]
    OutsideBox(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("eigensolver: {0}")]
    Eigensolver(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
