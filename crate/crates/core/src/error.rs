use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown chart kind `{0}`")]
    UnknownChart(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite sample {value} at grid point {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("unsupported stencil order {0}")]
    UnsupportedOrder(usize),
    #[error("chart or grid mismatch between operands")]
    Mismatch,
    #[error("polar singularity: grid reaches r = {0}")]
    PolarSingularity(f64),
    #[error("exact mode requested but a field has no analytic gradient")]
    MissingGradient,
    #[error("analytic gradient disagrees with central differencing by {0:.3e}")]
    GradientMismatch(f64),
    #[error("support leak: boundary sample {boundary:.3e} exceeds {limit:.3e}")]
    SupportLeak { boundary: f64, limit: f64 },
    #[error("trajectory escaped the bounding region at t = {t}: {state:?}")]
    Escape { t: f64, state: Vec<f64> },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted")]
    MaxSteps(usize),
    #[error("non-finite gradient at {0:?}")]
    NonFiniteGradient(Vec<f64>),
    #[error("superlinear growth detected (curvature ratio {0:.3})")]
    SuperlinearGrowth(f64),
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
    #[error("unknown algebra `{0}`")]
    UnknownAlgebra(String),
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("index n = {0} is not in the configured set")]
    UnknownIndex(u32),
    #[error("limit images are not configured")]
    MissingLimit,
    #[error("unknown gallery entry `{0}`")]
    UnknownEntry(String),
    #[error("golden value `{name}` changed: stored {stored:e}, recomputed {fresh:e}")]
    GoldenMismatch { name: String, stored: f64, fresh: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
