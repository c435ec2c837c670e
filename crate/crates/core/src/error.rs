use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("field does not decay at the domain boundary (max |q| = {max:.3e}, tolerance {tol:.1e})")]
    BoundaryDecay { max: f64, tol: f64 },
    #[error("blow-up detected at t = {time}: max |Q| = {max:.3e}")]
    BlowUp { time: f64, max: f64 },
    #[error("power drift {drift:.3e} at t = {time} exceeds tolerance {tol:.1e}")]
    PowerDrift { time: f64, drift: f64, tol: f64 },
    #[error("spectral parameter too deep: Im k = {im}, domain half-width {half_width}")]
    TooDeep { im: f64, half_width: f64 },
    #[error("Jost integration lost accuracy at k = {k}: {what} = {value:.3e}")]
    JostAccuracy { k: String, what: &'static str, value: f64 },
    #[error("spectral singularity near k = {k}: |a^-1| = {norm:.3e}")]
    SpectralSingularity { k: f64, norm: f64 },
    #[error("non-simple zero of det a near k = {0}")]
    NonSimpleZero(String),
    #[error("winding number remained ambiguous after {0} subdivision levels")]
    AmbiguousWinding(usize),
    #[error("Newton refinement failed near k = {0}")]
    NewtonFailed(String),
    #[error("norming-constant fit failed at k = {k}: {reason}")]
    NormingFit { k: String, reason: String },
    #[error("pole collision: k = {0} coincides with a conjugate pole")]
    PoleCollision(String),
    #[error("exponential overflow in soliton system: exponent {0:.1}")]
    Overflow(f64),
    #[error("singular soliton system")]
    SingularSystem,
    #[error("degenerate reflection: |det gamma(k0)| = {0:.3e}")]
    DegenerateReflection(f64),
    #[error("reflection coefficient not decayed at the sampling edge: |gamma| = {0:.3e}")]
    ReflectionTail(f64),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
