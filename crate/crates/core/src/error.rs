use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("affine map is singular (|det| = {det:e})")]
    SingularMap { det: f64 },

    #[error("map has no unique fixed point (det(I - L) = {det:e})")]
    NoUniqueFixedPoint { det: f64 },

    #[error("symbol {symbol} is outside the alphabet 1..={alphabet}")]
    BadSymbol { symbol: u32, alphabet: usize },

    #[error("invalid iterated function system: {0}")]
    InvalidIfs(String),

    #[error("invalid viewport: {0}")]
    InvalidViewport(String),

    #[error("rasters live on different viewports")]
    ViewportMismatch,

    #[error("depth {depth} too large: {reason}")]
    DepthTooLarge { depth: usize, reason: String },

    #[error("system is not one-dimensional")]
    NotOneDimensional,

    #[error("tops orbit left the attractor at step {step}")]
    EscapedAttractor { step: usize },

    #[error("tile classification failed: {}", .violations.join("; "))]
    ClassificationFailure { violations: Vec<String> },

    #[error("orbit exceeded the cap of {cap} points")]
    OrbitExplosion { cap: usize },

    #[error("orbit has only {points} points; need at least 3")]
    DegenerateOrbit { points: usize },

    #[error("maps do not share a common contraction ratio")]
    NotCommonRatio,

    #[error("maps are not of the form x -> r x + b")]
    NotTranslationFamily,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
