use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("selection rule violated: |{l1} - {l2}| <= {l3} <= {l1} + {l2} does not hold")]
    SelectionRule { l1: usize, l2: usize, l3: usize },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point {index} lies outside the ball (r = {r}, r_max = {r_max})")]
    OutOfBall { index: usize, r: f64, r_max: f64 },

    #[error("aliasing: degree {degree} requires bandwidth > {degree}, got {bw}")]
    Aliasing { degree: usize, bw: usize },

    #[error("cosine undefined for a zero-norm tensor")]
    UndefinedCosine,

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
