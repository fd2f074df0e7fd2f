use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("outcome probability {0:e} is below the sampling threshold")]
    ZeroProbabilityOutcome(f64),
    #[error("map is not invertible: |det| = {0:e}")]
    NonInvertibleMap(f64),
    #[error("tree depth {0} exceeds the enumeration limit of 16")]
    DepthTooLarge(u32),
    #[error("parameters are projective (|det m_-| = {det_minus:e}, |det m_+| = {det_plus:e})")]
    ProjectiveParameters { det_minus: f64, det_plus: f64 },
    #[error("grid of {coarse} cells does not divide {fine}")]
    IndivisibleGrid { fine: usize, coarse: usize },
    #[error("need at least 4 grid levels, got {0}")]
    TooFewLevels(usize),
    #[error("grid mismatch: {0} vs {1} cells")]
    GridMismatch(usize, usize),
    #[error("parameters are not projective for exactly one matrix")]
    NotProjective,
    #[error("parameters are not double-projective")]
    NotDoubleProjective,
    #[error("parameters are not on a shift line")]
    NotShiftCase,
    #[error("root not bracketed in [{0}, {1}]")]
    NoRoot(f64, f64),
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
