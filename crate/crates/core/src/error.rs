use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("potential `{0}` is not differentiable; gradient-based evaluation unavailable")]
    NotDifferentiable(&'static str),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("width condition violated: eps/sqrt(lambda) = {profile_width:.3e} > lambda*delta = {plateau:.3e}")]
    WidthCondition { profile_width: f64, plateau: f64 },

    #[error("profile of width {width:.3e} is not resolved by cells of size {h:.3e}; refine the grid")]
    Unresolved { width: f64, h: f64 },

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
