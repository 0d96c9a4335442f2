use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("flux {p}/{q} incompatible with domain: {reason}")]
    Flux { p: i64, q: i64, reason: String },
    #[error("gapless: {0}")]
    Gapless(String),
    #[error("fermi level {0} lies inside a bulk band")]
    FermiInBand(f64),
    #[error("partition is not admissible")]
    Inadmissible(Box<crate::geometry::AdmissibilityReport>),
    #[error("crossings cannot be resolved: {0}")]
    Crossings(String),
    #[error("linear algebra: {0}")]
    Linalg(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Geometry(_) | Error::Flux { .. } | Error::Json(_) => 2,
            Error::Gapless(_) | Error::FermiInBand(_) => 3,
            Error::Inadmissible(_) => 4,
            Error::Crossings(_) | Error::Linalg(_) => 5,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
