use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error("empty mesh")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("degenerate point set")]
    DegeneratePointSet,
    #[error("interior support reaches exterior anchor ({0} cells)")]
    AnchorConflict(usize),
    #[error("anchor sets overlap on {0} cells")]
    AnchorOverlap(usize),
    #[error("no interior region")]
    NoInteriorRegion,
    #[error("empty solid")]
    EmptySolid,
    #[error("unknown face {0:?}")]
    UnknownFace([u32; 3]),
    #[error("too many free cells for exhaustive search: {0}")]
    TooManyFreeCells(usize),
    #[error("infeasible labeling problem")]
    Infeasible,
    #[error("virtual scan produced no hits")]
    NoScanHits,
    #[error("defect synthesis failed: {0}")]
    Synthesis(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
