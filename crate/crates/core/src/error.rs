use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decode error: {0}")]
    Decode(String),

    /// A metadata field is missing or carries an invalid value. Holds the field name.
    #[error("missing or invalid metadata field `{0}`")]
    Schema(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),

    #[error("degenerate image: {0}")]
    DegenerateImage(String),

    #[error("invalid gamma knots: {0}")]
    Knot(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("encode error: {0}")]
    Encode(String),

    #[error(transparent)]
    Spec(#[from] crate::pipeline::SpecError),

    #[error("stage {index} ({stage_id}) failed: {source}")]
    Stage {
        index: usize,
        stage_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("rendition pool is empty")]
    EmptyPool,

    #[error("unknown rendition `{0}`")]
    UnknownRendition(String),

    #[error("no time entry for solution `{0}`")]
    MissingTime(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("vote store: {0}")]
    Store(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
