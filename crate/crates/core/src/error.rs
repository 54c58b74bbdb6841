use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid depth {depth} at pixel ({x}, {y})")]
    InvalidDepth { x: usize, y: usize, depth: f32 },

    #[error("mesh would be empty: {0}")]
    EmptyMesh(&'static str),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(&'static str),

    #[error("smoothed-depth normals requested but the mesh carries none")]
    MissingAltNormals,

    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported hint count {0} (expected 3, 4 or 5)")]
    UnsupportedHintCount(usize),

    #[error("environment map pool is empty")]
    EmptyEnvPool,

    #[error("unknown environment map `{0}`")]
    UnknownEnvMap(String),

    #[error("invalid environment map: {0}")]
    InvalidEnvMap(String),

    #[error("channel mismatch: expected {expected} channels, found {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("invalid image format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("manifest schema mismatch: expected version {expected}, found {found}")]
    SchemaMismatch { expected: u32, found: u32 },

    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),

    #[error("missing render: {0}")]
    MissingRender(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Short stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidDepth { .. } => "invalid_depth",
            Error::EmptyMesh(_) => "empty_mesh",
            Error::DegenerateMesh(_) => "degenerate_mesh",
            Error::MissingAltNormals => "missing_alt_normals",
            Error::InvalidCamera(_) => "invalid_camera",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::UnsupportedHintCount(_) => "unsupported_hint_count",
            Error::EmptyEnvPool => "empty_env_pool",
            Error::UnknownEnvMap(_) => "unknown_env_map",
            Error::InvalidEnvMap(_) => "invalid_env_map",
            Error::ChannelMismatch { .. } => "channel_mismatch",
            Error::Format { .. } => "bad_format",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::CorruptManifest(_) => "corrupt_manifest",
            Error::MissingRender(_) => "missing_render",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
