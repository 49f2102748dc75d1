use thiserror::Error;

/// Validation and geometry errors on in-memory meshes.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no vertices")]
    EmptyMesh,

    #[error("triangle {triangle} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },

    #[error("triangle {triangle} is degenerate (area {area:.3e} mm² below tolerance)")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("vertex {vertex} has no incident triangle")]
    IsolatedVertex { vertex: usize },

    #[error("label count {labels} does not match vertex count {vertices}")]
    LabelCountMismatch { labels: usize, vertices: usize },

    #[error("shape vector length {len} is not divisible by 3")]
    BadShapeVectorLength { len: usize },

    #[error("shape vector length {len} too short for topology needing {needed} coordinates")]
    ShapeVectorTooShort { len: usize, needed: usize },

    #[error("shape vector contains a non-finite entry at index {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("mesh is not a closed orientable manifold: {reason}")]
    NotClosedManifold { reason: String },

    #[error("rotation matrix is not a proper rotation (orthogonality residual {ortho:.3e}, det {det})")]
    InvalidRotation { ortho: f64, det: f64 },
}

/// Errors from reading or writing mesh files.
#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("file is empty: {0}")]
    Empty(String),

    #[error(transparent)]
    Invalid(#[from] MeshError),
}

impl MeshIoError {
    pub fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        MeshIoError::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}
