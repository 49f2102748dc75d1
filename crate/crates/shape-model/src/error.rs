use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("procrustes needs at least 3 point pairs, got {0}")]
    TooFewPoints(usize),

    #[error("point counts differ: {source_count} source vs {target_count} target")]
    CountMismatch {
        source_count: usize,
        target_count: usize,
    },

    #[error("degenerate point configuration (collinear or coincident): singular value ratio {ratio:.3e}")]
    Degenerate { ratio: f64 },

    #[error("mesh has no vertices")]
    EmptyMesh,

    #[error("invalid ICP config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Error)]
pub enum GpError {
    #[error("kernel term {index} invalid: scale and length must be positive (s={scale}, l={length})")]
    BadKernelTerm {
        index: usize,
        scale: f64,
        length: f64,
    },

    #[error("requested rank {rank} exceeds available basis size {available}")]
    RankTooLarge { rank: usize, available: usize },

    #[error("kernel matrix is not positive semi-definite: worst eigenvalue {worst:.6e}")]
    NotPositiveSemiDefinite { worst: f64 },

    #[error("coefficient length {got} does not match model rank {rank}")]
    CoefficientLength { got: usize, rank: usize },

    #[error("optimizer diverged (non-finite objective) after {iterations} iterations")]
    Diverged {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("base mesh has {got} vertices, model reference has {expected}")]
    BaseMismatch { got: usize, expected: usize },

    #[error("reference mesh has no {0:?} labels")]
    MissingVeinLabels(mesh_core::RegionLabel),

    #[error("expected 2 connected vein components for {label:?}, found {found}")]
    BadVeinPartition {
        label: mesh_core::RegionLabel,
        found: usize,
    },

    #[error("vein group {group} is degenerate: {reason}")]
    DegenerateVein { group: usize, reason: String },

    #[error(transparent)]
    Mesh(#[from] mesh_core::MeshError),
}

#[derive(Debug, Error)]
pub enum PdmError {
    #[error("need at least 2 shapes to build a model, got {0}")]
    TooFewShapes(usize),

    #[error("shape {index} has length {got}, expected {expected}")]
    LengthMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },

    #[error("shape vector length {got} does not match model length {expected}")]
    ShapeLength { got: usize, expected: usize },

    #[error("requested {requested} modes but the model has {available}")]
    ModeCount {
        requested: usize,
        available: usize,
    },

    #[error("coefficient vector has {got} entries, need at least {needed}")]
    CoefficientLength { got: usize, needed: usize },

    #[error("variance fraction {0} outside (0, 1]")]
    BadFraction(f64),

    #[error("model has no nonzero variance")]
    ZeroVariance,

    #[error("vertex mask length {got} does not match vertex count {expected}")]
    MaskLength { got: usize, expected: usize },

    #[error(transparent)]
    Mesh(#[from] mesh_core::MeshError),
}

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic: expected 'SSMC1'")]
    BadMagic,

    #[error("unsupported container version {0}")]
    BadVersion(u32),

    #[error("unknown model type tag {0}")]
    BadTypeTag(u32),

    #[error("truncated file: needed {needed} more bytes for {what}")]
    Truncated { what: &'static str, needed: usize },

    #[error("invalid {what}: {msg}")]
    Invalid { what: &'static str, msg: String },
}
