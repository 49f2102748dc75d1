use thiserror::Error;

#[derive(Debug, Error)]
pub enum EpError {
    #[error("tet {tet} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        tet: usize,
        index: u32,
        vertex_count: usize,
    },

    #[error("tet {tet} has non-positive signed volume {volume:.3e} mm³")]
    InvertedTet { tet: usize, volume: f64 },

    #[error("tet {tet} fiber is not unit length (norm {norm})")]
    BadFiber { tet: usize, norm: f64 },

    #[error("per-tet attribute '{what}' has length {got}, expected {expected}")]
    AttributeLength {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("input surface is not usable for extrusion: {0}")]
    BadSurface(String),

    #[error("offset surface self-intersects; {count} triangle pairs, first: ({a}, {b})")]
    SelfIntersection { count: usize, a: usize, b: usize },

    #[error("{count} tets matched no region rule (first: tet {first})")]
    UntaggedTets { count: usize, first: usize },

    #[error("rule parse error at line {line}: {msg}")]
    RuleParse { line: usize, msg: String },

    #[error("conduction entry for {region}: {msg}")]
    BadConduction { region: String, msg: String },

    #[error("seed set is empty: no vertex within {radius} mm of ({x:.2}, {y:.2}, {z:.2})")]
    EmptySeeds { radius: f64, x: f64, y: f64, z: f64 },

    #[error("seed vertex {0} out of range")]
    SeedOutOfRange(u32),

    #[error("activation time at vertex {vertex} is not finite (disconnected from all seeds)")]
    NonFiniteLat { vertex: usize },

    #[error("action-potential template invalid: {0}")]
    BadTemplate(String),

    #[error("template spans {span} ms but the movie needs {needed} ms")]
    TemplateTooShort { span: f64, needed: f64 },

    #[error("electrode set invalid: {0}")]
    BadElectrodes(String),

    #[error("electrode {name} is {distance:.1} mm from the nearest source (minimum 10 mm)")]
    ElectrodeTooClose { name: String, distance: f64 },

    #[error("missing electrode '{0}'")]
    MissingElectrode(String),

    #[error("lead series have inconsistent lengths")]
    LeadLengthMismatch,

    #[error("all leads are zero; cannot detect a P wave")]
    AllZeroTraces,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Mesh(#[from] mesh_core::MeshError),
}
