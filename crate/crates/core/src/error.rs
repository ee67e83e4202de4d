use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),

    #[error("boundary edge ({0}, {1}) carries no tag")]
    UntaggedBoundaryEdge(usize, usize),

    #[error("edge ({0}, {1}) is tagged {2} but lies in the mesh interior")]
    TagOnInteriorEdge(usize, usize, String),

    #[error("element {elem} references vertex {vertex} out of range")]
    InvalidVertexIndex { elem: usize, vertex: usize },

    #[error("element {0} is degenerate (zero area)")]
    DegenerateElement(usize),

    #[error("mesh has no elements")]
    EmptyMesh,

    #[error("conductor indices must form a contiguous range 1..=M; {0}")]
    BadConductorIndices(String),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("polynomial order {0} outside supported range 1..=6")]
    UnsupportedOrder(usize),

    #[error("stabilization scale tau0 must be positive, got {0}")]
    NonPositiveTau(f64),

    #[error("local system of element {0} is singular")]
    SingularLocalSystem(usize),

    #[error("problem data: {0}")]
    BadProblemData(String),

    #[error("global matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration/input problems,
    /// 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotSpd(_) | Error::SingularLocalSystem(_) => 3,
            _ => 2,
        }
    }
}
