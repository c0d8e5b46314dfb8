use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution {0}: must be at least 1")]
    InvalidResolution(usize),

    #[error("invalid domain parameter `{name}`: {reason}")]
    InvalidDomainParameter { name: String, reason: String },

    #[error("unknown domain kind `{0}`")]
    UnknownDomainKind(String),

    #[error("mesh invariant violated: {0}")]
    MeshInvariant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("region {region}: {message}")]
    InvalidMaterial { region: u32, message: String },

    #[error("region id {0} has no material entry")]
    MissingMaterial(u32),

    #[error("degenerate cell {cell} (volume {volume:e})")]
    DegenerateCell { cell: usize, volume: f64 },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("matrix is not Hermitian (relative defect {0:e})")]
    NotHermitian(f64),

    #[error("matrix is singular to working precision at column {column}")]
    SingularMatrix { column: usize },

    #[error("zero vector has no Rayleigh quotient")]
    ZeroVector,

    #[error("sesquilinear form has imaginary part {relative:e} relative to its real part")]
    NonHermitianForm { relative: f64 },

    #[error(
        "eigensolver did not converge after {iterations} iterations (worst residual {residual:e})"
    )]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("level {level}, member {member}: iterate collapsed into the gradient kernel (a(u,u) = {energy:e})")]
    GradientCollapse {
        level: usize,
        member: usize,
        energy: f64,
    },

    #[error("invalid scheme configuration: {0}")]
    InvalidScheme(String),

    #[error("target cluster starting at index {0} is a zero mode")]
    ZeroModeTarget(usize),

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rate input: {0}")]
    RateInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::Level {
            level,
            source: Box::new(self),
        }
    }
}
