use thiserror::Error;

/// Every failure the library can report. The leading kebab-case tag of each
/// message is stable and is what the CLI prints.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expansion-unavailable: {0}")]
    ExpansionUnavailable(String),

    #[error("dimension-out-of-range: degree {degree} not in 1..={dims}")]
    DimensionOutOfRange { degree: usize, dims: usize },

    #[error("invalid-tree: {0}")]
    InvalidTree(String),

    #[error("not-a-projection: {0}")]
    NotAProjection(String),

    #[error("shape-mismatch: {0}")]
    ShapeMismatch(String),

    #[error("not-a-subobject: q is not dominated by p")]
    NotASubobject,

    #[error("central-support-violation: block {0} of the compressing projection is zero")]
    CentralSupportViolation(usize),

    #[error("not-equivariant: map {0} does not commute with the right action")]
    NotEquivariant(usize),

    #[error("invalid-threshold: epsilon must be positive, got {0}")]
    InvalidThreshold(f64),

    #[error("domain-too-small: no representative for orbit {orbit} in degree {degree} at level {level}")]
    DomainTooSmall { degree: usize, orbit: usize, level: usize },

    #[error("invalid-schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid-scale: scale factor must be positive")]
    InvalidScale,

    #[error("internal-inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("not-a-tree: {0}")]
    NotATree(String),

    #[error("invalid-betti: entry {0} is negative")]
    InvalidBetti(usize),

    #[error("product-too-large: {cells} cells exceeds cap {cap}")]
    ProductTooLarge { cells: usize, cap: usize },

    #[error("not-amenable-family: {0}")]
    NotAmenableFamily(String),

    #[error("incomplete-input: {0}")]
    IncompleteInput(String),

    #[error("invalid-q: residue field size must be at least 2, got {0}")]
    InvalidQ(u64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("consistency violation in orbit {orbit}: {msg}")]
    Consistency { orbit: String, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
