use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum OseenError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("boundary facet {facet} (midpoint {midpoint:?}) matches neither the Gamma nor the Sigma predicate")]
    UntaggedFacet { facet: usize, midpoint: [f64; 2] },

    #[error("periodic pairing failed: {0}")]
    PeriodicMismatch(String),

    #[error("mesh file parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("unsupported polynomial degree {degree} (supported: 0..={max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("inconsistent spaces: {0}")]
    InconsistentSpaces(String),

    #[error("Sigma boundary data supplied but the mesh has no Sigma facets")]
    SigmaDataOnGamma,

    #[error("pressure is undetermined: no Sigma facets and no zero-mean constraint")]
    NoPressureGauge,

    #[error("matrix is singular (pivot {pivot:?})")]
    SingularMatrix { pivot: Option<usize> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solve failed: relative residual {residual:e} exceeds {tolerance:e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("point {0:?} lies outside the mesh")]
    PointOutsideDomain([f64; 2]),

    #[error("cannot fit a rate: error value {0} is not positive")]
    DegenerateError(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("linear algebra backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = OseenError> = std::result::Result<T, E>;
