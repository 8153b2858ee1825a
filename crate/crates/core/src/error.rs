use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {0:?} is shared by more than two cells")]
    NonConforming([usize; 3]),
    #[error("boundary face {0:?} carries no label")]
    UnlabeledBoundary([usize; 3]),
    #[error("label given for face {0:?}, which is not a boundary face")]
    SpuriousLabel([usize; 3]),
    #[error("cell {cell} has non-positive volume {volume:e}")]
    InvertedCell { cell: usize, volume: f64 },
    #[error("cell {cell} references vertex {vertex}, but only {count} vertices exist")]
    BadVertex { cell: usize, vertex: usize, count: usize },
    #[error("bisection closure did not terminate after {0} steps")]
    ClosureOverflow(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("boundary reference {0} has no label mapping")]
    UnmappedReference(i64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeError {
    #[error("degree {degree} is not supported for {family}")]
    UnsupportedDegree { family: &'static str, degree: usize },
    #[error("quadrature order {0} exceeds the supported maximum")]
    UnsupportedOrder(usize),
    #[error("{query} is not available for {family}")]
    IncompatibleQuery {
        family: &'static str,
        query: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error(transparent)]
    Fe(#[from] FeError),
}

#[derive(Debug, Error)]
pub enum EquilibrationError {
    #[error("edge {edge}: divergence datum has mean {mean:e}, expected zero")]
    CompatibilityViolation { edge: usize, mean: f64 },
    #[error("edge {0}: patch system is singular")]
    SingularPatchSystem(usize),
    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),
    #[error("patch fluxes have degree {found}, expected {expected}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Fe(#[from] FeError),
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("angle {0} is outside (0, 2 pi)")]
    BadAngle(f64),
    #[error("tangential trace of the frozen field is {0:e} on the boundary")]
    TraceCheckFailure(f64),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
}

/// Top-level error for drivers that chain all stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Equilibration(#[from] EquilibrationError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
