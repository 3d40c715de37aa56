use thiserror::Error;

/// Failures raised by the solver and its configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate ALE map: min jacobian {min_jacobian:.3e} at node {node} is not above the collision floor {floor:.3e}")]
    DegenerateMap {
        min_jacobian: f64,
        node: usize,
        floor: f64,
    },

    #[error("no sign change for the clamped-beam root in [{lo}, {hi}]")]
    RootBracket { lo: f64, hi: f64 },

    #[error("basis is not orthonormal: entry ({row}, {col}) deviates by {deviation:.3e}")]
    NonOrthonormal {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown selector `{0}`")]
    UnknownSelector(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("density not positive: min {min:.3e} at cell {cell}")]
    NonPositiveDensity { min: f64, cell: usize },

    #[error("mass matrix not positive definite (min eigenvalue estimate {min_eigenvalue:.3e})")]
    MassMatrixNotSpd { min_eigenvalue: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {increment:.3e})")]
    FixedPointDiverged { iterations: usize, increment: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("handoff mismatch in {field} at index {index}: {left:e} vs {right:e}")]
    HandoffMismatch {
        field: &'static str,
        index: usize,
        left: f64,
        right: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible resolutions: {0}")]
    IncompatibleResolution(String),

    #[error("window {window}: {source}")]
    InWindow {
        window: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_window(self, window: usize) -> Self {
        match self {
            e @ Error::InWindow { .. } => e,
            e => Error::InWindow {
                window,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, with window annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InWindow { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::Config(_) | Error::UnknownSelector(_) => "config",
            Error::Io(_) => "io",
            Error::HandoffMismatch { .. } => "invariant",
            _ => "solver",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
