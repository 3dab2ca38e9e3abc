use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh import: {0}")]
    MeshImport(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("incompatible Dirichlet data: net boundary flux {flux:.3e} exceeds tolerance {tol:.3e}")]
    IncompatibleBoundaryData { flux: f64, tol: f64 },

    #[error("{solver} did not converge within {iterations} iterations (relative residual {residual:.3e})")]
    SolverStalled {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not positive definite (encountered p'Ap = {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("solver breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("manufactured data inconsistent: finite-difference residual {residual:.3e} at step {step:.1e}, observed order {order:.2} (need >= 1.9)")]
    ConsistencyFailed { residual: f64, step: f64, order: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
