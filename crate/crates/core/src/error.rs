use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions {dims:?}: need at least two modes, each of size >= 1")]
    InvalidDims { dims: Vec<usize> },
    #[error("coefficient count mismatch: dims require {expected}, got {actual}")]
    CoeffCount { expected: usize, actual: usize },
    #[error("mode {mode} out of range for a {order}-partite state (modes are 1-based)")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("matrix for mode {mode} is not unitary (residual {residual:.3e})")]
    NotUnitary { mode: usize, residual: f64 },
    #[error("matrix {index} of the family is not Hermitian (residual {residual:.3e})")]
    NotHermitian { index: usize, residual: f64 },
    #[error("invalid direct group: {0}")]
    InvalidGroup(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("eigensolver did not converge on a {size}x{size} matrix")]
    EigenFailure { size: usize },
    #[error("canonicalization did not reach a fixed point after {actions} refinement steps")]
    CanonNotConverged { actions: usize },
    #[error("HOSVD post-condition failed: mode {mode} Gram off-diagonal {offdiag:.3e}")]
    HosvdNotDiagonal { mode: usize, offdiag: f64 },
}
