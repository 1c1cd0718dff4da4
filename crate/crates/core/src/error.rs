use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension cap exceeded: {requested} entries requested, cap is {cap}")]
    DimensionCap { requested: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not PSD (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("inconsistent moments: root imaginary part {0:e}")]
    InconsistentMoments(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
