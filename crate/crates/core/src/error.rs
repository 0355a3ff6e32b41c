use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.6e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("columns are not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("state `{label}` is not normalized (norm {norm})")]
    NotNormalized { label: String, norm: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    NotUnitTrace { trace: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("family lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("state family is empty")]
    EmptyFamily,

    #[error("states {i} and {j} are orthogonal (|overlap| = {overlap:.3e}); use the completion route")]
    OrthogonalPairPresent { i: usize, j: usize, overlap: f64 },

    #[error("Gram matrices differ (max deviation {max_deviation:.3e})")]
    GramMismatch { max_deviation: f64 },

    #[error("families have different numerical ranks ({source_rank} vs {target_rank})")]
    NumericalRankInconsistency { source_rank: usize, target_rank: usize },

    #[error("linking unitary residual {residual:.3e} exceeds 1e-8")]
    LinkResidual { residual: f64 },

    #[error("expected exactly {expected} states, found {found}")]
    WrongArity { expected: usize, found: usize },

    #[error("environment dimension {d_env} is smaller than register dimension {d}")]
    EnvTooSmall { d: usize, d_env: usize },

    #[error("map is not a deleter on this family: state {index} has form defect {defect:.3e}")]
    NotADeleter { index: usize, defect: f64 },

    #[error("environment state lies outside the analyzed span (residual {residual:.3e})")]
    OutOfSpan { residual: f64 },

    #[error("malformed completion problem: {0}")]
    MalformedProblem(String),

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),
}
