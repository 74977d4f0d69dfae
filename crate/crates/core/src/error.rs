use thiserror::Error;

/// Errors raised by state construction, protocol simulation and certification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },

    #[error("{what} is not Hermitian (max |M - M^dagger| = {residual:e})")]
    NotHermitian { what: &'static str, residual: f64 },

    #[error("density operator trace is {trace}, expected 1")]
    TraceNotUnit { trace: f64 },

    #[error("density operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dichotomic observable does not square to the identity (residual {residual:e})")]
    NotInvolutory { residual: f64 },

    #[error("invalid projective decomposition: {0}")]
    InvalidProjectors(String),

    #[error("invalid clumsiness model: {0}")]
    InvalidClumsiness(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),

    #[error("sample count must be at least 1")]
    ZeroSamples,

    #[error("invalid outcome table: {0}")]
    InvalidTable(String),

    #[error("table arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("INRM configuration set is incomplete or duplicated: {0}")]
    InrmCoverage(String),

    #[error("invalid moment set: {0}")]
    InvalidMoments(String),

    #[error("moment {0} is not fixed")]
    UnfixedMoment(String),

    #[error("moment {0} is supplied by more than one table")]
    DuplicateMoment(String),

    #[error("marginal mismatch of {residual:e} exceeds tolerance")]
    MarginalMismatch { residual: f64 },

    #[error("nothing to complete: every moment is fixed")]
    NothingUnfixed,

    #[error("time ordering violated: t1 = {t1} must precede t2 = {t2}")]
    TimeOrder { t1: f64, t2: f64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
