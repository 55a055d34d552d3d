use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("operator is not Hermitian (defect {defect:.3e} exceeds tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("trace {trace} violates tolerance {tol:.3e} around {expected}")]
    BadTrace { trace: f64, expected: f64, tol: f64 },
    #[error("Gibbs state is not full rank (min eigenvalue {0:.3e})")]
    RankDeficientGibbs(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigendecomposition failed: reconstruction residual {0:.3e}")]
    EigFailure(f64),
    #[error("semidefinite solve failed: {0}")]
    Sdp(#[from] SdpError),
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("battery dimension {0} exceeds the 2^20 cap")]
    BatteryOverflow(u64),
    #[error("bisection bracket failure: {0}")]
    BracketFailure(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Distinct failure modes of the SDP engine.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("problem is primal infeasible")]
    Infeasible,
    #[error("problem is unbounded (dual infeasible)")]
    Unbounded,
    #[error("iteration limit reached (duality gap {gap:.3e})")]
    MaxIterations { gap: f64 },
    #[error("solution rejected: duality gap {gap:.3e} > {gap_tol:.3e} or violation {violation:.3e} > {feas_tol:.3e}")]
    ToleranceNotMet {
        gap: f64,
        gap_tol: f64,
        violation: f64,
        feas_tol: f64,
    },
    #[error("solver returned status {0}")]
    SolverStatus(String),
}

pub type Result<T> = std::result::Result<T, Error>;
