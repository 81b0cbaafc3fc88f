use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: relative asymmetry {asym:.3e} exceeds {tol:.3e}")]
    NonHermitian { asym: f64, tol: f64 },

    #[error("matrix is not unitary: defect {defect:.3e} exceeds {tol:.3e}")]
    NonUnitary { defect: f64, tol: f64 },

    #[error("ambiguous window: eigenvalue {eigenvalue:.6e} within {tol:.1e} of threshold {threshold:.6e}; adjust the window radius")]
    AmbiguousWindow {
        eigenvalue: f64,
        threshold: f64,
        tol: f64,
    },

    #[error("eigenbranch matching: mean overlap {overlap:.3} below 0.5, step too large")]
    StepTooLarge { overlap: f64 },

    #[error("branch matching failed after maximum refinement near u = {u}")]
    BranchMatchFailure { u: f64 },

    #[error("boundary operator not invertible (smallest singular value {sigma:.3e})")]
    BoundaryNotInvertible { sigma: f64 },

    #[error("spectral gap estimate {gap:.3e} not positive; eta tail not controllable")]
    GapNotControllable { gap: f64 },

    #[error("outside radius of convergence: ||[dD, a]|| = {commutator:.4e} >= gap {gap:.4e}")]
    OutsideConvergenceRadius { commutator: f64, gap: f64 },

    #[error("neither operator is smoothing; trace-class hypothesis violated")]
    NotSmoothing,

    #[error("unsupported Clifford degree q = {q} (expected 1 or 2)")]
    UnsupportedDegree { q: usize },

    #[error("odd cochain evaluated at even degree n = {n}")]
    EvenDegree { n: usize },

    #[error("phase unwrapping ambiguity at u = {u}: step {step:.3} rad >= pi/2")]
    PhaseUnwrap { u: f64, step: f64 },

    #[error("Fourier cutoff {cutoff} too small for winding {winding}")]
    CutoffTooSmall { cutoff: usize, winding: i64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
