use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symplectic (max defect {defect:.3e})")]
    NotSymplectic { defect: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is singular or too ill-conditioned")]
    Singular,

    #[error("symplectic spectrum pairing failed (mismatch {mismatch:.3e})")]
    SpectrumPairing { mismatch: f64 },

    #[error("invalid convex body: {0}")]
    InvalidBody(String),

    #[error("polytope is unbounded in direction {direction:?}")]
    Unbounded { direction: Vec<f64> },

    #[error("polar dual of an H-polytope is only supported for dimension <= 3 (got {dim})")]
    UnsupportedDual { dim: usize },

    #[error("inclusion scale not certified: bounds [{lower:.6e}, {upper:.6e}]")]
    InclusionNotCertified { lower: f64, upper: f64 },

    #[error("outer body does not contain the polar dual (scale {scale:.6e} < 1)")]
    NotContained { scale: f64 },

    #[error("at least {min} Monte Carlo samples are required (got {got})")]
    TooFewSamples { got: usize, min: usize },

    #[error("plane basis is rank deficient (smallest singular value {sigma_min:.3e})")]
    RankDeficient { sigma_min: f64 },

    #[error("planes are not transversal")]
    NotTransversal,

    #[error("plane is not Lagrangian (max form value {defect:.3e})")]
    NotLagrangian { defect: f64 },

    #[error("point is not on the target Lagrangian plane (offset {offset:.3e})")]
    OffPlane { offset: f64 },

    #[error("body must be an ellipsoid or ball for this operation")]
    NotEllipsoidal,

    #[error("covariance matrix is not saturated (symplectic eigenvalues {min:.6e}..{max:.6e}, need hbar/2)")]
    NotSaturated { min: f64, max: f64 },

    #[error("grid does not resolve the state (tail mass {tail_mass:.3e})")]
    Aliasing { tail_mass: f64 },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("step size too large for stable propagation: {0}")]
    StepSize(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
