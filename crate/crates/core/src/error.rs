use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not admissible: smallest eigenvalue of the symmetric part is {min_eig} (< 1)")]
    Admissibility { min_eig: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("expected a {expected} side function, got {found}")]
    SideMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("exponent must be positive, got {0}")]
    NonPositiveExponent(f64),

    #[error("interval cover failed: {0}")]
    CoverFailure(String),

    #[error("base b = {b} is below the admissible base b0 = {b0}")]
    BaseTooSmall { b: f64, b0: f64 },

    #[error("base b = {0} must lie in (0, 1)")]
    InvalidBase(f64),

    #[error("psi floor is not positive: measured {0}")]
    PsiFloor(f64),

    #[error("scale index {j} outside the sampled window [{lo}, {hi}]")]
    Window { j: i32, lo: i32, hi: i32 },

    #[error("degenerate dilation orbit: Calderon integral {value:e} at probe point")]
    DegenerateOrbit { value: f64 },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("empty radius family")]
    EmptyRadii,

    #[error("mollifier mass is {0}, expected 1")]
    Mass(f64),

    #[error("A_p exponent must exceed 1, got {0}")]
    NonAdmissibleExponent(f64),

    #[error("degenerate ball: {points} lattice points for {constraints} moment constraints")]
    DegenerateBall { points: usize, constraints: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("H^p quasi-norm vanishes ({0:e})")]
    ZeroQuasinorm(f64),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
