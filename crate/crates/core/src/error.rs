use num_complex::Complex64;
use thiserror::Error;

use crate::majorize::OrderVerdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },

    #[error("eigenvalue {eigenvalue} lies on the imaginary axis")]
    AxisEigenvalue { eigenvalue: Complex64 },

    #[error("pair is not stabilizable: uncontrollable unstable eigenvalue {eigenvalue}")]
    Unstabilizable { eigenvalue: Complex64 },

    #[error("solver residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inaccurate { residual: f64, tolerance: f64 },

    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("matrix appears non-diagonalizable (eigenvector basis condition {condition:e})")]
    NotDiagonalizable { condition: f64 },

    #[error("cyclic decomposition failed verification: {0}")]
    DecompositionFailed(String),

    #[error("vector is not majorized by the eigenvalue/entropy vector")]
    NotMajorized,

    #[error("intermediate vector construction failed: {0}")]
    ConstructionFailed(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("encoder/decoder constraint residual {residual:e} exceeds 1e-10")]
    CodecInvalid { residual: f64 },

    #[error("capacities do not satisfy the strict weak majorization condition (prefix {prefix} has slack {slack:e})")]
    Infeasible {
        prefix: usize,
        slack: f64,
        verdict: Box<OrderVerdict>,
    },

    #[error("no epsilon in {tried} halvings produced a verified design")]
    EpsilonExhausted { tried: usize },
}

impl Error {
    /// Stable, module-qualified identifier used in machine-readable output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "input.invalid",
            Error::DimensionMismatch(_) => "input.dimension_mismatch",
            Error::NotHurwitz { .. } => "numerics.not_hurwitz",
            Error::AxisEigenvalue { .. } => "numerics.axis_eigenvalue",
            Error::Unstabilizable { .. } => "plantmodel.unstabilizable",
            Error::Inaccurate { .. } => "numerics.inaccurate",
            Error::Diverged { .. } => "numerics.diverged",
            Error::NotDiagonalizable { .. } => "cyclic.not_diagonalizable",
            Error::DecompositionFailed(_) => "cyclic.decomposition_failed",
            Error::NotMajorized => "majorize.not_majorized",
            Error::ConstructionFailed(_) => "majorize.construction_failed",
            Error::Unsupported(_) => "unsupported",
            Error::CodecInvalid { .. } => "codesign.codec_invalid",
            Error::Infeasible { .. } => "codesign.infeasible",
            Error::EpsilonExhausted { .. } => "codesign.epsilon_exhausted",
        }
    }
}
