//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by construction, validation and solver routines.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Request violates a precondition (e.g. hyperkähler with r ≠ 3).
    InvalidRequest(String),
    /// A vector or matrix has the wrong length/shape.
    DimensionMismatch { expected: usize, got: usize },
    /// Operation requires a hyperkähler module (r = 3, J₁J₂ = J₃).
    NotHyperkahler,
    /// A constructed or deserialized module violates an algebraic identity.
    InvalidModule(String),
    /// The zero frequency has no Dirac block.
    ZeroFrequency,
    /// Tail operation received a mode below the truncation cutoff.
    FrequencyBelowCutoff,
    /// Evaluation grid too coarse for the requested band.
    GridTooCoarse { grid: usize, required: usize },
    /// Quadrature rule cannot resolve the requested band.
    QuadratureInsufficient { band: usize, supported: usize },
    /// Time point type disagrees with the Hamiltonian's time domain.
    DomainMismatch,
    /// Fields over different modules/truncations cannot be combined.
    ShapeMismatch,
    /// Matrix coefficient index out of range.
    IndexOutOfRange { k: usize, a: usize, b: usize },
    /// The fiber map is not a contraction at this truncation.
    ContractionViolated { ratio: f64 },
    /// Fixed-point iteration did not converge.
    MaxItersExceeded { iters: usize, last_step: f64 },
    /// Newton refinement at the higher truncation diverged.
    RefinementDiverged,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidRequest(msg) => write!(f, "invalid request: {msg}"),
            CoreError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            CoreError::NotHyperkahler => write!(f, "module is not hyperkähler"),
            CoreError::InvalidModule(msg) => write!(f, "invalid Clifford module: {msg}"),
            CoreError::ZeroFrequency => write!(f, "zero frequency has no Dirac block"),
            CoreError::FrequencyBelowCutoff => {
                write!(f, "tail operation received a mode below the cutoff")
            }
            CoreError::GridTooCoarse { grid, required } => {
                write!(f, "grid too coarse: {grid} points per axis, need {required}")
            }
            CoreError::QuadratureInsufficient { band, supported } => {
                write!(f, "quadrature resolves band {supported}, need band {band}")
            }
            CoreError::DomainMismatch => write!(f, "time point does not match the time domain"),
            CoreError::ShapeMismatch => write!(f, "field shapes do not match"),
            CoreError::IndexOutOfRange { k, a, b } => {
                write!(f, "matrix coefficient index ({a},{b}) out of range for k={k}")
            }
            CoreError::ContractionViolated { ratio } => {
                write!(f, "fiber map is not a contraction (measured ratio {ratio})")
            }
            CoreError::MaxItersExceeded { iters, last_step } => {
                write!(f, "fixed point not reached after {iters} iterations (last step {last_step})")
            }
            CoreError::RefinementDiverged => write!(f, "refinement Newton run diverged"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
