use thiserror::Error;

use crate::order_units::HypothesisFlags;

/// Errors raised by the algebraic constructions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OzError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("elements do not commute (commutator norm {norm:.3e})")]
    Commutation { norm: f64 },
    #[error("not self-adjoint: basis vector {index} has adjoint residual {residual:.3e}")]
    NotSelfAdjoint { index: usize, residual: f64 },
    #[error("element not in subspace (residual {residual:.3e})")]
    NotMember { residual: f64 },
    #[error("hypothesis failed: {clause}")]
    Hypothesis { clause: String, flags: Box<HypothesisFlags> },
    #[error("X^2 not contained in eX: product of basis vectors {left} and {right} escapes (residual {residual:.3e})")]
    ProductEscapes { left: usize, right: usize, residual: f64 },
    #[error("order zero check failed (defect {defect:.3e})")]
    NotOrderZero { defect: f64 },
    #[error("element is not invertible in the induced algebra")]
    NotInvertible,
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, OzError>;
