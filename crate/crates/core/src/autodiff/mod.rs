//! Dense tensors and a reverse-mode differentiation tape.
//!
//! Every forward primitive needed by the relation encoders, the
//! convolutional scorer and the logistic loss is recorded on a [`Tape`];
//! [`Tape::backward`] then returns the gradient of a scalar root with
//! respect to every node. [`grad_check`] compares those gradients with
//! central finite differences.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use tape::{
    conv_1x3_values, sigmoid_value, softmax_values, softplus_value, Gradients, Tape, Var,
};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{len} values do not fill shape {shape:?}")]
    LengthMismatch { shape: Vec<usize>, len: usize },
    #[error("{op} expects a 1-D input, got shape {shape:?}")]
    NotOneDimensional { op: &'static str, shape: Vec<usize> },
    #[error("{op} expects a 2-D input, got shape {shape:?}")]
    NotTwoDimensional { op: &'static str, shape: Vec<usize> },
    #[error("softmax over an empty input")]
    EmptySoftmax,
    #[error("{0} needs at least one input")]
    EmptyInput(&'static str),
    #[error("row {row} out of range for a table with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("backward root must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("finite-difference step must lie in (0, 1e-3], got {0}")]
    InvalidStep(f64),
    #[error("forward value is not finite: {0}")]
    NonFinite(f64),
}
