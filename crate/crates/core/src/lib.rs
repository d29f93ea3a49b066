//! ConvMR: convolutional knowledge graph embedding over single and
//! multi-relation triples.
//!
//! Pipeline: [`data`] loads triple files and builds the filter index,
//! [`multirel`] groups relations between entity pairs, [`model`] encodes
//! relation sets and scores triples on a [`autodiff::Tape`], [`trainer`]
//! fits the parameters with AdaGrad, and [`eval`] runs the filtered
//! ranking protocol. [`cli`] wires these into the `convmr` binary.

pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod multirel;
pub mod trainer;
pub mod transe;

pub use error::{Error, Result};
