//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records operations as they execute; [`Tape::backward`] walks
//! the record once in reverse and returns [`Gradients`]. Every training step
//! builds a fresh tape: a tape is sealed after its backward pass, and
//! variables from one tape are rejected by another.

mod adam;
mod checkpoint;
mod error;
pub mod gradcheck;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use error::{Error, Result};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
