// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cur;
pub mod error;
pub mod experiments;
pub mod index;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod sampling;

#[cfg(test)]
mod testutil;

pub use error::{CurError, Result};
pub use index::IndexSet;
pub use matrix::DenseMatrix;
