// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Laplace-Carleson embeddings, weighted `L^p`-admissibility of diagonal
//! semigroup systems, and the supporting half-plane geometry.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod halfplane;
pub mod kernels;
pub mod laplace;
pub mod maximal;
pub mod measures;
pub mod systems;
pub mod weights;

pub use error::{Error, Result};
