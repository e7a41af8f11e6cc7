//! Real interpolation of Hardy spaces and triangular Schatten classes:
//! K-functionals, analytic factorizations, constructive decompositions and
//! convex oracles that certify them.

pub mod circle;
pub mod convex;
pub mod embeddings;
pub mod error;
pub mod factorize;
pub mod hardy;
pub mod harness;
pub mod kfunc;
pub mod schatten;
mod split;

pub use circle::{CircleFunction, Rearrangement};
pub use error::{Error, Result};
pub use kfunc::{CoupleDecomposition, CoupleId, Element};
pub use schatten::MatrixOperator;
