//! Deterministic dense linear algebra and seeded randomness.

mod matrix;
mod rng;

pub use matrix::{
    dot, matmul, matmul_seq, norm2, softmax_in_place, softmax_rows, Matrix,
};
#[cfg(feature = "parallel")]
pub use matrix::matmul_par;
pub use rng::{sample_categorical, Rng};
