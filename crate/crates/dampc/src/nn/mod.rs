//! Layer primitives with hand-derived forward/backward passes, cross-entropy,
//! parameter initialization, and Nesterov SGD.

mod layers;
mod loss;
mod optim;

pub use layers::{
    batchnorm_forward, dropout_forward, linear_forward, relu_forward, BatchNormLayer,
    BatchNormTape, DropoutLayer, DropoutTape, LinearLayer, LinearTape, ReluTape, SharedBatchNorm,
    SharedLinear,
};
pub use loss::cross_entropy;
pub use optim::{sgd_nesterov_step, sgd_nesterov_step_param};

use crate::numerics::{Matrix, Rng};

/// Train enables dropout masking and batch statistics; Eval is pure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A trainable tensor with its gradient accumulator and optimizer state.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Matrix,
    pub grad: Matrix,
    pub velocity: Matrix,
}

impl Param {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        Param {
            value,
            grad: Matrix::zeros(r, c),
            velocity: Matrix::zeros(r, c),
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// He-uniform initialization: entries i.i.d. uniform in
/// [-sqrt(6/fan_in), +sqrt(6/fan_in)].
pub fn init_he_uniform(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Matrix {
    assert!(fan_in >= 1);
    let bound = (6.0 / fan_in as f64).sqrt();
    Matrix::uniform(rows, cols, -bound, bound, rng)
}
