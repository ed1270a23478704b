//! Affine, batch-norm, ReLU and dropout primitives. Each forward returns the
//! output together with a tape that replays the exact backward pass and
//! accumulates parameter gradients in place.

use std::cell::RefCell;
use std::rc::Rc;

use super::{init_he_uniform, Mode, Param};
use crate::error::{Error, Result};
use crate::numerics::{matmul, Matrix, Rng};

/// Fully connected layer; weight is d_out x d_in, bias d_out x 1.
#[derive(Debug, Clone)]
pub struct LinearLayer {
    pub w: Param,
    pub b: Param,
}

pub type SharedLinear = Rc<RefCell<LinearLayer>>;

impl LinearLayer {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        LinearLayer {
            w: Param::new(init_he_uniform(out_dim, in_dim, in_dim, rng)),
            b: Param::new(Matrix::zeros(out_dim, 1)),
        }
    }

    /// Identity weights, zero bias; handy for composition tests.
    pub fn identity(dim: usize) -> Self {
        LinearLayer {
            w: Param::new(Matrix::identity(dim)),
            b: Param::new(Matrix::zeros(dim, 1)),
        }
    }

    pub fn shared(self) -> SharedLinear {
        Rc::new(RefCell::new(self))
    }

    pub fn in_dim(&self) -> usize {
        self.w.value.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.value.rows()
    }
}

pub struct LinearTape {
    layer: SharedLinear,
    x: Matrix,
}

impl LinearTape {
    /// dX = dY * W; accumulates dW += dY^T * X and db += column sums of dY.
    pub fn backward(&self, upstream: &Matrix) -> Result<Matrix> {
        let mut layer = self.layer.borrow_mut();
        if upstream.shape() != (self.x.rows(), layer.out_dim()) {
            return Err(Error::Shape(format!(
                "linear backward: upstream {}x{} vs output {}x{}",
                upstream.rows(),
                upstream.cols(),
                self.x.rows(),
                layer.out_dim()
            )));
        }
        let dw = matmul(&upstream.transpose(), &self.x)?;
        layer.w.grad.add_in_place(&dw)?;
        for (gb, s) in layer.b.grad.data_mut().iter_mut().zip(upstream.col_sums()) {
            *gb += s;
        }
        matmul(upstream, &layer.w.value)
    }
}

/// Y = X * W^T + 1 b^T.
pub fn linear_forward(layer: &SharedLinear, x: &Matrix) -> Result<(Matrix, LinearTape)> {
    let (w, b) = {
        let l = layer.borrow();
        if x.cols() != l.in_dim() {
            return Err(Error::Shape(format!(
                "linear forward: input {}x{} vs weight {}x{}",
                x.rows(),
                x.cols(),
                l.out_dim(),
                l.in_dim()
            )));
        }
        (l.w.value.clone(), l.b.value.clone())
    };
    let mut y = matmul(x, &w.transpose())?;
    for i in 0..y.rows() {
        for (v, bj) in y.row_mut(i).iter_mut().zip(b.data()) {
            *v += bj;
        }
    }
    Ok((y, LinearTape { layer: layer.clone(), x: x.clone() }))
}

/// Per-feature batch normalization with running statistics for Eval.
#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
}

pub type SharedBatchNorm = Rc<RefCell<BatchNormLayer>>;

impl BatchNormLayer {
    pub fn new(dim: usize) -> Self {
        BatchNormLayer {
            gamma: Param::new(Matrix::filled(1, dim, 1.0)),
            beta: Param::new(Matrix::zeros(1, dim)),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    pub fn shared(self) -> SharedBatchNorm {
        Rc::new(RefCell::new(self))
    }

    pub fn dim(&self) -> usize {
        self.gamma.value.cols()
    }
}

pub struct BatchNormTape {
    layer: SharedBatchNorm,
    mode: Mode,
    /// Centered inputs (x - mean), per entry.
    centered: Matrix,
    /// 1 / sqrt(var + eps) per feature (batch stats in Train, running in Eval).
    inv_std: Vec<f64>,
    /// Normalized activations x_hat.
    normalized: Matrix,
}

impl BatchNormTape {
    /// Full batch-norm gradient including the mean and variance paths
    /// (Train); in Eval the normalization is a fixed affine map.
    pub fn backward(&self, upstream: &Matrix) -> Result<Matrix> {
        let mut layer = self.layer.borrow_mut();
        if upstream.shape() != self.normalized.shape() {
            return Err(Error::Shape(format!(
                "batchnorm backward: upstream {}x{} vs output {}x{}",
                upstream.rows(),
                upstream.cols(),
                self.normalized.rows(),
                self.normalized.cols()
            )));
        }
        let (n, d) = upstream.shape();
        let nf = n as f64;

        // d gamma, d beta.
        for j in 0..d {
            let mut dg = 0.0;
            let mut db = 0.0;
            for i in 0..n {
                dg += upstream.get(i, j) * self.normalized.get(i, j);
                db += upstream.get(i, j);
            }
            let cur_g = layer.gamma.grad.get(0, j);
            layer.gamma.grad.set(0, j, cur_g + dg);
            let cur_b = layer.beta.grad.get(0, j);
            layer.beta.grad.set(0, j, cur_b + db);
        }

        let gamma = &layer.gamma.value;
        let mut dx = Matrix::zeros(n, d);
        match self.mode {
            Mode::Eval => {
                for i in 0..n {
                    for j in 0..d {
                        dx.set(i, j, upstream.get(i, j) * gamma.get(0, j) * self.inv_std[j]);
                    }
                }
            }
            Mode::Train => {
                for j in 0..d {
                    let g = gamma.get(0, j);
                    let inv = self.inv_std[j];
                    // dxh_i = dy_i * gamma
                    // dvar = sum_i dxh_i * centered_i * (-1/2) inv^3
                    // dmean = -inv * sum_i dxh_i + dvar * (-2/n) sum_i centered_i
                    let mut sum_dxh = 0.0;
                    let mut sum_dxh_c = 0.0;
                    let mut sum_c = 0.0;
                    for i in 0..n {
                        let dxh = upstream.get(i, j) * g;
                        sum_dxh += dxh;
                        sum_dxh_c += dxh * self.centered.get(i, j);
                        sum_c += self.centered.get(i, j);
                    }
                    let dvar = sum_dxh_c * (-0.5) * inv * inv * inv;
                    let dmean = -inv * sum_dxh + dvar * (-2.0 / nf) * sum_c;
                    for i in 0..n {
                        let dxh = upstream.get(i, j) * g;
                        let v = dxh * inv
                            + dvar * 2.0 * self.centered.get(i, j) / nf
                            + dmean / nf;
                        dx.set(i, j, v);
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Train: normalize with biased batch statistics and update the running
/// stats; Eval: normalize with the running stats, touching nothing.
pub fn batchnorm_forward(
    layer: &SharedBatchNorm,
    x: &Matrix,
    mode: Mode,
) -> Result<(Matrix, BatchNormTape)> {
    let d = layer.borrow().dim();
    if x.cols() != d {
        return Err(Error::Shape(format!(
            "batchnorm forward: input {}x{} vs {d} features",
            x.rows(),
            x.cols()
        )));
    }
    let n = x.rows();
    if mode == Mode::Train && n < 2 {
        return Err(Error::Contract(format!(
            "batchnorm in Train mode needs a batch of at least 2 rows, got {n}"
        )));
    }

    let (mean, var): (Vec<f64>, Vec<f64>) = match mode {
        Mode::Train => {
            let mean = x.col_means();
            let mut var = vec![0.0; d];
            for i in 0..n {
                for (v, (&xv, &m)) in var.iter_mut().zip(x.row(i).iter().zip(&mean)) {
                    let c = xv - m;
                    *v += c * c;
                }
            }
            for v in var.iter_mut() {
                *v /= n as f64;
            }
            let mut l = layer.borrow_mut();
            let momentum = l.momentum;
            for (r, &b) in l.running_mean.iter_mut().zip(&mean) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
            for (r, &b) in l.running_var.iter_mut().zip(&var) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
            (mean, var)
        }
        Mode::Eval => {
            let l = layer.borrow();
            (l.running_mean.clone(), l.running_var.clone())
        }
    };

    let eps = layer.borrow().eps;
    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + eps).sqrt()).collect();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, &m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut normalized = centered.clone();
    for i in 0..n {
        for (v, &inv) in normalized.row_mut(i).iter_mut().zip(&inv_std) {
            *v *= inv;
        }
    }
    let mut y = normalized.clone();
    {
        let l = layer.borrow();
        for i in 0..n {
            for (j, v) in y.row_mut(i).iter_mut().enumerate() {
                *v = *v * l.gamma.value.get(0, j) + l.beta.value.get(0, j);
            }
        }
    }
    Ok((
        y,
        BatchNormTape {
            layer: layer.clone(),
            mode,
            centered,
            inv_std,
            normalized,
        },
    ))
}

pub struct ReluTape {
    x: Matrix,
}

impl ReluTape {
    /// Masks the upstream where the input was <= 0 (gradient 0 at exactly 0).
    pub fn backward(&self, upstream: &Matrix) -> Result<Matrix> {
        if upstream.shape() != self.x.shape() {
            return Err(Error::Shape(format!(
                "relu backward: upstream {}x{} vs input {}x{}",
                upstream.rows(),
                upstream.cols(),
                self.x.rows(),
                self.x.cols()
            )));
        }
        let mut dx = upstream.clone();
        for (g, &xv) in dx.data_mut().iter_mut().zip(self.x.data()) {
            if xv <= 0.0 {
                *g = 0.0;
            }
        }
        Ok(dx)
    }
}

pub fn relu_forward(x: &Matrix) -> (Matrix, ReluTape) {
    (x.map(|v| v.max(0.0)), ReluTape { x: x.clone() })
}

/// Inverted dropout configuration; rate is the zeroing probability.
#[derive(Debug, Clone, Copy)]
pub struct DropoutLayer {
    pub rate: f64,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Contract(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(DropoutLayer { rate })
    }
}

pub struct DropoutTape {
    /// Per-entry multipliers (0 or 1/(1-rate)); None in Eval.
    mask: Option<Matrix>,
}

impl DropoutTape {
    pub fn backward(&self, upstream: &Matrix) -> Result<Matrix> {
        match &self.mask {
            None => Ok(upstream.clone()),
            Some(mask) => {
                if upstream.shape() != mask.shape() {
                    return Err(Error::Shape(format!(
                        "dropout backward: upstream {}x{} vs mask {}x{}",
                        upstream.rows(),
                        upstream.cols(),
                        mask.rows(),
                        mask.cols()
                    )));
                }
                let mut dx = upstream.clone();
                for (g, &m) in dx.data_mut().iter_mut().zip(mask.data()) {
                    *g *= m;
                }
                Ok(dx)
            }
        }
    }
}

/// Train: zero each entry with probability `rate`, scale survivors by
/// 1/(1-rate), reuse the exact mask in backward. Eval: identity.
pub fn dropout_forward(
    layer: &DropoutLayer,
    x: &Matrix,
    mode: Mode,
    rng: &mut Rng,
) -> (Matrix, DropoutTape) {
    match mode {
        Mode::Eval => (x.clone(), DropoutTape { mask: None }),
        Mode::Train => {
            let keep_scale = 1.0 / (1.0 - layer.rate);
            let mut mask = Matrix::zeros(x.rows(), x.cols());
            for m in mask.data_mut().iter_mut() {
                *m = if rng.uniform() < layer.rate { 0.0 } else { keep_scale };
            }
            let mut y = x.clone();
            for (v, &m) in y.data_mut().iter_mut().zip(mask.data()) {
                *v *= m;
            }
            (y, DropoutTape { mask: Some(mask) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_identity_passthrough() {
        let layer = LinearLayer::identity(3).shared();
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.0, 3.0, 1.0]]).unwrap();
        let (y, _) = linear_forward(&layer, &x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn linear_zero_upstream_accumulates_nothing() {
        let layer = LinearLayer::new(4, 2, &mut Rng::new(1)).shared();
        let x = Matrix::gaussian(3, 4, &mut Rng::new(2));
        let (_, tape) = linear_forward(&layer, &x).unwrap();
        let dx = tape.backward(&Matrix::zeros(3, 2)).unwrap();
        assert!(dx.data().iter().all(|&g| g == 0.0));
        let l = layer.borrow();
        assert!(l.w.grad.data().iter().all(|&g| g == 0.0));
        assert!(l.b.grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn batchnorm_normalizes_columns() {
        let layer = BatchNormLayer::new(5).shared();
        let x = Matrix::gaussian(8, 5, &mut Rng::new(3)).map(|v| 3.0 * v + 7.0);
        let (y, _) = batchnorm_forward(&layer, &x, Mode::Train).unwrap();
        for j in 0..5 {
            let col: Vec<f64> = (0..8).map(|i| y.get(i, j)).collect();
            let mean: f64 = col.iter().sum::<f64>() / 8.0;
            let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "var {var}");
        }
    }

    #[test]
    fn batchnorm_constant_column_maps_to_zero() {
        let layer = BatchNormLayer::new(2).shared();
        let x = Matrix::from_rows(&[vec![4.0, 1.0], vec![4.0, 2.0], vec![4.0, 3.0]]).unwrap();
        let (y, _) = batchnorm_forward(&layer, &x, Mode::Train).unwrap();
        for i in 0..3 {
            assert_eq!(y.get(i, 0), 0.0);
        }
    }

    #[test]
    fn batchnorm_train_needs_two_rows() {
        let layer = BatchNormLayer::new(2).shared();
        let x = Matrix::filled(1, 2, 1.0);
        assert!(batchnorm_forward(&layer, &x, Mode::Train).is_err());
        assert!(batchnorm_forward(&layer, &x, Mode::Eval).is_ok());
    }

    #[test]
    fn batchnorm_eval_is_pure() {
        let layer = BatchNormLayer::new(3).shared();
        // Push some batches through to move the running stats first.
        for seed in 0..4 {
            let x = Matrix::gaussian(6, 3, &mut Rng::new(seed));
            batchnorm_forward(&layer, &x, Mode::Train).unwrap();
        }
        let before = layer.borrow().clone();
        let x = Matrix::gaussian(5, 3, &mut Rng::new(50));
        let (y1, _) = batchnorm_forward(&layer, &x, Mode::Eval).unwrap();
        let (y2, _) = batchnorm_forward(&layer, &x, Mode::Eval).unwrap();
        assert_eq!(y1, y2);
        let after = layer.borrow();
        assert_eq!(before.running_mean, after.running_mean);
        assert_eq!(before.running_var, after.running_var);
    }

    #[test]
    fn relu_all_negative_and_all_positive() {
        let neg = Matrix::filled(2, 3, -1.5);
        let (y, tape) = relu_forward(&neg);
        assert!(y.data().iter().all(|&v| v == 0.0));
        let dx = tape.backward(&Matrix::filled(2, 3, 1.0)).unwrap();
        assert!(dx.data().iter().all(|&v| v == 0.0));

        let pos = Matrix::filled(2, 3, 2.5);
        let (y, tape) = relu_forward(&pos);
        assert_eq!(y, pos);
        let dx = tape.backward(&Matrix::filled(2, 3, 1.0)).unwrap();
        assert!(dx.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let layer = DropoutLayer::new(0.0).unwrap();
        let x = Matrix::gaussian(4, 4, &mut Rng::new(5));
        let mut rng = Rng::new(0);
        let (y, _) = dropout_forward(&layer, &x, Mode::Train, &mut rng);
        assert_eq!(y, x);
        let (y, _) = dropout_forward(&layer, &x, Mode::Eval, &mut rng);
        assert_eq!(y, x);
    }

    #[test]
    fn dropout_eval_is_exact_identity() {
        let layer = DropoutLayer::new(0.5).unwrap();
        let x = Matrix::gaussian(4, 4, &mut Rng::new(6));
        let mut rng = Rng::new(0);
        let state_before = rng.state();
        let (y, _) = dropout_forward(&layer, &x, Mode::Eval, &mut rng);
        assert_eq!(y, x);
        assert_eq!(rng.state(), state_before);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let layer = DropoutLayer::new(0.5).unwrap();
        let x = Matrix::filled(100, 1000, 1.0);
        let mut rng = Rng::new(0);
        let (y, _) = dropout_forward(&layer, &x, Mode::Train, &mut rng);
        let mean = y.sum() / (100.0 * 1000.0);
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn dropout_rejects_rate_one() {
        assert!(DropoutLayer::new(1.0).is_err());
        assert!(DropoutLayer::new(-0.1).is_err());
    }
}
