//! Mini-batch SGD with Nesterov momentum.

use super::Param;

/// One Nesterov step on a single parameter, then the gradient is zeroed:
///   v <- momentum * v - lr * grad
///   value <- value + momentum * v - lr * grad
pub fn sgd_nesterov_step_param(p: &mut Param, lr: f64, momentum: f64) {
    debug_assert!(lr > 0.0 && (0.0..1.0).contains(&momentum));
    let n = p.value.data().len();
    for i in 0..n {
        let g = p.grad.data()[i];
        let v = momentum * p.velocity.data()[i] - lr * g;
        p.velocity.data_mut()[i] = v;
        p.value.data_mut()[i] += momentum * v - lr * g;
    }
    p.zero_grad();
}

/// Step a whole parameter set.
pub fn sgd_nesterov_step<'a>(
    params: impl IntoIterator<Item = &'a mut Param>,
    lr: f64,
    momentum: f64,
) {
    for p in params {
        sgd_nesterov_step_param(p, lr, momentum);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn scalar_param(v: f64) -> Param {
        Param::new(Matrix::filled(1, 1, v))
    }

    #[test]
    fn zero_grad_zero_velocity_is_fixed_point() {
        let mut p = scalar_param(1.5);
        sgd_nesterov_step_param(&mut p, 0.1, 0.9);
        assert_eq!(p.value.get(0, 0), 1.5);
    }

    #[test]
    fn zero_momentum_reduces_to_vanilla_sgd() {
        let mut p = scalar_param(1.0);
        p.grad.set(0, 0, 0.25);
        sgd_nesterov_step_param(&mut p, 0.1, 0.0);
        assert!((p.value.get(0, 0) - (1.0 - 0.1 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn matches_hand_unrolled_recurrence() {
        let (g, lr, m) = (0.7, 0.1, 0.9);
        let mut p = scalar_param(2.0);

        // Oracle: unroll the recurrence by hand for two constant-grad steps.
        let mut x = 2.0;
        let mut v = 0.0;
        for _ in 0..2 {
            v = m * v - lr * g;
            x += m * v - lr * g;
        }

        for _ in 0..2 {
            p.grad.set(0, 0, g);
            sgd_nesterov_step_param(&mut p, lr, m);
        }
        assert!((p.value.get(0, 0) - x).abs() < 1e-15);
        assert!((p.velocity.get(0, 0) - v).abs() < 1e-15);
    }

    #[test]
    fn grad_is_zeroed_after_step() {
        let mut p = scalar_param(0.0);
        p.grad.set(0, 0, 3.0);
        sgd_nesterov_step_param(&mut p, 0.01, 0.9);
        assert_eq!(p.grad.get(0, 0), 0.0);
    }

    #[test]
    fn small_step_decreases_convex_quadratic() {
        // f(x) = 0.5 * sum a_i x_i^2 with a_i > 0.
        let a = [1.0, 3.0, 0.5, 2.0];
        let mut p = Param::new(Matrix::new(1, 4, vec![1.0, -2.0, 0.7, 1.3]).unwrap());
        let f = |x: &Matrix| -> f64 {
            x.data().iter().zip(&a).map(|(&xi, &ai)| 0.5 * ai * xi * xi).sum()
        };
        let before = f(&p.value);
        for (i, &ai) in a.iter().enumerate() {
            p.grad.data_mut()[i] = ai * p.value.data()[i];
        }
        sgd_nesterov_step_param(&mut p, 1e-3, 0.9);
        assert!(f(&p.value) < before);
    }
}
