//! Proxy A-distance: 2(1 - 2 eps) for the test error eps of a logistic
//! domain classifier. Metric only; it carries no gradient.

use super::{check_dims, FeatureBatch};
use crate::error::{Error, Result};
use crate::numerics::{dot, Matrix, Rng};

const GD_STEPS: usize = 500;
const GD_STEP_SIZE: f64 = 0.1;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Split one domain 50/50 into train/test index sets with the given rng.
fn split_half(n: usize, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    let test = idx.split_off(n / 2);
    (idx, test)
}

/// Train a domain classifier (source = 0, target = 1) by full-batch gradient
/// descent and score it on the held-out half of each domain.
pub fn proxy_a_distance(s: &FeatureBatch, t: &FeatureBatch, rng: &mut Rng) -> Result<f64> {
    check_dims(s, t, "proxy_a_distance")?;
    if s.len() < 4 || t.len() < 4 {
        return Err(Error::Contract(format!(
            "proxy A-distance needs at least 4 rows per batch to split, got {} and {}",
            s.len(),
            t.len()
        )));
    }
    let d = s.dim();
    let (s_train, s_test) = split_half(s.len(), rng);
    let (t_train, t_test) = split_half(t.len(), rng);

    let collect = |batch: &Matrix, idx: &[usize], label: f64| -> Vec<(Vec<f64>, f64)> {
        idx.iter()
            .map(|&i| (batch.row(i).to_vec(), label))
            .collect()
    };
    let mut train = collect(&s.features, &s_train, 0.0);
    train.extend(collect(&t.features, &t_train, 1.0));
    let mut test = collect(&s.features, &s_test, 0.0);
    test.extend(collect(&t.features, &t_test, 1.0));

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let n = train.len() as f64;
    for _ in 0..GD_STEPS {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (x, y) in &train {
            let err = sigmoid(dot(&w, x) + b) - y;
            for (g, &xv) in gw.iter_mut().zip(x) {
                *g += err * xv;
            }
            gb += err;
        }
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= GD_STEP_SIZE * g / n;
        }
        b -= GD_STEP_SIZE * gb / n;
    }

    let errors = test
        .iter()
        .filter(|(x, y)| {
            let pred = if sigmoid(dot(&w, x) + b) >= 0.5 { 1.0 } else { 0.0 };
            pred != *y
        })
        .count();
    let eps = errors as f64 / test.len() as f64;
    Ok((2.0 * (1.0 - 2.0 * eps)).clamp(0.0, 2.0))
}
