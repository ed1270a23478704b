//! Cross-entropy over logits with its gradient.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Mean over rows of -log softmax(logits)[label], computed with
/// max-subtraction. Returns the loss and dloss/dlogits = (softmax - onehot)/n.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (n, k) = logits.shape();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "cross_entropy: {n} logit rows vs {} labels",
            labels.len()
        )));
    }
    let mut dlogits = Matrix::zeros(n, k);
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::Contract(format!(
                "label {label} out of range for {k} classes (row {i})"
            )));
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum_exp = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        loss += log_sum_exp - row[label];
        for (j, g) in dlogits.row_mut(i).iter_mut().enumerate() {
            let p = (row[j] - log_sum_exp).exp();
            *g = (p - if j == label { 1.0 } else { 0.0 }) / n as f64;
        }
    }
    Ok((loss / n as f64, dlogits))
}
