//! Correlation alignment: squared Frobenius distance between the two domain
//! covariance matrices, scaled by 1/(4 d^2).

use super::{check_dims, FeatureBatch, Sign, SimilaritySignal};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Centered rows and the (n-1)-normalized sample covariance.
fn covariance(batch: &FeatureBatch) -> (Matrix, Matrix) {
    let x = &batch.features;
    let (n, d) = x.shape();
    let means = x.col_means();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, &m) in centered.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = centered.row(i);
        for a in 0..d {
            let ra = row[a];
            for b in 0..d {
                let cur = cov.get(a, b);
                cov.set(a, b, cur + ra * row[b]);
            }
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    (centered, cov.scale(scale))
}

pub fn coral(s: &FeatureBatch, t: &FeatureBatch, with_grad: bool) -> Result<SimilaritySignal> {
    check_dims(s, t, "coral")?;
    if s.len() < 2 || t.len() < 2 {
        return Err(Error::Contract(format!(
            "coral needs at least 2 rows per batch, got {} and {}",
            s.len(),
            t.len()
        )));
    }
    let d = s.dim();
    let (cs_centered, cov_s) = covariance(s);
    let (ct_centered, cov_t) = covariance(t);
    let diff = cov_s.sub(&cov_t)?;
    let norm_sq: f64 = diff.data().iter().map(|x| x * x).sum();
    let value = norm_sq / (4.0 * (d * d) as f64);

    let (mut grad_s, mut grad_t) = (None, None);
    if with_grad {
        // dV/dCov_s = diff / (2 d^2); pulled back through the centered rows,
        // grad_s = centered_s * diff / (d^2 (ns - 1)).
        let gs_scale = 1.0 / ((d * d) as f64 * (s.len() as f64 - 1.0));
        let gt_scale = 1.0 / ((d * d) as f64 * (t.len() as f64 - 1.0));
        let gs = crate::numerics::matmul(&cs_centered, &diff)?.scale(gs_scale);
        let gt = crate::numerics::matmul(&ct_centered, &diff)?.scale(-gt_scale);
        grad_s = Some(gs);
        grad_t = Some(gt);
    }

    Ok(SimilaritySignal {
        value,
        grad_source: grad_s,
        grad_target: grad_t,
        match_source: None,
        match_target: None,
        sign: Sign::MinimizeDistance,
    })
}
