//! Central moment discrepancy: normalized distance of per-coordinate central
//! moments up to order K, for features bounded in [lower, upper].

use super::{check_dims, FeatureBatch, Sign, SimilaritySignal};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

struct Moments {
    means: Vec<f64>,
    /// central[k - 2][j] = k-th central moment of coordinate j, k = 2..=order.
    central: Vec<Vec<f64>>,
}

fn moments(batch: &FeatureBatch, order: usize) -> Moments {
    let x = &batch.features;
    let (n, d) = x.shape();
    let means = x.col_means();
    let mut central = vec![vec![0.0; d]; order.saturating_sub(1)];
    for i in 0..n {
        for (j, (&v, &m)) in x.row(i).iter().zip(&means).enumerate() {
            let c = v - m;
            let mut pow = c;
            for mk in central.iter_mut() {
                pow *= c;
                mk[j] += pow;
            }
        }
    }
    for mk in central.iter_mut() {
        for v in mk.iter_mut() {
            *v /= n as f64;
        }
    }
    Moments { means, central }
}

fn l2(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cmd(
    s: &FeatureBatch,
    t: &FeatureBatch,
    order: usize,
    lower: f64,
    upper: f64,
    with_grad: bool,
) -> Result<SimilaritySignal> {
    check_dims(s, t, "cmd")?;
    if order == 0 {
        return Err(Error::Contract("cmd order K must be at least 1".into()));
    }
    if upper <= lower {
        return Err(Error::Contract(format!(
            "cmd needs upper > lower, got [{lower}, {upper}]"
        )));
    }
    let range = upper - lower;
    let ms = moments(s, order);
    let mt = moments(t, order);

    let mean_diff: Vec<f64> = ms.means.iter().zip(&mt.means).map(|(a, b)| a - b).collect();
    let mut value = l2(&mean_diff) / range;
    let mut central_diffs: Vec<Vec<f64>> = Vec::new();
    for k in 2..=order {
        let diff: Vec<f64> = ms.central[k - 2]
            .iter()
            .zip(&mt.central[k - 2])
            .map(|(a, b)| a - b)
            .collect();
        value += l2(&diff) / range.powi(k as i32);
        central_diffs.push(diff);
    }

    let (mut grad_s, mut grad_t) = (None, None);
    if with_grad {
        let gs = cmd_grad(s, &ms, &mean_diff, &central_diffs, range, 1.0);
        let gt = cmd_grad(t, &mt, &mean_diff, &central_diffs, range, -1.0);
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

/// Gradient of the CMD value with respect to one batch. `orientation` is +1
/// for the source (diff = source - target) and -1 for the target.
fn cmd_grad(
    batch: &FeatureBatch,
    m: &Moments,
    mean_diff: &[f64],
    central_diffs: &[Vec<f64>],
    range: f64,
    orientation: f64,
) -> Matrix {
    let x = &batch.features;
    let (n, d) = x.shape();
    let nf = n as f64;
    let mut grad = Matrix::zeros(n, d);

    // Mean term: d |mean_diff| / d x_rj = diff_j / (|diff| * range * n).
    let mean_norm = l2(mean_diff);
    if mean_norm > 0.0 {
        let coef = orientation / (mean_norm * range * nf);
        for r in 0..n {
            for (g, &dj) in grad.row_mut(r).iter_mut().zip(mean_diff) {
                *g += coef * dj;
            }
        }
    }

    // Moment terms: dc_k[j]/dx_rj = (k/n) ((x_rj - m_j)^(k-1) - p_(k-1)[j])
    // with p the mean of the (k-1) powers of the centered values.
    for (idx, diff) in central_diffs.iter().enumerate() {
        let k = idx + 2;
        let norm = l2(diff);
        if norm == 0.0 {
            continue;
        }
        let outer = orientation / (norm * range.powi(k as i32));
        // p_(k-1)[j]; for k = 2 this is the mean of centered values (~0).
        let mut p = vec![0.0; d];
        for r in 0..n {
            for (j, (&v, &mj)) in x.row(r).iter().zip(&m.means).enumerate() {
                p[j] += (v - mj).powi(k as i32 - 1);
            }
        }
        for v in p.iter_mut() {
            *v /= nf;
        }
        let kf = k as f64;
        for r in 0..n {
            for (j, g) in grad.row_mut(r).iter_mut().enumerate() {
                let c = x.get(r, j) - m.means[j];
                let dc = (kf / nf) * (c.powi(k as i32 - 1) - p[j]);
                *g += outer * diff[j] * dc;
            }
        }
    }
    grad
}
