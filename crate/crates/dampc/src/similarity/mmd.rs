//! Maximum mean discrepancy: linear (mean-embedding distance) and the biased
//! RBF-kernel V-statistic averaged over a gamma list.

use super::{check_dims, FeatureBatch, Sign, SimilarityKind, SimilaritySignal};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The {0.5, 1, 2}/m gamma ladder with m the median pairwise squared distance
/// of the pooled batch. Falls back to gamma 1 when all points coincide.
pub fn median_heuristic_gammas(s: &FeatureBatch, t: &FeatureBatch) -> Vec<f64> {
    let mut rows: Vec<&[f64]> = Vec::with_capacity(s.len() + t.len());
    for i in 0..s.len() {
        rows.push(s.features.row(i));
    }
    for j in 0..t.len() {
        rows.push(t.features.row(j));
    }
    let mut dists = Vec::new();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            dists.push(sq_dist(rows[i], rows[j]));
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = if dists.is_empty() { 0.0 } else { dists[dists.len() / 2] };
    if m <= 0.0 {
        return vec![1.0];
    }
    vec![0.5 / m, 1.0 / m, 2.0 / m]
}

fn mmd_linear(s: &FeatureBatch, t: &FeatureBatch, with_grad: bool) -> SimilaritySignal {
    let ms = s.features.col_means();
    let mt = t.features.col_means();
    let diff: Vec<f64> = ms.iter().zip(&mt).map(|(a, b)| a - b).collect();
    let value: f64 = diff.iter().map(|d| d * d).sum();

    let (mut grad_s, mut grad_t) = (None, None);
    if with_grad {
        let mut gs = Matrix::zeros(s.len(), s.dim());
        let mut gt = Matrix::zeros(t.len(), t.dim());
        let ws = 2.0 / s.len() as f64;
        let wt = 2.0 / t.len() as f64;
        for i in 0..s.len() {
            for (g, &d) in gs.row_mut(i).iter_mut().zip(&diff) {
                *g = ws * d;
            }
        }
        for j in 0..t.len() {
            for (g, &d) in gt.row_mut(j).iter_mut().zip(&diff) {
                *g = -wt * d;
            }
        }
        grad_s = Some(gs);
        grad_t = Some(gt);
    }
    SimilaritySignal {
        value,
        grad_source: grad_s,
        grad_target: grad_t,
        match_source: None,
        match_target: None,
        sign: Sign::MinimizeDistance,
    }
}

fn mmd_rbf(
    s: &FeatureBatch,
    t: &FeatureBatch,
    gammas: &[f64],
    with_grad: bool,
) -> Result<SimilaritySignal> {
    if gammas.is_empty() {
        return Err(Error::Contract("RBF MMD needs a nonempty gamma list".into()));
    }
    let (ns, nt, d) = (s.len(), t.len(), s.dim());
    let sm = &s.features;
    let tm = &t.features;
    let mut value = 0.0;
    let mut grad_s = with_grad.then(|| Matrix::zeros(ns, d));
    let mut grad_t = with_grad.then(|| Matrix::zeros(nt, d));
    let avg = 1.0 / gammas.len() as f64;

    for &gamma in gammas {
        let kernel = |a: &[f64], b: &[f64]| (-gamma * sq_dist(a, b)).exp();

        let mut ss = 0.0;
        for i in 0..ns {
            for i2 in 0..ns {
                ss += kernel(sm.row(i), sm.row(i2));
            }
        }
        let mut tt = 0.0;
        for j in 0..nt {
            for j2 in 0..nt {
                tt += kernel(tm.row(j), tm.row(j2));
            }
        }
        let mut st = 0.0;
        for i in 0..ns {
            for j in 0..nt {
                st += kernel(sm.row(i), tm.row(j));
            }
        }
        let (nsf, ntf) = (ns as f64, nt as f64);
        value += avg * (ss / (nsf * nsf) + tt / (ntf * ntf) - 2.0 * st / (nsf * ntf));

        if let (Some(gs), Some(gt)) = (grad_s.as_mut(), grad_t.as_mut()) {
            // d k(x, y)/dx = -2 gamma (x - y) k(x, y); each within-domain pair
            // contributes twice (once per argument slot).
            let w_ss = avg * 2.0 / (nsf * nsf);
            let w_tt = avg * 2.0 / (ntf * ntf);
            let w_st = avg * 2.0 / (nsf * ntf);
            for i in 0..ns {
                let xi = sm.row(i);
                for i2 in 0..ns {
                    let k = kernel(xi, sm.row(i2));
                    let coef = -2.0 * gamma * k * w_ss;
                    for ((g, &a), &b) in gs.row_mut(i).iter_mut().zip(xi).zip(sm.row(i2)) {
                        *g += coef * (a - b);
                    }
                }
                for j in 0..nt {
                    let k = kernel(xi, tm.row(j));
                    let coef = 2.0 * gamma * k * w_st;
                    for ((g, &a), &b) in gs.row_mut(i).iter_mut().zip(xi).zip(tm.row(j)) {
                        *g += coef * (a - b);
                    }
                }
            }
            for j in 0..nt {
                let yj = tm.row(j);
                for j2 in 0..nt {
                    let k = kernel(yj, tm.row(j2));
                    let coef = -2.0 * gamma * k * w_tt;
                    for ((g, &a), &b) in gt.row_mut(j).iter_mut().zip(yj).zip(tm.row(j2)) {
                        *g += coef * (a - b);
                    }
                }
                for i in 0..ns {
                    let k = kernel(sm.row(i), yj);
                    let coef = -2.0 * gamma * k * w_st;
                    for ((g, &b), &a) in gt.row_mut(j).iter_mut().zip(yj).zip(sm.row(i)) {
                        *g += coef * (a - b);
                    }
                }
            }
        }
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

/// Maximum mean discrepancy of the requested kind.
pub fn mmd(
    s: &FeatureBatch,
    t: &FeatureBatch,
    kind: &SimilarityKind,
    with_grad: bool,
) -> Result<SimilaritySignal> {
    check_dims(s, t, "mmd")?;
    match kind {
        SimilarityKind::MmdLinear => Ok(mmd_linear(s, t, with_grad)),
        SimilarityKind::MmdRbf { gammas } => mmd_rbf(s, t, gammas, with_grad),
        other => Err(Error::Contract(format!(
            "mmd called with non-MMD kind '{}'",
            other.name()
        ))),
    }
}
