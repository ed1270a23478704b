//! Population correlation: the mean over each domain of the best cosine
//! correlation to the other domain, summed over both directions.

use super::{check_dims, FeatureBatch, Sign, SimilaritySignal};
use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, Matrix};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

fn row_norms(batch: &FeatureBatch, name: &str) -> Result<Vec<f64>> {
    let m = &batch.features;
    let mut norms = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let n = norm2(m.row(i));
        if n == 0.0 {
            return Err(Error::DegenerateVector(format!("{name} row {i} has zero norm")));
        }
        norms.push(n);
    }
    Ok(norms)
}

fn cosine_row(
    s: &Matrix,
    t: &Matrix,
    s_norms: &[f64],
    t_norms: &[f64],
    i: usize,
) -> Vec<f64> {
    let si = s.row(i);
    (0..t.rows())
        .map(|j| (dot(si, t.row(j)) / (s_norms[i] * t_norms[j])).clamp(-1.0, 1.0))
        .collect()
}

/// All pairwise cosines as an ns x nt matrix. Parallel over source rows when
/// the `parallel` feature is on; the result is bitwise schedule-independent.
fn cosine_matrix(s: &Matrix, t: &Matrix, s_norms: &[f64], t_norms: &[f64]) -> Matrix {
    let ns = s.rows();
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = (0..ns)
        .into_par_iter()
        .with_min_len(8)
        .map(|i| cosine_row(s, t, s_norms, t_norms, i))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..ns)
        .map(|i| cosine_row(s, t, s_norms, t_norms, i))
        .collect();
    Matrix::from_rows(&rows).expect("rows have equal length")
}

/// Lowest-index argmax of a slice.
fn argmax(xs: impl Iterator<Item = f64>) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for (i, x) in xs.enumerate() {
        if x > best {
            best = x;
            best_i = i;
        }
    }
    best_i
}

struct PcCore {
    value: f64,
    match_source: Vec<usize>,
    match_target: Vec<usize>,
}

fn pc_core(s: &FeatureBatch, t: &FeatureBatch) -> Result<(PcCore, Vec<f64>, Vec<f64>)> {
    check_dims(s, t, "population_correlation")?;
    if s.is_empty() || t.is_empty() {
        return Err(Error::Contract("population correlation needs nonempty batches".into()));
    }
    let s_norms = row_norms(s, "source")?;
    let t_norms = row_norms(t, "target")?;
    let c = cosine_matrix(&s.features, &t.features, &s_norms, &t_norms);
    let (ns, nt) = (s.len(), t.len());

    let match_source: Vec<usize> = (0..ns).map(|i| argmax(c.row(i).iter().cloned())).collect();
    let match_target: Vec<usize> = (0..nt)
        .map(|j| argmax((0..ns).map(|i| c.get(i, j))))
        .collect();

    let source_term: f64 = (0..ns).map(|i| c.get(i, match_source[i])).sum::<f64>() / ns as f64;
    let target_term: f64 = (0..nt).map(|j| c.get(match_target[j], j)).sum::<f64>() / nt as f64;

    let core = PcCore {
        value: source_term + target_term,
        match_source,
        match_target,
    };
    Ok((core, s_norms, t_norms))
}

/// Population correlation value with argmax match indices, no gradients.
pub fn population_correlation(s: &FeatureBatch, t: &FeatureBatch) -> Result<SimilaritySignal> {
    let (core, _, _) = pc_core(s, t)?;
    Ok(SimilaritySignal {
        value: core.value,
        grad_source: None,
        grad_target: None,
        match_source: Some(core.match_source),
        match_target: Some(core.match_target),
        sign: Sign::MaximizeSimilarity,
    })
}

/// d cosine(a, b) / d a = b/(|a||b|) - cos(a,b) * a/|a|^2, accumulated into `out`.
fn add_cosine_grad(out: &mut [f64], a: &[f64], b: &[f64], na: f64, nb: f64, scale: f64) {
    let cos = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    let inv_ab = 1.0 / (na * nb);
    let self_coef = cos / (na * na);
    for ((o, &av), &bv) in out.iter_mut().zip(a).zip(b) {
        *o += scale * (bv * inv_ab - self_coef * av);
    }
}

/// Population correlation with the subgradient that treats both argmax index
/// sets as locally constant, exact wherever no tie occurs.
pub fn population_correlation_grad(
    s: &FeatureBatch,
    t: &FeatureBatch,
) -> Result<SimilaritySignal> {
    let (core, s_norms, t_norms) = pc_core(s, t)?;
    let (ns, nt) = (s.len(), t.len());
    let sm = &s.features;
    let tm = &t.features;
    let mut grad_s = Matrix::zeros(ns, s.dim());
    let mut grad_t = Matrix::zeros(nt, t.dim());

    let ws = 1.0 / ns as f64;
    for (i, &j) in core.match_source.iter().enumerate() {
        let (a, b) = (sm.row(i), tm.row(j));
        add_cosine_grad(grad_s.row_mut(i), a, b, s_norms[i], t_norms[j], ws);
        add_cosine_grad(grad_t.row_mut(j), b, a, t_norms[j], s_norms[i], ws);
    }
    let wt = 1.0 / nt as f64;
    for (j, &i) in core.match_target.iter().enumerate() {
        let (a, b) = (sm.row(i), tm.row(j));
        add_cosine_grad(grad_s.row_mut(i), a, b, s_norms[i], t_norms[j], wt);
        add_cosine_grad(grad_t.row_mut(j), b, a, t_norms[j], s_norms[i], wt);
    }

    Ok(SimilaritySignal {
        value: core.value,
        grad_source: Some(grad_s),
        grad_target: Some(grad_t),
        match_source: Some(core.match_source),
        match_target: Some(core.match_target),
        sign: Sign::MaximizeSimilarity,
    })
}
