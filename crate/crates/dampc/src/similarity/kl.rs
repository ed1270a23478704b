//! KL divergence between per-coordinate Gaussians fitted to each batch.

use super::{check_dims, FeatureBatch, Sign, SimilaritySignal};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const VAR_FLOOR: f64 = 1e-6;

struct Fit {
    means: Vec<f64>,
    /// Biased per-coordinate variance plus the floor.
    vars: Vec<f64>,
}

fn fit(batch: &FeatureBatch) -> Fit {
    let x = &batch.features;
    let (n, d) = x.shape();
    let means = x.col_means();
    let mut vars = vec![0.0; d];
    for i in 0..n {
        for (v, (&xv, &m)) in vars.iter_mut().zip(x.row(i).iter().zip(&means)) {
            let c = xv - m;
            *v += c * c;
        }
    }
    for v in vars.iter_mut() {
        *v = *v / n as f64 + VAR_FLOOR;
    }
    Fit { means, vars }
}

/// Sum over coordinates of KL(N(mu_s, var_s) || N(mu_t, var_t)) in closed form,
/// differentiated through the fitted statistics of both batches.
pub fn kl_diag_gaussian(
    s: &FeatureBatch,
    t: &FeatureBatch,
    with_grad: bool,
) -> Result<SimilaritySignal> {
    check_dims(s, t, "kl_diag_gaussian")?;
    if s.len() < 2 || t.len() < 2 {
        return Err(Error::Contract(format!(
            "kl needs at least 2 rows per batch to fit variances, got {} and {}",
            s.len(),
            t.len()
        )));
    }
    let d = s.dim();
    let fs = fit(s);
    let ft = fit(t);

    let mut value = 0.0;
    for j in 0..d {
        let dm = fs.means[j] - ft.means[j];
        value +=
            0.5 * (ft.vars[j] / fs.vars[j]).ln() + (fs.vars[j] + dm * dm) / (2.0 * ft.vars[j])
                - 0.5;
    }

    let (mut grad_s, mut grad_t) = (None, None);
    if with_grad {
        // Per coordinate, with v = var and dm = mu_s - mu_t:
        //   dKL/dmu_s = dm / v_t                dKL/dmu_t = -dm / v_t
        //   dKL/dv_s  = -1/(2 v_s) + 1/(2 v_t)
        //   dKL/dv_t  = 1/(2 v_t) - (v_s + dm^2) / (2 v_t^2)
        let mut gs = Matrix::zeros(s.len(), d);
        let mut gt = Matrix::zeros(t.len(), d);
        let ns = s.len() as f64;
        let nt = t.len() as f64;
        for j in 0..d {
            let dm = fs.means[j] - ft.means[j];
            let (vs, vt) = (fs.vars[j], ft.vars[j]);
            let d_mu_s = dm / vt;
            let d_var_s = -0.5 / vs + 0.5 / vt;
            let d_mu_t = -dm / vt;
            let d_var_t = 0.5 / vt - (vs + dm * dm) / (2.0 * vt * vt);
            for i in 0..s.len() {
                let c = s.features.get(i, j) - fs.means[j];
                let g = d_mu_s / ns + d_var_s * 2.0 * c / ns;
                gs.set(i, j, g);
            }
            for i in 0..t.len() {
                let c = t.features.get(i, j) - ft.means[j];
                let g = d_mu_t / nt + d_var_t * 2.0 * c / nt;
                gt.set(i, j, g);
            }
        }
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
