//! Domain-similarity and domain-discrepancy measures behind one plug-in
//! interface, usable both as training losses and as diagnostics.

mod cmd;
mod coral;
mod kl;
mod mmd;
mod pc;
mod proxy;

pub use cmd::cmd;
pub use coral::coral;
pub use kl::kl_diag_gaussian;
pub use mmd::{median_heuristic_gammas, mmd};
pub use pc::{population_correlation, population_correlation_grad};
pub use proxy::proxy_a_distance;

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, Matrix, Rng};
use serde::{Deserialize, Serialize};

/// A batch of feature rows from one domain.
#[derive(Debug, Clone)]
pub struct FeatureBatch {
    pub features: Matrix,
}

impl FeatureBatch {
    pub fn new(features: Matrix) -> Self {
        FeatureBatch { features }
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }
}

/// The measure family. All kinds except `ProxyA` are gradient-capable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimilarityKind {
    Pc,
    MmdLinear,
    /// Biased RBF-kernel V-statistic averaged over `gammas`. An empty list is
    /// rejected by `mmd`; the training loss substitutes the median heuristic.
    MmdRbf { gammas: Vec<f64> },
    Coral,
    Cmd { k: usize, lower: f64, upper: f64 },
    KlGauss,
    ProxyA,
}

impl SimilarityKind {
    /// Parse a CLI-facing kind name, filling in the documented defaults.
    pub fn parse_name(name: &str) -> Result<Self> {
        match name {
            "pc" => Ok(SimilarityKind::Pc),
            "mmd_linear" => Ok(SimilarityKind::MmdLinear),
            "mmd_rbf" => Ok(SimilarityKind::MmdRbf { gammas: Vec::new() }),
            "coral" => Ok(SimilarityKind::Coral),
            "cmd" => Ok(SimilarityKind::Cmd { k: 5, lower: -1.0, upper: 1.0 }),
            "kl" => Ok(SimilarityKind::KlGauss),
            "proxy_a" => Ok(SimilarityKind::ProxyA),
            other => Err(Error::Contract(format!("unknown similarity kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimilarityKind::Pc => "pc",
            SimilarityKind::MmdLinear => "mmd_linear",
            SimilarityKind::MmdRbf { .. } => "mmd_rbf",
            SimilarityKind::Coral => "coral",
            SimilarityKind::Cmd { .. } => "cmd",
            SimilarityKind::KlGauss => "kl",
            SimilarityKind::ProxyA => "proxy_a",
        }
    }

    pub fn gradient_capable(&self) -> bool {
        !matches!(self, SimilarityKind::ProxyA)
    }

    pub fn sign(&self) -> Sign {
        match self {
            SimilarityKind::Pc => Sign::MaximizeSimilarity,
            _ => Sign::MinimizeDistance,
        }
    }
}

/// Whether a measure enters the objective as a similarity (maximized) or a
/// distance (minimized).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    MaximizeSimilarity,
    MinimizeDistance,
}

/// Value of one measure with optional gradients and match indices.
#[derive(Debug, Clone)]
pub struct SimilaritySignal {
    pub value: f64,
    pub grad_source: Option<Matrix>,
    pub grad_target: Option<Matrix>,
    /// For each source row, the index of its best-matching target row.
    pub match_source: Option<Vec<usize>>,
    /// For each target row, the index of its best-matching source row.
    pub match_target: Option<Vec<usize>>,
    pub sign: Sign,
}

impl SimilaritySignal {
    pub(crate) fn value_only(value: f64, sign: Sign) -> Self {
        SimilaritySignal {
            value,
            grad_source: None,
            grad_target: None,
            match_source: None,
            match_target: None,
            sign,
        }
    }
}

/// Cosine of the angle between two vectors, clamped to [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "cosine: vectors of length {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let na = norm2(a);
    let nb = norm2(b);
    if na == 0.0 {
        return Err(Error::DegenerateVector("first argument has zero norm".into()));
    }
    if nb == 0.0 {
        return Err(Error::DegenerateVector("second argument has zero norm".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

fn check_dims(s: &FeatureBatch, t: &FeatureBatch, op: &str) -> Result<()> {
    if s.dim() != t.dim() {
        return Err(Error::Shape(format!(
            "{op}: source {}x{} vs target {}x{}",
            s.len(),
            s.dim(),
            t.len(),
            t.dim()
        )));
    }
    Ok(())
}

/// Evaluate any measure between two batches through the common interface.
///
/// `with_grad` requests analytic gradients; `ProxyA` rejects it and needs an
/// `rng` for its train/test split.
pub fn measure(
    kind: &SimilarityKind,
    s: &FeatureBatch,
    t: &FeatureBatch,
    with_grad: bool,
    rng: Option<&mut Rng>,
) -> Result<SimilaritySignal> {
    match kind {
        SimilarityKind::Pc => {
            if with_grad {
                population_correlation_grad(s, t)
            } else {
                population_correlation(s, t)
            }
        }
        SimilarityKind::MmdLinear | SimilarityKind::MmdRbf { .. } => mmd(s, t, kind, with_grad),
        SimilarityKind::Coral => coral(s, t, with_grad),
        SimilarityKind::Cmd { k, lower, upper } => cmd(s, t, *k, *lower, *upper, with_grad),
        SimilarityKind::KlGauss => kl_diag_gaussian(s, t, with_grad),
        SimilarityKind::ProxyA => {
            if with_grad {
                return Err(Error::UnsupportedLoss(
                    "proxy A-distance is metric-only and has no gradient".into(),
                ));
            }
            let rng = rng.ok_or_else(|| {
                Error::Contract("proxy A-distance needs an rng for its split".into())
            })?;
            let value = proxy_a_distance(s, t, rng)?;
            Ok(SimilaritySignal::value_only(value, Sign::MinimizeDistance))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_self_is_one() {
        assert_eq!(cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 1.0);
    }

    #[test]
    fn cosine_orthogonal_is_zero() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_antipodal_is_minus_one() {
        let v = [0.2, -1.5, 3.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(cosine(&v, &neg).unwrap(), -1.0);
    }

    #[test]
    fn cosine_zero_norm_names_argument() {
        let err = cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("first"), "{err}");
        let err = cosine(&[1.0, 0.0], &[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("second"), "{err}");
    }

    #[test]
    fn kind_names_round_trip() {
        for name in ["pc", "mmd_linear", "mmd_rbf", "coral", "cmd", "kl", "proxy_a"] {
            let kind = SimilarityKind::parse_name(name).unwrap();
            assert_eq!(kind.name(), name);
        }
        assert!(SimilarityKind::parse_name("tsne").is_err());
    }

    #[test]
    fn proxy_a_rejects_gradient_request() {
        let s = FeatureBatch::new(Matrix::filled(4, 2, 1.0));
        let t = FeatureBatch::new(Matrix::filled(4, 2, 2.0));
        let err = measure(&SimilarityKind::ProxyA, &s, &t, true, None).unwrap_err();
        assert!(matches!(err, Error::UnsupportedLoss(_)));
    }
}
