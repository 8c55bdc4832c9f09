//! Classical and quantum divergences, ending in the √QJSD distance used by
//! every coherence measure.
//!
//! QJSD is always evaluated in its entropy form
//! `J(ρ, σ) = S((ρ + σ)/2) - (S(ρ) + S(σ))/2`, which is defined for any pair
//! of states regardless of their supports.

use crate::error::{Error, Result};
use crate::qstate::{self, DensityMatrix};
use crate::CMatrix;

/// Eigenvalues at or below this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// States closer than this entry-wise are treated as identical.
pub const EQUALITY_TOL: f64 = 1e-12;

/// A finite probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidDistribution(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        qstate::shannon_bits(&self.probs)
    }
}

fn same_len(p: &ProbDist, q: &ProbDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    Ok(())
}

/// `(Σ |p_i - q_i|^n)^(1/n)`.
pub fn lp_distance(p: &ProbDist, q: &ProbDist, n: u32) -> Result<f64> {
    same_len(p, q)?;
    if n == 0 {
        return Err(Error::BadParameter("norm order must be at least 1".into()));
    }
    let sum: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs().powi(n as i32))
        .sum();
    Ok(sum.powf(1.0 / n as f64))
}

/// Classical relative entropy `Σ p_i log2(p_i / q_i)`.
pub fn relative_entropy(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    same_len(p, q)?;
    let mut total = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportViolation);
            }
            total += a * (a / b).log2();
        }
    }
    Ok(total.max(0.0))
}

/// Symmetrized relative entropy `(S(P‖Q) + S(Q‖P)) / 2`; needs equal supports.
pub fn j_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    Ok(0.5 * (relative_entropy(p, q)? + relative_entropy(q, p)?))
}

/// `Σ p_i log2(2 p_i / (p_i + q_i))`, defined for any supports.
pub fn s_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    same_len(p, q)?;
    let total: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .filter(|(a, _)| **a > 0.0)
        .map(|(&a, &b)| a * (2.0 * a / (a + b)).log2())
        .sum();
    Ok(total.max(0.0))
}

/// Classical Jensen-Shannon divergence in bits, via the entropy form.
pub fn classical_jsd(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    same_len(p, q)?;
    let mid: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| 0.5 * (a + b)).collect();
    let j = qstate::shannon_bits(&mid) - 0.5 * (p.entropy() + q.entropy());
    Ok(j.clamp(0.0, 1.0))
}

fn same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of dimension {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(())
}

/// Quantum relative entropy `Tr ρ (log2 ρ - log2 σ)`, evaluated from both
/// spectral decompositions.
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let r = rho.spectrum()?;
    let s = sigma.spectrum()?;
    let d = rho.dim();
    let neg_entropy: f64 = r.values.iter().filter(|&&l| l > 0.0).map(|&l| l * l.log2()).sum();
    // Tr ρ log σ = Σ_j log μ_j <s_j|ρ|s_j>
    let mut cross = 0.0;
    for j in 0..d {
        let sj = s.vectors.column(j);
        let weight = (sj.adjoint() * rho.matrix() * sj)[(0, 0)].re;
        let mu = s.values[j];
        if mu <= SUPPORT_TOL {
            if weight > SUPPORT_TOL {
                return Err(Error::SupportViolation);
            }
            continue;
        }
        cross += weight * mu.log2();
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// Quantum Jensen-Shannon divergence in bits, in `[0, 1]`.
pub fn qjsd(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    qjsd_raw(rho.matrix(), rho.entropy()?, sigma.matrix(), sigma.entropy()?)
}

/// √QJSD distance, in `[0, 1]`.
pub fn metric(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(qjsd(rho, sigma)?.sqrt())
}

/// QJSD between raw matrices with precomputed entropies. Both matrices must
/// be Hermitian with unit trace.
pub(crate) fn qjsd_raw(a: &CMatrix, entropy_a: f64, b: &CMatrix, entropy_b: f64) -> Result<f64> {
    if qstate::max_abs_diff(a, b) <= EQUALITY_TOL {
        return Ok(0.0);
    }
    let mid = (a + b).scale(0.5);
    let j = qstate::matrix_entropy(&mid)? - 0.5 * (entropy_a + entropy_b);
    if j < NEAR_QJSD {
        if let Some(q) = qjsd_near(&mid, &(b - a))? {
            return Ok(q);
        }
    }
    Ok(j.clamp(0.0, 1.0))
}

/// Below this the entropy form loses most of its significant digits.
const NEAR_QJSD: f64 = 1e-6;

/// Second-order expansion of QJSD around the midpoint `m` for a difference
/// `delta = b - a`: `J = (1/8) Σ |Δ_ij|² (ln λ_i - ln λ_j) / ((λ_i - λ_j) ln 2)`
/// in the eigenbasis of `m`. Odd orders cancel, so the relative error is
/// `O((|Δ| / λ_min)²)`. Returns `None` when that ratio is not small.
fn qjsd_near(m: &CMatrix, delta: &CMatrix) -> Result<Option<f64>> {
    let (lambda, v) = qstate::hermitian_eigen(m)?;
    let lmin = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let size = delta.norm();
    if !(lmin > 0.0) || size > 1e-3 * lmin {
        return Ok(None);
    }
    let rotated = v.adjoint() * delta * &v;
    let d = lambda.len();
    let mut sum = 0.0;
    for i in 0..d {
        for k in 0..d {
            let (x, y) = (lambda[i], lambda[k]);
            // Divided difference of ln, via ln_1p to keep digits when x ≈ y.
            let t = (x - y) / y;
            let dd = if t.abs() < 1e-12 {
                2.0 / (x + y)
            } else {
                t.ln_1p() / (x - y)
            };
            sum += rotated[(i, k)].norm_sqr() * dd;
        }
    }
    Ok(Some((sum / (8.0 * std::f64::consts::LN_2)).clamp(0.0, 1.0)))
}

/// A fixed state with its entropy cached, for many distance evaluations
/// against varying partners.
#[derive(Debug, Clone)]
pub struct Anchor {
    mat: CMatrix,
    entropy: f64,
}

impl Anchor {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            mat: rho.matrix().clone(),
            entropy: rho.entropy()?,
        })
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// √QJSD to a raw Hermitian unit-trace matrix of the same size.
    pub fn distance_to_matrix(&self, m: &CMatrix) -> Result<f64> {
        let s = qstate::matrix_entropy(m)?;
        Ok(qjsd_raw(&self.mat, self.entropy, m, s)?.sqrt())
    }

    /// √QJSD to a matrix whose entropy is already known.
    pub fn distance_with_entropy(&self, m: &CMatrix, entropy: f64) -> Result<f64> {
        Ok(qjsd_raw(&self.mat, self.entropy, m, entropy)?.sqrt())
    }

    pub fn distance(&self, sigma: &DensityMatrix) -> Result<f64> {
        if sigma.dim() != self.mat.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "states of dimension {} and {}",
                self.mat.nrows(),
                sigma.dim()
            )));
        }
        self.distance_to_matrix(sigma.matrix())
    }
}
