//! Distribution of coherence over the subsystems of a multipartite state.
//!
//! Two splits are provided. The collective/localized split goes through the
//! product of the marginals `π_ρ = ρ_1 ⊗ … ⊗ ρ_N` and needs no search:
//! `C_c = D(ρ, π_ρ)` and `C_l = D(π_ρ, I/d)`. The intrinsic/local split goes
//! through the closest separable state found by [`intrinsic_coherence`],
//! which is a numerical search and therefore an upper estimate.

use serde::{Deserialize, Serialize};

use crate::coherence::{self, BasisSpec, DeltaConvention};
use crate::divergence::{self, Anchor};
use crate::error::{Error, Result};
use crate::optim::{self, Block, OptimizerConfig, OptimizerResult, Parametrization};
use crate::qstate::{maximally_mixed, random_mixed, seeded_rng, DensityMatrix, UnitaryMatrix};
use crate::{CMatrix, CVector, C64};

/// Slack below which an inequality counts as violated.
pub const SLACK_TOL: f64 = 1e-9;

fn require_multipartite(rho: &DensityMatrix) -> Result<()> {
    if rho.num_subsystems() < 2 {
        return Err(Error::SingleSubsystem);
    }
    Ok(())
}

/// `ρ_1 ⊗ … ⊗ ρ_N` from the single-subsystem marginals.
pub fn product_of_marginals(rho: &DensityMatrix) -> Result<DensityMatrix> {
    require_multipartite(rho)?;
    let mut out = rho.marginal(0)?;
    for k in 1..rho.num_subsystems() {
        out = out.tensor(&rho.marginal(k)?);
    }
    Ok(out)
}

/// `C_c(ρ) = D(ρ, π_ρ)`.
pub fn collective_coherence(rho: &DensityMatrix) -> Result<f64> {
    divergence::metric(rho, &product_of_marginals(rho)?)
}

/// `C_l(ρ) = D(π_ρ, I/d)`.
pub fn localized_coherence(rho: &DensityMatrix) -> Result<f64> {
    coherence::total_coherence(&product_of_marginals(rho)?)
}

/// A separable state `Σ_k p_k |a_k1><a_k1| ⊗ … ⊗ |a_kN><a_kN|` with pure
/// factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableAnsatz {
    dims: Vec<usize>,
    weights: Vec<f64>,
    /// `factors[k][i]` is the state of subsystem `i` in term `k`.
    factors: Vec<Vec<CVector>>,
}

impl SeparableAnsatz {
    pub fn new(dims: &[usize], weights: Vec<f64>, factors: Vec<Vec<CVector>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != factors.len() {
            return Err(Error::BadParameter("one factor list per weight is required".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::BadParameter("ansatz weights must lie on the simplex".into()));
        }
        for term in &factors {
            if term.len() != dims.len() {
                return Err(Error::DimensionMismatch("one factor per subsystem is required".into()));
            }
            for (v, &q) in term.iter().zip(dims) {
                if v.len() != q {
                    return Err(Error::DimensionMismatch(format!(
                        "factor of length {} for subsystem of dimension {q}",
                        v.len()
                    )));
                }
                if (v.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::NotNormalized(v.norm()));
                }
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            weights,
            factors,
        })
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[Vec<CVector>] {
        &self.factors
    }

    fn parametrization(dims: &[usize], terms: usize) -> Result<Parametrization> {
        let mut blocks = vec![Block::Simplex(terms)];
        for _ in 0..terms {
            blocks.extend(dims.iter().map(|&q| Block::Sphere(2 * q)));
        }
        Parametrization::new(blocks)
    }

    /// Decodes a feasible optimizer point: weights, then the factors of each
    /// term as interleaved (re, im) pairs.
    fn from_params(dims: &[usize], terms: usize, x: &[f64]) -> Self {
        let weights = x[..terms].to_vec();
        let mut at = terms;
        let factors = (0..terms)
            .map(|_| {
                dims.iter()
                    .map(|&q| {
                        let v = CVector::from_fn(q, |j, _| C64::new(x[at + 2 * j], x[at + 2 * j + 1]));
                        at += 2 * q;
                        v
                    })
                    .collect()
            })
            .collect();
        Self {
            dims: dims.to_vec(),
            weights,
            factors,
        }
    }

    fn to_params(&self) -> Vec<f64> {
        let mut x = self.weights.clone();
        for term in &self.factors {
            for v in term {
                for z in v.iter() {
                    x.push(z.re);
                    x.push(z.im);
                }
            }
        }
        x
    }

    /// Pads with zero-weight terms up to `terms`.
    fn padded(mut self, terms: usize) -> Self {
        while self.weights.len() < terms {
            self.weights.push(0.0);
            self.factors.push(
                self.dims
                    .iter()
                    .map(|&q| {
                        let mut v = CVector::zeros(q);
                        v[0] = C64::new(1.0, 0.0);
                        v
                    })
                    .collect(),
            );
        }
        self
    }

    fn matrix(&self) -> CMatrix {
        separable_matrix(&self.dims, &self.weights, &self.factors)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(self.matrix(), self.dims.clone())
    }
}

fn separable_matrix(dims: &[usize], weights: &[f64], factors: &[Vec<CVector>]) -> CMatrix {
    let d: usize = dims.iter().product();
    let mut m = CMatrix::zeros(d, d);
    for (w, term) in weights.iter().zip(factors) {
        if *w == 0.0 {
            continue;
        }
        let mut v = term[0].clone();
        for f in &term[1..] {
            v = v.kronecker(f);
        }
        m.gerc(C64::new(*w, 0.0), &v, &v, C64::new(1.0, 0.0));
    }
    m
}

/// Raw separable matrix straight from optimizer coordinates, without
/// building intermediate vectors per factor.
fn separable_from_params(dims: &[usize], terms: usize, x: &[f64], buf: &mut Vec<C64>, tmp: &mut Vec<C64>) -> CMatrix {
    let d: usize = dims.iter().product();
    let mut m = CMatrix::zeros(d, d);
    let mut at = terms;
    for k in 0..terms {
        let w = x[k];
        buf.clear();
        buf.push(C64::new(1.0, 0.0));
        for &q in dims {
            tmp.clear();
            for a in buf.iter() {
                for j in 0..q {
                    tmp.push(a * C64::new(x[at + 2 * j], x[at + 2 * j + 1]));
                }
            }
            at += 2 * q;
            std::mem::swap(buf, tmp);
        }
        if w == 0.0 {
            continue;
        }
        for c in 0..d {
            let bc = buf[c].conj() * w;
            for r in 0..d {
                m[(r, c)] += buf[r] * bc;
            }
        }
    }
    m
}

/// `π_ρ` written as a mixture of products of marginal eigenvectors.
fn marginal_eigen_ansatz(rho: &DensityMatrix) -> Result<SeparableAnsatz> {
    let dims = rho.dims().to_vec();
    let spectra = (0..dims.len())
        .map(|k| rho.marginal(k)?.spectrum())
        .collect::<Result<Vec<_>>>()?;
    let d: usize = dims.iter().product();
    let mut weights = Vec::with_capacity(d);
    let mut factors = Vec::with_capacity(d);
    for idx in 0..d {
        let mut rem = idx;
        let mut digits = vec![0usize; dims.len()];
        for s in (0..dims.len()).rev() {
            digits[s] = rem % dims[s];
            rem /= dims[s];
        }
        let w: f64 = digits.iter().enumerate().map(|(s, &j)| spectra[s].values[j]).product();
        let term = digits
            .iter()
            .enumerate()
            .map(|(s, &j)| spectra[s].vectors.column(j).into_owned())
            .collect();
        weights.push(w);
        factors.push(term);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(SeparableAnsatz { dims, weights, factors })
}

/// The computational-basis dephasing of `ρ` as a mixture of basis products.
fn dephased_ansatz(rho: &DensityMatrix) -> SeparableAnsatz {
    let dims = rho.dims().to_vec();
    let d = rho.dim();
    let mut weights: Vec<f64> = (0..d).map(|i| rho.matrix()[(i, i)].re.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let factors = (0..d)
        .map(|idx| {
            let mut rem = idx;
            let mut term = vec![CVector::zeros(0); dims.len()];
            for s in (0..dims.len()).rev() {
                let mut v = CVector::zeros(dims[s]);
                v[rem % dims[s]] = C64::new(1.0, 0.0);
                rem /= dims[s];
                term[s] = v;
            }
            term
        })
        .collect();
    SeparableAnsatz { dims, weights, factors }
}

/// Settings for the separable-state search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicOptions {
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Number of product terms; defaults to the total dimension `d` and must
    /// lie in `d..=d²`.
    #[serde(default)]
    pub terms: Option<usize>,
}

/// Result of the separable-state search.
#[derive(Debug, Clone)]
pub struct IntrinsicCoherence {
    /// Upper estimate of `C_I`.
    pub value: f64,
    pub ansatz: SeparableAnsatz,
    /// The closest separable state found, `σ_S^min`.
    pub closest: DensityMatrix,
    pub optimizer: OptimizerResult,
}

impl IntrinsicCoherence {
    /// Basis-independent local coherence `C_L = D(σ_S^min, I/d)`.
    pub fn local_coherence(&self) -> Result<f64> {
        coherence::total_coherence(&self.closest)
    }

    /// Basis-dependent local coherence `C_L^(b) = D(σ_S^min, dephase(ρ, b))`.
    pub fn local_coherence_basis(&self, rho: &DensityMatrix, b: &BasisSpec) -> Result<f64> {
        divergence::metric(&self.closest, &rho.dephase(b)?)
    }
}

/// Upper estimate of `C_I(ρ) = min over separable σ of D(ρ, σ)`.
///
/// Starts include `π_ρ` (written as `d` products of marginal eigenvectors),
/// so the estimate never exceeds [`collective_coherence`].
pub fn intrinsic_coherence(rho: &DensityMatrix, opts: &IntrinsicOptions) -> Result<IntrinsicCoherence> {
    require_multipartite(rho)?;
    let dims = rho.dims().to_vec();
    let d = rho.dim();
    let terms = opts.terms.unwrap_or(d);
    if terms < d || terms > d * d {
        return Err(Error::BadParameter(format!(
            "separable ansatz needs between {d} and {} terms, got {terms}",
            d * d
        )));
    }
    let param = SeparableAnsatz::parametrization(&dims, terms)?;
    let anchor = Anchor::new(rho)?;

    let marginal_start = marginal_eigen_ansatz(rho)?.padded(terms);
    let dephased_start = dephased_ansatz(rho).padded(terms);

    let objective = |x: &[f64]| -> f64 {
        let mut buf = Vec::with_capacity(d);
        let mut tmp = Vec::with_capacity(d);
        let m = separable_from_params(&dims, terms, x, &mut buf, &mut tmp);
        anchor.distance_to_matrix(&m).unwrap_or(f64::NAN)
    };
    let res = optim::minimize(
        objective,
        &param,
        &opts.optimizer,
        &[marginal_start.to_params(), dephased_start.to_params()],
    )
    .map_err(|e| match e {
        Error::OptimizerFailure(m) => Error::OptimizerFailure(format!("intrinsic coherence: {m}")),
        other => other,
    })?;
    let ansatz = SeparableAnsatz::from_params(&dims, terms, &res.params);
    let closest = ansatz.to_density();
    Ok(IntrinsicCoherence {
        value: res.value,
        ansatz,
        closest,
        optimizer: res,
    })
}

/// `C_L = D(σ_S^min, I/d)`.
pub fn local_coherence_bi(rho: &DensityMatrix, opts: &IntrinsicOptions) -> Result<f64> {
    intrinsic_coherence(rho, opts)?.local_coherence()
}

/// `C_L^(b) = D(σ_S^min, dephase(ρ, b))`.
pub fn local_coherence_bd(rho: &DensityMatrix, b: &BasisSpec, opts: &IntrinsicOptions) -> Result<f64> {
    intrinsic_coherence(rho, opts)?.local_coherence_basis(rho, b)
}

/// Settings for a full decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeOptions {
    #[serde(default)]
    pub intrinsic: IntrinsicOptions,
    /// Optimizer for the basis-dependent coherence.
    #[serde(default)]
    pub basis_optimizer: OptimizerConfig,
    /// Convention for the reported `delta` column.
    #[serde(default)]
    pub delta_convention: DeltaConvention,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            intrinsic: IntrinsicOptions::default(),
            basis_optimizer: OptimizerConfig::default(),
            delta_convention: DeltaConvention::Argmin,
        }
    }
}

impl DecomposeOptions {
    /// Uses `seed` for both optimizers.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.intrinsic.optimizer.seed = seed;
        self.basis_optimizer.seed = seed ^ 0x5bd1_e995;
        self
    }
}

/// Optimizer bookkeeping attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub intrinsic_starts: usize,
    pub intrinsic_evaluations: usize,
    pub intrinsic_converged: bool,
    pub basis_evaluations: usize,
    pub basis_converged: bool,
}

/// Every coherence quantity for one state plus the inequality slacks.
///
/// Slacks, all expected `>= -1e-9`:
/// - `slack29 = C_I + C_L - C`
/// - `slack36 = C_c + C_l - C`
/// - `slack37 = C_c - C_I`
/// - `slack41 = C^(b) + δC^(b) - C`, with `ρ_d` the minimizer of `C^(b)`
/// - `slack42 = C_I + C_L^(b) + δC^(b) - C`, with `ρ_d` the dephased state
///   (the same one `C_L^(b)` is measured against)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub total: f64,
    pub collective: f64,
    pub localized: f64,
    /// Upper estimate from the separable search.
    pub intrinsic: f64,
    pub local: f64,
    pub basis: f64,
    pub local_basis: f64,
    /// `δC^(b)` under `delta_convention`.
    pub delta: f64,
    pub delta_convention: DeltaConvention,
    pub delta_argmin: f64,
    pub delta_dephased: f64,
    pub basis_label: String,
    pub slack29: f64,
    pub slack36: f64,
    pub slack37: f64,
    pub slack41: f64,
    pub slack42: f64,
    /// Set when any slack falls below `-1e-9` or a value leaves `[0, 1]`.
    pub violation: bool,
    pub diagnostics: Diagnostics,
}

impl DecompositionReport {
    pub fn converged(&self) -> bool {
        self.diagnostics.intrinsic_converged && self.diagnostics.basis_converged
    }

    pub fn min_slack(&self) -> f64 {
        [self.slack29, self.slack36, self.slack37, self.slack41, self.slack42]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Computes every quantity for `rho` and the five inequality slacks.
pub fn check_inequalities(rho: &DensityMatrix, b: &BasisSpec, opts: &DecomposeOptions) -> Result<DecompositionReport> {
    require_multipartite(rho)?;
    let total = coherence::total_coherence(rho)?;
    let pi = product_of_marginals(rho)?;
    let collective = divergence::metric(rho, &pi)?;
    let localized = coherence::total_coherence(&pi)?;

    let intrinsic = intrinsic_coherence(rho, &opts.intrinsic)?;
    let local = intrinsic.local_coherence()?;
    let dephased = rho.dephase(b)?;
    let local_basis = divergence::metric(&intrinsic.closest, &dephased)?;

    let basis = coherence::basis_coherence(rho, b, &opts.basis_optimizer)?;
    let delta_argmin = coherence::total_coherence(&basis.minimizer)?;
    let delta_dephased = coherence::total_coherence(&dephased)?;
    let delta = match opts.delta_convention {
        DeltaConvention::Argmin => delta_argmin,
        DeltaConvention::Dephased => delta_dephased,
    };

    let slack29 = intrinsic.value + local - total;
    let slack36 = collective + localized - total;
    let slack37 = collective - intrinsic.value;
    let slack41 = basis.value + delta_argmin - total;
    let slack42 = intrinsic.value + local_basis + delta_dephased - total;

    let values = [
        total,
        collective,
        localized,
        intrinsic.value,
        local,
        basis.value,
        local_basis,
        delta_argmin,
        delta_dephased,
    ];
    let out_of_range = values.iter().any(|v| !(0.0..=1.0).contains(v));
    let slack_bad = [slack29, slack36, slack37, slack41, slack42]
        .iter()
        .any(|s| !s.is_finite() || *s < -SLACK_TOL);

    let basis_evaluations = basis.optimizer.as_ref().map_or(0, |o| o.evaluations);
    Ok(DecompositionReport {
        total,
        collective,
        localized,
        intrinsic: intrinsic.value,
        local,
        basis: basis.value,
        local_basis,
        delta,
        delta_convention: opts.delta_convention,
        delta_argmin,
        delta_dephased,
        basis_label: b.label().to_string(),
        slack29,
        slack36,
        slack37,
        slack41,
        slack42,
        violation: out_of_range || slack_bad,
        diagnostics: Diagnostics {
            intrinsic_starts: intrinsic.optimizer.start_values.len(),
            intrinsic_evaluations: intrinsic.optimizer.evaluations,
            intrinsic_converged: intrinsic.optimizer.converged,
            basis_evaluations,
            basis_converged: basis.converged(),
        },
    })
}

/// Largest `D(ρ, π_ρ) - D(ρ, π)` over `trials` random product states `π`
/// whose factors are drawn from the Hilbert-Schmidt ensemble. A positive
/// value means a sampled product state is closer to `ρ` than `π_ρ`.
pub fn verify_closest_product(rho: &DensityMatrix, trials: usize, seed: u64) -> Result<f64> {
    require_multipartite(rho)?;
    if trials == 0 {
        return Err(Error::BadParameter("trials must be at least 1".into()));
    }
    let anchor = Anchor::new(rho)?;
    let reference = anchor.distance(&product_of_marginals(rho)?)?;
    let mut rng = seeded_rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut pi = random_mixed(&rho.dims()[..1], &mut rng)?;
        for &q in &rho.dims()[1..] {
            pi = pi.tensor(&random_mixed(&[q], &mut rng)?);
        }
        worst = worst.max(reference - anchor.distance(&pi)?);
    }
    Ok(worst)
}

/// `|value(U_loc† ρ U_loc) - value(ρ)|` for each decomposed coherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalInvarianceSlacks {
    pub collective: f64,
    pub localized: f64,
    pub intrinsic: f64,
    pub local: f64,
}

/// Applies one unitary per subsystem and measures how much each
/// decomposed coherence moves.
pub fn local_unitary_invariance_check(
    rho: &DensityMatrix,
    locals: &[UnitaryMatrix],
    opts: &IntrinsicOptions,
) -> Result<LocalInvarianceSlacks> {
    require_multipartite(rho)?;
    if locals.len() != rho.num_subsystems() {
        return Err(Error::DimensionMismatch(format!(
            "{} local unitaries for {} subsystems",
            locals.len(),
            rho.num_subsystems()
        )));
    }
    for (u, &q) in locals.iter().zip(rho.dims()) {
        if u.dim() != q {
            return Err(Error::DimensionMismatch(format!(
                "local unitary of dimension {} on subsystem of dimension {q}",
                u.dim()
            )));
        }
    }
    let rotated = rho.conjugate(&UnitaryMatrix::kron_all(locals)?)?;
    let before = intrinsic_coherence(rho, opts)?;
    let after = intrinsic_coherence(&rotated, opts)?;
    Ok(LocalInvarianceSlacks {
        collective: (collective_coherence(&rotated)? - collective_coherence(rho)?).abs(),
        localized: (localized_coherence(&rotated)? - localized_coherence(rho)?).abs(),
        intrinsic: (after.value - before.value).abs(),
        local: (after.local_coherence()? - before.local_coherence()?).abs(),
    })
}

/// Reference state for the basis-independent quantities.
pub fn reference_state(rho: &DensityMatrix) -> Result<DensityMatrix> {
    maximally_mixed(rho.dims())
}
