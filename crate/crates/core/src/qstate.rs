//! Density-matrix core: validation, tensor algebra, spectra, entropy, the
//! named state factory and random ensembles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coherence::BasisSpec;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Entry-wise tolerance for Hermiticity, trace and PSD checks.
pub const STATE_TOL: f64 = 1e-10;
/// Norm tolerance for kets.
pub const KET_TOL: f64 = 1e-12;
/// Largest supported Hilbert-space dimension (12 qubits).
pub const MAX_DIM: usize = 1 << 12;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// A validated density matrix with its subsystem structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    mat: CMatrix,
}

/// Eigen-decomposition of a density matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

fn check_dims(side: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} must be nonempty and positive"
        )));
    }
    let prod: usize = dims.iter().product();
    if prod != side {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} multiply to {prod}, matrix side is {side}"
        )));
    }
    Ok(())
}

/// Hermitian eigenvalues of `m` (unsorted). Only the lower triangle matters.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    let eig = SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::EigenFailure)?;
    Ok(eig.eigenvalues.iter().copied().collect())
}

pub(crate) fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::EigenFailure)?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// Clamps tiny negative eigenvalues to zero and renormalizes to unit sum.
pub(crate) fn clamp_probabilities(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        for v in values.iter_mut() {
            *v /= total;
        }
    }
}

/// Shannon entropy in bits of a (clamped) spectrum, with 0 log 0 = 0.
pub(crate) fn shannon_bits(values: &[f64]) -> f64 {
    let h: f64 = values.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    h.max(0.0)
}

/// von Neumann entropy of a raw Hermitian, trace-one matrix.
pub(crate) fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    let mut values = hermitian_eigenvalues(m)?;
    clamp_probabilities(&mut values);
    Ok(shannon_bits(&values))
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

impl DensityMatrix {
    /// Validates a raw matrix as a density matrix over `dims`.
    ///
    /// The matrix is symmetrized to `(m + m†)/2` and its trace renormalized
    /// when both are within [`STATE_TOL`]; larger violations are errors.
    pub fn validate(m: CMatrix, dims: &[usize]) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        check_dims(m.nrows(), dims)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let adj = m.adjoint();
        let asym = max_abs_diff(&m, &adj);
        if asym > STATE_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let mut mat = (&m + &adj).scale(0.5);
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::NotUnitTrace(tr));
        }
        mat.unscale_mut(tr);
        let min_eig = hermitian_eigenvalues(&mat)?.into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOL {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(Self {
            dims: dims.to_vec(),
            mat,
        })
    }

    /// Wraps a matrix already known to be a density matrix (convex mixtures
    /// and conjugations of valid states). Hermitian symmetrization is still
    /// applied.
    pub(crate) fn from_trusted(m: CMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(m.nrows(), dims.iter().product::<usize>());
        let mat = (&m + m.adjoint()).scale(0.5);
        Self { dims, mat }
    }

    /// Diagonal density matrix from a probability vector.
    pub fn from_diagonal(probs: &[f64], dims: &[usize]) -> Result<Self> {
        let d = probs.len();
        let m = CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(probs[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::validate(m, dims)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Same matrix, different factorization of the dimension.
    pub fn with_dims(&self, dims: &[usize]) -> Result<Self> {
        check_dims(self.dim(), dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            mat: self.mat.clone(),
        })
    }

    /// Kronecker product; subsystem lists are concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix {
            dims,
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Reduced state on the subsystems in `keep` (0-based), in ascending
    /// subsystem order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.dims.len();
        if keep.is_empty() {
            return Err(Error::BadParameter("keep set must be nonempty".into()));
        }
        let mut kept = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(Error::BadSubsystemIndex { index: k, count: n });
            }
            kept[k] = true;
        }
        let out_dims: Vec<usize> = (0..n).filter(|&i| kept[i]).map(|i| self.dims[i]).collect();
        let dk: usize = out_dims.iter().product();
        let d = self.dim();

        // Split every full index into (kept index, traced index).
        let mut split = Vec::with_capacity(d);
        for full in 0..d {
            let mut rem = full;
            let (mut ki, mut ti) = (0usize, 0usize);
            let (mut kstride, mut tstride) = (1usize, 1usize);
            for s in (0..n).rev() {
                let q = self.dims[s];
                let digit = rem % q;
                rem /= q;
                if kept[s] {
                    ki += digit * kstride;
                    kstride *= q;
                } else {
                    ti += digit * tstride;
                    tstride *= q;
                }
            }
            split.push((ki, ti));
        }

        let mut out = CMatrix::zeros(dk, dk);
        for (i, &(ki, ti)) in split.iter().enumerate() {
            for (j, &(kj, tj)) in split.iter().enumerate() {
                if ti == tj {
                    out[(ki, kj)] += self.mat[(i, j)];
                }
            }
        }
        Ok(DensityMatrix::from_trusted(out, out_dims))
    }

    /// Reduced state of a single subsystem.
    pub fn marginal(&self, subsystem: usize) -> Result<DensityMatrix> {
        self.partial_trace(&[subsystem])
    }

    /// Eigenvalues (descending, clamped to `[0, 1]`, summing to one) and
    /// orthonormal eigenvectors.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let (raw, vecs) = hermitian_eigen(&self.mat)?;
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
        let mut values: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
        clamp_probabilities(&mut values);
        let d = self.dim();
        let vectors = CMatrix::from_fn(d, d, |i, k| vecs[(i, order[k])]);
        Ok(Spectrum { values, vectors })
    }

    /// Eigenvalues only, descending and clamped.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut values = hermitian_eigenvalues(&self.mat)?;
        values.sort_by(|a, b| b.total_cmp(a));
        clamp_probabilities(&mut values);
        Ok(values)
    }

    /// von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        matrix_entropy(&self.mat)
    }

    /// Removes all off-diagonal elements in basis `b`.
    pub fn dephase(&self, b: &BasisSpec) -> Result<DensityMatrix> {
        let d = self.dim();
        if b.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "basis of dimension {} for state of dimension {d}",
                b.dim()
            )));
        }
        let u = b.unitary().matrix();
        let diag = b.populations(self);
        // Σ_n p_n |b_n><b_n|
        let mut out = CMatrix::zeros(d, d);
        for (n, &p) in diag.iter().enumerate() {
            let col = u.column(n);
            out += (col * col.adjoint()).scale(p);
        }
        Ok(DensityMatrix::from_trusted(out, self.dims.clone()))
    }

    /// `U† ρ U`.
    pub fn conjugate(&self, u: &UnitaryMatrix) -> Result<DensityMatrix> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary of dimension {} for state of dimension {}",
                u.dim(),
                self.dim()
            )));
        }
        let m = u.mat.adjoint() * &self.mat * &u.mat;
        DensityMatrix::validate(m, &self.dims)
    }

    /// `(1 - t) self + t other`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot mix dimension {} with {}",
                self.dim(),
                other.dim()
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::BadParameter(format!("mixing weight {t} outside [0, 1]")));
        }
        let m = self.mat.scale(1.0 - t) + other.mat.scale(t);
        Ok(DensityMatrix::from_trusted(m, self.dims.clone()))
    }

    /// Largest entry-wise distance to another matrix of the same size.
    pub fn max_distance(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        max_abs_diff(&self.mat, &other.mat)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.mat, &self.dims)
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        let (m, dims) = j.to_matrix()?;
        Self::validate(m, &dims)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: MatrixJson = serde_json::from_str(s)?;
        Self::from_json(&j)
    }
}

/// `I/d` over the given subsystem dimensions.
pub fn maximally_mixed(dims: &[usize]) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if d == 0 || dims.is_empty() {
        return Err(Error::BadDimension(d));
    }
    let m = CMatrix::identity(d, d).unscale(d as f64);
    Ok(DensityMatrix {
        dims: dims.to_vec(),
        mat: m,
    })
}

/// A unit-norm ket.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: CVector,
}

impl PureState {
    pub fn new(amps: CVector, dims: &[usize]) -> Result<Self> {
        check_dims(amps.len(), dims)?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > KET_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            dims: dims.to_vec(),
            amps,
        })
    }

    /// Normalizes `amps` first; fails only on a zero vector.
    pub fn normalized(amps: CVector, dims: &[usize]) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(amps.unscale(norm), dims)
    }

    /// Computational basis state `|index>`.
    pub fn basis(index: usize, dims: &[usize]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if index >= d {
            return Err(Error::BadParameter(format!("basis index {index} >= dimension {d}")));
        }
        let mut v = CVector::zeros(d);
        v[index] = C64::new(1.0, 0.0);
        Self::new(v, dims)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState {
            dims,
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// `|ψ><ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        let m = &self.amps * self.amps.adjoint();
        DensityMatrix::from_trusted(m, self.dims.clone())
    }
}

/// A validated unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    mat: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        let gram = m.adjoint() * &m;
        let dev = max_abs_diff(&gram, &CMatrix::identity(d, d));
        if dev > STATE_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { mat: m })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mat: CMatrix::identity(d, d),
        }
    }

    /// Haar-random unitary: QR of a complex Ginibre matrix with the phases
    /// of `diag(R)` folded back into `Q`.
    pub fn haar_random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let g = ginibre(d, d, rng);
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for k in 0..d {
            let rkk = r[(k, k)];
            let n = rkk.norm();
            let phase = if n > 0.0 { rkk / n } else { C64::new(1.0, 0.0) };
            for i in 0..d {
                q[(i, k)] *= phase;
            }
        }
        Self { mat: q }
    }

    /// `U_1 ⊗ … ⊗ U_N`.
    pub fn kron_all(factors: &[UnitaryMatrix]) -> Result<Self> {
        let mut it = factors.iter();
        let first = it
            .next()
            .ok_or_else(|| Error::BadParameter("no local unitaries given".into()))?;
        let mut m = first.mat.clone();
        for u in it {
            m = m.kronecker(&u.mat);
        }
        Ok(Self { mat: m })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<PureState> {
    let d: usize = dims.iter().product();
    let g = ginibre(d, 1, rng);
    PureState::normalized(DVector::from_iterator(d, g.iter().copied()), dims)
}

/// Hilbert-Schmidt random mixed state `G G† / Tr(G G†)`.
pub fn random_mixed<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    random_induced(dims, d, rng)
}

/// Random mixed state from the induced measure with `rank` ancilla
/// dimensions (`rank = d` is Hilbert-Schmidt, `rank = 1` is Haar pure).
pub fn random_induced<R: Rng + ?Sized>(dims: &[usize], rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if d == 0 || rank == 0 {
        return Err(Error::BadDimension(d.min(rank)));
    }
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Ok(DensityMatrix::from_trusted(m.unscale(tr), dims.to_vec()))
}

/// Deterministic RNG used for every seeded operation in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// JSON wire format for explicit matrices: row-major real and imaginary
/// parts plus the subsystem dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix, dims: &[usize]) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dims: dims.to_vec(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    /// Parses into a matrix, checking that the arrays are square and agree.
    pub fn to_matrix(&self) -> Result<(CMatrix, Vec<usize>)> {
        let d = self.re.len();
        if d == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if self.re.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch("\"re\" is not a square array".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != d || im.iter().any(|row| row.len() != d) {
                return Err(Error::DimensionMismatch(
                    "\"im\" does not match the shape of \"re\"".into(),
                ));
            }
        }
        let m = CMatrix::from_fn(d, d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            C64::new(self.re[i][j], im)
        });
        check_dims(d, &self.dims)?;
        Ok((m, self.dims.clone()))
    }
}

/// Named state families and ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    Ghz,
    W,
    Bell,
    IsingGround,
    PlusProduct,
    WernerMix,
    RandomPure,
    RandomMixed,
    Explicit,
}

impl RecipeKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ghz" => Self::Ghz,
            "w" => Self::W,
            "bell" => Self::Bell,
            "ising" | "ising_ground" => Self::IsingGround,
            "plus" | "plus_product" => Self::PlusProduct,
            "werner" | "werner_mix" => Self::WernerMix,
            "random_pure" => Self::RandomPure,
            "random_mixed" => Self::RandomMixed,
            "explicit" => Self::Explicit,
            other => return Err(Error::BadRecipe(format!("unknown state kind {other:?}"))),
        })
    }
}

/// Parameters for a [`StateRecipe`]. Only those relevant to the kind are read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<Box<StateRecipe>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixJson>,
}

/// Declarative description of a state, resolved by [`make_state`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecipe {
    pub kind: RecipeKind,
    #[serde(default)]
    pub params: RecipeParams,
}

impl StateRecipe {
    pub fn new(kind: RecipeKind) -> Self {
        Self {
            kind,
            params: RecipeParams::default(),
        }
    }

    pub fn ghz(qubits: usize, theta: f64) -> Self {
        let mut r = Self::new(RecipeKind::Ghz);
        r.params.qubits = Some(qubits);
        r.params.theta = Some(theta);
        r
    }

    pub fn w(theta: f64, phi: f64) -> Self {
        let mut r = Self::new(RecipeKind::W);
        r.params.theta = Some(theta);
        r.params.phi = Some(phi);
        r
    }

    pub fn bell() -> Self {
        Self::new(RecipeKind::Bell)
    }

    pub fn ising_ground(xi: f64) -> Self {
        let mut r = Self::new(RecipeKind::IsingGround);
        r.params.xi = Some(xi);
        r
    }

    pub fn plus_product(qubits: usize) -> Self {
        let mut r = Self::new(RecipeKind::PlusProduct);
        r.params.qubits = Some(qubits);
        r
    }

    pub fn werner(inner: StateRecipe, mu: f64) -> Self {
        let mut r = Self::new(RecipeKind::WernerMix);
        r.params.mu = Some(mu);
        r.params.inner = Some(Box::new(inner));
        r
    }

    pub fn random_pure(qubits: usize, seed: u64) -> Self {
        let mut r = Self::new(RecipeKind::RandomPure);
        r.params.qubits = Some(qubits);
        r.params.seed = Some(seed);
        r
    }

    pub fn random_mixed(qubits: usize, seed: u64) -> Self {
        let mut r = Self::new(RecipeKind::RandomMixed);
        r.params.qubits = Some(qubits);
        r.params.seed = Some(seed);
        r
    }

    pub fn explicit(matrix: MatrixJson) -> Self {
        let mut r = Self::new(RecipeKind::Explicit);
        r.params.matrix = Some(matrix);
        r
    }

    /// Sets a named continuous parameter (`theta`, `phi`, `xi`, `mu`).
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "theta" => &mut self.params.theta,
            "phi" => &mut self.params.phi,
            "xi" => &mut self.params.xi,
            "mu" => &mut self.params.mu,
            other => return Err(Error::BadRecipe(format!("unknown parameter {other:?}"))),
        };
        *slot = Some(value);
        Ok(())
    }

    /// Whether `name` is a parameter this kind reads.
    pub fn accepts_param(&self, name: &str) -> bool {
        matches!(
            (self.kind, name),
            (RecipeKind::Ghz, "theta")
                | (RecipeKind::W, "theta")
                | (RecipeKind::W, "phi")
                | (RecipeKind::IsingGround, "xi")
                | (RecipeKind::WernerMix, "mu")
        )
    }

    fn angle(&self, name: &str, value: Option<f64>) -> Result<f64> {
        let v = value.ok_or_else(|| Error::BadRecipe(format!("{:?} recipe needs parameter {name}", self.kind)))?;
        if !v.is_finite() {
            return Err(Error::BadRecipe(format!("{name} = {v} is not finite")));
        }
        Ok(v)
    }

    /// Subsystem dimensions from `qubits` (preferred) or `dim`.
    fn register(&self, default_qubits: Option<usize>) -> Result<Vec<usize>> {
        match (self.params.qubits.or(default_qubits), self.params.dim) {
            (Some(n), _) => {
                if n == 0 || n > 12 {
                    return Err(Error::BadRecipe(format!("qubit count {n} outside 1..=12")));
                }
                Ok(vec![2; n])
            }
            (None, Some(d)) => {
                if d == 0 || d > MAX_DIM {
                    return Err(Error::BadRecipe(format!("dimension {d} outside 1..={MAX_DIM}")));
                }
                Ok(vec![d])
            }
            (None, None) => Err(Error::BadRecipe(format!("{:?} recipe needs qubits or dim", self.kind))),
        }
    }
}

fn ket(entries: &[(usize, f64)], dims: &[usize]) -> Result<PureState> {
    let d: usize = dims.iter().product();
    let mut v = CVector::zeros(d);
    for &(i, a) in entries {
        v[i] += C64::new(a, 0.0);
    }
    PureState::normalized(v, dims)
}

/// Builds the pure state for pure kinds.
pub fn make_pure(r: &StateRecipe) -> Result<PureState> {
    match r.kind {
        RecipeKind::Ghz => {
            let theta = r.angle("theta", r.params.theta)?;
            let dims = r.register(Some(3))?;
            let d: usize = dims.iter().product();
            ket(&[(0, theta.cos()), (d - 1, theta.sin())], &dims)
        }
        RecipeKind::W => {
            let theta = r.angle("theta", r.params.theta)?;
            let phi = r.angle("phi", r.params.phi)?;
            // |001>, |010>, |100>
            ket(
                &[
                    (0b001, theta.sin() * phi.sin()),
                    (0b010, theta.sin() * phi.cos()),
                    (0b100, theta.cos()),
                ],
                &[2, 2, 2],
            )
        }
        RecipeKind::Bell => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            ket(&[(0b00, a), (0b11, a)], &[2, 2])
        }
        RecipeKind::IsingGround => {
            let xi = r.angle("xi", r.params.xi)?;
            let off = 1.0 - xi.sin();
            let on = xi.cos();
            let norm = (2.0 * off * off + 2.0 * on * on).sqrt();
            ket(
                &[
                    (0b01, off / norm),
                    (0b10, off / norm),
                    (0b00, on / norm),
                    (0b11, on / norm),
                ],
                &[2, 2],
            )
        }
        RecipeKind::PlusProduct => {
            let dims = r.register(Some(2))?;
            let d: usize = dims.iter().product();
            let a = 1.0 / (d as f64).sqrt();
            PureState::new(CVector::from_element(d, C64::new(a, 0.0)), &dims)
        }
        RecipeKind::RandomPure => {
            let dims = r.register(None)?;
            let seed = r
                .params
                .seed
                .ok_or_else(|| Error::BadRecipe("random_pure needs a seed".into()))?;
            random_pure(&dims, &mut seeded_rng(seed))
        }
        RecipeKind::WernerMix => {
            // Without an inner recipe the pure component is the uniform
            // superposition over the register.
            let dims = r.register(None)?;
            let d: usize = dims.iter().product();
            let a = 1.0 / (d as f64).sqrt();
            PureState::new(CVector::from_element(d, C64::new(a, 0.0)), &dims)
        }
        RecipeKind::RandomMixed | RecipeKind::Explicit => {
            Err(Error::BadRecipe(format!("{:?} does not describe a pure state", r.kind)))
        }
    }
}

/// Resolves a recipe into a validated density matrix.
pub fn make_state(r: &StateRecipe) -> Result<DensityMatrix> {
    match r.kind {
        RecipeKind::RandomMixed => {
            let dims = r.register(None)?;
            let seed = r
                .params
                .seed
                .ok_or_else(|| Error::BadRecipe("random_mixed needs a seed".into()))?;
            random_mixed(&dims, &mut seeded_rng(seed))
        }
        RecipeKind::Explicit => {
            let m = r
                .params
                .matrix
                .as_ref()
                .ok_or_else(|| Error::BadRecipe("explicit recipe needs a matrix".into()))?;
            DensityMatrix::from_json(m)
        }
        RecipeKind::WernerMix => {
            let mu = r
                .params
                .mu
                .ok_or_else(|| Error::BadRecipe("werner_mix needs mu".into()))?;
            if !(0.0..=1.0).contains(&mu) {
                return Err(Error::BadRecipe(format!("mu = {mu} outside [0, 1]")));
            }
            let psi = match &r.params.inner {
                Some(inner) => {
                    if inner.kind == RecipeKind::WernerMix {
                        return Err(Error::BadRecipe("nested werner_mix recipes".into()));
                    }
                    make_pure(inner)?
                }
                None => make_pure(r)?,
            };
            werner(&psi, mu)
        }
        _ => Ok(make_pure(r)?.to_density()),
    }
}

/// `(1 - µ) I/d + µ |ψ><ψ|`.
pub fn werner(psi: &PureState, mu: f64) -> Result<DensityMatrix> {
    let mixed = maximally_mixed(psi.dims())?;
    mixed.mix(&psi.to_density(), mu)
}

/// Complex diagonal matrix helper used by tests and the CLI.
pub fn diag_matrix(entries: &[f64]) -> CMatrix {
    let d = entries.len();
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(entries[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
