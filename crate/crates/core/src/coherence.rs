//! Total coherence: the basis-independent distance to `I/d`, the
//! basis-dependent distance to the closest incoherent state, their closed
//! forms and the gap between them.

use serde::{Deserialize, Serialize};

use crate::divergence::{self, Anchor};
use crate::error::{Error, Result};
use crate::optim::{self, OptimizerConfig, OptimizerResult, Parametrization};
use crate::qstate::{self, maximally_mixed, DensityMatrix, UnitaryMatrix};
use crate::{CMatrix, C64};

/// An orthonormal basis `{|b_n>}`, stored as the columns of a unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    label: String,
    unitary: UnitaryMatrix,
}

/// JSON form of a basis: the unitary whose columns are the basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisJson {
    #[serde(default)]
    pub label: Option<String>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl BasisSpec {
    pub fn from_unitary(unitary: UnitaryMatrix, label: &str) -> Self {
        Self {
            label: label.to_string(),
            unitary,
        }
    }

    pub fn computational(dims: &[usize]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if d == 0 {
            return Err(Error::BadDimension(d));
        }
        Ok(Self::from_unitary(UnitaryMatrix::identity(d), "computational"))
    }

    /// `{|+>, |->}^⊗n`.
    pub fn hadamard(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > 12 {
            return Err(Error::BadParameter(format!("hadamard basis on {qubits} qubits")));
        }
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(a, 0.0), C64::new(a, 0.0), C64::new(a, 0.0), C64::new(-a, 0.0)],
        );
        let mut m = h.clone();
        for _ in 1..qubits {
            m = m.kronecker(&h);
        }
        Ok(Self::from_unitary(UnitaryMatrix::new(m)?, "hadamard"))
    }

    /// Resolves `"computational"` or `"hadamard"` for a register.
    pub fn named(label: &str, dims: &[usize]) -> Result<Self> {
        match label {
            "computational" | "z" => Self::computational(dims),
            "hadamard" | "x" | "pm" => {
                if dims.iter().any(|&q| q != 2) {
                    return Err(Error::BadParameter("hadamard basis needs a register of qubits".into()));
                }
                Self::hadamard(dims.len())
            }
            other => Err(Error::BadParameter(format!("unknown basis {other:?}"))),
        }
    }

    pub fn from_json(j: &BasisJson) -> Result<Self> {
        let d = j.re.len();
        let json = qstate::MatrixJson {
            dims: vec![d],
            re: j.re.clone(),
            im: j.im.clone(),
        };
        let (m, _) = json.to_matrix()?;
        Ok(Self::from_unitary(
            UnitaryMatrix::new(m)?,
            j.label.as_deref().unwrap_or("custom"),
        ))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: BasisJson = serde_json::from_str(s)?;
        Self::from_json(&j)
    }

    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.unitary
    }

    /// `<b_n|ρ|b_n>` for every basis vector.
    pub fn populations(&self, rho: &DensityMatrix) -> Vec<f64> {
        let framed = self.frame(rho.matrix());
        let mut p: Vec<f64> = (0..framed.nrows()).map(|n| framed[(n, n)].re).collect();
        qstate::clamp_probabilities(&mut p);
        p
    }

    /// `Σ_n p_n |b_n><b_n|`.
    pub fn diagonal_state(&self, probs: &[f64], dims: &[usize]) -> Result<DensityMatrix> {
        let u = self.unitary.matrix();
        let m = u * qstate::diag_matrix(probs) * u.adjoint();
        DensityMatrix::validate(m, dims)
    }

    /// Matrix elements in this basis: `U† m U`.
    fn frame(&self, m: &CMatrix) -> CMatrix {
        let u = self.unitary.matrix();
        u.adjoint() * m * u
    }
}

/// Basis-independent coherence `C(ρ) = D(ρ, I/d)`.
pub fn total_coherence(rho: &DensityMatrix) -> Result<f64> {
    divergence::metric(rho, &maximally_mixed(rho.dims())?)
}

/// Coherence of any pure state in dimension `d`:
/// `sqrt(1 + (log2 d - (1 + 1/d) log2(d + 1)) / 2)`.
pub fn pure_coherence_closed_form(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    let d = d as f64;
    let j = 1.0 + 0.5 * (d.log2() - (1.0 + 1.0 / d) * (d + 1.0).log2());
    Ok(j.max(0.0).sqrt())
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Closed-form coherence of the Werner family `(1 - µ) I/d + µ |ψ><ψ|`.
pub fn werner_coherence_closed_form(mu: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::BadParameter(format!("mu = {mu} outside [0, 1]")));
    }
    let dm1 = d as f64 - 1.0;
    // each term is written as c * log2(c') with c = k * c'
    let a = 1.0 + mu * dm1;
    let b = 1.0 + 0.5 * mu * dm1;
    let bracket = xlog2x(a) - 2.0 * xlog2x(b) + dm1 * xlog2x(1.0 - mu) - 2.0 * dm1 * xlog2x(1.0 - 0.5 * mu);
    Ok((bracket / (2.0 * d as f64)).max(0.0).sqrt())
}

/// Which incoherent state stands for `ρ_d` in the basis gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    /// The minimizer found while computing `C^(b)`.
    #[default]
    Argmin,
    /// `ρ` with its off-diagonal elements in `b` removed.
    Dephased,
}

/// Basis-dependent coherence and the incoherent state attaining it.
#[derive(Debug, Clone)]
pub struct BasisCoherence {
    pub value: f64,
    pub minimizer: DensityMatrix,
    /// Populations of the minimizer in the basis.
    pub weights: Vec<f64>,
    pub optimizer: Option<OptimizerResult>,
}

impl BasisCoherence {
    pub fn converged(&self) -> bool {
        self.optimizer.as_ref().is_none_or(|o| o.converged)
    }
}

fn check_basis(rho: &DensityMatrix, b: &BasisSpec) -> Result<()> {
    if rho.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "basis of dimension {} for state of dimension {}",
            b.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

/// `C^(b)(ρ) = min over states diagonal in b of D(ρ, σ)`.
///
/// The simplex of diagonal states is searched through softmax weights,
/// starting from the dephased state, the uniform state and random
/// Dirichlet draws. The dephased state is always among the candidates, so
/// the value never exceeds `D(ρ, dephase(ρ, b))`.
pub fn basis_coherence(rho: &DensityMatrix, b: &BasisSpec, cfg: &OptimizerConfig) -> Result<BasisCoherence> {
    check_basis(rho, b)?;
    let d = rho.dim();
    let framed = DensityMatrix::from_trusted(b.frame(rho.matrix()), vec![d]);
    let anchor = Anchor::new(&framed)?;
    let dephased = b.populations(rho);

    let dephased_diag = qstate::diag_matrix(&dephased);
    let dephased_dist = anchor.distance_with_entropy(&dephased_diag, qstate::shannon_bits(&dephased))?;
    if dephased_dist == 0.0 {
        return Ok(BasisCoherence {
            value: 0.0,
            minimizer: b.diagonal_state(&dephased, rho.dims())?,
            weights: dephased,
            optimizer: None,
        });
    }

    let objective = |p: &[f64]| -> f64 {
        let diag = qstate::diag_matrix(p);
        anchor
            .distance_with_entropy(&diag, qstate::shannon_bits(p))
            .unwrap_or(f64::NAN)
    };
    let uniform = vec![1.0 / d as f64; d];
    let param = Parametrization::simplex(d)?;
    let res = optim::minimize(objective, &param, cfg, &[dephased, uniform])?;
    Ok(BasisCoherence {
        value: res.value,
        minimizer: b.diagonal_state(&res.params, rho.dims())?,
        weights: res.params.clone(),
        optimizer: Some(res),
    })
}

/// `δC^(b) = D(ρ_d, I/d)` under the chosen convention for `ρ_d`.
pub fn delta_coherence(
    rho: &DensityMatrix,
    b: &BasisSpec,
    cfg: &OptimizerConfig,
    convention: DeltaConvention,
) -> Result<f64> {
    check_basis(rho, b)?;
    let reference = match convention {
        DeltaConvention::Argmin => basis_coherence(rho, b, cfg)?.minimizer,
        DeltaConvention::Dephased => rho.dephase(b)?,
    };
    total_coherence(&reference)
}

/// `|C(U† ρ U) - C(ρ)|`.
pub fn unitary_invariance_check(rho: &DensityMatrix, u: &UnitaryMatrix) -> Result<f64> {
    let rotated = rho.conjugate(u)?;
    Ok((total_coherence(&rotated)? - total_coherence(rho)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{make_state, random_mixed, random_pure, seeded_rng, werner, StateRecipe};

    /// Eq.-free oracle for pure-state coherence: the midpoint of |ψ><ψ| and
    /// I/d has one eigenvalue (d+1)/(2d) and d-1 eigenvalues 1/(2d).
    fn pure_oracle(d: usize) -> f64 {
        let d = d as f64;
        let top = (d + 1.0) / (2.0 * d);
        let rest = 1.0 / (2.0 * d);
        let s_mid = -top * top.log2() - (d - 1.0) * rest * rest.log2();
        (s_mid - 0.5 * (0.0 + d.log2())).sqrt()
    }

    #[test]
    fn total_coherence_of_maximally_mixed_is_zero() {
        for dims in [vec![2], vec![2, 2], vec![3, 2]] {
            assert_eq!(total_coherence(&maximally_mixed(&dims).unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn pure_closed_form_against_spectral_oracle() {
        for d in 2..=16 {
            let c = pure_coherence_closed_form(d).unwrap();
            assert!((c - pure_oracle(d)).abs() < 1e-12, "d = {d}");
        }
        assert!((pure_coherence_closed_form(2).unwrap() - 0.557923).abs() < 1e-6);
        assert!((pure_coherence_closed_form(4).unwrap() - 0.740807).abs() < 1e-6);
        assert!((pure_coherence_closed_form(8).unwrap() - 0.847).abs() < 5e-4);
        assert!(matches!(pure_coherence_closed_form(1), Err(Error::BadDimension(1))));
    }

    #[test]
    fn pure_closed_form_matches_numerics() {
        let mut rng = seeded_rng(10);
        for d in [2usize, 3, 4, 7, 8, 16] {
            let psi = random_pure(&[d], &mut rng).unwrap();
            let c = total_coherence(&psi.to_density()).unwrap();
            assert!((c - pure_coherence_closed_form(d).unwrap()).abs() < 1e-9, "d = {d}");
        }
    }

    #[test]
    fn w_state_total_coherence() {
        let rho = make_state(&StateRecipe::w(0.9, 0.4)).unwrap();
        assert!((total_coherence(&rho).unwrap() - 0.847).abs() < 5e-4);
    }

    #[test]
    fn werner_closed_form_cases() {
        assert_eq!(werner_coherence_closed_form(0.0, 4).unwrap(), 0.0);
        let at_one = werner_coherence_closed_form(1.0, 4).unwrap();
        assert!((at_one - pure_coherence_closed_form(4).unwrap()).abs() < 1e-12);
        let psi = random_pure(&[2], &mut seeded_rng(3)).unwrap();
        let numeric = total_coherence(&werner(&psi, 0.5).unwrap()).unwrap();
        assert!((werner_coherence_closed_form(0.5, 2).unwrap() - numeric).abs() < 1e-9);
        assert!(werner_coherence_closed_form(1.2, 2).is_err());
        assert!(werner_coherence_closed_form(0.5, 1).is_err());
    }

    #[test]
    fn werner_closed_form_is_monotone() {
        let mut prev = 0.0;
        for k in 0..=100 {
            let c = werner_coherence_closed_form(k as f64 / 100.0, 8).unwrap();
            assert!(c - prev >= -1e-12);
            prev = c;
        }
    }

    #[test]
    fn basis_coherence_of_diagonal_state_is_zero() {
        let rho = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4], &[2, 2]).unwrap();
        let b = BasisSpec::computational(&[2, 2]).unwrap();
        let res = basis_coherence(&rho, &b, &OptimizerConfig::default()).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.minimizer.max_distance(&rho) < 1e-15);
        let mixed = maximally_mixed(&[2, 2]).unwrap();
        let had = BasisSpec::hadamard(2).unwrap();
        assert_eq!(
            basis_coherence(&mixed, &had, &OptimizerConfig::default())
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn basis_coherence_bounds() {
        let plus = make_state(&StateRecipe::plus_product(1)).unwrap();
        let z = BasisSpec::computational(&[2]).unwrap();
        let res = basis_coherence(&plus, &z, &OptimizerConfig::default()).unwrap();
        assert!(res.value > 0.1);

        let rho = random_mixed(&[2, 2], &mut seeded_rng(12)).unwrap();
        let res = basis_coherence(&rho, &z_basis(4), &OptimizerConfig::default()).unwrap();
        let via_dephased = divergence::metric(&rho, &rho.dephase(&z_basis(4)).unwrap()).unwrap();
        assert!(res.value <= via_dephased);
        assert!(res.value <= total_coherence(&rho).unwrap());
    }

    fn z_basis(d: usize) -> BasisSpec {
        BasisSpec::computational(&[d]).unwrap()
    }

    #[test]
    fn basis_coherence_is_seed_independent() {
        let rho = random_mixed(&[2, 2], &mut seeded_rng(77)).unwrap();
        let b = BasisSpec::hadamard(2).unwrap();
        let values: Vec<f64> = (0..4)
            .map(|s| {
                basis_coherence(&rho, &b, &OptimizerConfig::default().with_seed(s))
                    .unwrap()
                    .value
            })
            .collect();
        for v in &values {
            assert!((v - values[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn delta_coherence_cases() {
        let cfg = OptimizerConfig::default();
        let b = BasisSpec::computational(&[2, 2]).unwrap();
        let mixed = maximally_mixed(&[2, 2]).unwrap();
        assert_eq!(delta_coherence(&mixed, &b, &cfg, DeltaConvention::Argmin).unwrap(), 0.0);
        let diag = DensityMatrix::from_diagonal(&[0.5, 0.3, 0.2, 0.0], &[2, 2]).unwrap();
        let dc = delta_coherence(&diag, &b, &cfg, DeltaConvention::Argmin).unwrap();
        assert!((dc - total_coherence(&diag).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn delta_triangle_on_ghz() {
        let cfg = OptimizerConfig::default();
        let b = BasisSpec::computational(&[2, 2, 2]).unwrap();
        for k in 1..=8 {
            let theta = k as f64 * std::f64::consts::PI / 8.0;
            let rho = make_state(&StateRecipe::ghz(3, theta)).unwrap();
            let c = total_coherence(&rho).unwrap();
            let cb = basis_coherence(&rho, &b, &cfg).unwrap();
            let dc = total_coherence(&cb.minimizer).unwrap();
            assert!(cb.value + dc - c >= -1e-9);
        }
    }

    #[test]
    fn unitary_invariance_cases() {
        let mut rng = seeded_rng(14);
        let rho = random_mixed(&[4], &mut rng).unwrap();
        assert_eq!(
            unitary_invariance_check(&rho, &UnitaryMatrix::identity(4)).unwrap(),
            0.0
        );
        let u = UnitaryMatrix::haar_random(4, &mut rng);
        assert!(unitary_invariance_check(&rho, &u).unwrap() <= 1e-9);
        let local = UnitaryMatrix::kron_all(&[
            UnitaryMatrix::haar_random(2, &mut rng),
            UnitaryMatrix::haar_random(2, &mut rng),
        ])
        .unwrap();
        assert!(unitary_invariance_check(&rho, &local).unwrap() <= 1e-9);
    }

    #[test]
    fn basis_json_loading() {
        let b = BasisSpec::from_json_str(r#"{"label":"swap","re":[[0,1],[1,0]]}"#).unwrap();
        assert_eq!(b.label(), "swap");
        assert!(BasisSpec::from_json_str(r#"{"re":[[1,1],[0,1]]}"#).is_err());
        assert!(BasisSpec::named("hadamard", &[3]).is_err());
        assert_eq!(BasisSpec::named("hadamard", &[2, 2]).unwrap().dim(), 4);
    }
}
