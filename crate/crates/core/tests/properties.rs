use proptest::prelude::*;

use qcohere::coherence::{
    basis_coherence, pure_coherence_closed_form, total_coherence, werner_coherence_closed_form, BasisSpec,
};
use qcohere::decompose::{
    collective_coherence, intrinsic_coherence, localized_coherence, product_of_marginals, IntrinsicOptions,
};
use qcohere::divergence::metric;
use qcohere::optim::{OptimizerConfig, Parametrization};
use qcohere::qstate::{random_mixed, random_pure, seeded_rng, DensityMatrix, UnitaryMatrix};

fn mixed(dims: &[usize], seed: u64) -> DensityMatrix {
    random_mixed(dims, &mut seeded_rng(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_symmetric_bounded_and_zero_on_diagonal(d in 2usize..6, s1: u64, s2: u64) {
        let a = mixed(&[d], s1);
        let b = mixed(&[d], s2 ^ 1);
        let ab = metric(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - metric(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(metric(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn metric_is_jointly_unitary_invariant(d in 2usize..6, seed: u64) {
        let mut rng = seeded_rng(seed);
        let a = random_mixed(&[d], &mut rng).unwrap();
        let b = random_mixed(&[d], &mut rng).unwrap();
        let u = UnitaryMatrix::haar_random(d, &mut rng);
        let moved = metric(&a.conjugate(&u).unwrap(), &b.conjugate(&u).unwrap()).unwrap();
        prop_assert!((moved - metric(&a, &b).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn entropy_is_additive_on_products(d1 in 2usize..4, d2 in 2usize..4, seed: u64) {
        let mut rng = seeded_rng(seed);
        let a = random_mixed(&[d1], &mut rng).unwrap();
        let b = random_mixed(&[d2], &mut rng).unwrap();
        let joint = a.tensor(&b).entropy().unwrap();
        prop_assert!((joint - a.entropy().unwrap() - b.entropy().unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn partial_trace_recovers_factors(seed: u64) {
        let a = mixed(&[2], seed);
        let b = mixed(&[3], seed ^ 7);
        let ab = a.tensor(&b);
        prop_assert!(ab.partial_trace(&[0]).unwrap().max_distance(&a) <= 1e-12);
        prop_assert!(ab.partial_trace(&[1]).unwrap().max_distance(&b) <= 1e-12);
        prop_assert!(product_of_marginals(&ab).unwrap().max_distance(&ab) <= 1e-12);
    }

    #[test]
    fn total_coherence_is_bounded_by_the_pure_value(d in 2usize..9, seed: u64, pure: bool) {
        let mut rng = seeded_rng(seed);
        let rho = if pure {
            random_pure(&[d], &mut rng).unwrap().to_density()
        } else {
            random_mixed(&[d], &mut rng).unwrap()
        };
        let c = total_coherence(&rho).unwrap();
        let bound = pure_coherence_closed_form(d).unwrap();
        prop_assert!(c <= bound + 1e-12);
        if pure {
            prop_assert!((c - bound).abs() <= 1e-9);
        }
    }

    #[test]
    fn basis_coherence_is_below_the_dephased_distance(d in 2usize..5, seed: u64) {
        let rho = mixed(&[d], seed);
        let b = BasisSpec::computational(&[d]).unwrap();
        let cfg = OptimizerConfig { starts: 3, max_evals: 2000, ..Default::default() };
        let found = basis_coherence(&rho, &b, &cfg).unwrap();
        let dephased = rho.dephase(&b).unwrap();
        prop_assert!(found.value <= metric(&rho, &dephased).unwrap() + 1e-12);
        // Triangle through the minimizer.
        let gap = total_coherence(&found.minimizer).unwrap();
        prop_assert!(found.value + gap >= total_coherence(&rho).unwrap() - 1e-9);
    }

    #[test]
    fn dephasing_is_idempotent(d in 2usize..6, seed: u64) {
        let rho = mixed(&[d], seed);
        let b = BasisSpec::computational(&[d]).unwrap();
        let once = rho.dephase(&b).unwrap();
        prop_assert!(once.dephase(&b).unwrap().max_distance(&once) <= 1e-15);
    }

    #[test]
    fn werner_closed_form_is_monotone_in_mu(d in 2usize..17, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(werner_coherence_closed_form(lo, d).unwrap() <= werner_coherence_closed_form(hi, d).unwrap() + 1e-12);
    }

    #[test]
    fn simplex_round_trip(w in proptest::collection::vec(0.01f64..1.0, 2..8)) {
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let param = Parametrization::simplex(p.len()).unwrap();
        let back = param.to_feasible(&param.to_internal(&p));
        for (x, y) in p.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn intrinsic_never_exceeds_collective(seed: u64) {
        let rho = mixed(&[2, 2], seed);
        let opts = IntrinsicOptions {
            optimizer: OptimizerConfig { starts: 2, max_evals: 500, ..Default::default() },
            terms: None,
        };
        let ci = intrinsic_coherence(&rho, &opts).unwrap().value;
        prop_assert!(ci <= collective_coherence(&rho).unwrap() + 1e-9);
    }

    #[test]
    fn collective_plus_localized_bounds_total(seed: u64, qubits in 2usize..4) {
        let rho = mixed(&vec![2; qubits], seed);
        let slack = collective_coherence(&rho).unwrap() + localized_coherence(&rho).unwrap()
            - total_coherence(&rho).unwrap();
        prop_assert!(slack >= -1e-9);
    }
}

#[test]
fn hilbert_schmidt_sampler_averages_to_maximally_mixed() {
    let d = 3;
    let n = 20_000;
    let mut rng = seeded_rng(17);
    let mut sum = qcohere::CMatrix::zeros(d, d);
    for _ in 0..n {
        sum += random_mixed(&[d], &mut rng).unwrap().matrix();
    }
    let mean = sum.unscale(n as f64);
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 / d as f64 } else { 0.0 };
            assert!((mean[(i, j)].re - target).abs() < 5e-3 && mean[(i, j)].im.abs() < 5e-3);
        }
    }
}

#[test]
fn haar_sampler_has_uniform_populations() {
    let d = 4;
    let n = 20_000;
    let mut rng = seeded_rng(18);
    let mut pop = vec![0.0; d];
    for _ in 0..n {
        let psi = random_pure(&[d], &mut rng).unwrap();
        for (p, a) in pop.iter_mut().zip(psi.amplitudes().iter()) {
            *p += a.norm_sqr();
        }
    }
    for p in pop {
        assert!((p / n as f64 - 0.25).abs() < 5e-3);
    }
}

#[test]
fn localized_depends_only_on_marginals() {
    let bell = qcohere::qstate::make_state(&qcohere::qstate::StateRecipe::bell()).unwrap();
    let classical = DensityMatrix::from_diagonal(&[0.5, 0.0, 0.0, 0.5], &[2, 2]).unwrap();
    assert!((localized_coherence(&bell).unwrap() - localized_coherence(&classical).unwrap()).abs() <= 1e-12);
}
