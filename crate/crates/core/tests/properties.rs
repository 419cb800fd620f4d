//! Property tests over seeded random instances. Strategies draw seeds and
//! small shape parameters; matrices are generated from the seed.

use cstar_core::algebra::{
    commutant, commutant_by_linear_system, conditional_expectation, tensor_embedding,
    SubalgebraEmbedding,
};
use cstar_core::certificate::verify_certificate;
use cstar_core::fullness::{certificate_from_expectation, design_certificate, relatively_full};
use cstar_core::haar::{
    ginibre, haar_unitary, haar_unitary_with, random_psd, random_unit_vector, rng_from_seed,
};
use cstar_core::ksearch::{
    k_lower_bound, narrow_interval, search_unitary, SearchBudget, SearchStatus,
};
use cstar_core::matrix::{ComplexMatrix, ToleranceConfig, C64};
use cstar_core::orthogonality::{
    block_norm, certify_nonorthogonal_conjugate, contraction, intertwiner_construct, reconstruct,
    slices, NonOrthStatus,
};
use cstar_core::spectral::{cutoff_apply, min_eigenvalue, positive_part_shift};
use cstar_core::tower::{
    build_uhf_tower, christensen_budget, regularity_check, verify_commuting_squares,
};
use proptest::prelude::*;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// Random embedding `⊕ M_{nᵢ} ⊗ 1_m` in a random basis.
fn random_embedding(seed: u64, blocks: &[usize], m: usize) -> SubalgebraEmbedding {
    let base = tensor_embedding(
        &SubalgebraEmbedding::block_diagonal(blocks).unwrap(),
        &SubalgebraEmbedding::scalars(m),
    );
    let v = haar_unitary(base.ambient_dim(), seed).unwrap();
    base.conjugated(&v).unwrap()
}

fn commutant_element(emb: &SubalgebraEmbedding, seed: u64) -> ComplexMatrix {
    let c = commutant(emb);
    let mut rng = rng_from_seed(seed);
    c.basis()
        .iter()
        .fold(ComplexMatrix::zeros(emb.ambient_dim()), |acc, b| {
            acc + b.scale_c(cstar_core::haar::gaussian_c64(&mut rng))
        })
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn tensor_mixed_product_and_associativity(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let (a, c) = (ginibre(&mut rng, 3), ginibre(&mut rng, 3));
        let (b, d) = (ginibre(&mut rng, 4), ginibre(&mut rng, 4));
        let lhs = &a.tensor(&b) * &c.tensor(&d);
        let rhs = (&a * &c).tensor(&(&b * &d));
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * lhs.max_abs().max(1.0));
        let e = ginibre(&mut rng, 2);
        let l = a.tensor(&b).tensor(&e);
        let r = a.tensor(&b.tensor(&e));
        prop_assert!((&l - &r).max_abs() <= 1e-12);
    }

    #[test]
    fn haar_is_unitary(seed in any::<u64>(), n in 1usize..=64) {
        let u = haar_unitary(n, seed).unwrap();
        prop_assert!(u.unitarity_residual() <= tol().identity_tol);
    }

    #[test]
    fn positive_part_below_and_cutoff_contraction(seed in any::<u64>(), eps in 0.01f64..2.0) {
        let mut rng = rng_from_seed(seed);
        let g = ginibre(&mut rng, 5);
        let a = g.hermitian_part();
        let p = positive_part_shift(&a, eps).unwrap();
        // (a − ε)₊ ≤ a fails only where a has negative spectrum; compare with a₊.
        let a_plus = positive_part_shift(&a, 1e-300).unwrap();
        prop_assert!(min_eigenvalue(&(&a_plus - &p)).unwrap() >= -1e-9);
        let b = random_psd(&mut rng, 5, 3);
        let phi = cutoff_apply(&b, 0.1, 0.1 + eps).unwrap();
        prop_assert!(phi.op_norm() <= 1.0 + 1e-12);
        prop_assert!(min_eigenvalue(&phi).unwrap() >= -1e-12);
    }

    #[test]
    fn expectation_is_idempotent_positive_bimodule(
        seed in any::<u64>(),
        blocks in prop::collection::vec(1usize..=3, 1..=2),
        m in 1usize..=2,
    ) {
        let emb = random_embedding(seed, &blocks, m);
        let n = emb.ambient_dim();
        let mut rng = rng_from_seed(seed ^ 1);
        let a = ginibre(&mut rng, n);
        let e = conditional_expectation(&emb, &a).unwrap();
        let ee = conditional_expectation(&emb, &e).unwrap();
        prop_assert!((&ee - &e).op_norm() <= 1e-10);
        let p = random_psd(&mut rng, n, 1 + (seed as usize) % n);
        prop_assert!(min_eigenvalue(&conditional_expectation(&emb, &p).unwrap()).unwrap() >= -1e-9);
        let c1 = commutant_element(&emb, seed ^ 2);
        let c2 = commutant_element(&emb, seed ^ 3);
        let lhs = conditional_expectation(&emb, &(&(&c1 * &a) * &c2)).unwrap();
        let rhs = &(&c1 * &e) * &c2;
        prop_assert!((&lhs - &rhs).op_norm() <= 1e-9 * rhs.op_norm().max(1.0));
    }

    #[test]
    fn commutant_dimension_matches_multiplicities(
        seed in any::<u64>(),
        blocks in prop::collection::vec(1usize..=3, 1..=3),
        m in 1usize..=3,
    ) {
        let emb = random_embedding(seed, &blocks, m);
        let c = commutant(&emb);
        prop_assert_eq!(c.dim(), blocks.len() * m * m);
        if emb.ambient_dim() <= 12 {
            let oracle = commutant_by_linear_system(&emb, &tol()).unwrap();
            prop_assert_eq!(oracle.dim(), c.dim());
        }
    }

    #[test]
    fn decision_covariance_scaling_monotonicity(seed in any::<u64>(), rank in 1usize..=6) {
        let t = tol();
        let emb = SubalgebraEmbedding::ampliation(2, 3);
        let mut rng = rng_from_seed(seed);
        let a = random_psd(&mut rng, 6, rank);
        let d = relatively_full(&a, &emb, &t).unwrap();
        let (_, v) = emb.sample_unitary(&mut rng);
        let av = a.congruence(&v);
        let e1 = conditional_expectation(&emb, &a).unwrap();
        let e2 = conditional_expectation(&emb, &av).unwrap();
        prop_assert!((&e1 - &e2).op_norm() <= 1e-10);
        prop_assert_eq!(relatively_full(&av, &emb, &t).unwrap().decision, d.decision);
        for s in [1e-3, 1.0, 1e3] {
            prop_assert_eq!(relatively_full(&a.scale(s), &emb, &t).unwrap().decision, d.decision);
        }
        let bigger = &a + &random_psd(&mut rng, 6, 1);
        if d.is_full() {
            prop_assert!(relatively_full(&bigger, &emb, &t).unwrap().is_full());
        }
    }

    #[test]
    fn produced_certificates_verify(seed in any::<u64>(), rank in 2usize..=6) {
        let t = tol();
        let emb = SubalgebraEmbedding::ampliation(2, 3);
        let mut rng = rng_from_seed(seed);
        let a = random_psd(&mut rng, 6, rank);
        if relatively_full(&a, &emb, &t).unwrap().is_full() {
            let c = certificate_from_expectation(&a, &emb, 0.5, seed, 20_000, &t).unwrap();
            prop_assert!(verify_certificate(&a, &c, Some(&emb), &t).valid);
            let c = design_certificate(&a, &emb, &t).unwrap();
            prop_assert!(verify_certificate(&a, &c, Some(&emb), &t).valid);
        }
    }

    #[test]
    fn slice_reconstruction_and_block_norm(seed in any::<u64>(), d in 2usize..=4, k in 2usize..=4) {
        let mut rng = rng_from_seed(seed);
        let u = haar_unitary_with(&mut rng, d * k);
        let s = slices(&u, d, k).unwrap();
        prop_assert!((&reconstruct(&s, k).unwrap() - &u).max_abs() <= 1e-12);
        let x = random_unit_vector(&mut rng, d);
        let y = random_unit_vector(&mut rng, d);
        let f2: f64 = s
            .iter()
            .map(|uj| {
                let v = uj.apply(&y);
                x.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
            })
            .sum();
        let c = contraction(&s, k, &x, &y);
        prop_assert!((c.frobenius_norm().powi(2) - f2).abs() <= 1e-12);
        let op = block_norm(&u, d, k, &x, &y).unwrap();
        let f = f2.sqrt();
        prop_assert!(op <= f + 1e-12 && op >= f / (k as f64).sqrt() - 1e-12);
    }

    #[test]
    fn identity_unitary_is_refuted(d in 2usize..=4, k in 2usize..=4, seed in any::<u64>()) {
        let u = ComplexMatrix::identity(d * k);
        let r = certify_nonorthogonal_conjugate(&u, d, k, 500, seed, &tol()).unwrap();
        prop_assert_eq!(r.status, NonOrthStatus::Refuted);
    }

    #[test]
    fn christensen_inequalities(n in 1usize..=4, eps in 0.001f64..0.5) {
        let b = christensen_budget(n, eps).unwrap();
        prop_assert!(b.delta < 1e-4);
        prop_assert!(b.gammas[0] <= eps);
        prop_assert!(b.gammas[1..n].iter().all(|g| 2.0 * g < 1e-4));
        prop_assert!(b.gammas.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn k_lower_bound_is_exact(d in 2usize..=1000) {
        let k = k_lower_bound(d);
        prop_assert!(k * k > d && (k - 1) * (k - 1) < d + 1);
    }
}

proptest! {
    #![proptest_config(cfg(6))]

    #[test]
    fn refutation_is_monotone_in_budget(seed in any::<u64>(), d in 2usize..=3) {
        let t = tol();
        let mut rng = rng_from_seed(seed);
        // Block-diagonal u = ⊕ v: conjugation fixes the diagonal projections,
        // so refutation is available.
        let v = haar_unitary_with(&mut rng, 2);
        let u = ComplexMatrix::identity(d).tensor(&v);
        let mut refuted = false;
        for budget in [50, 200, 1000] {
            let r = certify_nonorthogonal_conjugate(&u, d, 2, budget, seed, &t).unwrap();
            if refuted {
                prop_assert_eq!(r.status, NonOrthStatus::Refuted);
            }
            refuted |= r.status == NonOrthStatus::Refuted;
        }
    }

    #[test]
    fn uhf_towers_are_regular_commuting_squares(
        seed in any::<u64>(),
        k1 in 2usize..=3,
        d1 in 2usize..=3,
        k2 in 2usize..=4,
        d2 in 2usize..=3,
    ) {
        let ks = [k1, k2];
        let ls = [k1 * d1, k2 * d2];
        let t = build_uhf_tower(&ks, &ls, 2, seed).unwrap();
        let rep = verify_commuting_squares(&t, false).unwrap();
        prop_assert!(rep.passed && rep.max_residual <= 1e-9);
        let r = regularity_check(&t, 1, 2, &tol()).unwrap();
        prop_assert!(r.regular);
        let params = t.params.as_ref().unwrap();
        let mut n = 1;
        for (i, l) in params.regrouped_ls.iter().enumerate() {
            n *= l;
            prop_assert_eq!(t.level(i + 1).unwrap().ambient_dim(), n);
        }
    }
}

#[test]
fn search_with_k_equal_d_finds_witness() {
    for d in 2..=4 {
        let r = search_unitary(d, d, &SearchBudget::default(), 0).unwrap();
        assert_eq!(r.status, SearchStatus::WitnessFound, "d = {d}");
    }
}

#[test]
fn witness_recertifies_from_json() {
    let r = search_unitary(3, 3, &SearchBudget::default(), 5).unwrap();
    assert_eq!(r.status, SearchStatus::WitnessFound);
    let text = serde_json::to_string(&r).unwrap();
    let back: cstar_core::ksearch::SearchResult = serde_json::from_str(&text).unwrap();
    let rep =
        certify_nonorthogonal_conjugate(&back.best_unitary, 3, 3, 10_000, 99, &tol()).unwrap();
    assert!(rep.is_certified());
    assert!(
        (rep.margin - r.best_margin).abs() <= 0.1 * r.best_margin,
        "{} vs {}",
        rep.margin,
        r.best_margin
    );
}

#[test]
fn interval_upper_end_monotone_in_budget() {
    let mut last = usize::MAX;
    for starts in [0, 2, 4] {
        let budget = SearchBudget {
            starts,
            ..SearchBudget::default()
        };
        let iv = narrow_interval(4, &budget, 1).unwrap();
        assert!(iv.k_hi <= last);
        last = iv.k_hi;
    }
}

#[test]
fn intertwiner_identity_small_cases() {
    for d in 2..=4 {
        for k in d..=5 {
            assert!(intertwiner_construct(d, k).unwrap().identity_residual() <= 1e-10);
        }
    }
}
