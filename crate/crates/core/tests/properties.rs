use nhomog_core::instances::{random_gaussian, random_irreducible, random_psd};
use nhomog_core::matrix::{frob, hermitian_part, psd_order, psd_power, real, CMatrix, PsdOrder};
use nhomog_core::star_algebra::{commutant, is_irreducible, word_span};
use nhomog_core::sw_engine::{envelope_power, loewner_heinz_check};
use nhomog_core::{decompose, StarPolynomial, Tolerance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psd_square_root_squares_back(seed in any::<u64>(), n in 1usize..5) {
        let tol = Tolerance::default();
        let a = random_psd(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let r = psd_power(&a, 0.5, &tol).unwrap();
        prop_assert!(frob(&(&r * &r - &a)) < 1e-10 * (1.0 + frob(&a)));
    }

    #[test]
    fn loewner_heinz_holds(seed in any::<u64>(), n in 1usize..5, s in 0.05f64..0.95) {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_psd(&mut rng, n);
        let c = random_gaussian(&mut rng, n, n) * real(0.2);
        let b = hermitian_part(&(&a + &c * c.adjoint()));
        prop_assert!(psd_order(&a, &b, &tol).unwrap() != PsdOrder::Incomparable);
        for (_, m) in loewner_heinz_check(&a, &b, &[s], &tol).unwrap() {
            prop_assert!(m >= -1e-8);
        }
    }

    #[test]
    fn schur_matches_burnside(seed in any::<u64>(), n in 1usize..4, k in 1usize..3, split in any::<bool>()) {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = if split {
            let a = random_irreducible(&mut rng, n, k);
            nhomog_core::instances::direct_sum(&[a.clone(), a], 0)
        } else {
            random_irreducible(&mut rng, n, k)
        };
        let scalar = commutant(&t, &tol).unwrap().dim() == 1;
        let full = word_span(&t, &tol).unwrap().dim() == t.d * t.d;
        prop_assert_eq!(scalar, full);
        prop_assert_eq!(is_irreducible(&t, &tol).unwrap(), !split);
    }

    #[test]
    fn decomposition_reassembles(seed in any::<u64>(), n in 1usize..4, classes in 1usize..3, zero in 0usize..2) {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = nhomog_core::instances::random_homogeneous(&mut rng, n, 2, classes, 2, zero);
        let dec = decompose(&inst.tuple, &tol, seed).unwrap();
        prop_assert_eq!(dec.zero_dim(), zero);
        prop_assert!(dec.block_diagonal_residual() < 1e-8);
        let mut dims = dec.class_dims();
        dims.dedup();
        prop_assert_eq!(dims, vec![n]);
    }

    #[test]
    fn polynomial_text_roundtrips(seed in any::<u64>(), terms in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = nhomog_core::polynomial::random_polynomial(&mut rng, 3, terms, 3);
        let q = StarPolynomial::parse(&p.to_string()).unwrap();
        let t = nhomog_core::instances::random_irreducible(&mut rng, 3, 3);
        let (a, b) = (
            nhomog_core::polynomial::eval_star_polynomial(&p, &t).unwrap(),
            nhomog_core::polynomial::eval_star_polynomial(&q, &t).unwrap(),
        );
        prop_assert!(frob(&(&a - &b)) <= 1e-12 * (1.0 + frob(&a)));
    }

    #[test]
    fn envelope_power_is_minimal(k in 1usize..40, eps in 0.01f64..2.0, r in 0.01f64..5.0) {
        let n = envelope_power(k, eps, r);
        prop_assert!(n >= 2);
        let ok = |m: usize| (k as f64).powf(1.0 / m as f64) <= 1.0 + eps / r;
        prop_assert!(ok(n));
        prop_assert!(n == 2 || !ok(n - 1));
    }
}

#[test]
fn zero_matrix_is_its_own_root() {
    let tol = Tolerance::default();
    let z = CMatrix::zeros(3, 3);
    assert_eq!(psd_power(&z, 0.5, &tol).unwrap(), z);
}
