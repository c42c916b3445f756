use nhomog_core::calculus::{calc_polynomial, calc_table, reconstruct_generators, OrbitTable};
use nhomog_core::instances::{random_fn_algebra, random_homogeneous, FnAlgebraStyle};
use nhomog_core::matrix::{frob, from_real_rows, op_norm};
use nhomog_core::nspace::{gelfand_isometry_defect, gelfand_transform, ideal_from_generators, vanishing_set};
use nhomog_core::sw_engine::{closure_star_subalgebra, delta2_subspace, density_check};
use nhomog_core::{decompose, homogeneity_verdict, n_spectrum, MatTuple, StarPolynomial, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn paulis() -> MatTuple {
    MatTuple::new(vec![
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]),
    ])
    .unwrap()
}

#[test]
fn pauli_pair_is_two_homogeneous() {
    let tol = Tolerance::default();
    let report = homogeneity_verdict(&paulis(), 2, &tol, 0).unwrap();
    assert!(report.is_n_homogeneous);
    assert_eq!(report.block_dims, vec![2]);
    let spec = n_spectrum(&paulis(), 2, &tol, 0).unwrap();
    assert_eq!(spec.points.len(), 1);
}

#[test]
fn decomposition_feeds_the_calculus() {
    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let inst = random_homogeneous(&mut rng, 2, 2, 2, 2, 1);
    let dec = decompose(&inst.tuple, &tol, 5).unwrap();
    let back = reconstruct_generators(&dec).unwrap();
    for (a, b) in back.gens.iter().zip(&inst.tuple.gens) {
        assert!(frob(&(a - b)) <= 1e-8 * (1.0 + frob(b)));
    }
    let p = StarPolynomial::parse("z1*z2' + 2*z2*z2 - (0.5+1i)*z1'").unwrap();
    let via_dec = calc_polynomial(&p, &dec).unwrap();
    let table = OrbitTable::from_fn(&dec, |_, rep| nhomog_core::polynomial::eval_star_polynomial(&p, rep).unwrap()).unwrap();
    assert!(frob(&(calc_table(&table, &dec).unwrap() - &via_dec)) < 1e-8 * (1.0 + frob(&via_dec)));
    assert!((op_norm(&via_dec) - table.sup_norm()).abs() < 1e-8 * (1.0 + op_norm(&via_dec)));
}

#[test]
fn gelfand_picture_is_isometric() {
    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let inst = random_homogeneous(&mut rng, 2, 2, 3, 1, 0);
    let g = gelfand_transform(&inst.tuple, 2, &tol, 0).unwrap();
    assert_eq!(g.space.orbits, 3);
    for _ in 0..5 {
        let p = nhomog_core::polynomial::random_polynomial(&mut rng, 2, 3, 3).without_constant();
        assert!(gelfand_isometry_defect(&inst.tuple, &g, &p).unwrap() < 1e-8 * 10.0);
    }
    let ideal = ideal_from_generators(&g.images[..1], g.space, &tol).unwrap();
    assert!(vanishing_set(&ideal.ideal_basis, g.space, &tol).is_empty());
}

#[test]
fn sw_checks_on_structured_algebras() {
    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let dense = random_fn_algebra(&mut rng, 3, 2, 2, FnAlgebraStyle::DENSE);
    let e = closure_star_subalgebra(3, 2, &dense.gens, &tol).unwrap();
    let r = density_check(&e, &tol, 0).unwrap();
    assert!(r.dense);
    assert_eq!(r.criterion, Some(true));

    let linked = random_fn_algebra(&mut rng, 4, 2, 2, FnAlgebraStyle { link_prob: 1.0, diag_prob: 0.0, vanishing: false });
    let e = closure_star_subalgebra(4, 2, &linked.gens, &tol).unwrap();
    assert_eq!(e.dim(), 4);
    assert!(delta2_subspace(&e, &tol).unwrap().same_subspace(&e.basis, &tol));
    let r = density_check(&e, &tol, 0).unwrap();
    assert!(!r.dense);
    assert_eq!(r.criterion, Some(false));
}
