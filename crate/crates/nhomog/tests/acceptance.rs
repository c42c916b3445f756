//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use nhomog_core::calculus::{
    calc_polynomial, calc_table, dominated_convergence_run, invariant_spectral_projection, n_measure_entry_mc,
    reconstruct_generators, OrbitTable, Region,
};
use nhomog_core::haar::{equivariant_average, mc_radius, twirl_exact, McConfig};
use nhomog_core::instances::{
    conjugate, direct_sum, random_fn_algebra, random_gaussian, random_homogeneous, random_irreducible, random_psd,
    random_unitary, FnAlgebraStyle,
};
use nhomog_core::matrix::{frob, herm_fun, op_norm, psd_order, real, sqrt_psd};
use nhomog_core::nspace::{
    classify_matrix_rep, gelfand_isometry_defect, gelfand_transform, ideal_from_generators, ideal_of_set,
    point_evaluation_images, vanishing_set, EquivariantElement, FiniteNSpace, PointRef, RepClass,
};
use nhomog_core::polynomial::random_polynomial;
use nhomog_core::star_algebra::{commutant, intertwiner_space, word_span};
use nhomog_core::sw_engine::{
    check_hypotheses, closure_star_subalgebra, delta2_subspace, density_check, loewner_heinz_check,
    power_mean_envelope,
};
use nhomog_core::{c64, decompose, CMatrix, Tolerance, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn reconstruction() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = r.random_range(1..=4);
        let k = r.random_range(1..=3);
        let classes = r.random_range(1..=(22 / (2 * n)).clamp(1, 3));
        let zero = r.random_range(0..=2);
        let inst = random_homogeneous(&mut r, n, k, classes, 2, zero);
        let dec = decompose(&inst.tuple, &tol, i).map_err(|e| format!("instance {i}: {e}"))?;
        if dec.classes.len() != classes || dec.zero_dim() != zero {
            return Err(format!("instance {i}: {} classes and zero dim {}", dec.classes.len(), dec.zero_dim()));
        }
        let back = reconstruct_generators(&dec).map_err(|e| format!("instance {i}: {e}"))?;
        let rel = inst.tuple.distance(&back) / inst.tuple.scale();
        worst = worst.max(rel);
        if rel > 1e-8 {
            return Err(format!("instance {i}: relative error {rel:.3e}"));
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn gelfand_isometry() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = r.random_range(1..=3);
        let k = r.random_range(1..=3);
        let (classes, zero) = (r.random_range(1..=3), r.random_range(0..=1));
        let inst = random_homogeneous(&mut r, n, k, classes, 2, zero);
        let g = gelfand_transform(&inst.tuple, n, &tol, i).map_err(fail)?;
        let dec = decompose(&inst.tuple, &tol, i).map_err(fail)?;
        for _ in 0..50 {
            let terms = r.random_range(1..=4);
            let p = random_polynomial(&mut r, k, terms, 3);
            let value = op_norm(&calc_polynomial(&p, &dec).map_err(fail)?);
            let defect = gelfand_isometry_defect(&inst.tuple, &g, &p).map_err(fail)?;
            worst = worst.max(defect / (1.0 + value));
            if defect > 1e-8 * (1.0 + value) {
                return Err(format!("instance {i}: defect {defect:.3e} for {p}"));
            }
        }
    }
    Ok(format!("worst scaled defect {worst:.2e}"))
}

fn random_table(r: &mut ChaCha8Rng, dec: &nhomog_core::Decomposition) -> OrbitTable {
    OrbitTable::from_fn(dec, |_, c| random_gaussian(r, c.d, c.d)).unwrap()
}

fn calculus_homomorphism() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = r.random_range(1..=3);
        let (classes, zero) = (r.random_range(1..=3), r.random_range(0..=1));
        let inst = random_homogeneous(&mut r, n, 2, classes, 2, zero);
        let dec = decompose(&inst.tuple, &tol, i).map_err(fail)?;
        let (f, g) = (random_table(&mut r, &dec), random_table(&mut r, &dec));
        let cf = calc_table(&f, &dec).map_err(fail)?;
        let cg = calc_table(&g, &dec).map_err(fail)?;
        let prod = calc_table(&f.mul(&g).map_err(fail)?, &dec).map_err(fail)?;
        let adj = calc_table(&f.adjoint(), &dec).map_err(fail)?;
        let e1 = frob(&(&prod - &cf * &cg)) / (1.0 + frob(&prod));
        let e2 = frob(&(&adj - cf.adjoint())) / (1.0 + frob(&adj));
        worst = worst.max(e1).max(e2);
        if e1.max(e2) > 1e-8 {
            return Err(format!("instance {i}: product error {e1:.3e}, adjoint error {e2:.3e}"));
        }
    }
    Ok(format!("worst relative error {worst:.2e}"))
}

fn operator_monotone_powers() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(4);
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let mut lowest = f64::INFINITY;
    for i in 0..1000 {
        let d = r.random_range(1..=5);
        let b = random_psd(&mut r, d);
        // a = b - b^(1/2) (theta c c* / ||c||^2) b^(1/2) stays between 0 and b.
        let cols = r.random_range(1..=d);
        let c = random_gaussian(&mut r, d, cols);
        let theta: f64 = r.random();
        let root = sqrt_psd(&b, &tol).map_err(fail)?;
        let k = &c * c.adjoint() / real(op_norm(&c).powi(2));
        let a = nhomog_core::matrix::hermitian_part(&(&b - &root * k * &root * real(theta)));
        let mins = loewner_heinz_check(&a, &b, &grid, &tol).map_err(|e| format!("pair {i}: {e}"))?;
        for (s, m) in mins {
            lowest = lowest.min(m);
            if m < -1e-8 {
                return Err(format!("pair {i}: eigenvalue {m:.3e} at s = {s}"));
            }
        }
    }
    Ok(format!("lowest eigenvalue {lowest:.2e}"))
}

fn commuting_envelopes() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(5);
    let mut max_power = 0;
    for i in 0..200 {
        let d = r.random_range(1..=5);
        let b = random_psd(&mut r, d);
        let top = op_norm(&b);
        let count = r.random_range(1..=4);
        let mut family = Vec::with_capacity(count);
        for _ in 0..count {
            let (p, w, cap): (f64, f64, f64) = (r.random_range(1.0..3.0), r.random(), r.random_range(0.0..top));
            let a = match r.random_range(0..3) {
                0 => herm_fun(&b, |l| l.max(0.0) * w, &tol),
                1 => herm_fun(&b, |l| l.max(0.0).powf(p) * top.powf(1.0 - p), &tol),
                _ => herm_fun(&b, |l| l.max(0.0).min(cap), &tol),
            }
            .map_err(fail)?;
            family.push(a);
        }
        let eps = 10f64.powi(-r.random_range(1..=4));
        let env = power_mean_envelope(&family, &b, eps, &tol).map_err(|e| format!("family {i}: {e}"))?;
        let upper = &b + CMatrix::identity(d, d) * real(eps);
        for a in &family {
            if !psd_order(a, &env.env, &tol).map_err(fail)?.is_leq() {
                return Err(format!("family {i}: envelope below a member"));
            }
        }
        if !psd_order(&env.env, &upper, &tol).map_err(fail)?.is_leq() {
            return Err(format!("family {i}: envelope above b + eps"));
        }
        max_power = max_power.max(env.power);
    }
    Ok(format!("largest exponent {max_power}"))
}

const STYLES: [FnAlgebraStyle; 4] = [
    FnAlgebraStyle::DENSE,
    FnAlgebraStyle { link_prob: 0.5, diag_prob: 0.0, vanishing: false },
    FnAlgebraStyle { link_prob: 0.3, diag_prob: 0.5, vanishing: false },
    FnAlgebraStyle { link_prob: 0.3, diag_prob: 0.3, vanishing: true },
];

fn delta2_equals_algebra() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(6);
    let (mut accepted, mut skipped) = (0, 0);
    let mut i = 0u64;
    while accepted < 200 {
        if i >= 400 {
            return Err(format!("only {accepted} hypothesis-satisfying instances in {i} draws"));
        }
        let (points, n, k) = (r.random_range(2..=4), r.random_range(1..=3), r.random_range(1..=2));
        let inst = random_fn_algebra(&mut r, points, n, k, STYLES[i as usize % 4]);
        let e = closure_star_subalgebra(inst.points, inst.n, &inst.gens, &tol).map_err(fail)?;
        let hyp = check_hypotheses(&e, &tol, i).map_err(fail)?;
        i += 1;
        if !hyp.pairs_ok {
            skipped += 1;
            continue;
        }
        let d2 = delta2_subspace(&e, &tol).map_err(fail)?;
        if !d2.same_subspace(&e.basis, &tol) {
            return Err(format!("instance {}: delta2 has dim {}, algebra {}", i - 1, d2.dim(), e.dim()));
        }
        accepted += 1;
    }
    Ok(format!("{accepted} instances, {skipped} skipped for failing the pair hypothesis"))
}

fn density_criterion() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(7);
    let (mut certified, mut undecided, mut dense) = (0, 0, 0);
    let mut i = 0u64;
    while certified < 200 {
        if i >= 1000 {
            return Err(format!("only {certified} certified instances in {i} draws"));
        }
        let (points, n, k) = (r.random_range(2..=4), r.random_range(1..=3), r.random_range(1..=2));
        let inst = random_fn_algebra(&mut r, points, n, k, STYLES[i as usize % 4]);
        let e = closure_star_subalgebra(inst.points, inst.n, &inst.gens, &tol).map_err(fail)?;
        let rep = density_check(&e, &tol, i).map_err(fail)?;
        i += 1;
        if rep.dense != inst.expect_dense() {
            return Err(format!("instance {}: dense = {} but the construction says {}", i - 1, rep.dense, inst.expect_dense()));
        }
        match rep.agrees() {
            Some(true) => {
                certified += 1;
                dense += rep.dense as usize;
            }
            Some(false) => return Err(format!("instance {}: density and criterion disagree", i - 1)),
            None => undecided += 1,
        }
    }
    let rate = undecided as f64 / i as f64;
    if rate > 0.05 {
        return Err(format!("not-found rate {:.1}% exceeds 5%", 100.0 * rate));
    }
    Ok(format!("{certified} certified ({dense} dense), not-found rate {:.1}%", 100.0 * rate))
}

fn ideal_roundtrip() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(8);
    for i in 0..100 {
        let space = FiniteNSpace::new(r.random_range(1..=3), r.random_range(1..=5));
        let a: Vec<usize> = (0..space.orbits).filter(|_| r.random_bool(0.4)).collect();
        let back = vanishing_set(&ideal_of_set(space, &a).map_err(fail)?, space, &tol);
        if back != a {
            return Err(format!("ideal {i}: set {a:?} came back as {back:?}"));
        }
        let gens: Vec<EquivariantElement> = (0..r.random_range(1..=2))
            .map(|_| {
                let values = (0..space.orbits)
                    .map(|o| if a.contains(&o) { CMatrix::zeros(space.n, space.n) } else { random_gaussian(&mut r, space.n, space.n) })
                    .collect();
                EquivariantElement::new(space, values).unwrap()
            })
            .collect();
        let rep = ideal_from_generators(&gens, space, &tol).map_err(|e| format!("ideal {i}: {e}"))?;
        if rep.vanishing_set != a {
            return Err(format!("ideal {i}: generators vanish on {:?}, expected {a:?}", rep.vanishing_set));
        }
    }
    Ok("100 ideals".into())
}

/// `min_theta ||x - e^{i theta} y||`.
fn phase_distance(x: &CMatrix, y: &CMatrix) -> f64 {
    let ip: C64 = (y.adjoint() * x).trace();
    let phase = if ip.norm() > 0.0 { ip / real(ip.norm()) } else { c64(1.0, 0.0) };
    frob(&(x - y * phase))
}

fn point_representations() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let space = FiniteNSpace::new(r.random_range(1..=3), r.random_range(1..=4));
        let orbit = r.random_range(0..space.orbits);
        let u = random_unitary(&mut r, space.n);
        let images = point_evaluation_images(space, &PointRef::new(orbit, u.clone())).map_err(fail)?;
        match classify_matrix_rep(&images, space, &tol).map_err(|e| format!("rep {i}: {e}"))? {
            RepClass::Point(p) if p.orbit == orbit => {
                let dist = phase_distance(&p.u, &u);
                worst = worst.max(dist);
                if dist > 1e-8 {
                    return Err(format!("rep {i}: unitary off by {dist:.3e}"));
                }
            }
            other => return Err(format!("rep {i}: classified as {other:?}, expected orbit {orbit}")),
        }
    }
    let space = FiniteNSpace::new(2, 3);
    let zeros = vec![CMatrix::zeros(2, 2); space.algebra_dim()];
    if classify_matrix_rep(&zeros, space, &tol).map_err(fail)? != RepClass::Zero {
        return Err("zero representation not classified as zero".into());
    }
    Ok(format!("worst phase-aligned distance {worst:.2e}"))
}

fn haar_averages() -> Check {
    let tol = Tolerance::default();
    let samples = 20_000;
    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = r.random_range(1..=4);
        let a = random_gaussian(&mut r, n, n);
        let space = FiniteNSpace::new(n, 1);
        let est = equivariant_average(|_| a.clone(), &space, 0, McConfig::new(samples, 100 + i)).map_err(fail)?;
        let err = op_norm(&(&est - twirl_exact(&a).map_err(fail)?));
        let radius = mc_radius(op_norm(&a), samples);
        worst = worst.max(err / radius);
        if err > radius {
            return Err(format!("trial {i}: error {err:.3e} outside radius {radius:.3e}"));
        }
    }
    // Spectral n-measure: exact on the whole orbit, adjoint-symmetric on a region.
    let inst = random_homogeneous(&mut r, 2, 2, 2, 2, 1);
    let dec = decompose(&inst.tuple, &tol, 0).map_err(fail)?;
    let mc = McConfig::new(samples, 7);
    let inside = |u: &CMatrix| u[(0, 0)].norm_sqr() > 0.5;
    for class in 0..dec.classes.len() {
        let proj = invariant_spectral_projection(&dec, &[class]).map_err(fail)?;
        for j in 0..2 {
            for k in 0..2 {
                let whole = n_measure_entry_mc(&dec, class, j, k, Region::WholeOrbit, mc).map_err(fail)?;
                let expected = if j == k { &proj / real(2.0) } else { CMatrix::zeros(proj.nrows(), proj.ncols()) };
                if frob(&(&whole - &expected)) > 1e-12 {
                    return Err(format!("class {class}: whole-orbit entry ({j},{k}) is not exact"));
                }
                let ejk = n_measure_entry_mc(&dec, class, j, k, Region::Predicate(&inside), mc).map_err(fail)?;
                let ekj = n_measure_entry_mc(&dec, class, k, j, Region::Predicate(&inside), mc).map_err(fail)?;
                if op_norm(&(ejk.adjoint() - ekj)) > mc_radius(1.0, samples) {
                    return Err(format!("class {class}: entries ({j},{k}) and ({k},{j}) are not adjoint"));
                }
            }
        }
    }
    Ok(format!("worst error/radius {worst:.2}"))
}

fn irreducibility_tests() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(11);
    let mut irreducible = 0;
    for i in 0..200 {
        let k = r.random_range(1..=3);
        let t = match i % 3 {
            0 => {
                let d = r.random_range(1..=4);
                random_irreducible(&mut r, d, k)
            }
            1 => {
                let (da, db) = (r.random_range(1..=2), r.random_range(1..=2));
                let a = random_irreducible(&mut r, da, k);
                let b = random_irreducible(&mut r, db, k);
                let sum = direct_sum(&[a, b], r.random_range(0..=1));
                let u = random_unitary(&mut r, sum.d);
                conjugate(&sum, &u)
            }
            _ => {
                let d = r.random_range(1..=3);
                let h = random_psd(&mut r, d);
                nhomog_core::MatTuple::new(vec![h; k]).unwrap()
            }
        };
        let comm = commutant(&t, &tol).map_err(fail)?.dim();
        let span = word_span(&t, &tol).map_err(fail)?.dim();
        if (comm == 1) != (span == t.d * t.d) {
            return Err(format!("tuple {i}: commutant dim {comm}, word span {span}, d = {}", t.d));
        }
        irreducible += (comm == 1) as usize;
        let d = r.random_range(1..=3);
        let a = random_irreducible(&mut r, d, k.max(2));
        let b = random_irreducible(&mut r, d, k.max(2));
        let cross = intertwiner_space(&a, &b, &tol).map_err(fail)?.dim();
        if cross != 0 {
            return Err(format!("tuple {i}: intertwiners between inequivalent irreducibles have dim {cross}"));
        }
    }
    Ok(format!("{irreducible} of 200 irreducible"))
}

fn dominated_convergence() -> Check {
    let tol = Tolerance::default();
    let mut r = rng(12);
    let inst = random_homogeneous(&mut r, 2, 2, 2, 2, 1);
    let dec = decompose(&inst.tuple, &tol, 0).map_err(fail)?;
    let f = random_table(&mut r, &dec);
    let unit = OrbitTable::unit(&dec).map_err(fail)?;
    let h: Vec<C64> = (0..dec.source.d).map(|_| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let hnorm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tables: Vec<OrbitTable> = (1..=50).map(|m| f.add(&unit.scale(real(1.0 / m as f64))).unwrap()).collect();
    let res = dominated_convergence_run(&dec, &tables, &f, &h).map_err(fail)?;
    for (m, x) in (1..).zip(&res) {
        if *x > hnorm / m as f64 + 1e-10 {
            return Err(format!("m = {m}: residual {x:.3e} above {:.3e}", hnorm / m as f64));
        }
    }
    if res.windows(2).skip(1).any(|w| w[1] >= w[0]) {
        return Err("residuals are not strictly decreasing".into());
    }
    // Alternating sign: bounded but no limit.
    let control: Vec<OrbitTable> =
        (1..=50).map(|m| f.add(&unit.scale(real(if m % 2 == 0 { 1.0 } else { -1.0 }))).unwrap()).collect();
    let tail = dominated_convergence_run(&dec, &control, &f, &h).map_err(fail)?;
    let last = tail[tail.len() - 2..].iter().copied().fold(f64::INFINITY, f64::min);
    if last < 1e-3 * hnorm {
        return Err(format!("negative control converged (residual {last:.3e})"));
    }
    Ok(format!("final residual {:.2e}, control stays at {last:.2e}", res[res.len() - 1]))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("generators reconstructed from the decomposition", reconstruction),
        ("Gelfand transform is isometric on polynomials", gelfand_isometry),
        ("calculus is a *-homomorphism on tables", calculus_homomorphism),
        ("b^s - a^s stays positive", operator_monotone_powers),
        ("power-mean envelopes of commuting families", commuting_envelopes),
        ("delta2 subspace equals the algebra", delta2_equals_algebra),
        ("density matches the separation criterion", density_criterion),
        ("ideals and vanishing sets correspond", ideal_roundtrip),
        ("representations are point evaluations", point_representations),
        ("Haar averages and the spectral n-measure", haar_averages),
        ("commutant and word-span irreducibility tests agree", irreducibility_tests),
        ("dominated convergence of the calculus", dominated_convergence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:2} [{name}]: PASS ({detail}; {secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} [{name}]: FAIL ({detail}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
