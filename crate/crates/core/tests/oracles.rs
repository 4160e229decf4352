//! Worked examples with values from closed forms or hand computation.

use num_complex::Complex64;
use ogk::convalg::{
    approximate_identity, commutativity_check, find_noncommuting_pair, k_constant, left_convolver_norm_check,
    right_convolver_bound_check, ConvalgError, ConvolutionContext,
};
use ogk::convolutor::{pairing, phi_t, ARepresentation};
use ogk::convalg::LinearOperator;
use ogk::fieldlab::{norm_profile, shrinking_identity_experiment, strong_continuity_profile, ParametrizedFamily, Which};
use ogk::groupoid::{validate_groupoid, validate_haar, CayleyTable, FiniteGroupoid, HaarSystem};
use ogk::ideals::{is_invariant, is_left_ideal, Subbundle};
use ogk::orlicz::{
    gauge_abs, holder_check, jensen_check, l1_embedding_constant, modular_abs, orlicz_abs, FiberFunction, Section,
};
use ogk::young::{
    conjugate, conjugate_numeric, default_delta2_grid, default_psi_tilde_grid, delta2_estimate, inverse, psi_tilde,
    Delta2, YoungFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn conjugate_values() {
    let half_square = YoungFunction::normalized_power(2.0).unwrap();
    close(conjugate(&half_square, 3.0).unwrap(), 4.5, 1e-12);
    close(conjugate_numeric(&half_square, 3.0).unwrap(), 4.5, 1e-10);

    // y^q/q with q = 3/2 at y = 2: 2^{3/2}·(2/3)
    let cube = YoungFunction::normalized_power(3.0).unwrap();
    close(conjugate(&cube, 2.0).unwrap(), 1.885_618_083_164_126_7, 1e-12);
    close(conjugate_numeric(&cube, 2.0).unwrap(), 1.885_618_083_164_126_7, 1e-10);

    let square = YoungFunction::power(2.0).unwrap();
    close(conjugate(&square, 4.0).unwrap(), 4.0, 1e-12);
    close(conjugate_numeric(&square, 4.0).unwrap(), 4.0, 1e-10);
}

#[test]
fn conjugate_matches_grid_maximization() {
    let phi = YoungFunction::xlogx();
    for y in [0.3, 1.0, 2.5] {
        let grid_max = (0..=200_000)
            .map(|i| i as f64 * 1e-4)
            .map(|x| x * y - phi.eval(x))
            .fold(f64::NEG_INFINITY, f64::max);
        close(conjugate(&phi, y).unwrap(), grid_max, 1e-7);
    }
}

#[test]
fn delta2_values() {
    let grid = default_delta2_grid();
    let k = delta2_estimate(&YoungFunction::power(2.0).unwrap(), &grid).constant().unwrap();
    close(k, 4.0, 1e-12);

    // x ln(1+x): the ratio 2 ln(1+2x)/ln(1+x) rises to 4 as x → 0 and falls to 2 as x → ∞
    let phi = YoungFunction::xlogx();
    let k = delta2_estimate(&phi, &grid).constant().unwrap();
    assert!((3.99..=4.0).contains(&k), "{k}");
    let ratio = |x: f64| phi.eval(2.0 * x) / phi.eval(x);
    close(ratio(1e8), 2.0 * (2e8f64).ln_1p() / (1e8f64).ln_1p(), 1e-12);
    assert!(ratio(1e8) < 2.1);

    assert_eq!(delta2_estimate(&YoungFunction::cosh_minus_one(), &grid), Delta2::Divergent);
}

#[test]
fn psi_tilde_values() {
    let grid = default_psi_tilde_grid();
    let sq = YoungFunction::power(2.0).unwrap();
    close(psi_tilde(&sq, &sq.complementary(), 3.0, &grid).unwrap(), 9.0, 1e-9);
    let cube = YoungFunction::power(3.0).unwrap();
    close(psi_tilde(&cube, &cube.complementary(), 2.0, &grid).unwrap(), 8.0, 1e-9);
    close(psi_tilde(&cube, &cube.complementary(), 1.0, &grid).unwrap(), 1.0, 1e-12);
}

#[test]
fn inverse_values() {
    close(inverse(&YoungFunction::power(2.0).unwrap(), 9.0), 3.0, 1e-11);
    close(inverse(&YoungFunction::normalized_power(3.0).unwrap(), 9.0), 3.0, 1e-11);
    assert_eq!(inverse(&YoungFunction::xlogx(), 0.0), 0.0);
}

#[test]
fn groupoid_shapes() {
    let g = FiniteGroupoid::pair(2);
    assert!(validate_groupoid(&g).is_valid());
    assert_eq!((g.len(), g.units().len()), (4, 2));
    // (i, j) ↦ 2i + j; the fiber over (1,1) in 1-based labels is {(1,1),(1,2)}
    assert_eq!(g.fiber(0).unwrap(), &[0, 1]);

    let b = FiniteGroupoid::group_bundle(&[CayleyTable::cyclic(2), CayleyTable::cyclic(3)]);
    assert!(validate_groupoid(&b).is_valid());
    assert_eq!((b.len(), b.units().len()), (5, 2));
    assert_eq!(b.fiber(b.units()[1]).unwrap().len(), 3);

    // Z2 swapping {0, 1}: (γ, s) ↦ 2γ + s; G^0 = {(e,0), (s,1)}
    let t = FiniteGroupoid::from_id("transform:z2@2").unwrap();
    let mut fib = t.fiber(0).unwrap().to_vec();
    fib.sort_unstable();
    assert_eq!(fib, vec![0, 3]);
}

#[test]
fn corrupted_table_names_associativity_triple() {
    let g = FiniteGroupoid::from_id("bundle:z4").unwrap().with_product_entry(1, 1, 3);
    let rep = validate_groupoid(&g);
    let v = rep.violations.iter().find(|v| v.rule == "associativity").expect("caught");
    assert_eq!(v.witness.len(), 3);
}

#[test]
fn haar_examples() {
    let g = FiniteGroupoid::pair(3);
    assert!(validate_haar(&g, &HaarSystem::counting(&g)).is_valid());

    let b = FiniteGroupoid::group_bundle(&[CayleyTable::cyclic(2), CayleyTable::cyclic(3)]);
    let (u1, u2) = (b.units()[0], b.units()[1]);
    let h = HaarSystem::from_fiber_weights(&b, BTreeMap::from([(u1, vec![0.7; 2]), (u2, vec![2.5; 3])])).unwrap();
    assert!(validate_haar(&b, &h).is_valid());

    let p = FiniteGroupoid::pair(2);
    let bad = HaarSystem::from_fiber_map(BTreeMap::from([(0, vec![1.0, 2.0]), (3, vec![1.0, 1.0])]));
    let rep = validate_haar(&p, &bad);
    assert!(!rep.is_valid());
    assert_eq!(rep.violations[0].witness.len(), 2);
    let good = HaarSystem::from_fiber_map(BTreeMap::from([(0, vec![1.0, 2.0]), (3, vec![1.0, 2.0])]));
    assert!(validate_haar(&p, &good).is_valid());
}

#[test]
fn norm_values() {
    let sq = YoungFunction::power(2.0).unwrap();
    close(modular_abs(&sq, &[3.0, 4.0], &[1.0, 1.0]), 25.0, 0.0);
    close(modular_abs(&sq, &[3.0, 4.0], &[2.0, 2.0]), 50.0, 0.0);
    assert_eq!(gauge_abs(&sq, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
    close(gauge_abs(&sq, &[3.0, 4.0], &[1.0, 1.0]).unwrap(), 5.0, 1e-11);
    close(gauge_abs(&sq, &[1.0; 7], &[1.0; 7]).unwrap(), 7f64.sqrt(), 1e-11);

    // A(k) = (1 + 25k²)/k is minimal at k = 1/5
    let (n, k) = orlicz_abs(&sq, &[3.0, 4.0], &[1.0, 1.0]).unwrap();
    close(n, 10.0, 1e-9);
    close(k.unwrap(), 0.2, 1e-4);
    close(orlicz_abs(&sq, &[1.0, 0.0], &[1.0, 1.0]).unwrap().0, 2.0, 1e-9);
    assert_eq!(orlicz_abs(&sq, &[0.0], &[1.0]).unwrap().0, 0.0);
}

#[test]
fn holder_and_jensen_values() {
    let sq = YoungFunction::power(2.0).unwrap();
    let g = FiniteGroupoid::pair(2);
    let h = HaarSystem::counting(&g);
    // ∫|fg| = 24, ‖f‖⁰ = 5, ‖g‖_Ψ = min (1 + 25k²/4)/k = 5
    let s = holder_check(&sq, &sq.complementary(), &FiberFunction::real(0, &[3.0, 4.0]), &FiberFunction::real(0, &[4.0, 3.0]), &h).unwrap();
    close(s, 1.0, 1e-8);
    let zero = holder_check(&sq, &sq.complementary(), &FiberFunction::real(0, &[3.0, 4.0]), &FiberFunction::real(0, &[0.0, 0.0]), &h).unwrap();
    assert_eq!(zero, 0.0);

    close(jensen_check(&sq, &[0.0, 2.0], &[0.5, 0.5]).unwrap(), 1.0, 1e-15);
    assert_eq!(jensen_check(&sq, &[1.5, 1.5, 1.5], &[0.2, 0.3, 0.5]).unwrap(), 0.0);
}

#[test]
fn l1_embedding_constants() {
    // ‖χ‖_Ψ for Ψ = y²/4 on n points: min (1 + n k²/4)/k = √n
    let psi = YoungFunction::power(2.0).unwrap().complementary();
    let b = FiniteGroupoid::from_id("bundle:z2+z3").unwrap();
    close(l1_embedding_constant(&psi, &b, &HaarSystem::counting(&b)).unwrap(), 3f64.sqrt(), 1e-9);
    let one = FiniteGroupoid::pair(1);
    close(l1_embedding_constant(&psi, &one, &HaarSystem::counting(&one)).unwrap(), 1.0, 1e-9);
}

#[test]
fn convolution_values() {
    let g = FiniteGroupoid::pair(2);
    let ctx = ConvolutionContext::counting(g, YoungFunction::power(2.0).unwrap()).unwrap();
    let f = Section::from_real(&[1.0, 2.0, 3.0, 4.0]);
    let k = Section::from_real(&[0.0, 1.0, 1.0, 0.0]);
    assert_eq!(ctx.convolve(&f, &k), Section::from_real(&[2.0, 1.0, 4.0, 3.0]));

    let z2 = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2").unwrap(), YoungFunction::power(2.0).unwrap()).unwrap();
    let (a0, a1, b0, b1) = (0.3, -1.2, 2.0, 0.7);
    let p = z2.convolve(&Section::from_real(&[a0, a1]), &Section::from_real(&[b0, b1]));
    close(p.get(0).re, a0 * b0 + a1 * b1, 1e-15);
    close(p.get(1).re, a0 * b1 + a1 * b0, 1e-15);

    let z = Section::zeros(ctx.g());
    assert!(matches!(commutativity_check(&z, &z, &ctx), Err(ConvalgError::NotGroupBundle(_))));
    let s3 = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:s3").unwrap(), YoungFunction::power(2.0).unwrap()).unwrap();
    assert!(find_noncommuting_pair(&s3).unwrap().is_some());
}

#[test]
fn convolver_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ctx = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2").unwrap(), YoungFunction::normalized_power(2.0).unwrap()).unwrap();
    let chi = approximate_identity(&ctx);
    assert!(left_convolver_norm_check(&chi, &ctx, &mut rng, 5).unwrap().abs() < 1e-12);
    let zero = Section::zeros(ctx.g());
    assert_eq!(left_convolver_norm_check(&zero, &ctx, &mut rng, 5).unwrap(), 0.0);

    // Φ = Ψ = x²/2 gives Ψ̃(a) = a² and Φ⁻¹(1) = √2, so K_F = √2 and 2K_F² = 4
    let k = k_constant(&chi, &ctx).unwrap();
    close(k, 2f64.sqrt(), 1e-9);
    let b = right_convolver_bound_check(&chi, &ctx, &mut rng, 5).unwrap();
    close(b.bound, 4.0, 1e-8);
    close(b.estimate, 1.0, 1e-12);
    let b0 = right_convolver_bound_check(&zero, &ctx, &mut rng, 5).unwrap();
    assert_eq!((b0.k_f, b0.estimate, b0.slack), (0.0, 0.0, 0.0));

    // Φ = x², Ψ = y²/4: Ψ⁻¹(1) = 2 dominates, K_F = 2
    let ctx2 = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2").unwrap(), YoungFunction::power(2.0).unwrap()).unwrap();
    close(k_constant(&approximate_identity(&ctx2), &ctx2).unwrap(), 2.0, 1e-9);
}

#[test]
fn weighted_identity_is_exact() {
    let g = FiniteGroupoid::pair(3);
    let h = HaarSystem::from_unit_weights(&g, |u| 1.0 + u as f64);
    let ctx = ConvolutionContext::new(g, h, YoungFunction::power(3.0).unwrap()).unwrap();
    let e = approximate_identity(&ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = ctx.random_section(&mut rng);
    assert!(ctx.convolve(&e, &f).max_abs_diff(&f) <= 1e-12);
    close(ctx.l1(&e), 1.0, 1e-15);
}

#[test]
fn structured_subbundles() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let phi = YoungFunction::power(2.0).unwrap();
    let b = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2+z3").unwrap(), phi.clone()).unwrap();
    let sub = Subbundle::full_over(b.g(), &[b.g().units()[0]]).unwrap();
    assert!(is_invariant(&sub, &b).holds);
    assert!(is_left_ideal(&sub, &b, &mut rng, 10).holds);

    let p = ConvolutionContext::counting(FiniteGroupoid::pair(2), phi).unwrap();
    let sub = Subbundle::full_over(p.g(), &[0]).unwrap();
    let inv = is_invariant(&sub, &p);
    assert!(!inv.holds);
    // (2,1) in 1-based labels is element 2 with d = (1,1) and r = (2,2)
    assert_eq!(inv.violations[0].element, Some(2));
    let ideal = is_left_ideal(&sub, &p, &mut rng, 10);
    assert!(!ideal.holds);
    assert!(ideal.violations.iter().all(|w| w.unit == 3));
    for s in [Subbundle::zero(p.g()), Subbundle::full(p.g())] {
        assert!(is_invariant(&s, &p).holds && is_left_ideal(&s, &p, &mut rng, 10).holds);
    }
}

#[test]
fn pairing_and_functional_examples() {
    let ctx = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2+z3").unwrap(), YoungFunction::power(2.0).unwrap()).unwrap();
    let ones = Section::from_fn(ctx.g(), |_| c(1.0));
    assert_eq!(pairing(&ones, &ones, &ctx), vec![c(2.0), c(3.0)]);
    assert_eq!(pairing(&ones, &Section::zeros(ctx.g()), &ctx), vec![c(0.0), c(0.0)]);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = ctx.random_section(&mut rng);
    let f = ctx.random_section(&mut rng);
    let rep = ARepresentation::single(&ctx, g.clone(), f.clone()).unwrap();
    assert_eq!(phi_t(&LinearOperator::identity(), &rep, &ctx), pairing(&f, &g, &ctx));
    let zero = phi_t(&LinearOperator::zero(), &rep, &ctx);
    assert!(zero.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn field_examples() {
    let fam = ParametrizedFamily::preset("z2-linear").unwrap();
    let p = norm_profile(&fam, &YoungFunction::power(2.0).unwrap(), Which::Gauge, 4).unwrap();
    close(p.norm[0], std::f64::consts::SQRT_2, 1e-11);
    close(p.norm[4], 2.0, 1e-11);

    let flat = ParametrizedFamily::preset("constant").unwrap();
    assert_eq!(norm_profile(&flat, &YoungFunction::power(2.0).unwrap(), Which::Gauge, 8).unwrap().modulus, 0.0);

    let s = strong_continuity_profile(&fam, &YoungFunction::power(2.0).unwrap(), |_| 1, 8).unwrap();
    assert!(s.coarse.deviation.iter().all(|&d| d == 0.0));
    let q = norm_profile(&fam, &YoungFunction::power(2.0).unwrap(), Which::Gauge, 8).unwrap();
    for (a, b) in s.coarse.norm_diff.iter().zip(&q.adjacent_diff) {
        close(*a, *b, 1e-12);
    }

    let z4 = ParametrizedFamily::preset("z4-wave").unwrap();
    let r = shrinking_identity_experiment(&z4, &YoungFunction::power(2.0).unwrap(), &[vec![0, 1, 3], vec![0]], 8).unwrap();
    assert_eq!(r.errors.len(), 2);
    assert!(r.errors[0] > r.errors[1] && r.terminal <= 1e-12);

    // means over a subgroup preserve constants
    let konst = ParametrizedFamily::new("k", CayleyTable::cyclic(4), |u| 1.0 + u, |_, _| c(2.0));
    let r = shrinking_identity_experiment(&konst, &YoungFunction::power(2.0).unwrap(), &[vec![0, 1, 2, 3], vec![0, 2], vec![0]], 8).unwrap();
    assert!(r.errors.iter().all(|&e| e <= 1e-12), "{:?}", r.errors);
}
