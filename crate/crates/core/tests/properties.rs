use num_complex::Complex64;
use ogk::convalg::{banach_algebra_bound_check, ConvolutionContext};
use ogk::convolutor::{null, phi_t, sup_norm, ARepresentation};
use ogk::convalg::LinearOperator;
use ogk::groupoid::{zoo_ids, FiniteGroupoid, HaarSystem};
use ogk::ideals::{ideal_invariance_equivalence, random_subbundle};
use ogk::orlicz::{gauge_abs, jensen_check, l1_embedding_constant, modular_abs, orlicz_abs, Section};
use ogk::young::{builtin_ids, YoungFunction};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn young_id() -> impl Strategy<Value = String> {
    proptest::sample::select(builtin_ids())
}

fn delta2_id() -> impl Strategy<Value = &'static str> {
    proptest::sample::select(vec!["power:1.5", "power:2", "power:3", "npower:2", "npower:3", "xlogx"])
}

fn groupoid_id() -> impl Strategy<Value = &'static str> {
    proptest::sample::select(zoo_ids())
}

fn abs_vec(max: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..5.0, 1..=max)
}

fn context(gid: &str, yid: &str, weighted: bool) -> ConvolutionContext {
    let g = FiniteGroupoid::from_id(gid).unwrap();
    let h = if weighted {
        HaarSystem::from_unit_weights(&g, |u| 0.5 + (u % 4) as f64)
    } else {
        HaarSystem::counting(&g)
    };
    ConvolutionContext::new(g, h, YoungFunction::from_id(yid).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fenchel_young(id in young_id(), x in 0.0f64..3.0, y in 0.0f64..3.0) {
        let phi = YoungFunction::from_id(&id).unwrap();
        let psi = phi.complementary();
        prop_assert!(phi.eval(x) + psi.eval(y) - x * y >= -1e-9);
    }

    #[test]
    fn gauge_is_the_unit_ball_boundary(id in young_id(), a in abs_vec(12)) {
        let phi = YoungFunction::from_id(&id).unwrap();
        let w = vec![1.0; a.len()];
        let k = gauge_abs(&phi, &a, &w).unwrap();
        prop_assume!(k > 1e-6);
        let scaled: Vec<f64> = a.iter().map(|v| v / k).collect();
        prop_assert!((modular_abs(&phi, &scaled, &w) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn norm_sandwich(id in young_id(), a in abs_vec(10), w in proptest::collection::vec(0.2f64..3.0, 10)) {
        let phi = YoungFunction::from_id(&id).unwrap();
        let w = &w[..a.len()];
        let k = gauge_abs(&phi, &a, w).unwrap();
        let (o, _) = orlicz_abs(&phi, &a, w).unwrap();
        prop_assert!(o >= k * (1.0 - 1e-8));
        prop_assert!(o <= 2.0 * k * (1.0 + 1e-8));
    }

    #[test]
    fn gauge_homogeneous_and_subadditive(id in delta2_id(), a in abs_vec(8), b in abs_vec(8), s in 0.01f64..100.0) {
        let phi = YoungFunction::from_id(id).unwrap();
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let w = vec![1.0; n];
        let ka = gauge_abs(&phi, a, &w).unwrap();
        let kb = gauge_abs(&phi, b, &w).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v * s).collect();
        prop_assert!((gauge_abs(&phi, &sa, &w).unwrap() - s * ka).abs() <= 1e-10 * s * ka.max(1.0));
        let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        prop_assert!(gauge_abs(&phi, &sum, &w).unwrap() <= (ka + kb) * (1.0 + 1e-10));
    }

    #[test]
    fn jensen(id in young_id(), f in proptest::collection::vec(0.0f64..3.0, 1..8), seed in any::<u64>()) {
        let phi = YoungFunction::from_id(&id).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..f.len()).map(|_| rand::Rng::gen_range(&mut rng, 0.01..1.0)).collect();
        let t: f64 = raw.iter().sum();
        let mut nu: Vec<f64> = raw.iter().map(|v| v / t).collect();
        let fix = 1.0 - nu.iter().sum::<f64>();
        nu[0] += fix;
        prop_assert!(jensen_check(&phi, &f, &nu).unwrap() >= -1e-10);
    }

    #[test]
    fn translation_isometry(gid in groupoid_id(), yid in delta2_id(), weighted in any::<bool>(), seed in any::<u64>()) {
        let ctx = context(gid, yid, weighted);
        let g = ctx.g().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = ctx.random_section(&mut rng);
        for x in 0..g.len() {
            let f = s.fiber(&g, g.d(x)).unwrap();
            let lf = ctx.left_translate(x, &f).unwrap();
            let a = ogk::orlicz::gauge_norm(&ctx.phi, &f, &ctx.haar).unwrap();
            let b = ogk::orlicz::gauge_norm(&ctx.phi, &lf, &ctx.haar).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "x = {}: {} vs {}", x, a, b);
        }
    }

    #[test]
    fn convolution_bounds(gid in groupoid_id(), yid in delta2_id(), weighted in any::<bool>(), seed in any::<u64>()) {
        let ctx = context(gid, yid, weighted);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = l1_embedding_constant(&ctx.psi, ctx.g(), &ctx.haar).unwrap();
        let f = ctx.random_section(&mut rng);
        let k = ctx.random_section(&mut rng);
        let b = banach_algebra_bound_check(&f, &k, &ctx, d).unwrap();
        prop_assert!(b.slack >= -1e-9 && b.rescaled_slack >= -1e-9);
        prop_assert!(ctx.l1(&f) <= d * ctx.gauge(&f).unwrap() + 1e-9);
    }

    #[test]
    fn convolution_associative(gid in groupoid_id(), seed in any::<u64>()) {
        let ctx = context(gid, "power:2", true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (ctx.random_section(&mut rng), ctx.random_section(&mut rng), ctx.random_section(&mut rng));
        let lhs = ctx.convolve(&ctx.convolve(&a, &b), &c);
        let rhs = ctx.convolve(&a, &ctx.convolve(&b, &c));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn invariance_iff_left_ideal(gid in groupoid_id(), seed in any::<u64>()) {
        let ctx = context(gid, "power:2", false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sub = random_subbundle(&ctx, &mut rng);
        let e = ideal_invariance_equivalence(&sub, &ctx, &mut rng, 5);
        prop_assert!(e.agree, "{:?}", e);
    }

    #[test]
    fn functional_is_well_defined(gid in groupoid_id(), yid in proptest::sample::select(vec!["power:1.5", "power:2", "npower:3"]), seed in any::<u64>()) {
        let ctx = context(gid, yid, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = ctx.random_section(&mut rng);
        let t = LinearOperator::left_convolution(&ctx, h);
        let (g, f) = (ctx.random_section(&mut rng), ctx.random_section(&mut rng));
        let a = ARepresentation::single(&ctx, g.clone(), f.clone()).unwrap();
        let split = null::split(&ctx, &g, &f, &mut rng).unwrap();
        let b = a.concat(&split);
        let (pa, pb) = (phi_t(&t, &a, &ctx), phi_t(&t, &b, &ctx));
        let diff: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
        prop_assert!(sup_norm(&diff) <= 1e-9);
        prop_assert!(b.value.max_abs_diff(&a.value) <= 1e-12);
    }

    #[test]
    fn section_json_roundtrip(gid in groupoid_id(), seed in any::<u64>()) {
        let g = FiniteGroupoid::from_id(gid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Section::random(&g, &mut rng);
        let text = serde_json::to_string(&s.to_json(&g)).unwrap();
        let back = Section::from_json(&g, &serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn groupoid_json_roundtrip(gid in groupoid_id()) {
        let g = FiniteGroupoid::from_id(gid).unwrap();
        let text = serde_json::to_string(&g.to_json()).unwrap();
        let back = FiniteGroupoid::from_json(gid, &serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back.to_json(), g.to_json());
    }
}
