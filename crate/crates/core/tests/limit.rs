use proptest::prelude::*;
use thinwall_core::limit::{
    class_residuals, class_residuals_raw, j_limit, make_triple_from_phi, separable, ClassTag, LimitTriple,
    PhiGenerator, RawTriple, SBasis,
};
use thinwall_core::recovery::{regime_presets, sample_triple};
use thinwall_core::{ArcLengthCurve, Error, MaterialModel, Polynomial};

fn p(c: &[f64]) -> Polynomial {
    Polynomial::new(c.to_vec())
}

#[test]
fn sample_triples_belong_to_their_classes() {
    for curve in [ArcLengthCurve::unit_arc(), ArcLengthCurve::signed_lobe(), ArcLengthCurve::plateau()] {
        for step in 1..=5 {
            let t = sample_triple(step, &curve).unwrap();
            assert_eq!(t.class, ClassTag::for_regime(&regime_presets(step).unwrap()).unwrap());
            let rep = class_residuals(&t, &curve, 1.0, 16, 32).unwrap();
            for r in &rep.residuals {
                assert!(r.value <= 1e-10, "step {step} {}: {:e}", r.name, r.value);
            }
        }
    }
}

#[test]
fn square_of_arclength_is_not_a_generator_field_on_the_unit_arc() {
    let curve = ArcLengthCurve::unit_arc();
    let (w, g, b) = (|_: f64| 0.0, |_: f64, s: f64| s * s, |_: f64, _: f64| 0.0);
    let rep = class_residuals_raw(&RawTriple { w: &w, g: &g, b: &b }, ClassTag::AInfInf, &curve, 1.0, 8, 48).unwrap();
    // least squares of 2s onto span{cos s, sin s} on (0, 1), in closed form
    let (s1, c1) = (1f64.sin(), 1f64.cos());
    let gram = [(1.0 + s1 * c1) / 2.0, s1 * s1 / 2.0, (1.0 - s1 * c1) / 2.0];
    let rhs = [2.0 * (s1 + c1 - 1.0), 2.0 * (s1 - c1)];
    let det = gram[0] * gram[2] - gram[1] * gram[1];
    let fit = (gram[2] * rhs[0] * rhs[0] - 2.0 * gram[1] * rhs[0] * rhs[1] + gram[0] * rhs[1] * rhs[1]) / det;
    let expected = (4.0 / 3.0 - fit).sqrt();
    let got = rep.get("generator").unwrap();
    assert!(got >= 1e-2);
    assert!((got - expected).abs() <= 1e-8 * expected, "{got} vs {expected}");
    assert!(!rep.is_member());
}

#[test]
fn quadratic_twist_is_flagged_for_lambda_zero() {
    let curve = ArcLengthCurve::unit_arc();
    let (w, g, b) = (|x: f64| x * x, |_: f64, _: f64| 0.0, |_: f64, _: f64| 0.0);
    for class in [ClassTag::AZeroMu { mu: 1.0 }, ClassTag::AZeroInf, ClassTag::AZeroZero] {
        let rep = class_residuals_raw(&RawTriple { w: &w, g: &g, b: &b }, class, &curve, 1.0, 8, 16).unwrap();
        assert!((rep.get("w''").unwrap() - 2.0).abs() < 1e-6);
    }
    let rep = class_residuals_raw(&RawTriple { w: &w, g: &g, b: &b }, ClassTag::AInfInf, &curve, 1.0, 8, 16).unwrap();
    assert_eq!(rep.get("w''"), None);
}

#[test]
fn non_affine_g_on_the_flat_part_is_rejected() {
    let curve = ArcLengthCurve::plateau();
    let (w, b) = (|_: f64| 0.0, |_: f64, _: f64| 0.0);
    let g = |_: f64, s: f64| (s - 0.5) * (s - 0.5);
    let rep = class_residuals_raw(&RawTriple { w: &w, g: &g, b: &b }, ClassTag::AZeroZero, &curve, 1.0, 8, 32).unwrap();
    // distance of u^2 from affine functions on (-c, c)
    let c: f64 = 0.15;
    let expected = (8.0 * c.powi(5) / 45.0).sqrt();
    let got = rep.get("plateau_affine").unwrap();
    assert!(got >= 1e-3);
    assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");

    let affine = |_: f64, s: f64| 2.0 * s - 1.0;
    let rep =
        class_residuals_raw(&RawTriple { w: &w, g: &affine, b: &b }, ClassTag::AZeroZero, &curve, 1.0, 8, 32).unwrap();
    assert!(rep.get("plateau_affine").unwrap() < 1e-12);
}

#[test]
fn axial_strain_of_an_isometry_with_stretch() {
    let curve = ArcLengthCurve::signed_lobe();
    let z = Polynomial::zero;
    let gen = PhiGenerator { w: z(), q0: z(), b: separable(&[]), phi_bar0: [z(), z()], phi1_0: p(&[0.0, 1.0]) };
    let t = make_triple_from_phi(&gen, &curve, 1.0).unwrap();
    for (x, s) in [(0.1, 0.2), (0.9, 0.7)] {
        assert!((t.g.eval(x, s) - 1.0).abs() < 1e-12);
    }
    let rep = class_residuals(&t, &curve, 1.0, 8, 16).unwrap();
    assert!(rep.residuals.iter().all(|r| r.value <= 1e-12), "{rep:?}");

    match make_triple_from_phi(&gen, &curve, 0.0) {
        Err(Error::Construction { residual, .. }) => assert!((residual - 1.0).abs() < 1e-12),
        other => panic!("expected a construction error, got {other:?}"),
    }
}

#[test]
fn class_rules_of_the_generator_constructor() {
    let curve = ArcLengthCurve::unit_arc();
    let z = Polynomial::zero;
    let b = separable(&[]);
    let a1 = [p(&[0.0, 0.0, 1.0]), z(), z(), z()];
    assert!(LimitTriple::from_generator(ClassTag::AInfInf, &curve, z(), a1.clone(), b.clone()).is_err());
    assert!(LimitTriple::from_generator(ClassTag::ALambdaInf { lambda: 1.0 }, &curve, z(), a1.clone(), b.clone()).is_err());
    assert!(LimitTriple::from_generator(ClassTag::AZeroInf, &curve, z(), a1, b.clone()).is_ok());
    let quadratic = p(&[0.0, 0.0, 1.0]);
    let plain = [z(), z(), z(), z()];
    assert!(LimitTriple::from_generator(ClassTag::AZeroInf, &curve, quadratic.clone(), plain.clone(), b.clone()).is_err());
    assert!(LimitTriple::from_generator(ClassTag::AZeroMu { mu: 1.0 }, &curve, z(), plain.clone(), b.clone()).is_err());
    // the pinned int N coefficient: g = w'' int N / lambda
    let t = LimitTriple::from_generator(ClassTag::ALambdaInf { lambda: 2.0 }, &curve, quadratic, plain, b).unwrap();
    let s: f64 = 0.7;
    assert!((t.g.eval(0.3, s) - 2.0 * (s.sin() - s) / 2.0).abs() < 1e-12);
}

#[test]
fn limit_energy_on_the_unit_arc() {
    // w' = 1, b = 1, g = 1: Q2 = 4 mu + 4 mu (lambda + mu) / (lambda + 2 mu), E = 2.5
    let curve = ArcLengthCurve::unit_arc();
    let t = sample_triple(1, &curve).unwrap();
    let j = j_limit(&t, &MaterialModel::default(), &curve, 1.0, 16, 32);
    let expected = (4.0 + 8.0 / 3.0) / 24.0 + 1.25;
    assert!((j - expected).abs() < 1e-12, "{j}");
    // length scales linearly for x1-independent integrands
    let j2 = j_limit(&t, &MaterialModel::default(), &curve, 2.0, 16, 32);
    assert!((j2 - 2.0 * expected).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn residual_grows_linearly_off_the_class(d in 1e-3f64..1.0, a2 in -1.0f64..1.0) {
        let curve = ArcLengthCurve::signed_lobe();
        let z = Polynomial::zero;
        let t = LimitTriple::from_generator(ClassTag::AInfInf, &curve, p(&[0.0, 1.0]),
            [z(), p(&[0.0, 0.0, a2]), z(), p(&[0.0, 0.0, 0.5])], separable(&[])).unwrap();
        let w = |x: f64| t.w.eval(x);
        let b = |x: f64, s: f64| t.b.eval(x, s);
        let plain = |x: f64, s: f64| s * s + 0.0 * x;
        let off = |x: f64, s: f64| t.g.eval(x, s) + d * s * s;
        let base = class_residuals_raw(&RawTriple { w: &w, g: &plain, b: &b }, ClassTag::AInfInf, &curve, 1.0, 8, 32)
            .unwrap().get("generator").unwrap();
        let r = class_residuals_raw(&RawTriple { w: &w, g: &off, b: &b }, ClassTag::AInfInf, &curve, 1.0, 8, 32)
            .unwrap().get("generator").unwrap();
        prop_assert!(base > 1e-3);
        prop_assert!((r - d * base).abs() <= 1e-6 * base + 1e-7, "{} vs {}", r, d * base);
    }
}

#[test]
fn bending_profile_closed_forms() {
    use thinwall_core::limit::solve_bending_profile;
    let one = separable(&[(p(&[1.0]), SBasis::Constant)]);
    let arc = solve_bending_profile(&one, &ArcLengthCurve::unit_arc()).unwrap();
    for s in [0.0, 0.3, 1.0f64] {
        let (v, dv) = arc.v.eval(0.5, s, 0);
        assert!((v[1] - (s * s.cos() - s.sin())).abs() < 1e-12);
        assert!((v[2] - (s * s.sin() + s.cos() - 1.0)).abs() < 1e-12);
        // ds v = q n, so ds v . tau = 0 and ds v . n = s
        assert!((dv[1] + s * s.sin()).abs() < 1e-12 && (dv[2] - s * s.cos()).abs() < 1e-12);
        assert!((arc.q.eval(0.5, s) - s).abs() < 1e-14);
    }
    let flat = solve_bending_profile(&one, &ArcLengthCurve::straight()).unwrap();
    let (v, _) = flat.v.eval(0.2, 0.8, 0);
    assert!(v[1].abs() < 1e-14 && (v[2] - 0.32).abs() < 1e-13);
    let zero = solve_bending_profile(&separable(&[]), &ArcLengthCurve::unit_arc()).unwrap();
    assert_eq!(zero.v.eval(0.5, 0.5, 0).0, [0.0; 3]);
}
