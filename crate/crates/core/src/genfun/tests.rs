use super::*;
use crate::mollifier::build_mollifier;

fn bump1(c: f64, r: f64) -> TestFunction {
    TestFunction::from_expr(ScalarExpr::bump_at(&[c], r)).unwrap()
}

#[test]
fn iota_and_sigma_basic_values() {
    let m = build_mollifier(2, 1, true).unwrap();
    let phi = m.scaled(0.3).unwrap();
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    assert!((d.evaluate(&phi, &[0.4]).unwrap() - phi.eval(&[0.0])).abs() < 1e-14);
    let f = ScalarExpr::coord(1, 0) * ScalarExpr::coord(1, 0);
    let s = GenFun::sigma(f);
    assert_eq!(s.evaluate(&phi, &[0.5]).unwrap(), 0.25);
    assert_eq!(s.x_derivative(&phi, &[0.5], &MultiIndex::new(&[1])).unwrap(), 1.0);
    assert_eq!(s.d1(&phi, &[0.5], &bump1(0.0, 1.0)).unwrap(), 0.0);
}

#[test]
fn product_gateaux_matches_difference_quotient() {
    let h = GenFun::iota(Distribution::heaviside(0.0));
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let p = GenFun::product(vec![h.clone(), d, h]).unwrap();
    let phi = bump1(0.1, 0.6);
    let psi = bump1(-0.2, 0.5);
    let x = [0.0];
    let exact = p.d1(&phi, &x, &psi).unwrap();
    let t = 1e-4;
    let shifted = |s: f64| {
        let f = TestFunction::linear_combination(&[(1.0, &phi), (s, &psi)]).unwrap();
        p.evaluate(&f, &x).unwrap()
    };
    let fd = (shifted(t) - shifted(-t)) / (2.0 * t);
    assert!((exact - fd).abs() < 1e-7 * exact.abs().max(1.0), "{exact} vs {fd}");
    // the product of three iotas is cubic in φ
    let third = p.gateaux(&phi, &x, &[psi.clone(), psi.clone(), psi.clone()]).unwrap();
    let cubic = (shifted(0.3) - 3.0 * shifted(0.1) + 3.0 * shifted(-0.1) - shifted(-0.3)) / (0.2f64).powi(3);
    assert!((third - cubic).abs() < 1e-9 * third.abs().max(1.0), "{third} vs {cubic}");
}

#[test]
fn pullback_commutes_with_embedding() {
    let g = ScalarExpr::bump_at(&[0.0], 2.0);
    let mu = Diffeomorphism::perturbed_identity(g, 0.5).unwrap();
    let u = Distribution::delta(&[0.2]);
    let lhs = GenFun::pullback(&mu, GenFun::iota(u.clone())).unwrap();
    let rhs = GenFun::iota(u.pullback(&mu).unwrap());
    let phi = bump1(0.1, 0.4);
    let a = lhs.evaluate(&phi, &[0.3]).unwrap();
    let b = rhs.evaluate(&phi, &[0.3]).unwrap();
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

#[test]
fn pullback_chain_rule_in_x() {
    let y = ScalarExpr::coord(1, 0);
    let mu = Diffeomorphism::perturbed_identity(ScalarExpr::bump_at(&[0.0], 2.0), 0.5).unwrap();
    let f = ScalarExpr::powi(y.clone(), 3) + ScalarExpr::bump_at(&[0.5], 1.0);
    let r = GenFun::pullback(&mu, GenFun::sigma(f.clone())).unwrap();
    let composed = f.compose(mu.forward.clone());
    let phi = bump1(0.0, 0.3);
    for k in 0..=3 {
        let g = MultiIndex::new(&[k]);
        let a = r.x_derivative(&phi, &[0.3], &g).unwrap();
        let b = composed.derivative(&g).eval(&[0.3]);
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "k={k}: {a} vs {b}");
    }
}

#[test]
fn lie_derivative_commutes_with_embedding() {
    let y = ScalarExpr::coord(1, 0);
    let field = VectorField::new(vec![ScalarExpr::constant(1, 1.0) + 0.5 * y.clone() * y]).unwrap();
    let phi = bump1(0.1, 0.5);
    for u in [Distribution::delta(&[0.15]), Distribution::heaviside(0.05)] {
        let lhs = GenFun::lie_derivative(&field, GenFun::iota(u.clone())).unwrap();
        let rhs = GenFun::iota(u.lie_derivative(&field).unwrap());
        let a = lhs.evaluate(&phi, &[0.0]).unwrap();
        let b = rhs.evaluate(&phi, &[0.0]).unwrap();
        assert!((a - b).abs() < 1e-10, "{}: {a} vs {b}", u.kind());
    }
}

#[test]
fn lie_derivative_of_sigma_is_directional_derivative() {
    let y = ScalarExpr::coord(1, 0);
    let field = VectorField::new(vec![ScalarExpr::constant(1, 2.0) + y.clone()]).unwrap();
    let f = ScalarExpr::powi(y, 2);
    let r = GenFun::lie_derivative(&field, GenFun::sigma(f.clone())).unwrap();
    let v = r.evaluate(&bump1(0.0, 1.0), &[0.7]).unwrap();
    assert!((v - field.apply(&f).eval(&[0.7])).abs() < 1e-14);
}

#[test]
fn nesting_and_domains_are_checked() {
    let x = VectorField::constant(&[1.0]);
    let mut r = GenFun::iota(Distribution::delta(&[0.0]));
    for _ in 0..MAX_LIE_DEPTH {
        r = GenFun::lie_derivative(&x, r).unwrap();
    }
    assert!(matches!(GenFun::lie_derivative(&x, r), Err(Error::NestingTooDeep(4, 3))));

    let small = Domain::open_box(Aabb::new(&[-1.0], &[1.0]), 4).unwrap();
    let r = GenFun::iota(Distribution::delta(&[0.0])).restrict(&small).unwrap();
    assert!(matches!(r.evaluate(&bump1(0.0, 0.5), &[1.5]), Err(Error::SupportEscapesDomain(_))));
    assert!(matches!(r.evaluate(&bump1(0.8, 0.5), &[0.5]), Err(Error::SupportEscapesDomain(_))));
    let bigger = Domain::open_box(Aabb::new(&[-2.0], &[2.0]), 4).unwrap();
    assert!(matches!(r.restrict(&bigger), Err(Error::NotSubdomain(_))));
}

#[test]
fn glue_reproduces_pieces() {
    let u1 = Domain::open_box(Aabb::new(&[-2.0], &[0.5]), 6).unwrap();
    let u2 = Domain::open_box(Aabb::new(&[-0.5], &[2.0]), 6).unwrap();
    let whole = GenFun::iota(Distribution::delta(&[0.0]));
    let chi2 = ScalarExpr::step_between(1, 0, -0.3, 0.3);
    let chi1 = ScalarExpr::constant(1, 1.0) - chi2.clone();
    let parts = vec![
        GluePart { piece: 0, chi: chi1, theta: ScalarExpr::step_between(1, 0, 0.45, 0.35) },
        GluePart { piece: 1, chi: chi2, theta: ScalarExpr::step_between(1, 0, -0.45, -0.35) },
    ];
    let g = GenFun::sheaf_glue(vec![whole.restrict(&u1).unwrap(), whole.restrict(&u2).unwrap()], &[u1, u2], parts).unwrap();
    let phi = bump1(0.0, 0.1);
    for x in [-1.0, -0.2, 0.0, 0.25, 1.0] {
        let a = g.evaluate(&phi.clone(), &[x]).unwrap();
        assert!((a - phi.eval(&[0.0])).abs() < 1e-14, "x={x}: {a}");
    }
}

#[test]
fn glue_rejects_bad_partition() {
    let u1 = Domain::open_box(Aabb::new(&[-2.0], &[0.5]), 6).unwrap();
    let u2 = Domain::open_box(Aabb::new(&[-0.5], &[2.0]), 6).unwrap();
    let whole = GenFun::iota(Distribution::delta(&[0.0]));
    let chi2 = ScalarExpr::step_between(1, 0, -0.3, 0.3);
    let parts = vec![
        GluePart { piece: 0, chi: chi2.clone(), theta: ScalarExpr::constant(1, 1.0) },
        GluePart { piece: 1, chi: chi2, theta: ScalarExpr::constant(1, 1.0) },
    ];
    let r = GenFun::sheaf_glue(vec![whole.restrict(&u1).unwrap(), whole.restrict(&u2).unwrap()], &[u1, u2], parts);
    assert!(matches!(r, Err(Error::CoverMismatch(_))));
}

#[test]
fn json_roundtrip() {
    let text = r#"{"op":"product","args":[
        {"op":"iota","dist":{"kind":"heaviside"}},
        {"op":"iota","dist":{"kind":"delta","point":[0.0]}}]}"#;
    let spec: GenFunSpec = serde_json::from_str(text).unwrap();
    let r = spec.build().unwrap();
    let again: GenFunSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(again, spec);
    let phi = bump1(0.0, 0.5);
    assert!(r.evaluate(&phi, &[0.0]).unwrap() > 0.0);
}
