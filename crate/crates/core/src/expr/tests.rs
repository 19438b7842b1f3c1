use super::*;
use crate::multi_index::MultiIndex;
use proptest::prelude::*;

fn y1() -> ScalarExpr {
    ScalarExpr::coord(2, 0)
}

fn y2() -> ScalarExpr {
    ScalarExpr::coord(2, 1)
}

#[test]
fn trivial_evaluations() {
    assert_eq!(ScalarExpr::one(1).evaluate(&[3.0]).unwrap(), 1.0);
    let b = ScalarExpr::bump(ScalarExpr::coord(1, 0));
    assert!((b.eval(&[0.0]) - (-1.0f64).exp()).abs() < 1e-16);
    assert_eq!(b.eval(&[1.5]), 0.0);
    assert!(matches!(
        b.evaluate(&[0.0, 1.0]),
        Err(crate::Error::DimensionMismatch { expected: 1, got: 2 })
    ));
}

#[test]
fn polynomial_mixed_partial() {
    let e = ScalarExpr::powi(y1(), 2) * y2();
    let d = e.derivative(&MultiIndex::new(&[1, 1]));
    assert!((d.eval(&[3.0, 5.0]) - 6.0).abs() < 1e-14);
    let c = ScalarExpr::constant(2, 4.0).derivative(&MultiIndex::new(&[0, 2]));
    assert!(c.is_zero());
}

#[test]
fn bump_derivative_vanishes_at_centre() {
    let b = ScalarExpr::bump(ScalarExpr::coord(1, 0));
    assert_eq!(b.diff(0).eval(&[0.0]), 0.0);
}

#[test]
fn affine_scaling_support() {
    let (eps, x) = (0.1, 0.3);
    let b = ScalarExpr::bump(ScalarExpr::coord(1, 0));
    let s = b.affine_precompose(&[1.0 / eps], &[-x / eps]).unwrap();
    let bx = s.support().as_box().unwrap().axes[0];
    assert!((bx.lo - (x - eps)).abs() < 1e-13);
    assert!((bx.hi - (x + eps)).abs() < 1e-13);
    assert!(matches!(
        b.affine_precompose(&[0.0], &[1.0]),
        Err(crate::Error::SingularMap { .. })
    ));
    let id = b.affine_precompose(&[1.0], &[0.0]).unwrap();
    for t in [-0.9, -0.2, 0.4] {
        assert_eq!(id.eval(&[t]), b.eval(&[t]));
    }
}

#[test]
fn affine_composition_law() {
    let e = ScalarExpr::bump_at(&[0.1, -0.2], 0.8) * (ScalarExpr::powi(y1(), 3) + y2());
    let a1 = [1.2, 0.3, -0.4, 0.9];
    let b1 = [0.05, -0.1];
    let a2 = [0.7, -0.2, 0.1, 1.1];
    let b2 = [0.2, 0.0];
    let twice = e.affine(&a1, &b1, 2).affine(&a2, &b2, 2);
    // e(A1(A2 y + b2) + b1) = e((A1 A2) y + A1 b2 + b1)
    let m = nalgebra::Matrix2::new(a1[0], a1[1], a1[2], a1[3]);
    let m2 = nalgebra::Matrix2::new(a2[0], a2[1], a2[2], a2[3]);
    let prod = m * m2;
    let off = m * nalgebra::Vector2::new(b2[0], b2[1]) + nalgebra::Vector2::new(b1[0], b1[1]);
    let once = e.affine(
        &[prod[(0, 0)], prod[(0, 1)], prod[(1, 0)], prod[(1, 1)]],
        &[off[0], off[1]],
        2,
    );
    for i in 0..15 {
        for j in 0..15 {
            let y = [-1.0 + i as f64 / 7.0, -1.0 + j as f64 / 7.0];
            assert!((twice.eval(&y) - once.eval(&y)).abs() < 1e-12);
        }
    }
}

#[test]
fn step_derivative_is_normalised_bump() {
    let s = ScalarExpr::step_between(1, 0, 0.0, 2.0);
    assert_eq!(s.eval(&[-0.1]), 0.0);
    assert_eq!(s.eval(&[2.1]), 1.0);
    let h = 1e-5;
    for t in [0.3, 1.0, 1.7] {
        let fd = (s.eval(&[t + h]) - s.eval(&[t - h])) / (2.0 * h);
        assert!((fd - s.diff(0).eval(&[t])).abs() < 1e-8);
    }
}

#[test]
fn json_roundtrip() {
    let e = ScalarExpr::bump_at(&[0.0, 0.5], 0.5) * ScalarExpr::step(y1() + y2()) + 2.0 * y1();
    let s = serde_json::to_string(&e).unwrap();
    let spec: ExprSpec = serde_json::from_str(&s).unwrap();
    let back = spec.build(2).unwrap();
    for y in [[0.1, 0.4], [-0.2, 0.7], [0.3, 0.3]] {
        assert_eq!(back.eval(&y), e.eval(&y));
    }
}

#[test]
fn compose_chain_rule() {
    let outer = ScalarExpr::bump(ScalarExpr::coord(1, 0));
    let inner = ScalarExpr::polynomial(1, vec![(vec![2], 0.5), (vec![0], -0.1)]);
    let c = outer.compose(vec![inner]);
    let h = 1e-5;
    let t = 0.6;
    let fd = (c.eval(&[t + h]) - c.eval(&[t - h])) / (2.0 * h);
    assert!((fd - c.diff(0).eval(&[t])).abs() < 1e-8);
}

/// Random expressions on R² built from the primitives.
fn arb_expr() -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        (-2.0f64..2.0).prop_map(|c| ScalarExpr::constant(2, c)),
        (0usize..2).prop_map(|i| ScalarExpr::coord(2, i)),
        ((-0.5f64..0.5), (-0.5f64..0.5), (0.4f64..1.5))
            .prop_map(|(a, b, r)| ScalarExpr::bump_at(&[a, b], r)),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            ((-3.0f64..3.0), inner.clone()).prop_map(|(c, a)| c * a),
            (inner.clone(), 2u32..4).prop_map(|(a, k)| ScalarExpr::powi(a, k)),
            (inner.clone(), (-1.5f64..1.5), (-1.5f64..1.5))
                .prop_map(|(a, s, t)| a.affine(&[1.0, s, t, 1.0], &[0.1, -0.2], 2)),
            inner.clone().prop_map(|a| ScalarExpr::bump(ScalarExpr::scale(0.5, a))),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = [f64; 2]> {
    (-1.2f64..1.2, -1.2f64..1.2).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_partials_commute(e in arb_expr(), y in arb_point()) {
        let a = e.diff(0).diff(1).eval(&y);
        let b = e.diff(1).diff(0).eval(&y);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn symbolic_matches_finite_difference(e in arb_expr(), y in arb_point(), axis in 0usize..2) {
        let h = 1e-5;
        let mut yp = y;
        let mut ym = y;
        yp[axis] += h;
        ym[axis] -= h;
        let fd = (e.eval(&yp) - e.eval(&ym)) / (2.0 * h);
        let ex = e.diff(axis).eval(&y);
        // curvature bound: second derivative sampled near y controls the O(h²) error
        let d3 = e.diff(axis).diff(axis).diff(axis);
        let scale = 1.0 + d3.eval(&y).abs() + d3.eval(&yp).abs() + d3.eval(&ym).abs();
        prop_assert!((fd - ex).abs() <= 1e-6 * ex.abs().max(1.0) * scale, "fd {fd} exact {ex}");
    }

    #[test]
    fn support_is_sound(
        e in arb_expr(),
        pts in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 1000),
    ) {
        let s = e.support();
        for (a, b) in pts {
            let y = [a, b];
            if !s.contains(&y) {
                prop_assert_eq!(e.eval(&y), 0.0);
            }
        }
    }

    #[test]
    fn derivative_support_within_support(e in arb_expr(), axis in 0usize..2) {
        let s = e.support();
        let d = e.diff(axis);
        if let (Some(outer), Some(inner)) = (s.as_box(), d.support().as_box()) {
            for (o, i) in outer.axes.iter().zip(&inner.axes) {
                prop_assert!(i.lo >= o.lo - 1e-12 * o.lo.abs().max(1.0));
                prop_assert!(i.hi <= o.hi + 1e-12 * o.hi.abs().max(1.0));
            }
        }
        if s.is_empty() {
            prop_assert!(d.support().is_empty() || d.is_zero());
        }
    }
}

#[test]
fn translation_invariant_directional_is_exact_zero() {
    // f((y − x)/ε) in (x, y) ∈ R²
    let eps = 0.37;
    let f = ScalarExpr::bump(ScalarExpr::coord(1, 0)) * ScalarExpr::polynomial(1, vec![(vec![2], 1.5), (vec![0], 0.2)]);
    let slice = f.affine(&[-1.0 / eps, 1.0 / eps], &[0.0], 2);
    assert!(slice.directional(&[1.0, 1.0]).is_zero());
    assert!(!slice.directional(&[1.0, 0.0]).is_zero());
}
