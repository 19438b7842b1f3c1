use super::*;
use crate::asymptotics::log_grid;
use crate::genfun::Distribution;

fn probe1(lo: f64, hi: f64, k: usize) -> CompactProbe {
    CompactProbe::new(Aabb::new(&[lo], &[hi]), k, &Domain::entire(1)).unwrap()
}

fn model(q: u32) -> SmoothingKernel {
    SmoothingKernel::model(&build_mollifier(q, 1, true).unwrap())
}

fn short() -> SweepConfig {
    SweepConfig { eps: log_grid(10f64.powf(-2.0), 10f64.powf(-0.5), 6).unwrap(), ..SweepConfig::default() }
}

#[test]
fn sigma_sweep_is_eps_independent() {
    let y = ScalarExpr::coord(1, 0);
    let f = ScalarExpr::powi(y.clone(), 3) + ScalarExpr::bump_at(&[0.2], 1.0);
    let r = GenFun::sigma(f.clone());
    let alpha = MultiIndex::new(&[2]);
    let rows = sweep(&r, &model(1), &probe1(-0.3, 0.3, 5), &alpha, &short()).unwrap();
    for row in rows {
        let exact = f.derivative(&alpha).eval(&row.x);
        assert!((row.value - exact).abs() < 1e-12 * exact.abs().max(1.0), "{row:?}");
    }
}

#[test]
fn iota_delta_sweep_closed_form() {
    let m = build_mollifier(2, 1, true).unwrap();
    let k = SmoothingKernel::model(&m);
    let r = GenFun::iota(Distribution::delta(&[0.0]));
    let rows = sweep(&r, &k, &probe1(-0.01, 0.01, 5), &MultiIndex::zero(1), &short()).unwrap();
    for row in rows {
        let exact = m.phi.eval(&[-row.x[0] / row.epsilon]) / row.epsilon;
        assert!((row.value - exact).abs() <= 1e-12 * exact.abs().max(1.0));
    }
}

#[test]
fn chain_rule_matches_finite_differences() {
    let h = GenFun::iota(Distribution::heaviside(0.0));
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let y = ScalarExpr::coord(1, 0);
    let s = GenFun::sigma(ScalarExpr::constant(1, 1.0) + y.clone() * y);
    let hd = GenFun::product(vec![h, d.clone(), s]).unwrap();
    let mu = standard_diffeo(1).unwrap();
    let pulled = GenFun::pullback(&mu, hd.clone()).unwrap();
    let lie = GenFun::lie_derivative(&crate::VectorField::constant(&[1.0]), d).unwrap();
    let cfg = SweepConfig { eps: vec![0.3, 0.1, 0.05], ..SweepConfig::default() };
    let probe = probe1(-0.04, 0.04, 4);
    for r in [hd, pulled, lie] {
        for a in 1..=2 {
            let e = cross_check(&r, &model(2), &probe, &MultiIndex::new(&[a]), &cfg).unwrap();
            assert!(e < 1e-5, "{}: α={a}: {e}", r.describe());
        }
    }
}

#[test]
fn moderateness_orders() {
    let battery = Battery::models(&[1], 1).unwrap();
    let probe = probe1(-0.5, 0.5, 41);
    let opts = ModerateOptions { sweep: short(), ..ModerateOptions::default() };
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let v = moderateness_test(&d, "iota(delta)", &battery, &probe, &opts).unwrap();
    assert!(v.passed());
    assert_eq!(v.per_alpha[0].n_or_m, 1.0);
    assert!((v.per_alpha[0].slope + 1.0).abs() < 0.05, "{}", v.per_alpha[0].slope);
    let dd = GenFun::product(vec![d.clone(), d]).unwrap();
    let v = moderateness_test(&dd, "iota(delta)^2", &battery, &probe, &opts).unwrap();
    assert_eq!(v.per_alpha[0].n_or_m, 2.0);
    let s = GenFun::sigma(ScalarExpr::coord(1, 0));
    let v = moderateness_test(&s, "sigma(y)", &battery, &probe, &ModerateOptions { alpha_max: 2, ..opts }).unwrap();
    assert!(v.per_alpha.iter().all(|a| a.n_or_m == 0.0));
    let json = serde_json::to_value(&v).unwrap();
    assert!(json.get("per_alpha").unwrap()[0].get("N_or_m").is_some());
}

#[test]
fn negligibility_verdicts() {
    let battery = Battery::models(&[1], 1).unwrap();
    let probe = probe1(-0.5, 0.5, 21);
    let opts = NegligibleOptions { sweep: short(), ..NegligibleOptions::default() };
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let v = negligibility_test(&d, "iota(delta)", &battery, &probe, &opts).unwrap();
    assert!(!v.passed());
    let zero = GenFun::zero(1);
    let v = negligibility_test(&zero, "0", &battery, &probe, &NegligibleOptions { m_targets: vec![1.0, 5.0, 50.0], ..opts }).unwrap();
    assert!(v.passed());
    assert!(v.per_alpha.iter().all(|a| a.slope == f64::INFINITY));
}

#[test]
fn extrapolation_recovers_limit() {
    let eps = default_grid();
    let v: Vec<f64> = eps.iter().map(|e| 0.5 + 0.3 * e - 0.1 * e * e).collect();
    let ex = extrapolate(&eps, &v, 0.0).unwrap();
    assert!((ex.limit - 0.5).abs() < 1e-5, "{ex:?}");
    assert!((ex.rate - 1.0).abs() < 0.05);
    let flat = vec![0.25; eps.len()];
    assert_eq!(extrapolate(&eps, &flat, 1e-14).unwrap().limit, 0.25);
}

#[test]
fn heaviside_times_delta_is_half_delta() {
    let h = GenFun::iota(Distribution::heaviside(0.0));
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let hd = GenFun::product(vec![h, d.clone()]).unwrap();
    let half = GenFun::scale(0.5, d);
    let psi = TestFunction::from_expr(ScalarExpr::bump_at(&[0.1], 0.6)).unwrap();
    let cfg = AssocConfig { eps: log_grid(1e-2, 10f64.powf(-0.5), 6).unwrap(), ..AssocConfig::default() };
    let rep = association_test(&hd, &half, ("H·δ", "δ/2"), &psi, &model(1), &cfg).unwrap();
    assert!(rep.associated(), "{rep:?}");
}
