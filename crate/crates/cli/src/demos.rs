//! Named demonstrations. Three run bundled scenarios, the others print closed comparisons.

use crate::commands::{default_psi, run_scenario, status, Status};
use crate::failure::{Context, Failure, Outcome};
use crate::report::Artifacts;
use crate::runner::{eps_grid, test_function, Overrides};
use crate::scenario::Scenario;
use colombeau::kernels::SweepRow;
use colombeau::testing::{association_test, extrapolate, pair_regularized, standard_diffeo, AssocConfig, AssocReport};
use colombeau::{
    build_mollifier, Diffeomorphism, Distribution, GenFun, ScalarExpr, SmoothingKernel, TestFunction, VectorField,
};
use serde::Serialize;

pub const NAMES: [&str; 6] =
    ["heaviside-times-delta", "delta-squared", "embedding-theorem", "diffeo-invariance", "lie-derivative", "sheaf-glue"];

pub const EMBEDDING: &str = include_str!("../scenarios/embedding.json");
pub const DELTA_SQUARED: &str = include_str!("../scenarios/delta-squared.json");
pub const SHEAF_GLUE: &str = include_str!("../scenarios/sheaf-glue.json");

pub fn bundled(name: &str) -> Option<(&'static str, &'static str)> {
    match name {
        "embedding-theorem" | "embedding" => Some(("embedding.json", EMBEDDING)),
        "delta-squared" => Some(("delta-squared.json", DELTA_SQUARED)),
        "sheaf-glue" => Some(("sheaf-glue.json", SHEAF_GLUE)),
        _ => None,
    }
}

pub fn run(name: &str, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    if let Some((file, text)) = bundled(name) {
        let s = Scenario::parse(text, file)?;
        return run_scenario(&s, ov, out);
    }
    match name {
        "heaviside-times-delta" => heaviside_times_delta(ov, out),
        "diffeo-invariance" => diffeo_invariance(out),
        "lie-derivative" => lie_derivative(out),
        other => Err(Failure::schema("demo", format!("unknown demo '{other}' (one of {})", NAMES.join(", ")))),
    }
}

fn err(op: &str) -> impl Fn(colombeau::Error) -> Failure + '_ {
    move |e| Failure::from_core("demo", op, e)
}

#[derive(Serialize)]
struct HeavisideReport<'a> {
    demo: &'static str,
    eps: &'a [f64],
    /// `∫ ι(H)ι(δ)(φ̃_{ε,x}, x) ψ(x) dx / ψ(0)`.
    ratio: Vec<f64>,
    limit: f64,
    target: f64,
    tolerance: f64,
    association: &'a AssocReport,
}

fn heaviside_times_delta(ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    let k = SmoothingKernel::model(&build_mollifier(2, 1, true).map_err(err("mollifier"))?);
    let h = GenFun::iota(Distribution::heaviside(0.0));
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let hd = GenFun::product(vec![h, d.clone()]).map_err(err("product"))?;
    let psi = test_function(&default_psi(1).build(1).at("psi", "psi")?, "psi")?;
    let psi0 = psi.eval(&[0.0]);
    let cfg = AssocConfig { eps: eps_grid(ov.eps)?, ..AssocConfig::default() };
    let values = cfg
        .eps
        .iter()
        .map(|&e| pair_regularized(&hd, &k, &psi, e, &cfg))
        .collect::<colombeau::Result<Vec<_>>>()
        .map_err(err("pairing of iota(H) iota(delta) with psi"))?;
    let ratio: Vec<f64> = values.iter().map(|v| v / psi0).collect();
    let ex = extrapolate(&cfg.eps, &values, 1e-13).map_err(err("extrapolation"))?;
    let limit = ex.limit / psi0;
    let rep = association_test(&hd, &GenFun::scale(0.5, d), ("iota(H) iota(delta)", "iota(delta)/2"), &psi, &k, &cfg)
        .map_err(err("association test"))?;
    println!("ι(H)ι(δ) paired with ψ, divided by ψ(0), kernel {}", k.name());
    for (e, r) in cfg.eps.iter().zip(&ratio) {
        println!("  ε = {e:.4e}  {r:.9}");
    }
    println!("limit {limit:.3} (extrapolated {limit:.9}, expected 0.5 ± 1e-3)");
    println!("ι(H)ι(δ) vs ι(δ)/2: {}", rep.message);
    let ok = (limit - 0.5).abs() <= 1e-3 && rep.associated();
    let rows: Vec<SweepRow> = cfg
        .eps
        .iter()
        .zip(&ratio)
        .map(|(&e, &v)| SweepRow { epsilon: e, x: vec![], quantity: "pairing/psi(0)".into(), value: v })
        .collect();
    out.json(
        "heaviside-times-delta.json",
        &HeavisideReport { demo: "heaviside-times-delta", eps: &cfg.eps, ratio, limit, target: 0.5, tolerance: 1e-3, association: &rep },
    )?;
    out.sweep_csv("heaviside-times-delta.csv", &rows)?;
    Ok(status(ok))
}

/// Sample points `(φ̃_{ε,x}, x)` plus one wide test function.
fn samples(k: &SmoothingKernel) -> Outcome<Vec<(f64, TestFunction, Vec<f64>)>> {
    let mut out = Vec::new();
    for &e in &[0.3, 0.05, 0.01] {
        for &x in &[-0.2, 0.0, 0.013, 0.25] {
            out.push((e, k.test_function(e, &[x]).map_err(err("kernel"))?, vec![x]));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Comparison {
    identity: String,
    max_relative_difference: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct IdentityReport {
    demo: &'static str,
    kernel: String,
    comparisons: Vec<Comparison>,
    passed: bool,
}

/// Evaluates `lhs − rhs` on all samples; returns the largest relative difference.
fn compare(
    identity: &str,
    lhs: &GenFun,
    rhs: &GenFun,
    samples: &[(f64, TestFunction, Vec<f64>)],
    rows: &mut Vec<SweepRow>,
) -> Outcome<f64> {
    let mut worst: f64 = 0.0;
    for (e, phi, x) in samples {
        let a = lhs.evaluate(phi, x).map_err(err(identity))?;
        let b = rhs.evaluate(phi, x).map_err(err(identity))?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
        rows.push(SweepRow { epsilon: *e, x: x.clone(), quantity: identity.to_string(), value: a - b });
    }
    Ok(worst)
}

fn finish(demo: &'static str, kernel: &SmoothingKernel, comps: Vec<Comparison>, rows: &[SweepRow], out: &Artifacts) -> Outcome<Status> {
    for c in &comps {
        println!(
            "[{}] {}: max relative difference {:.2e} (tol {:e})",
            if c.passed { "ok" } else { "FAILED" },
            c.identity,
            c.max_relative_difference,
            c.tolerance
        );
    }
    let passed = comps.iter().all(|c| c.passed);
    out.json(&format!("{demo}.json"), &IdentityReport { demo, kernel: kernel.name().to_string(), comparisons: comps, passed })?;
    out.sweep_csv(&format!("{demo}.csv"), rows)?;
    Ok(status(passed))
}

fn check(identity: String, worst: f64, tol: f64) -> Comparison {
    Comparison { identity, max_relative_difference: worst, tolerance: tol, passed: worst <= tol }
}

fn test_subjects() -> Outcome<Vec<(&'static str, Distribution)>> {
    Ok(vec![
        ("delta(0.02)", Distribution::delta(&[0.02])),
        ("H(y + 0.01)", Distribution::heaviside(-0.01)),
        ("|y| b(y/1.5)", Distribution::abs_times(0.0, ScalarExpr::bump_at(&[0.0], 1.5)).map_err(err("|y| b"))?),
    ])
}

fn product_pairs() -> Vec<(&'static str, GenFun, GenFun)> {
    let y = ScalarExpr::coord(1, 0);
    let h = GenFun::iota(Distribution::heaviside(0.0));
    let d = GenFun::iota(Distribution::delta(&[0.0]));
    let s = GenFun::sigma(ScalarExpr::bump_at(&[0.1], 1.0) + y);
    vec![("iota(H) iota(delta)", h.clone(), d.clone()), ("iota(delta) sigma(f)", d, s), ("iota(H)^2", h.clone(), h)]
}

fn diffeo_invariance(out: &Artifacts) -> Outcome<Status> {
    let k = SmoothingKernel::model(&build_mollifier(2, 1, false).map_err(err("mollifier"))?);
    let mu = standard_diffeo(1)
        .and_then(|m| m.then(&Diffeomorphism::translation(&[0.05])))
        .map_err(err("diffeomorphism"))?;
    println!("μ = {}, kernel {}", mu.name, k.name());
    let samples = samples(&k)?;
    let mut rows = Vec::new();
    let mut comps = Vec::new();
    for (name, u) in test_subjects()? {
        let lhs = GenFun::pullback(&mu, GenFun::iota(u.clone())).map_err(err("pullback"))?;
        let rhs = GenFun::iota(u.pullback(&mu).map_err(err("distribution pullback"))?);
        let id = format!("mu*(iota({name})) - iota(mu*({name}))");
        let w = compare(&id, &lhs, &rhs, &samples, &mut rows)?;
        comps.push(check(id, w, 1e-8));
    }
    for (name, r, s) in product_pairs() {
        let lhs = GenFun::pullback(&mu, GenFun::product(vec![r.clone(), s.clone()]).map_err(err("product"))?)
            .map_err(err("pullback"))?;
        let rhs = GenFun::product(vec![
            GenFun::pullback(&mu, r).map_err(err("pullback"))?,
            GenFun::pullback(&mu, s).map_err(err("pullback"))?,
        ])
        .map_err(err("product"))?;
        let id = format!("mu*({name}) - product of pullbacks");
        let w = compare(&id, &lhs, &rhs, &samples, &mut rows)?;
        comps.push(check(id, w, 1e-8));
    }
    finish("diffeo-invariance", &k, comps, &rows, out)
}

fn lie_derivative(out: &Artifacts) -> Outcome<Status> {
    let k = SmoothingKernel::model(&build_mollifier(2, 1, true).map_err(err("mollifier"))?);
    let y = ScalarExpr::coord(1, 0);
    let x = VectorField::new(vec![ScalarExpr::constant(1, 1.0) + 0.5 * y.clone() * y + ScalarExpr::bump_at(&[0.0], 1.0)])
        .map_err(err("vector field"))?;
    println!("X = 1 + y²/2 + b(y), kernel {}", k.name());
    let samples = samples(&k)?;
    let mut rows = Vec::new();
    let mut comps = Vec::new();
    for (name, u) in test_subjects()?.into_iter().take(2) {
        let lhs = GenFun::lie_derivative(&x, GenFun::iota(u.clone())).map_err(err("Lie derivative"))?;
        let rhs = GenFun::iota(u.lie_derivative(&x).map_err(err("distributional Lie derivative"))?);
        let id = format!("L_X(iota({name})) - iota(L_X {name})");
        let w = compare(&id, &lhs, &rhs, &samples, &mut rows)?;
        comps.push(check(id, w, 1e-8));
    }
    for (name, r, s) in product_pairs() {
        let lie = |g: GenFun| GenFun::lie_derivative(&x, g).map_err(err("Lie derivative"));
        let lhs = lie(GenFun::product(vec![r.clone(), s.clone()]).map_err(err("product"))?)?;
        let rhs = GenFun::sum(vec![
            GenFun::product(vec![lie(r.clone())?, s.clone()]).map_err(err("product"))?,
            GenFun::product(vec![r, lie(s)?]).map_err(err("product"))?,
        ])
        .map_err(err("sum"))?;
        let id = format!("Leibniz rule for {name}");
        let w = compare(&id, &lhs, &rhs, &samples, &mut rows)?;
        comps.push(check(id, w, 1e-10));
    }
    finish("lie-derivative", &k, comps, &rows, out)
}
