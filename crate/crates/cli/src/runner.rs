//! Executes a validated scenario.

use crate::failure::{Context, Failure, Outcome};
use crate::report::Artifacts;
use crate::scenario::{
    AssocExpect, BatteryDef, EpsGrid, Expect, KernelDef, LskKind, ProbeDef, Scenario, TestDef,
};
use colombeau::asymptotics::{default_grid, log_grid, DEFAULT_SLOPE_TOL};
use colombeau::genfun::GenFunSpec;
use colombeau::kernels::{CheckConfig, LskCondition, SweepRow};
use colombeau::testing::{
    association_test, moderateness_test, negligibility_test, AssocConfig, AssocOutcome, AssocReport, ModerateOptions,
    NegligibleOptions,
};
use colombeau::{
    check_lsk, Aabb, Battery, CompactProbe, Domain, GenFun, LambdaPartition, Mollifier, MultiIndex, ScalarExpr,
    SmoothingKernel, SweepConfig, TestFunction, TestVerdict, VectorField,
};
use serde::Serialize;
use std::collections::BTreeMap;

/// Command-line overrides of the scenario's numerical settings.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub eps: Option<EpsGrid>,
    pub slope_tol: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestSummary {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
    pub report: Option<String>,
    pub sweep: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub eps: Vec<f64>,
    pub tests: Vec<TestSummary>,
    pub passed: bool,
    #[serde(skip)]
    pub reports: Vec<serde_json::Value>,
}

pub fn eps_grid(g: Option<EpsGrid>) -> Outcome<Vec<f64>> {
    match g {
        None => Ok(default_grid()),
        Some(g) => {
            crate::scenario::check_grid(&g, "eps")?;
            let mut v = log_grid(g.min, g.max, g.points).at("eps", "build ε grid")?;
            v.sort_by(|a, b| b.total_cmp(a));
            Ok(v)
        }
    }
}

struct Built {
    kernels: BTreeMap<String, SmoothingKernel>,
    subjects: BTreeMap<String, GenFun>,
}

fn build(s: &Scenario) -> Outcome<Built> {
    let mut mollifiers = BTreeMap::new();
    for (name, m) in &s.mollifiers {
        let path = format!("mollifiers.{name}");
        mollifiers.insert(name.clone(), Mollifier::build(m.q, m.n, m.shape).at(&path, &path)?);
    }
    let mut kernels = BTreeMap::new();
    for name in s.kernels.keys() {
        build_kernel(s, name, &mollifiers, &mut kernels)?;
    }
    let mut subjects = BTreeMap::new();
    for (name, spec) in &s.subjects {
        let path = format!("subjects.{name}");
        subjects.insert(name.clone(), spec.build().at(&path, &path)?);
    }
    Ok(Built { kernels, subjects })
}

fn lambda(l: &crate::scenario::LambdaDef, path: &str) -> Outcome<LambdaPartition> {
    LambdaPartition::geometric(l.first, l.ratio, l.len).at(path, path)
}

fn build_kernel(
    s: &Scenario,
    name: &str,
    mollifiers: &BTreeMap<String, Mollifier>,
    done: &mut BTreeMap<String, SmoothingKernel>,
) -> Outcome<SmoothingKernel> {
    if let Some(k) = done.get(name) {
        return Ok(k.clone());
    }
    let path = format!("kernels.{name}");
    let get = |r: &str, done: &mut BTreeMap<String, SmoothingKernel>| build_kernel(s, r, mollifiers, done);
    let k = match &s.kernels[name] {
        KernelDef::Model { mollifier } => SmoothingKernel::model(&mollifiers[mollifier]),
        KernelDef::Glue { base, domain, lambda: l } => {
            let base = get(base, done)?;
            let d = domain.build().at(&format!("{path}.domain"), &path)?;
            SmoothingKernel::glue_to_domain(&base, &d, &lambda(l, &format!("{path}.lambda"))?).at(&path, &path)?
        }
        KernelDef::Pullback { base, mu } => {
            let base = get(base, done)?;
            let mu = mu.build().at(&format!("{path}.mu"), &path)?;
            SmoothingKernel::pullback(&mu, &base).at(&path, &path)?
        }
        KernelDef::Derive { base, field } => {
            let base = get(base, done)?;
            let n = base.dim();
            let comps = field
                .iter()
                .map(|c| c.build(n))
                .collect::<colombeau::Result<Vec<_>>>()
                .at(&format!("{path}.field"), &path)?;
            let x = VectorField::new(comps).at(&format!("{path}.field"), &path)?;
            SmoothingKernel::derive(&base, &x).at(&path, &path)?
        }
        KernelDef::Lsk7 { terms, lambda: l, points } => {
            let mut built = Vec::with_capacity(terms.len());
            for t in terms {
                built.push((MultiIndex::new(&t.beta), get(&t.kernel, done)?));
            }
            SmoothingKernel::lsk7(built, &lambda(l, &format!("{path}.lambda"))?, points.clone()).at(&path, &path)?
        }
    };
    done.insert(name.to_string(), k.clone());
    Ok(k)
}

fn probe(p: &ProbeDef, domain: &Domain, path: &str) -> Outcome<CompactProbe> {
    if p.lo.len() != p.hi.len() || p.lo.len() != domain.dim {
        return Err(Failure::schema(
            path,
            format!("probe box has {} and {} bounds in dimension {}", p.lo.len(), p.hi.len(), domain.dim),
        ));
    }
    if p.lo.iter().zip(&p.hi).any(|(a, b)| !(a <= b)) || p.points == 0 {
        return Err(Failure::schema(path, "probe needs lo ≤ hi and at least one point"));
    }
    CompactProbe::new(Aabb::new(&p.lo, &p.hi), p.points, domain).at(path, path)
}

fn multi(v: &Option<Vec<u32>>, n: usize, path: &str) -> Outcome<MultiIndex> {
    match v {
        None => Ok(MultiIndex::zero(n)),
        Some(a) if a.len() == n => Ok(MultiIndex::new(a)),
        Some(a) => Err(Failure::schema(path, format!("multi-index {a:?} in dimension {n}"))),
    }
}

pub fn test_function(e: &ScalarExpr, path: &str) -> Outcome<TestFunction> {
    TestFunction::from_expr(e.clone()).at(path, path)
}

fn expect_str(e: Expect) -> String {
    match e {
        Expect::Pass => "pass".into(),
        Expect::Fail => "fail".into(),
    }
}

fn verdict_str(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn outcome_str(o: AssocOutcome) -> &'static str {
    match o {
        AssocOutcome::Associated => "associated",
        AssocOutcome::NotAssociated => "not associated",
        AssocOutcome::Inconclusive => "inconclusive",
    }
}

pub fn describe_expect(e: &AssocExpect) -> String {
    let mut s = outcome_str(e.verdict).to_string();
    if let Some(b) = e.divergence_order {
        s.push_str(&format!(", divergence order {} ± {}", b.value, b.tol));
    }
    if let Some(b) = e.limit {
        s.push_str(&format!(", limit {} ± {}", b.value, b.tol));
    }
    s
}

pub fn assoc_matches(r: &AssocReport, e: &AssocExpect) -> bool {
    r.verdict == e.verdict
        && e.divergence_order.is_none_or(|b| r.divergence_order.is_some_and(|d| b.contains(d)))
        && e.limit.is_none_or(|b| b.contains(r.extrapolation.limit))
}

/// `I(ε)` as sweep rows without probe coordinates.
pub fn assoc_rows(r: &AssocReport) -> Vec<SweepRow> {
    r.eps
        .iter()
        .zip(&r.values)
        .map(|(&e, &v)| SweepRow { epsilon: e, x: vec![], quantity: "I".into(), value: v })
        .collect()
}

fn verdict_rows(v: &TestVerdict) -> Vec<SweepRow> {
    v.sweeps
        .iter()
        .flat_map(|s| {
            s.rows.iter().map(move |r| SweepRow { quantity: format!("{} [{}]", r.quantity, s.kernel), ..r.clone() })
        })
        .collect()
}

fn growth(v: &TestVerdict, label: &str) -> String {
    v.per_alpha
        .iter()
        .map(|a| format!("α={:?}: slope {:.3}, {label} = {}", a.alpha, a.slope, a.n_or_m))
        .collect::<Vec<_>>()
        .join("; ")
}

struct Ran {
    observed: String,
    passed: bool,
    report: serde_json::Value,
    rows: Vec<SweepRow>,
}

fn json<T: Serialize>(v: &T) -> Outcome<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Failure::numerical("serialize report", e))
}

#[derive(Serialize)]
struct GlueReport<'a> {
    test: &'static str,
    subject: &'a str,
    kernel: &'a str,
    max_discrepancy: f64,
    tolerance: f64,
    association: &'a AssocReport,
    verdict: &'static str,
}

fn battery(b: &BatteryDef, built: &Built, n: usize, path: &str) -> Outcome<Battery> {
    match b {
        BatteryDef::Kernels(names) => Battery::new(names.iter().map(|k| built.kernels[k].clone()).collect()).at(path, path),
        BatteryDef::Standard { standard } => Battery::standard(standard.q, n).at(path, path),
    }
}

fn run_test(i: usize, t: &TestDef, s: &Scenario, built: &Built, eps: &[f64], slope_tol: Option<f64>) -> Outcome<Ran> {
    let path = format!("tests[{i}]");
    let op = format!("tests[{i}] ({} '{}')", t.kind(), t.id());
    let sweep_cfg = SweepConfig { eps: eps.to_vec(), slope_tol: slope_tol.unwrap_or(DEFAULT_SLOPE_TOL), ..SweepConfig::default() };
    let assoc_cfg = AssocConfig { eps: eps.to_vec(), slope_tol: slope_tol.unwrap_or(DEFAULT_SLOPE_TOL), ..AssocConfig::default() };
    match t {
        TestDef::LskCheck { kernel, condition, alpha, beta, f, probe: p, expect, .. } => {
            let k = &built.kernels[kernel];
            let n = k.dim();
            let alpha = multi(alpha, n, &format!("{path}.alpha"))?;
            let cond = match condition {
                LskKind::Lsk1 => LskCondition::Lsk1,
                LskKind::Lsk2 => LskCondition::Lsk2 { alpha, beta: multi(beta, n, &format!("{path}.beta"))? },
                LskKind::Lsk3 => {
                    let f = f.as_ref().expect("validated").build(n).at(&format!("{path}.f"), &op)?;
                    LskCondition::moment(k, alpha, f)
                }
            };
            let pr = probe(p, k.domain(), &format!("{path}.probe"))?;
            let cfg = CheckConfig { eps: eps.to_vec(), slope_tol, ..CheckConfig::default() };
            let r = check_lsk(k, &cond, &pr, &cfg).at(&path, &op)?;
            Ok(Ran {
                observed: format!("{} (slope {:.3}, target {})", verdict_str(r.passed()), r.slope, r.target_slope),
                passed: r.passed() == (*expect == Expect::Pass),
                report: json(&r)?,
                rows: r.rows,
            })
        }
        TestDef::Moderate { subject, battery: b, probe: p, alpha_max, claimed_n, expect, .. } => {
            let r = &built.subjects[subject];
            let bat = battery(b, built, r.dim(), &format!("{path}.battery"))?;
            let pr = probe(p, r.domain(), &format!("{path}.probe"))?;
            let opts = ModerateOptions { alpha_max: *alpha_max, claimed_n: *claimed_n, sweep: sweep_cfg };
            let v = moderateness_test(r, subject, &bat, &pr, &opts).at(&path, &op)?;
            Ok(Ran {
                observed: format!("{} ({})", verdict_str(v.passed()), growth(&v, "N")),
                passed: v.passed() == (*expect == Expect::Pass),
                report: json(&v)?,
                rows: verdict_rows(&v),
            })
        }
        TestDef::Negligible { subject, battery: b, probe: p, alpha_max, m, expect, .. } => {
            let r = &built.subjects[subject];
            let bat = battery(b, built, r.dim(), &format!("{path}.battery"))?;
            let pr = probe(p, r.domain(), &format!("{path}.probe"))?;
            let opts = NegligibleOptions { alpha_max: *alpha_max, m_targets: m.clone(), alpha0_only: *alpha_max == 0, sweep: sweep_cfg };
            let v = negligibility_test(r, subject, &bat, &pr, &opts).at(&path, &op)?;
            Ok(Ran {
                observed: format!("{} ({})", verdict_str(v.passed()), growth(&v, "m")),
                passed: v.passed() == (*expect == Expect::Pass),
                report: json(&v)?,
                rows: verdict_rows(&v),
            })
        }
        TestDef::Assoc { subject, reference, kernel, psi, expect, .. } => {
            let r = &built.subjects[subject];
            let (s_name, s) = match reference {
                Some(name) => (name.as_str(), built.subjects[name].clone()),
                None => ("0", GenFun::zero(r.dim())),
            };
            let psi = test_function(&psi.build(r.dim()).at(&format!("{path}.psi"), &op)?, &format!("{path}.psi"))?;
            let rep = association_test(r, &s, (subject, s_name), &psi, &built.kernels[kernel], &assoc_cfg).at(&path, &op)?;
            Ok(Ran {
                observed: rep.message.clone(),
                passed: assoc_matches(&rep, expect),
                rows: assoc_rows(&rep),
                report: json(&rep)?,
            })
        }
        TestDef::SheafGlue { subject, cover, partition, kernel, psi, check, expect, .. } => {
            let r = &built.subjects[subject];
            let spec = GenFunSpec::Glue {
                pieces: cover
                    .iter()
                    .map(|c| GenFunSpec::Restrict { domain: c.clone(), arg: Box::new(s.subjects[subject].clone()) })
                    .collect(),
                cover: cover.clone(),
                partition: partition.clone(),
            };
            let glued = spec.build().at(&format!("{path}.partition"), &op)?;
            let k = &built.kernels[kernel];
            let pr = probe(&check.probe, glued.domain(), &format!("{path}.check.probe"))?;
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for &e in &check.eps {
                for x in &pr.grid {
                    let phi = k.test_function(e, x).at(&path, &op)?;
                    let a = glued.evaluate(&phi, x).at(&path, &op)?;
                    let b = r.evaluate(&phi, x).at(&path, &op)?;
                    worst = worst.max((a - b).abs() / b.abs().max(1.0));
                    rows.push(SweepRow { epsilon: e, x: x.clone(), quantity: "glued - subject".into(), value: a - b });
                }
            }
            let psi = test_function(&psi.build(r.dim()).at(&format!("{path}.psi"), &op)?, &format!("{path}.psi"))?;
            let rep = association_test(&glued, r, ("glued", subject), &psi, k, &assoc_cfg).at(&path, &op)?;
            let ok = worst <= check.tol && rep.associated();
            rows.extend(assoc_rows(&rep));
            Ok(Ran {
                observed: format!("{} (max discrepancy {worst:.1e}, {})", verdict_str(ok), rep.message),
                passed: ok == (*expect == Expect::Pass),
                report: json(&GlueReport {
                    test: "sheaf-glue",
                    subject,
                    kernel: k.name(),
                    max_discrepancy: worst,
                    tolerance: check.tol,
                    association: &rep,
                    verdict: verdict_str(ok),
                })?,
                rows,
            })
        }
    }
}

fn expected(t: &TestDef) -> String {
    match t {
        TestDef::LskCheck { expect, .. }
        | TestDef::Moderate { expect, .. }
        | TestDef::Negligible { expect, .. }
        | TestDef::SheafGlue { expect, .. } => expect_str(*expect),
        TestDef::Assoc { expect, .. } => describe_expect(expect),
    }
}

/// Runs every test in order, writing reports as it goes; `log` receives one line per test.
pub fn run(s: &Scenario, ov: &Overrides, out: &Artifacts, log: &mut dyn FnMut(&str)) -> Outcome<Summary> {
    let eps = eps_grid(ov.eps.or(s.eps))?;
    let slope_tol = ov.slope_tol.or(s.slope_tol);
    let built = build(s)?;
    let mut tests = Vec::with_capacity(s.tests.len());
    let mut reports = Vec::with_capacity(s.tests.len());
    for (i, t) in s.tests.iter().enumerate() {
        let ran = run_test(i, t, s, &built, &eps, slope_tol)?;
        let paths = t.output();
        let report_path = paths.report.clone().unwrap_or_else(|| format!("{}.json", t.id()));
        let sweep_path = paths.sweep.clone().unwrap_or_else(|| format!("{}.csv", t.id()));
        let report = out.json(&report_path, &ran.report)?;
        let sweep = if ran.rows.is_empty() { None } else { out.sweep_csv(&sweep_path, &ran.rows)? };
        let summary = TestSummary {
            id: t.id().to_string(),
            kind: t.kind().to_string(),
            expected: expected(t),
            observed: ran.observed,
            passed: ran.passed,
            report,
            sweep,
        };
        log(&format!(
            "[{}] {} {}: {} (expected {})",
            if summary.passed { "ok" } else { "FAILED" },
            summary.kind,
            summary.id,
            summary.observed,
            summary.expected
        ));
        tests.push(summary);
        reports.push(ran.report);
    }
    let summary = Summary { scenario: s.name.clone(), eps, passed: tests.iter().all(|t| t.passed), tests, reports };
    out.json(&s.output.summary, &summary)?;
    Ok(summary)
}
