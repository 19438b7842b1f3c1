//! Thin subcommand wrappers over the library.

use crate::failure::{Context, Failure, Outcome};
use crate::report::{to_json, Artifacts};
use crate::runner::{self, Overrides, Summary};
use crate::scenario::{
    ArtifactPaths, AssocExpect, BatteryDef, Expect, GlueCheck, OutputDef, ProbeDef, Scenario, StandardBattery, TestDef,
};
use colombeau::genfun::{BoxSpec, PartitionSpec};
use colombeau::kernels::{CheckConfig, LskCondition};
use colombeau::mollifier::{MollifierSpec, TOL_MOMENT};
use colombeau::{
    check_lsk, Aabb, Battery, CompactProbe, ExprSpec, GenFunSpec, Mollifier, MultiIndex, ScalarExpr, Shape,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Process exit status of a completed command.
pub type Status = i32;

pub fn status(passed: bool) -> Status {
    if passed {
        0
    } else {
        1
    }
}

/// Parses `text` as JSON, or reads the file `path` when given as `@path`.
pub fn json_arg<T: serde::de::DeserializeOwned>(text: &str, flag: &str) -> Outcome<T> {
    let (origin, body) = match text.strip_prefix('@') {
        Some(p) => (format!("{flag} {p}"), std::fs::read_to_string(p).map_err(|e| Failure::schema(format!("{flag} {p}"), e))?),
        None => (flag.to_string(), text.to_string()),
    };
    let de = &mut serde_json::Deserializer::from_str(&body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Failure::schema(format!("{origin}: {path}"), e.into_inner())
    })
}

#[derive(Serialize)]
struct MollifierOut {
    q: u32,
    n: usize,
    shape: Shape,
    coeffs: Vec<(MultiIndex, f64)>,
    condition: f64,
    moments: Vec<(MultiIndex, f64)>,
    max_defect: f64,
}

fn mollifier_out(m: &Mollifier) -> Outcome<(MollifierOut, bool)> {
    let r = m.verify_moments().at("mollifier", "moment quadrature")?;
    let max_defect = r.max_defect(m.order);
    Ok((
        MollifierOut {
            q: m.order,
            n: m.dim,
            shape: m.shape,
            coeffs: m.coeffs.clone(),
            condition: m.condition,
            moments: r.moments,
            max_defect,
        },
        max_defect <= TOL_MOMENT,
    ))
}

pub fn mollifier_build(q: u32, n: usize, shape: Shape, out: &Artifacts) -> Outcome<Status> {
    let m = Mollifier::build(q, n, shape).at("--q/--n", "mollifier moment solve")?;
    let (o, ok) = mollifier_out(&m)?;
    println!("{}", to_json(&o)?);
    out.json("mollifier.json", &o)?;
    Ok(status(ok))
}

pub fn mollifier_verify(file: &Path, out: &Artifacts) -> Outcome<Status> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::schema(file.display().to_string(), e))?;
    let spec: MollifierSpec = json_arg(&text, &file.display().to_string())?;
    let m = Mollifier::from_spec(&spec).at(&file.display().to_string(), "mollifier")?;
    let (o, ok) = mollifier_out(&m)?;
    println!("{}", to_json(&o)?);
    out.json("mollifier-verify.json", &o)?;
    if !ok {
        eprintln!("moment defect {:.3e} exceeds {TOL_MOMENT:e}", o.max_defect);
    }
    Ok(status(ok))
}

/// Kernel of the standard battery by short name.
pub fn battery_kernel(which: &str, q: u32, n: usize) -> Outcome<colombeau::SmoothingKernel> {
    let idx = match which {
        "model" => 0,
        "shifted" => 1,
        "glued" => 2,
        "pullback" => 3,
        "lsk7" => 4,
        other => {
            return Err(Failure::schema(
                "--kernel",
                format!("unknown kernel '{other}' (model, shifted, glued, pullback, lsk7)"),
            ))
        }
    };
    let b = Battery::standard(q, n).at("--q/--n", "build kernel battery")?;
    Ok(b.kernels[idx].clone())
}

/// Default LSK3 test function: a degree `q + 2` polynomial plus a bump.
pub fn default_f(n: usize, q: u32) -> ScalarExpr {
    let terms = MultiIndex::all_up_to(n, q + 2)
        .into_iter()
        .enumerate()
        .map(|(i, g)| (g.entries().to_vec(), 1.0 / (i as f64 + 1.0)))
        .collect();
    ScalarExpr::polynomial(n, terms) + ScalarExpr::scale(2.0, ScalarExpr::bump_at(&vec![0.1; n], 0.9))
}

pub fn multi_arg(v: &[u32], n: usize, flag: &str) -> Outcome<MultiIndex> {
    match v.len() {
        0 => Ok(MultiIndex::zero(n)),
        l if l == n => Ok(MultiIndex::new(v)),
        _ => Err(Failure::schema(flag, format!("multi-index {v:?} in dimension {n}"))),
    }
}

pub struct KernelCheckArgs<'a> {
    pub which: &'a str,
    pub kernel: &'a str,
    pub q: u32,
    pub n: usize,
    pub alpha: &'a [u32],
    pub beta: &'a [u32],
    pub f: Option<&'a str>,
    pub probe_radius: f64,
    pub probe_points: usize,
}

pub fn kernel_check(a: &KernelCheckArgs, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    let k = battery_kernel(a.kernel, a.q, a.n)?;
    let alpha = multi_arg(a.alpha, a.n, "--alpha")?;
    let cond = match a.which {
        "lsk1" => LskCondition::Lsk1,
        "lsk2" => LskCondition::Lsk2 { alpha, beta: multi_arg(a.beta, a.n, "--beta")? },
        "lsk3" => {
            let f = match a.f {
                Some(t) => json_arg::<ExprSpec>(t, "--f")?.build(a.n).at("--f", "--f")?,
                None => default_f(a.n, a.q),
            };
            LskCondition::moment(&k, alpha, f)
        }
        other => return Err(Failure::schema("--which", format!("unknown condition '{other}' (lsk1, lsk2, lsk3)"))),
    };
    let probe = CompactProbe::new(Aabb::cube(&vec![0.0; a.n], a.probe_radius), a.probe_points, k.domain())
        .at("--probe-radius", "probe")?;
    let cfg = CheckConfig { eps: runner::eps_grid(ov.eps)?, slope_tol: ov.slope_tol, ..CheckConfig::default() };
    let r = check_lsk(&k, &cond, &probe, &cfg).at("kernel check", &format!("{} check on {}", a.which, k.name()))?;
    println!("{}", to_json(&r)?);
    let stem = a.which.to_string();
    out.json(&format!("{stem}.json"), &r)?;
    out.sweep_csv(&format!("{stem}.csv"), &r.rows)?;
    Ok(status(r.passed()))
}

fn cube_probe(n: usize, radius: f64, points: usize) -> ProbeDef {
    ProbeDef { lo: vec![-radius; n], hi: vec![radius; n], points }
}

fn single(name: &str, subjects: BTreeMap<String, GenFunSpec>, test: TestDef) -> Scenario {
    Scenario {
        name: name.into(),
        description: String::new(),
        eps: None,
        slope_tol: None,
        mollifiers: BTreeMap::new(),
        kernels: BTreeMap::new(),
        subjects,
        tests: vec![test],
        output: OutputDef { dir: None, summary: "summary.json".into() },
    }
}

/// Runs a one-test scenario, echoing the test's report to stdout.
fn run_single(s: Scenario, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    s.validate()?;
    let mut lines = Vec::new();
    let summary: Summary = runner::run(&s, ov, out, &mut |l| lines.push(l.to_string()))?;
    println!("{}", to_json(&summary.reports[0])?);
    for l in lines {
        eprintln!("{l}");
    }
    Ok(status(summary.passed))
}

fn subject_dim(spec: &GenFunSpec, flag: &str) -> Outcome<usize> {
    Ok(spec.build().at(flag, flag)?.dim())
}

pub struct QuotientArgs<'a> {
    pub subject: &'a str,
    pub q: u32,
    pub alpha_max: u32,
    pub claimed_n: Option<u32>,
    pub m: Vec<f64>,
    pub probe_radius: f64,
    pub probe_points: usize,
}

pub fn test_quotient(moderate: bool, a: &QuotientArgs, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    let spec: GenFunSpec = json_arg(a.subject, "--subject")?;
    let n = subject_dim(&spec, "--subject")?;
    let battery = BatteryDef::Standard { standard: StandardBattery { q: a.q } };
    let probe = cube_probe(n, a.probe_radius, a.probe_points);
    let id = if moderate { "moderate" } else { "negligible" };
    let test = if moderate {
        TestDef::Moderate {
            id: id.into(),
            subject: "subject".into(),
            battery,
            probe,
            alpha_max: a.alpha_max,
            claimed_n: a.claimed_n,
            expect: Expect::Pass,
            output: ArtifactPaths::default(),
        }
    } else {
        TestDef::Negligible {
            id: id.into(),
            subject: "subject".into(),
            battery,
            probe,
            alpha_max: a.alpha_max,
            m: a.m.clone(),
            expect: Expect::Pass,
            output: ArtifactPaths::default(),
        }
    };
    run_single(single(id, BTreeMap::from([("subject".to_string(), spec)]), test), ov, out)
}

/// `ψ(y) = b((y − 0.1)/0.6)·(1 + y₁/2)` on the first axis, a bump in the others.
pub fn default_psi(n: usize) -> ExprSpec {
    let mut lin = vec![0u32; n];
    lin[0] = 1;
    ExprSpec::Product {
        args: vec![
            ExprSpec::BumpAt { center: vec![0.1; n], radius: 0.6 },
            ExprSpec::Poly { terms: vec![(vec![0; n], 1.0), (lin, 0.5)] },
        ],
    }
}

fn model_kernel_scenario(s: &mut Scenario, q: u32, n: usize) {
    s.mollifiers.insert("phi".into(), crate::scenario::MollifierDef { q, n, shape: Shape::Symmetric });
    s.kernels.insert("model".into(), crate::scenario::KernelDef::Model { mollifier: "phi".into() });
}

pub fn assoc(subject: &str, reference: Option<&str>, q: u32, psi: Option<&str>, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    let r: GenFunSpec = json_arg(subject, "--subject")?;
    let n = subject_dim(&r, "--subject")?;
    let mut subjects = BTreeMap::from([("subject".to_string(), r)]);
    if let Some(t) = reference {
        subjects.insert("reference".into(), json_arg(t, "--reference")?);
    }
    let psi = match psi {
        Some(t) => json_arg(t, "--psi")?,
        None => default_psi(n),
    };
    let test = TestDef::Assoc {
        id: "assoc".into(),
        subject: "subject".into(),
        reference: reference.map(|_| "reference".to_string()),
        kernel: "model".into(),
        psi,
        expect: AssocExpect::default(),
        output: ArtifactPaths::default(),
    };
    let mut s = single("assoc", subjects, test);
    model_kernel_scenario(&mut s, q, n);
    run_single(s, ov, out)
}

/// Restricts a one-dimensional subject to `(−2, c + w)` and `(c − w, 2)` and glues it back.
pub fn glue(subject: &str, cut: f64, overlap: f64, q: u32, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    let r: GenFunSpec = json_arg(subject, "--subject")?;
    if subject_dim(&r, "--subject")? != 1 {
        return Err(Failure::schema("--subject", "glue is implemented for one-dimensional subjects"));
    }
    if !(overlap > 0.0 && overlap < 1.0 && cut.abs() + overlap < 1.5) {
        return Err(Failure::schema("--overlap", format!("need 0 < overlap < 1 and |cut| + overlap < 1.5, got {overlap}")));
    }
    let w = overlap;
    let cover = vec![BoxSpec { lo: vec![-2.0], hi: vec![cut + w] }, BoxSpec { lo: vec![cut - w], hi: vec![2.0] }];
    // χ₂ rises across the middle 60% of the overlap, θⱼ equals 1 on supp χⱼ
    let chi2 = ExprSpec::StepBetween { axis: 0, a: cut - 0.6 * w, b: cut + 0.6 * w };
    let chi1 = ExprSpec::Sum { args: vec![ExprSpec::Const { value: 1.0 }, ExprSpec::Scale { factor: -1.0, arg: Box::new(chi2.clone()) }] };
    let partition = vec![
        PartitionSpec { piece: 0, chi: chi1, theta: ExprSpec::StepBetween { axis: 0, a: cut + 0.9 * w, b: cut + 0.7 * w } },
        PartitionSpec { piece: 1, chi: chi2, theta: ExprSpec::StepBetween { axis: 0, a: cut - 0.9 * w, b: cut - 0.7 * w } },
    ];
    let small = 0.05 * w;
    let test = TestDef::SheafGlue {
        id: "glue".into(),
        subject: "subject".into(),
        cover,
        partition,
        kernel: "model".into(),
        psi: default_psi(1),
        check: GlueCheck {
            eps: vec![small, small / 4.0, small / 16.0],
            probe: ProbeDef { lo: vec![cut - 0.8 * w], hi: vec![cut + 0.8 * w], points: 41 },
            tol: 1e-12,
        },
        expect: Expect::Pass,
        output: ArtifactPaths::default(),
    };
    let mut s = single("glue", BTreeMap::from([("subject".to_string(), r)]), test);
    model_kernel_scenario(&mut s, q, 1);
    run_single(s, ov, out)
}

pub fn run_scenario(s: &Scenario, ov: &Overrides, out: &Artifacts) -> Outcome<Status> {
    let summary = runner::run(s, ov, out, &mut |l| println!("{l}"))?;
    let failed = summary.tests.iter().filter(|t| !t.passed).count();
    println!(
        "scenario {}: {} of {} tests as expected",
        summary.scenario,
        summary.tests.len() - failed,
        summary.tests.len()
    );
    Ok(status(summary.passed))
}
