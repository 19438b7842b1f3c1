//! Scenario files: named mollifiers, kernels and subjects, and the tests to run on them.

use crate::failure::{Failure, Outcome};
use colombeau::genfun::{BoxSpec, PartitionSpec};
use colombeau::kernels::DiffeoSpec;
use colombeau::testing::AssocOutcome;
use colombeau::{ExprSpec, GenFunSpec, Shape};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Log-spaced ε grid shared by every test; the library default if absent.
    #[serde(default)]
    pub eps: Option<EpsGrid>,
    #[serde(default)]
    pub slope_tol: Option<f64>,
    #[serde(default)]
    pub mollifiers: BTreeMap<String, MollifierDef>,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelDef>,
    #[serde(default)]
    pub subjects: BTreeMap<String, GenFunSpec>,
    pub tests: Vec<TestDef>,
    #[serde(default)]
    pub output: OutputDef,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierDef {
    pub q: u32,
    pub n: usize,
    #[serde(default = "symmetric")]
    pub shape: Shape,
}

fn symmetric() -> Shape {
    Shape::Symmetric
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelDef {
    Model {
        mollifier: String,
    },
    /// Glued to the open box `domain`.
    Glue {
        base: String,
        domain: BoxSpec,
        lambda: LambdaDef,
    },
    Pullback {
        base: String,
        mu: DiffeoSpec,
    },
    /// Lie derivative of `base` along `field`.
    Derive {
        base: String,
        field: Vec<ExprSpec>,
    },
    Lsk7 {
        terms: Vec<Lsk7Term>,
        lambda: LambdaDef,
        points: Vec<Vec<f64>>,
    },
}

impl KernelDef {
    fn references(&self) -> Vec<(String, &str)> {
        match self {
            KernelDef::Model { .. } => vec![],
            KernelDef::Glue { base, .. } | KernelDef::Pullback { base, .. } | KernelDef::Derive { base, .. } => {
                vec![("base".to_string(), base.as_str())]
            }
            KernelDef::Lsk7 { terms, .. } => terms
                .iter()
                .enumerate()
                .map(|(i, t)| (format!("terms[{i}].kernel"), t.kernel.as_str()))
                .collect(),
        }
    }
}

/// Geometric scale sequence `first·ratioʲ`, `j < len`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaDef {
    pub first: f64,
    pub ratio: f64,
    pub len: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lsk7Term {
    pub beta: Vec<u32>,
    pub kernel: String,
}

/// Either a list of kernel names or the library's standard battery of order `q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatteryDef {
    Kernels(Vec<String>),
    Standard { standard: StandardBattery },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardBattery {
    pub q: u32,
}

/// Uniform grid on the box `[lo, hi]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDef {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "five")]
    pub points: usize,
}

fn five() -> usize {
    5
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LskKind {
    Lsk1,
    Lsk2,
    Lsk3,
}

/// `value ± tol`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub value: f64,
    pub tol: f64,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        (v - self.value).abs() <= self.tol
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssocExpect {
    #[serde(default = "associated")]
    pub verdict: AssocOutcome,
    #[serde(default)]
    pub divergence_order: Option<Band>,
    /// Band for the extrapolated limit of `∫ (R − S)(φ̃_{ε,x}, x) ψ(x) dx`.
    #[serde(default)]
    pub limit: Option<Band>,
}

impl Default for AssocExpect {
    fn default() -> Self {
        AssocExpect {
            verdict: AssocOutcome::Associated,
            divergence_order: None,
            limit: None,
        }
    }
}

fn associated() -> AssocOutcome {
    AssocOutcome::Associated
}

/// Pointwise comparison of the glued function with the subject on small ε.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueCheck {
    pub eps: Vec<f64>,
    pub probe: ProbeDef,
    #[serde(default = "glue_tol")]
    pub tol: f64,
}

fn glue_tol() -> f64 {
    1e-12
}

/// Where a test's artifacts go, relative to the output directory.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactPaths {
    #[serde(default)]
    pub report: Option<String>,
    #[serde(default)]
    pub sweep: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestDef {
    LskCheck {
        id: String,
        kernel: String,
        condition: LskKind,
        #[serde(default)]
        alpha: Option<Vec<u32>>,
        #[serde(default)]
        beta: Option<Vec<u32>>,
        #[serde(default)]
        f: Option<ExprSpec>,
        probe: ProbeDef,
        #[serde(default)]
        expect: Expect,
        #[serde(default)]
        output: ArtifactPaths,
    },
    Moderate {
        id: String,
        subject: String,
        battery: BatteryDef,
        probe: ProbeDef,
        #[serde(default)]
        alpha_max: u32,
        #[serde(default)]
        claimed_n: Option<u32>,
        #[serde(default)]
        expect: Expect,
        #[serde(default)]
        output: ArtifactPaths,
    },
    Negligible {
        id: String,
        subject: String,
        battery: BatteryDef,
        probe: ProbeDef,
        #[serde(default)]
        alpha_max: u32,
        #[serde(default = "m_default")]
        m: Vec<f64>,
        #[serde(default)]
        expect: Expect,
        #[serde(default)]
        output: ArtifactPaths,
    },
    Assoc {
        id: String,
        subject: String,
        /// Absent: the zero function.
        #[serde(default)]
        reference: Option<String>,
        kernel: String,
        psi: ExprSpec,
        #[serde(default)]
        expect: AssocExpect,
        #[serde(default)]
        output: ArtifactPaths,
    },
    SheafGlue {
        id: String,
        subject: String,
        cover: Vec<BoxSpec>,
        partition: Vec<PartitionSpec>,
        kernel: String,
        psi: ExprSpec,
        check: GlueCheck,
        #[serde(default)]
        expect: Expect,
        #[serde(default)]
        output: ArtifactPaths,
    },
}

fn m_default() -> Vec<f64> {
    vec![1.0]
}

impl TestDef {
    pub fn id(&self) -> &str {
        match self {
            TestDef::LskCheck { id, .. }
            | TestDef::Moderate { id, .. }
            | TestDef::Negligible { id, .. }
            | TestDef::Assoc { id, .. }
            | TestDef::SheafGlue { id, .. } => id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TestDef::LskCheck { .. } => "lsk-check",
            TestDef::Moderate { .. } => "moderate",
            TestDef::Negligible { .. } => "negligible",
            TestDef::Assoc { .. } => "assoc",
            TestDef::SheafGlue { .. } => "sheaf-glue",
        }
    }

    pub fn output(&self) -> &ArtifactPaths {
        match self {
            TestDef::LskCheck { output, .. }
            | TestDef::Moderate { output, .. }
            | TestDef::Negligible { output, .. }
            | TestDef::Assoc { output, .. }
            | TestDef::SheafGlue { output, .. } => output,
        }
    }

    fn kernel_refs(&self) -> Vec<(&'static str, &str)> {
        match self {
            TestDef::LskCheck { kernel, .. } | TestDef::Assoc { kernel, .. } | TestDef::SheafGlue { kernel, .. } => {
                vec![("kernel", kernel.as_str())]
            }
            TestDef::Moderate { battery, .. } | TestDef::Negligible { battery, .. } => match battery {
                BatteryDef::Kernels(names) => names.iter().map(|n| ("battery", n.as_str())).collect(),
                BatteryDef::Standard { .. } => vec![],
            },
        }
    }

    fn subject_refs(&self) -> Vec<(&'static str, &str)> {
        match self {
            TestDef::LskCheck { .. } => vec![],
            TestDef::Moderate { subject, .. } | TestDef::Negligible { subject, .. } | TestDef::SheafGlue { subject, .. } => {
                vec![("subject", subject.as_str())]
            }
            TestDef::Assoc { subject, reference, .. } => {
                let mut v = vec![("subject", subject.as_str())];
                if let Some(r) = reference {
                    v.push(("reference", r.as_str()));
                }
                v
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDef {
    /// Default output directory when `--out` is not given.
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "summary_name")]
    pub summary: String,
}

fn summary_name() -> String {
    "summary.json".into()
}

impl Default for OutputDef {
    fn default() -> Self {
        OutputDef { dir: None, summary: summary_name() }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Outcome<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::schema(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` prefixes error paths.
    pub fn parse(text: &str, origin: &str) -> Outcome<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Failure::schema(format!("{origin}: {path}"), e.into_inner())
        })?;
        s.validate().map_err(|f| match f {
            Failure::Schema { path, message } => Failure::schema(format!("{origin}: {path}"), message),
            other => other,
        })?;
        Ok(s)
    }

    /// Reference resolution and value ranges that the JSON shape cannot express.
    pub fn validate(&self) -> Outcome<()> {
        if let Some(g) = &self.eps {
            check_grid(g, "eps")?;
        }
        if let Some(t) = self.slope_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::schema("slope_tol", format!("must be positive, got {t}")));
            }
        }
        if self.output.summary.trim().is_empty() || self.output.summary.ends_with('/') {
            return Err(Failure::schema("output.summary", "needs a file name"));
        }
        for (name, k) in &self.kernels {
            if let KernelDef::Model { mollifier } = k {
                if !self.mollifiers.contains_key(mollifier) {
                    return Err(Failure::schema(
                        format!("kernels.{name}.mollifier"),
                        format!("undefined mollifier '{mollifier}'"),
                    ));
                }
            }
            for (field, r) in k.references() {
                if !self.kernels.contains_key(r) {
                    return Err(Failure::schema(format!("kernels.{name}.{field}"), format!("undefined kernel '{r}'")));
                }
            }
        }
        self.check_acyclic()?;
        let mut ids = BTreeSet::new();
        for (i, t) in self.tests.iter().enumerate() {
            if !ids.insert(t.id()) {
                return Err(Failure::schema(format!("tests[{i}].id"), format!("duplicate test id '{}'", t.id())));
            }
            for (field, r) in t.kernel_refs() {
                if !self.kernels.contains_key(r) {
                    return Err(Failure::schema(format!("tests[{i}].{field}"), format!("undefined kernel '{r}'")));
                }
            }
            for (field, r) in t.subject_refs() {
                if !self.subjects.contains_key(r) {
                    return Err(Failure::schema(format!("tests[{i}].{field}"), format!("undefined subject '{r}'")));
                }
            }
            if let TestDef::SheafGlue { check, .. } = t {
                if let Some(e) = check.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
                    return Err(Failure::schema(format!("tests[{i}].check.eps"), format!("ε = {e} outside (0, 1]")));
                }
            }
            if let TestDef::LskCheck { condition: LskKind::Lsk3, f: None, .. } = t {
                return Err(Failure::schema(format!("tests[{i}].f"), "lsk3 needs a test function f"));
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Outcome<()> {
        fn visit<'a>(s: &'a Scenario, name: &'a str, stack: &mut Vec<&'a str>, done: &mut BTreeSet<&'a str>) -> Outcome<()> {
            if done.contains(name) {
                return Ok(());
            }
            if stack.contains(&name) {
                return Err(Failure::schema(format!("kernels.{name}"), format!("kernel cycle {} -> {name}", stack.join(" -> "))));
            }
            stack.push(name);
            for (_, r) in s.kernels[name].references() {
                visit(s, r, stack, done)?;
            }
            stack.pop();
            done.insert(name);
            Ok(())
        }
        let mut done = BTreeSet::new();
        for name in self.kernels.keys() {
            visit(self, name, &mut Vec::new(), &mut done)?;
        }
        Ok(())
    }
}

pub fn check_grid(g: &EpsGrid, path: &str) -> Outcome<()> {
    if !(g.min > 0.0 && g.min < g.max && g.max <= 1.0) {
        return Err(Failure::schema(path, format!("need 0 < min < max ≤ 1, got [{}, {}]", g.min, g.max)));
    }
    if g.points < 6 {
        return Err(Failure::schema(format!("{path}.points"), format!("need at least 6 points, got {}", g.points)));
    }
    Ok(())
}
