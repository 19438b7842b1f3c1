use super::{sup_per_eps, sweep, Battery, SweepConfig};
use crate::asymptotics::{fit_order, AsymptoticReport, Verdict};
use crate::error::Result;
use crate::genfun::GenFun;
use crate::kernels::{CompactProbe, SweepRow};
use crate::multi_index::MultiIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One line of a verdict: the worst kernel for one derivative (and, for negligibility, one
/// target order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaVerdict {
    pub alpha: Vec<u32>,
    #[serde(with = "crate::asymptotics::nonfinite")]
    pub slope: f64,
    #[serde(rename = "N_or_m")]
    pub n_or_m: f64,
    pub verdict: Verdict,
    /// The kernel attaining `slope`; a counterexample when the verdict is a failure.
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub test: String,
    pub subject: String,
    pub kernel_battery: Vec<String>,
    pub per_alpha: Vec<AlphaVerdict>,
    pub overall: Verdict,
    #[serde(skip)]
    pub sweeps: Vec<SweepSet>,
}

/// Raw sweep and its fit for one `(α, kernel)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSet {
    pub kernel: String,
    pub order: u32,
    pub alpha: MultiIndex,
    pub rows: Vec<SweepRow>,
    pub report: AsymptoticReport,
}

impl TestVerdict {
    pub fn passed(&self) -> bool {
        self.overall.passed()
    }

    /// Fit of one `(α, kernel)` pair, by kernel position in the battery.
    pub fn report(&self, alpha: &MultiIndex, kernel: usize) -> Option<&AsymptoticReport> {
        let name = self.kernel_battery.get(kernel)?;
        self.sweeps.iter().find(|s| &s.alpha == alpha && &s.kernel == name).map(|s| &s.report)
    }
}

#[derive(Clone, Debug)]
pub struct ModerateOptions {
    pub alpha_max: u32,
    /// If set, each fit must also satisfy `slope ≥ −N − tol`.
    pub claimed_n: Option<u32>,
    pub sweep: SweepConfig,
}

impl Default for ModerateOptions {
    fn default() -> Self {
        ModerateOptions { alpha_max: 0, claimed_n: None, sweep: SweepConfig::default() }
    }
}

#[derive(Clone, Debug)]
pub struct NegligibleOptions {
    pub alpha_max: u32,
    pub m_targets: Vec<f64>,
    /// Only `α = 0`; legitimate when the subject is already known to be moderate.
    pub alpha0_only: bool,
    pub sweep: SweepConfig,
}

impl Default for NegligibleOptions {
    fn default() -> Self {
        NegligibleOptions { alpha_max: 0, m_targets: vec![1.0], alpha0_only: true, sweep: SweepConfig::default() }
    }
}

fn sweep_all(r: &GenFun, battery: &Battery, probe: &CompactProbe, alphas: &[MultiIndex], cfg: &SweepConfig) -> Result<Vec<SweepSet>> {
    let jobs: Vec<(&MultiIndex, usize)> = alphas.iter().flat_map(|a| (0..battery.kernels.len()).map(move |k| (a, k))).collect();
    jobs.into_par_iter()
        .map(|(alpha, i)| {
            let k = &battery.kernels[i];
            let rows = sweep(r, k, probe, alpha, cfg)?;
            let report = fit_order(&sup_per_eps(&rows), f64::NEG_INFINITY, cfg.slope_tol, cfg.noise_floor)?;
            Ok(SweepSet { kernel: k.name().to_string(), order: k.order(), alpha: alpha.clone(), rows, report })
        })
        .collect()
}

fn worst<'a>(sets: impl Iterator<Item = &'a SweepSet>) -> Option<&'a SweepSet> {
    sets.min_by(|a, b| a.report.slope.total_cmp(&b.report.slope))
}

/// `∃q ∃N`: for every `|α| ≤ α_max` some order in the battery yields a finite growth order on
/// all of its kernels. `N_or_m` is the reported `N`.
pub fn moderateness_test(r: &GenFun, subject: &str, battery: &Battery, probe: &CompactProbe, opts: &ModerateOptions) -> Result<TestVerdict> {
    let alphas = MultiIndex::all_up_to(r.dim(), opts.alpha_max);
    let sets = sweep_all(r, battery, probe, &alphas, &opts.sweep)?;
    let tol = opts.sweep.slope_tol;
    let mut per_alpha = Vec::new();
    for alpha in &alphas {
        let mut best: Option<AlphaVerdict> = None;
        for q in battery.orders() {
            let Some(w) = worst(sets.iter().filter(|s| &s.alpha == alpha && s.order == q)) else { continue };
            let finite = !w.report.slope.is_nan() && w.report.slope > f64::NEG_INFINITY;
            let claim_ok = opts.claimed_n.is_none_or(|n| w.report.exact_zero || w.report.slope >= -f64::from(n) - tol);
            let v = AlphaVerdict {
                alpha: alpha.entries().to_vec(),
                slope: w.report.slope,
                n_or_m: f64::from(w.report.growth_order()),
                verdict: Verdict::from_bool(finite && claim_ok),
                witness: w.kernel.clone(),
            };
            let better = match &best {
                None => true,
                Some(b) => (!b.verdict.passed() && v.verdict.passed()) || (b.verdict == v.verdict && v.n_or_m < b.n_or_m),
            };
            if better {
                best = Some(v);
            }
        }
        per_alpha.extend(best);
    }
    let overall = Verdict::from_bool(per_alpha.iter().all(|a| a.verdict.passed()));
    Ok(TestVerdict {
        test: "moderate".into(),
        subject: subject.into(),
        kernel_battery: battery.names(),
        per_alpha,
        overall,
        sweeps: sets,
    })
}

/// For every target `m` and `α`: some order `q` such that all kernels of order `≥ q` give
/// `slope ≥ m − tol`. One `per_alpha` line per `(α, m)`.
pub fn negligibility_test(r: &GenFun, subject: &str, battery: &Battery, probe: &CompactProbe, opts: &NegligibleOptions) -> Result<TestVerdict> {
    let alphas = if opts.alpha0_only { vec![MultiIndex::zero(r.dim())] } else { MultiIndex::all_up_to(r.dim(), opts.alpha_max) };
    let sets = sweep_all(r, battery, probe, &alphas, &opts.sweep)?;
    let tol = opts.sweep.slope_tol;
    let orders = battery.orders();
    let mut per_alpha = Vec::new();
    for &m in &opts.m_targets {
        for alpha in &alphas {
            let ok = |s: &SweepSet| s.report.exact_zero || s.report.slope >= m - tol;
            let mut line = None;
            for &q in &orders {
                let group: Vec<&SweepSet> = sets.iter().filter(|s| &s.alpha == alpha && s.order >= q).collect();
                if group.iter().all(|s| ok(s)) {
                    let w = worst(group.into_iter()).expect("non-empty order group");
                    line = Some((w, true));
                    break;
                }
            }
            let (w, pass) = line.unwrap_or_else(|| {
                let top = *orders.last().expect("non-empty battery");
                (worst(sets.iter().filter(|s| &s.alpha == alpha && s.order >= top)).expect("non-empty"), false)
            });
            per_alpha.push(AlphaVerdict {
                alpha: alpha.entries().to_vec(),
                slope: w.report.slope,
                n_or_m: m,
                verdict: Verdict::from_bool(pass),
                witness: w.kernel.clone(),
            });
        }
    }
    let overall = Verdict::from_bool(per_alpha.iter().all(|a| a.verdict.passed()));
    Ok(TestVerdict {
        test: "negligible".into(),
        subject: subject.into(),
        kernel_battery: battery.names(),
        per_alpha,
        overall,
        sweeps: sets,
    })
}
