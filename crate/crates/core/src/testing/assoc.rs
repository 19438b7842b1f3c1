use crate::asymptotics::{default_grid, least_squares, DEFAULT_SLOPE_TOL};
use crate::error::{Error, Result};
use crate::genfun::GenFun;
use crate::kernels::SmoothingKernel;
use crate::quadrature::{integrate_split, QuadConfig};
use crate::test_function::TestFunction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

#[derive(Clone, Debug)]
pub struct AssocConfig {
    pub eps: Vec<f64>,
    /// Pairings in `y`.
    pub quad: QuadConfig,
    /// The outer integral in `x`.
    pub outer: QuadConfig,
    /// `None`: `1e−3·‖ψ‖₁`.
    pub tol: Option<f64>,
    pub slope_tol: f64,
    pub min_r_squared: f64,
    /// Uniform cells per axis of `supp ψ` on top of the breakpoints near singular coordinates.
    pub cells: usize,
}

impl Default for AssocConfig {
    fn default() -> Self {
        AssocConfig {
            eps: default_grid(),
            quad: QuadConfig::with_tol(1e-12, 1e-15),
            outer: QuadConfig::with_tol(1e-10, 1e-14),
            tol: None,
            slope_tol: DEFAULT_SLOPE_TOL,
            min_r_squared: 0.9,
            cells: 8,
        }
    }
}

/// `∫ R(φ̃_{ε,x}, x) ψ(x) dx`.
pub fn pair_regularized(r: &GenFun, k: &SmoothingKernel, psi: &TestFunction, eps: f64, cfg: &AssocConfig) -> Result<f64> {
    if r.dim() != psi.dim() || r.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: psi.dim() });
    }
    let region = psi.support().clone();
    if region.volume() == 0.0 {
        return Ok(0.0);
    }
    let reach = k.support_constant() * eps;
    let singular = r.singular_coords();
    let breaks: Vec<Vec<f64>> = region
        .axes
        .iter()
        .enumerate()
        .map(|(i, ax)| {
            let mut b: Vec<f64> = (1..cfg.cells).map(|c| ax.lo + ax.width() * c as f64 / cfg.cells as f64).collect();
            for &c in &singular[i] {
                b.extend((-4..=4).map(|j| c + 0.25 * f64::from(j) * reach));
            }
            b.sort_by(f64::total_cmp);
            b.dedup();
            b
        })
        .collect();
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let f = |x: &[f64]| {
        let w = psi.eval(x);
        if w == 0.0 || failure.borrow().is_some() {
            return 0.0;
        }
        match k.test_function(eps, x).and_then(|phi| r.jet(&phi, x, &[], &crate::MultiIndex::zero(x.len()), &cfg.quad)) {
            Ok(v) => v * w,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let v = integrate_split(&f, &region, &breaks, &cfg.outer)?.value;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `I(ε) ≈ L + c·ε^p` fitted on successive differences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    #[serde(with = "crate::asymptotics::nonfinite")]
    pub limit: f64,
    #[serde(with = "crate::asymptotics::nonfinite")]
    pub rate: f64,
    pub r_squared: f64,
}

/// Richardson extrapolation to `ε = 0` from values on a decreasing grid, assuming one leading
/// power, fitted on the smaller half of the grid. Differences at or below `floor` count as
/// converged.
pub fn extrapolate(eps: &[f64], values: &[f64], floor: f64) -> Result<Extrapolation> {
    if eps.len() != values.len() || eps.len() < 3 {
        return Err(Error::TooFewPoints(eps.len().min(values.len()), 3));
    }
    let m = eps.len();
    let diffs: Vec<(f64, f64)> = (0..m - 1)
        .map(|k| (eps[k + 1], values[k] - values[k + 1]))
        .filter(|(_, d)| d.abs() > floor)
        .collect();
    if diffs.len() < 3 {
        return Ok(Extrapolation { limit: values[m - 1], rate: f64::INFINITY, r_squared: 1.0 });
    }
    // the smallest-ε half is closest to the single-power regime
    let tail = &diffs[diffs.len() - (diffs.len() / 2).max(3)..];
    let x: Vec<f64> = tail.iter().map(|(e, _)| e.ln()).collect();
    let y: Vec<f64> = tail.iter().map(|(_, d)| d.abs().ln()).collect();
    let fit = least_squares(&x, &y);
    let p = fit.slope;
    let limit = if p > 0.0 {
        let rho = eps[m - 2] / eps[m - 1];
        values[m - 1] - (values[m - 2] - values[m - 1]) / (rho.powf(p) - 1.0)
    } else {
        f64::NAN
    };
    Ok(Extrapolation { limit, rate: p, r_squared: fit.r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssocOutcome {
    Associated,
    NotAssociated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssocReport {
    pub test: String,
    pub subject: String,
    pub reference: String,
    pub kernel: String,
    pub eps: Vec<f64>,
    /// `I(ε) = ∫ (R − S)(φ̃_{ε,x}, x) ψ(x) dx`.
    pub values: Vec<f64>,
    pub extrapolation: Extrapolation,
    /// Fitted slope of `log |I|` against `log ε`.
    #[serde(with = "crate::asymptotics::nonfinite")]
    pub slope: f64,
    pub divergence_order: Option<f64>,
    pub tolerance: f64,
    pub monotone: bool,
    pub verdict: AssocOutcome,
    pub message: String,
}

impl AssocReport {
    pub fn associated(&self) -> bool {
        self.verdict == AssocOutcome::Associated
    }
}

/// Decides `R ≈ S` from `I(ε)` on the grid.
pub fn association_test(
    r: &GenFun,
    s: &GenFun,
    names: (&str, &str),
    psi: &TestFunction,
    k: &SmoothingKernel,
    cfg: &AssocConfig,
) -> Result<AssocReport> {
    let diff = GenFun::difference(r.clone(), s.clone())?;
    let values: Vec<f64> = cfg.eps.par_iter().map(|&e| pair_regularized(&diff, k, psi, e, cfg)).collect::<Result<_>>()?;
    let tol = match cfg.tol {
        Some(t) => t,
        None => 1e-3 * l1_norm(psi, &cfg.outer)?,
    };
    Ok(classify(names, k.name(), &cfg.eps, values, tol, cfg))
}

fn l1_norm(psi: &TestFunction, cfg: &QuadConfig) -> Result<f64> {
    Ok(crate::quadrature::integrate(&|y: &[f64]| psi.eval(y).abs(), psi.support(), cfg)?.value)
}

fn classify(names: (&str, &str), kernel: &str, eps: &[f64], values: Vec<f64>, tol: f64, cfg: &AssocConfig) -> AssocReport {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let noise = 1e-11 * scale.max(1.0);
    let tail = &values[values.len().saturating_sub(4)..];
    let monotone = tail.windows(2).all(|w| w[1].abs() <= w[0].abs() + noise);
    let kept: Vec<(f64, f64)> = eps.iter().zip(&values).filter(|(_, v)| v.abs() > noise).map(|(&e, &v)| (e.ln(), v.abs().ln())).collect();
    let (slope, r2) = if kept.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
        let f = least_squares(&x, &y);
        (f.slope, f.r_squared)
    } else {
        (f64::INFINITY, 1.0)
    };
    let ex = extrapolate(eps, &values, noise).unwrap_or(Extrapolation { limit: f64::NAN, rate: f64::NAN, r_squared: 0.0 });
    let base = |verdict, divergence_order, message: String| AssocReport {
        test: "assoc".into(),
        subject: names.0.into(),
        reference: names.1.into(),
        kernel: kernel.into(),
        eps: eps.to_vec(),
        values: values.clone(),
        extrapolation: ex,
        slope,
        divergence_order,
        tolerance: tol,
        monotone,
        verdict,
        message,
    };
    if tail.iter().all(|v| v.abs() <= 1e-3 * tol) {
        return base(AssocOutcome::Associated, None, format!("associated, |I| ≤ {:.3e} on the last points", 1e-3 * tol));
    }
    if slope < -cfg.slope_tol {
        if r2 < cfg.min_r_squared {
            return base(AssocOutcome::Inconclusive, None, format!("inconclusive, r² = {r2:.3} for a growing |I|"));
        }
        return base(AssocOutcome::NotAssociated, Some(-slope), format!("not associated, divergence order {:.2}", -slope));
    }
    if ex.r_squared < cfg.min_r_squared {
        return base(AssocOutcome::Inconclusive, None, format!("inconclusive, r² = {:.3} < {}", ex.r_squared, cfg.min_r_squared));
    }
    if !ex.limit.is_finite() {
        return base(AssocOutcome::NotAssociated, Some(0.0), format!("not associated, no convergence (rate {:.2})", ex.rate));
    }
    if ex.limit.abs() <= tol && monotone {
        base(AssocOutcome::Associated, None, format!("associated, limit {:.3e}", ex.limit))
    } else {
        base(AssocOutcome::NotAssociated, None, format!("not associated, limit {:.6}", ex.limit))
    }
}
