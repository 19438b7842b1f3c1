//! Least-squares order fits on `(log ε, log |value|)` data.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MIN_POINTS: usize = 6;
pub const DEFAULT_SLOPE_TOL: f64 = 0.2;

/// `n` log-spaced points from `hi` down to `lo`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi <= 1.0 && lo < hi) || n < 2 {
        return Err(Error::InvalidSequence(format!(
            "epsilon grid needs 0 < lo < hi ≤ 1 and at least 2 points (got [{lo}, {hi}], {n})"
        )));
    }
    let (a, b) = (hi.ln(), lo.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// The default sweep: 12 points in `[10^{−2.5}, 10^{−0.5}]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(10f64.powf(-2.5), 10f64.powf(-0.5), 12).expect("valid default grid")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Fitted `sup ≈ C ε^{slope}` together with the claim it was checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    /// `(ε, sup |value|)`, ε decreasing.
    pub samples: Vec<(f64, f64)>,
    /// `+∞` when every sample is at or below the noise floor.
    #[serde(with = "nonfinite")]
    pub slope: f64,
    #[serde(with = "nonfinite")]
    pub intercept: f64,
    pub r_squared: f64,
    pub target: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub exact_zero: bool,
    /// Samples dropped as being at or below the noise floor.
    pub dropped: usize,
}

impl AsymptoticReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Smallest integer `N ≥ 0` with `sup = O(ε^{−N})` up to the slope tolerance.
    pub fn growth_order(&self) -> u32 {
        if self.slope.is_infinite() {
            return 0;
        }
        (-self.slope - self.tolerance).ceil().max(0.0) as u32
    }
}

/// Fits the order of `samples` and checks `slope ≥ target − tol`.
///
/// Values with `|v| ≤ floor` are treated as exact zeros; if all are, the fit short-circuits
/// to a pass with slope `+∞`.
pub fn fit_order(samples: &[(f64, f64)], target: f64, tol: f64, floor: f64) -> Result<AsymptoticReport> {
    if samples.len() < MIN_POINTS {
        return Err(Error::TooFewPoints(samples.len(), MIN_POINTS));
    }
    if let Some(&(e, _)) = samples.iter().find(|(e, _)| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::InvalidSequence(format!("epsilon {e} outside (0, 1]")));
    }
    if let Some(&(_, v)) = samples.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Invalid(format!("non-finite sweep value {v}")));
    }
    let abs: Vec<(f64, f64)> = samples.iter().map(|&(e, v)| (e, v.abs())).collect();
    let kept: Vec<(f64, f64)> = abs.iter().copied().filter(|&(_, v)| v > floor).collect();
    let dropped = abs.len() - kept.len();
    if kept.len() < 3 {
        return Ok(AsymptoticReport {
            samples: abs,
            slope: f64::INFINITY,
            intercept: f64::NAN,
            r_squared: 1.0,
            target,
            tolerance: tol,
            verdict: Verdict::Pass,
            exact_zero: true,
            dropped,
        });
    }
    let x: Vec<f64> = kept.iter().map(|(e, _)| e.ln()).collect();
    let y: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    let fit = least_squares(&x, &y);
    Ok(AsymptoticReport {
        samples: abs,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        target,
        tolerance: tol,
        verdict: Verdict::from_bool(fit.slope >= target - tol),
        exact_zero: false,
        dropped,
    })
}

pub(crate) mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Ok(f64::NAN),
            },
        }
    }
}
