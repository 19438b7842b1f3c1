//! ε-asymptotic tests on the basic space: regularized sweeps, moderateness, negligibility and
//! association.

mod assoc;
mod quotient;

pub use assoc::{association_test, extrapolate, pair_regularized, AssocConfig, AssocOutcome, AssocReport, Extrapolation};
pub use quotient::{
    moderateness_test, negligibility_test, AlphaVerdict, ModerateOptions, NegligibleOptions, SweepSet, TestVerdict,
};

use crate::asymptotics::{default_grid, DEFAULT_SLOPE_TOL};
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::genfun::GenFun;
use crate::geometry::Aabb;
use crate::kernels::{x_derivative, CompactProbe, Diffeomorphism, Domain, LambdaPartition, SmoothingKernel, SweepRow};
use crate::mollifier::{build_mollifier, Mollifier, Shape};
use crate::multi_index::{set_partitions, MultiIndex};
use crate::quadrature::QuadConfig;
use crate::test_function::TestFunction;
use rayon::prelude::*;
use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub quad: QuadConfig,
    pub slope_tol: f64,
    /// Sups at or below this are exact zeros for the fit.
    pub noise_floor: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            eps: default_grid(),
            quad: QuadConfig::with_tol(1e-13, 1e-16),
            slope_tol: DEFAULT_SLOPE_TOL,
            noise_floor: 1e-11,
        }
    }
}

/// The finite family of kernels standing in for "all kernels of order q".
#[derive(Clone, Debug)]
pub struct Battery {
    pub kernels: Vec<SmoothingKernel>,
}

impl Battery {
    pub fn new(kernels: Vec<SmoothingKernel>) -> Result<Self> {
        let n = kernels.first().ok_or_else(|| Error::Invalid("empty kernel battery".into()))?.dim();
        if let Some(k) = kernels.iter().find(|k| k.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: k.dim() });
        }
        Ok(Battery { kernels })
    }

    /// Model kernels from both mollifier shapes, a kernel glued to `(−1.5, 1.5)ⁿ`, a pullback
    /// along a nonlinear diffeomorphism and a rescaling kernel, all of order `q`.
    pub fn standard(q: u32, n: usize) -> Result<Self> {
        let sym = SmoothingKernel::model(&build_mollifier(q, n, true)?);
        let shifted = SmoothingKernel::model(&build_mollifier(q, n, false)?);
        let cube = Domain::open_box(Aabb::cube(&vec![0.0; n], 1.5), 6)?;
        let glued = SmoothingKernel::glue_to_domain(&sym, &cube, &LambdaPartition::geometric(0.9, 0.5, 12)?)?;
        let mu = standard_diffeo(n)?;
        let pulled = SmoothingKernel::pullback(&mu, &shifted)?;
        let points: Vec<Vec<f64>> = (1..=10).map(|j| vec![0.1 * (j as f64).sin(); n]).collect();
        let lsk7 = SmoothingKernel::lsk7(
            vec![(MultiIndex::zero(n), pulled.clone())],
            &LambdaPartition::geometric(0.5, 0.5, 10)?,
            points,
        )?;
        Self::new(vec![sym, shifted, glued, pulled, lsk7])
    }

    /// Both model kernels of each listed order.
    pub fn models(orders: &[u32], n: usize) -> Result<Self> {
        let mut kernels = Vec::new();
        for &q in orders {
            for shape in [Shape::Symmetric, Shape::Shifted] {
                kernels.push(SmoothingKernel::model(&Mollifier::build(q, n, shape)?));
            }
        }
        Self::new(kernels)
    }

    /// Concatenation of several batteries.
    pub fn join(parts: Vec<Battery>) -> Result<Self> {
        Self::new(parts.into_iter().flat_map(|b| b.kernels).collect())
    }

    pub fn dim(&self) -> usize {
        self.kernels[0].dim()
    }

    pub fn names(&self) -> Vec<String> {
        self.kernels.iter().map(|k| k.name().to_string()).collect()
    }

    /// Distinct kernel orders, ascending.
    pub fn orders(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.kernels.iter().map(SmoothingKernel::order).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// `x ↦ x + 0.3·g(x)` in one dimension, a shear `(x₁, x₂ + 0.3·g(x₁))` in two.
pub fn standard_diffeo(n: usize) -> Result<Diffeomorphism> {
    let g = ScalarExpr::linear(&[1.0], 0.5) * ScalarExpr::bump_at(&[0.0], 2.0);
    match n {
        1 => Diffeomorphism::perturbed_identity(g, 0.3),
        2 => Diffeomorphism::shear(0.3 * g),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// `∂_x^α (R(φ̃_{ε,x}, x))` by the chain rule: every differentiation axis either hits the
/// kernel slot (grouped into blocks by a set partition) or the point slot.
pub fn regularized_derivative(
    r: &GenFun,
    k: &SmoothingKernel,
    eps: f64,
    x: &[f64],
    alpha: &MultiIndex,
    quad: &QuadConfig,
) -> Result<f64> {
    let n = r.dim();
    let phi = k.test_function(eps, x)?;
    if alpha.is_zero() {
        return r.jet(&phi, x, &[], alpha, quad);
    }
    let slice = k.slice(eps);
    let support = phi.support().clone();
    let axes = alpha.to_axes();
    let mut dirs: HashMap<MultiIndex, TestFunction> = HashMap::new();
    let mut total = 0.0;
    for partition in set_partitions(axes.len()) {
        let singles: Vec<usize> = (0..partition.len()).filter(|&b| partition[b].len() == 1).collect();
        for mask in 0..1u32 << singles.len() {
            let mut gamma = vec![0u32; n];
            let mut blocks = Vec::new();
            for (b, block) in partition.iter().enumerate() {
                match singles.iter().position(|&s| s == b) {
                    Some(p) if mask & (1 << p) != 0 => gamma[axes[block[0]]] += 1,
                    _ => blocks.push(MultiIndex::from_axes(n, &block.iter().map(|&i| axes[i]).collect::<Vec<_>>())),
                }
            }
            let mut ds = Vec::with_capacity(blocks.len());
            for b in blocks {
                let d = match dirs.get(&b) {
                    Some(d) => d.clone(),
                    None => {
                        let d = TestFunction::from_slice(&x_derivative(&slice, &b), x, support.clone())?;
                        dirs.insert(b, d.clone());
                        d
                    }
                };
                ds.push(d);
            }
            total += r.jet(&phi, x, &ds, &MultiIndex::new(&gamma), quad)?;
        }
    }
    Ok(total)
}

/// The same quantity by nested fourth-order central differences with step `h_rel·ε`.
pub fn regularized_derivative_fd(
    r: &GenFun,
    k: &SmoothingKernel,
    eps: f64,
    x: &[f64],
    alpha: &MultiIndex,
    quad: &QuadConfig,
    h_rel: f64,
) -> Result<f64> {
    let Some(i) = alpha.entries().iter().position(|&a| a > 0) else {
        return r.jet(&k.test_function(eps, x)?, x, &[], alpha, quad);
    };
    let rest = alpha.checked_sub(&MultiIndex::unit(alpha.dim(), i)).expect("αᵢ > 0");
    let h = h_rel * eps;
    let at = |s: f64| {
        let mut p = x.to_vec();
        p[i] += s * h;
        regularized_derivative_fd(r, k, eps, &p, &rest, quad, h_rel)
    };
    Ok((-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h))
}

fn quantity(alpha: &MultiIndex) -> String {
    if alpha.is_zero() {
        "R".into()
    } else {
        format!("d^{alpha} R")
    }
}

/// One row per `(ε, x)` on the probe, ε in the configured order and x in probe order.
pub fn sweep(r: &GenFun, k: &SmoothingKernel, probe: &CompactProbe, alpha: &MultiIndex, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if r.dim() != k.dim() || alpha.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: k.dim() });
    }
    let largest = cfg.eps.iter().copied().fold(0.0, f64::max);
    for x in &probe.grid {
        let s = k.support_at(largest, x);
        if !r.domain().contains(x) || !(r.domain().margin_of(&s) >= 0.0) {
            return Err(Error::ProbeOutsideDomain {
                probe: format!("{x:?} with kernel support {s}"),
                domain: format!("{:?}", r.domain().region),
            });
        }
    }
    let label = quantity(alpha);
    let jobs: Vec<(f64, &Vec<f64>)> = cfg.eps.iter().flat_map(|&e| probe.grid.iter().map(move |x| (e, x))).collect();
    jobs.into_par_iter()
        .map(|(e, x)| {
            Ok(SweepRow {
                epsilon: e,
                x: x.clone(),
                quantity: label.clone(),
                value: regularized_derivative(r, k, e, x, alpha, &cfg.quad)?,
            })
        })
        .collect()
}

/// `(ε, sup_x |value|)` in sweep order.
pub fn sup_per_eps(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some((e, s)) if *e == row.epsilon => *s = s.max(row.value.abs()),
            _ => out.push((row.epsilon, row.value.abs())),
        }
    }
    out
}

/// Largest `|chain − fd| / max_x |chain|` over the sweep, taken per ε.
pub fn cross_check(r: &GenFun, k: &SmoothingKernel, probe: &CompactProbe, alpha: &MultiIndex, cfg: &SweepConfig) -> Result<f64> {
    let rows = sweep(r, k, probe, alpha, cfg)?;
    let sups = sup_per_eps(&rows);
    let fd: Vec<f64> = rows
        .par_iter()
        .map(|row| regularized_derivative_fd(r, k, row.epsilon, &row.x, alpha, &cfg.quad, 3e-3))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (row, f) in rows.iter().zip(fd) {
        let scale = sups.iter().find(|(e, _)| *e == row.epsilon).map_or(1.0, |&(_, s)| s);
        if scale > 0.0 {
            worst = worst.max((row.value - f).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
