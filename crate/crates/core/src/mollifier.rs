//! Mollifiers `φ = p·B` with `∫φ = 1` and vanishing moments of orders `1..=q`.

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::multi_index::MultiIndex;
use crate::quadrature::{integrate_expr, QuadConfig};
use crate::test_function::TestFunction;
use crate::geometry::Aabb;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const MAX_ORDER: u32 = 6;
pub const MAX_CONDITION: f64 = 1e12;
pub const TOL_MOMENT: f64 = 1e-8;

/// Base bump `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `b(y)` in n = 1, `b(√2 y₁) b(√2 y₂)` in n = 2; even.
    Symmetric,
    /// `Π b((yᵢ − 0.2)/0.5)`, supported in `[−0.3, 0.7]ⁿ`; no symmetry.
    Shifted,
}

impl Shape {
    fn axis_params(self, n: usize) -> (f64, f64) {
        // (centre, half-width) of each 1-d factor
        match (self, n) {
            (Shape::Symmetric, 1) => (0.0, 1.0),
            (Shape::Symmetric, _) => (0.0, std::f64::consts::FRAC_1_SQRT_2),
            (Shape::Shifted, _) => (0.2, 0.5),
        }
    }

    fn base(self, n: usize) -> ScalarExpr {
        let (c, r) = self.axis_params(n);
        ScalarExpr::bump_at(&vec![c; n], r)
    }

    fn support(self, n: usize) -> Aabb {
        let (c, r) = self.axis_params(n);
        Aabb::cube(&vec![c; n], r)
    }
}

#[derive(Clone, Debug)]
pub struct Mollifier {
    pub phi: TestFunction,
    pub order: u32,
    pub dim: usize,
    pub symmetric: bool,
    pub shape: Shape,
    /// Coefficients of the polynomial factor `p(y) = Σ a_γ y^γ`.
    pub coeffs: Vec<(MultiIndex, f64)>,
    /// Condition number of the moment matrix.
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub q: u32,
    pub n: usize,
    pub moments: Vec<(MultiIndex, f64)>,
}

impl MomentReport {
    /// Largest `|∫ y^β φ − δ_{β0}|` over `|β| ≤ up_to`.
    pub fn max_defect(&self, up_to: u32) -> f64 {
        self.moments
            .iter()
            .filter(|(b, _)| b.order() <= up_to)
            .map(|(b, v)| if b.is_zero() { (v - 1.0).abs() } else { v.abs() })
            .fold(0.0, f64::max)
    }
}

/// Serialized form `{"q", "n", "shape", "coeffs": [[multi-index, value], …]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub q: u32,
    pub n: usize,
    pub shape: Shape,
    pub coeffs: Vec<(MultiIndex, f64)>,
}

fn tight() -> QuadConfig {
    QuadConfig::with_tol(1e-14, 1e-16)
}

fn moment_tol() -> QuadConfig {
    QuadConfig::with_tol(1e-12, 1e-14)
}

/// `∫ t^k b((t − c)/r) dt` for `k = 0..=max`.
fn axis_moments(c: f64, r: f64, max: u32) -> Result<Vec<f64>> {
    let b = ScalarExpr::bump_at(&[c], r);
    let t = ScalarExpr::coord(1, 0);
    let region = Aabb::cube(&[c], r);
    (0..=max)
        .map(|k| Ok(integrate_expr(&(ScalarExpr::powi(t.clone(), k) * b.clone()), &region, &tight())?.value))
        .collect()
}

impl Mollifier {
    /// Solves the moment system for the polynomial factor.
    pub fn build(q: u32, n: usize, shape: Shape) -> Result<Mollifier> {
        if q > MAX_ORDER {
            return Err(Error::OrderTooLarge { q, max: MAX_ORDER });
        }
        if !(1..=2).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        let symmetric = shape == Shape::Symmetric;
        let basis: Vec<MultiIndex> = MultiIndex::all_up_to(n, q)
            .into_iter()
            .filter(|g| !symmetric || g.order() % 2 == 0)
            .collect();
        let (c, r) = shape.axis_params(n);
        let m1 = axis_moments(c, r, 2 * q)?;
        let k = basis.len();
        let gram = DMatrix::from_fn(k, k, |i, j| {
            basis[i]
                .add(&basis[j])
                .entries()
                .iter()
                .map(|&e| m1[e as usize])
                .product::<f64>()
        });
        let mut rhs = DVector::zeros(k);
        rhs[0] = 1.0;
        let svd = gram.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = smax / smin;
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::IllConditionedMoments { q, n, condition });
        }
        let a = svd
            .solve(&rhs, smax * 1e-15)
            .map_err(|e| Error::Invalid(format!("moment solve failed: {e}")))?;
        let coeffs: Vec<(MultiIndex, f64)> = basis.into_iter().zip(a.iter().copied()).collect();
        Self::assemble(q, n, shape, coeffs, condition)
    }

    pub fn from_spec(spec: &MollifierSpec) -> Result<Mollifier> {
        if !(1..=2).contains(&spec.n) {
            return Err(Error::UnsupportedDimension(spec.n));
        }
        if let Some((g, _)) = spec.coeffs.iter().find(|(g, _)| g.dim() != spec.n) {
            return Err(Error::DimensionMismatch {
                expected: spec.n,
                got: g.dim(),
            });
        }
        Self::assemble(spec.q, spec.n, spec.shape, spec.coeffs.clone(), f64::NAN)
    }

    fn assemble(q: u32, n: usize, shape: Shape, coeffs: Vec<(MultiIndex, f64)>, condition: f64) -> Result<Mollifier> {
        let p = ScalarExpr::polynomial(
            n,
            coeffs.iter().map(|(g, v)| (g.entries().to_vec(), *v)).collect(),
        );
        let expr = p * shape.base(n);
        let phi = TestFunction::with_support(expr, shape.support(n))?;
        Ok(Mollifier {
            phi,
            order: q,
            dim: n,
            symmetric: shape == Shape::Symmetric,
            shape,
            coeffs,
            condition,
        })
    }

    pub fn spec(&self) -> MollifierSpec {
        MollifierSpec {
            q: self.order,
            n: self.dim,
            shape: self.shape,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Radius of the smallest origin-centred ball containing the support box.
    pub fn radius(&self) -> f64 {
        self.phi.support().max_corner_distance(&vec![0.0; self.dim])
    }

    /// `∫ y^β φ` for all `|β| ≤ q + 2`.
    pub fn verify_moments(&self) -> Result<MomentReport> {
        self.moments_up_to(self.order + 2)
    }

    pub fn moments_up_to(&self, max: u32) -> Result<MomentReport> {
        let moments = MultiIndex::all_up_to(self.dim, max)
            .into_iter()
            .map(|b| {
                let e = ScalarExpr::monomial(&b) * self.phi.expr().clone();
                let v = integrate_expr(&e, self.phi.support(), &moment_tol())?.value;
                Ok((b, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentReport {
            q: self.order,
            n: self.dim,
            moments,
        })
    }

    /// The scaled mollifier `ε^{−n} φ(y/ε)`.
    pub fn scaled(&self, eps: f64) -> Result<TestFunction> {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0 / eps;
        }
        let expr = ScalarExpr::scale(eps.powi(-(n as i32)), self.phi.expr().affine_precompose(&a, &vec![0.0; n])?);
        let b = self.phi.support();
        TestFunction::with_support(expr, Aabb::new(
            &b.lo().iter().map(|v| v * eps).collect::<Vec<_>>(),
            &b.hi().iter().map(|v| v * eps).collect::<Vec<_>>(),
        ))
    }
}

/// `build_mollifier(q, n, symmetric)`.
pub fn build_mollifier(q: u32, n: usize, symmetric: bool) -> Result<Mollifier> {
    Mollifier::build(q, n, if symmetric { Shape::Symmetric } else { Shape::Shifted })
}
