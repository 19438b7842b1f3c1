//! Compactly supported test functions and vector fields.

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::geometry::{Aabb, Support};
use crate::multi_index::MultiIndex;
use crate::quadrature::{integrate, integrate_expr, QuadConfig, QuadResult};

/// A closed-form smooth function together with a bounded box containing its support.
#[derive(Clone, Debug)]
pub struct TestFunction {
    expr: ScalarExpr,
    support: Aabb,
}

impl TestFunction {
    /// Uses the expression's own support enclosure, which must be bounded.
    pub fn from_expr(expr: ScalarExpr) -> Result<Self> {
        match expr.support().clone() {
            Support::Empty => Ok(TestFunction {
                support: Aabb::new(&vec![0.0; expr.dim()], &vec![0.0; expr.dim()]),
                expr,
            }),
            Support::Within(b) if b.is_bounded() => Ok(TestFunction { expr, support: b }),
            Support::Within(b) => Err(Error::Invalid(format!(
                "expression support {b} is not bounded; not a test function"
            ))),
        }
    }

    /// `expr` must vanish outside `support`; the box is tightened with the expression's own
    /// enclosure.
    pub fn with_support(expr: ScalarExpr, support: Aabb) -> Result<Self> {
        if support.dim() != expr.dim() {
            return Err(Error::DimensionMismatch {
                expected: expr.dim(),
                got: support.dim(),
            });
        }
        if !support.is_bounded() {
            return Err(Error::UnboundedBox);
        }
        let support = match expr.support() {
            Support::Empty => Aabb::cube(&support.center(), 0.0),
            Support::Within(b) => b.intersect(&support).unwrap_or_else(|| Aabb::cube(&support.center(), 0.0)),
        };
        Ok(TestFunction { expr, support })
    }

    /// `y ↦ slice(x, y)` for a kernel slice in `(x, y)` variables.
    pub fn from_slice(slice: &ScalarExpr, x: &[f64], support: Aabb) -> Result<Self> {
        Self::with_support(slice.bind_prefix(x), support)
    }

    pub fn dim(&self) -> usize {
        self.expr.dim()
    }

    pub fn expr(&self) -> &ScalarExpr {
        &self.expr
    }

    pub fn support(&self) -> &Aabb {
        &self.support
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        if !self.support.contains(y) {
            return 0.0;
        }
        self.expr.eval(y)
    }

    pub fn derivative(&self, alpha: &MultiIndex) -> TestFunction {
        TestFunction {
            expr: self.expr.derivative(alpha),
            support: self.support.clone(),
        }
    }

    pub fn integral(&self, cfg: &QuadConfig) -> Result<QuadResult> {
        integrate_expr(&self.expr, &self.support, cfg)
    }

    /// `∫ f φ` for an arbitrary integrand `f`.
    pub fn integrate_against<F: Fn(&[f64]) -> f64>(&self, f: F, cfg: &QuadConfig) -> Result<QuadResult> {
        if self.support.volume() == 0.0 {
            return Ok(QuadResult::ZERO);
        }
        integrate(&|y: &[f64]| self.expr.eval(y) * f(y), &self.support, cfg)
    }

    pub fn scale(&self, c: f64) -> TestFunction {
        TestFunction {
            expr: ScalarExpr::scale(c, self.expr.clone()),
            support: self.support.clone(),
        }
    }

    /// `g·φ` for a smooth `g`.
    pub fn multiply(&self, g: &ScalarExpr) -> TestFunction {
        let expr = g.clone() * self.expr.clone();
        let support = g
            .support()
            .as_box()
            .and_then(|b| b.intersect(&self.support))
            .unwrap_or_else(|| Aabb::cube(&self.support.center(), 0.0));
        TestFunction { expr, support }
    }

    pub fn linear_combination(terms: &[(f64, &TestFunction)]) -> Result<TestFunction> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Invalid("empty linear combination".into()))?;
        let dim = first.1.dim();
        let mut support = first.1.support.clone();
        let mut exprs = Vec::with_capacity(terms.len());
        for (c, t) in terms {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.dim(),
                });
            }
            support = support.hull(&t.support);
            exprs.push(ScalarExpr::scale(*c, t.expr.clone()));
        }
        Ok(TestFunction {
            expr: ScalarExpr::sum(exprs),
            support,
        })
    }

    /// `L_X φ = D_X φ + (Div X) φ`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<TestFunction> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let mut terms: Vec<ScalarExpr> = (0..self.dim())
            .map(|i| x.components[i].clone() * self.expr.diff(i))
            .collect();
        terms.push(x.divergence() * self.expr.clone());
        Ok(TestFunction {
            expr: ScalarExpr::sum(terms),
            support: self.support.clone(),
        })
    }
}

/// Smooth vector field `X = (X¹, …, Xⁿ)`.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub components: Vec<ScalarExpr>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarExpr>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::Invalid("vector field needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.dim(),
            });
        }
        Ok(VectorField { components })
    }

    /// Constant field `Σ vᵢ eᵢ`.
    pub fn constant(v: &[f64]) -> Self {
        VectorField {
            components: v.iter().map(|&c| ScalarExpr::constant(v.len(), c)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn divergence(&self) -> ScalarExpr {
        let n = self.dim();
        ScalarExpr::sum_dim(n, (0..n).map(|i| self.components[i].diff(i)).collect())
    }

    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// `D_X f = Σ Xⁱ ∂ᵢ f`.
    pub fn apply(&self, f: &ScalarExpr) -> ScalarExpr {
        let n = self.dim();
        ScalarExpr::sum_dim(
            n,
            (0..n).map(|i| self.components[i].clone() * f.diff(i)).collect(),
        )
    }

    /// `g X`.
    pub fn scaled_by(&self, g: &ScalarExpr) -> VectorField {
        VectorField {
            components: self.components.iter().map(|c| g.clone() * c.clone()).collect(),
        }
    }

    /// Components lifted to `R^{cols}` reading coordinates `first..first+n`.
    pub fn lift(&self, cols: usize, first: usize) -> VectorField {
        VectorField {
            components: self.components.iter().map(|c| c.lift(cols, first)).collect(),
        }
    }
}
