//! Closed-form expression trees for smooth functions on `Rᵈ`.
//!
//! Every [`ScalarExpr`] is smooth on all of `Rᵈ`; the only non-analytic primitives are the bump
//! `b(t) = exp(−1/(1−t²))` (and its derivatives) and the smooth step obtained by integrating it.
//! Derivatives stay in the class, supports are tracked by sound box over-approximations, and
//! constructors perform constant folding so that repeated differentiation stays compact.

pub mod bump;
mod diff;
mod eval;
mod json;
mod support;

pub use json::ExprSpec;

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::geometry::Support;
use smallvec::SmallVec;
use std::fmt;
use std::sync::{Arc, OnceLock};

pub type Exponents = SmallVec<[u32; 4]>;

/// Sparse polynomial `Σ c_γ y^γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(Exponents, f64)>,
}

impl Polynomial {
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub enum Node {
    Const(f64),
    Coord(usize),
    /// `child(A y + b)` with `A` stored row-major, `rows = child.dim()`, `cols = self.dim()`.
    Affine {
        matrix: Vec<f64>,
        offset: Vec<f64>,
        child: ScalarExpr,
    },
    /// `b^{(order)}(arg)`.
    Bump { order: u32, arg: ScalarExpr },
    /// Normalised smooth step of `arg`.
    Step { arg: ScalarExpr },
    Poly(Polynomial),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Scale(f64, ScalarExpr),
    Powi(ScalarExpr, u32),
    /// `outer(inner₁(y), …, inner_m(y))`.
    Compose {
        outer: ScalarExpr,
        inner: Vec<ScalarExpr>,
    },
}

pub(crate) struct Inner {
    pub(crate) dim: usize,
    pub(crate) node: Node,
    support: OnceLock<Support>,
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone)]
pub struct ScalarExpr(pub(crate) Arc<Inner>);

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr[{}]{:?}", self.0.dim, self.0.node)
    }
}

impl ScalarExpr {
    fn make(dim: usize, node: Node) -> Self {
        ScalarExpr(Arc::new(Inner {
            dim,
            node,
            support: OnceLock::new(),
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::make(dim, Node::Const(c))
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, 0.0)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, 1.0)
    }

    pub fn coord(dim: usize, axis: usize) -> Self {
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        Self::make(dim, Node::Coord(axis))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.0.node {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    /// Polynomial from `(exponents, coefficient)` pairs; zero coefficients are dropped and
    /// duplicate monomials merged.
    pub fn polynomial(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Self {
        let mut merged: Vec<(Exponents, f64)> = Vec::new();
        for (e, c) in terms {
            assert_eq!(e.len(), dim, "exponent length must equal dimension");
            let e: Exponents = SmallVec::from_vec(e);
            match merged.iter_mut().find(|(m, _)| *m == e) {
                Some(slot) => slot.1 += c,
                None => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        Self::from_poly(dim, Polynomial { terms: merged })
    }

    fn from_poly(dim: usize, p: Polynomial) -> Self {
        if p.terms.is_empty() {
            return Self::zero(dim);
        }
        if p.terms.len() == 1 && p.terms[0].0.iter().all(|&e| e == 0) {
            return Self::constant(dim, p.terms[0].1);
        }
        Self::make(dim, Node::Poly(p))
    }

    /// `y^α`.
    pub fn monomial(alpha: &MultiIndex) -> Self {
        Self::polynomial(alpha.dim(), vec![(alpha.entries().to_vec(), 1.0)])
    }

    /// `Σ aᵢ yᵢ + c`.
    pub fn linear(coeffs: &[f64], c: f64) -> Self {
        let dim = coeffs.len();
        let mut terms = vec![(vec![0; dim], c)];
        for (i, &a) in coeffs.iter().enumerate() {
            let mut e = vec![0; dim];
            e[i] = 1;
            terms.push((e, a));
        }
        Self::polynomial(dim, terms)
    }

    pub fn bump(arg: ScalarExpr) -> Self {
        Self::bump_derivative(0, arg)
    }

    pub fn bump_derivative(order: u32, arg: ScalarExpr) -> Self {
        let dim = arg.dim();
        if let Some(t) = arg.as_const() {
            return Self::constant(dim, bump::bump_derivative(order, t));
        }
        Self::make(dim, Node::Bump { order, arg })
    }

    pub fn step(arg: ScalarExpr) -> Self {
        let dim = arg.dim();
        if let Some(t) = arg.as_const() {
            return Self::constant(dim, bump::smooth_step(t));
        }
        Self::make(dim, Node::Step { arg })
    }

    /// Smooth step in coordinate `axis`, 0 below `a` and 1 above `b` (or the reverse if `a > b`).
    pub fn step_between(dim: usize, axis: usize, a: f64, b: f64) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[axis] = 2.0 / (b - a);
        Self::step(Self::linear(&coeffs, -(a + b) / (b - a)))
    }

    pub fn sum(children: Vec<ScalarExpr>) -> Self {
        assert!(!children.is_empty(), "empty sum needs a dimension; use zero()");
        let dim = children[0].dim();
        let mut flat = Vec::with_capacity(children.len());
        let mut constant = 0.0;
        for c in children {
            assert_eq!(c.dim(), dim);
            match &c.0.node {
                Node::Const(v) => constant += v,
                Node::Sum(inner) => {
                    for g in inner {
                        match g.as_const() {
                            Some(v) => constant += v,
                            None => flat.push(g.clone()),
                        }
                    }
                }
                _ => flat.push(c),
            }
        }
        if constant != 0.0 {
            flat.push(Self::constant(dim, constant));
        }
        match flat.len() {
            0 => Self::zero(dim),
            1 => flat.pop().unwrap(),
            _ => Self::make(dim, Node::Sum(flat)),
        }
    }

    pub fn sum_dim(dim: usize, children: Vec<ScalarExpr>) -> Self {
        if children.is_empty() {
            Self::zero(dim)
        } else {
            Self::sum(children)
        }
    }

    pub fn product(children: Vec<ScalarExpr>) -> Self {
        assert!(!children.is_empty(), "empty product needs a dimension; use one()");
        let dim = children[0].dim();
        let mut flat = Vec::with_capacity(children.len());
        let mut factor = 1.0;
        let push = |c: ScalarExpr, flat: &mut Vec<ScalarExpr>, factor: &mut f64| match &c.0.node {
            Node::Const(v) => *factor *= v,
            Node::Scale(s, inner) => {
                *factor *= s;
                flat.push(inner.clone());
            }
            _ => flat.push(c),
        };
        for c in children {
            assert_eq!(c.dim(), dim);
            if let Node::Product(inner) = &c.0.node {
                for g in inner {
                    push(g.clone(), &mut flat, &mut factor);
                }
            } else {
                push(c, &mut flat, &mut factor);
            }
        }
        if factor == 0.0 {
            return Self::zero(dim);
        }
        let core = match flat.len() {
            0 => return Self::constant(dim, factor),
            1 => flat.pop().unwrap(),
            _ => Self::make(dim, Node::Product(flat)),
        };
        Self::scale(factor, core)
    }

    pub fn scale(c: f64, e: ScalarExpr) -> Self {
        let dim = e.dim();
        if c == 0.0 || e.is_zero() {
            return Self::zero(dim);
        }
        if c == 1.0 {
            return e;
        }
        match &e.0.node {
            Node::Const(v) => Self::constant(dim, c * v),
            Node::Scale(s, inner) => Self::scale(c * s, inner.clone()),
            Node::Poly(p) => Self::from_poly(
                dim,
                Polynomial {
                    terms: p.terms.iter().map(|(m, v)| (m.clone(), c * v)).collect(),
                },
            ),
            _ => Self::make(dim, Node::Scale(c, e)),
        }
    }

    pub fn powi(e: ScalarExpr, k: u32) -> Self {
        let dim = e.dim();
        match k {
            0 => Self::one(dim),
            1 => e,
            _ => match e.as_const() {
                Some(v) => Self::constant(dim, v.powi(k as i32)),
                None => Self::make(dim, Node::Powi(e, k)),
            },
        }
    }

    /// `y ↦ self(A y + b)` where `A` has `self.dim()` rows and `cols` columns (row-major).
    ///
    /// Nested affine maps are fused and coordinates become linear polynomials, so supports of
    /// scaled/translated bumps remain exact boxes.
    pub fn affine(&self, matrix: &[f64], offset: &[f64], cols: usize) -> Self {
        let rows = self.dim();
        assert_eq!(matrix.len(), rows * cols, "matrix shape mismatch");
        assert_eq!(offset.len(), rows, "offset length mismatch");
        match &self.0.node {
            Node::Const(c) => return Self::constant(cols, *c),
            Node::Coord(j) => {
                return Self::linear(&matrix[j * cols..(j + 1) * cols], offset[*j]);
            }
            Node::Affine {
                matrix: inner_m,
                offset: inner_b,
                child,
            } => {
                // child(M (A y + b) + c) = child((M A) y + (M b + c))
                let m_rows = child.dim();
                let mut fused = vec![0.0; m_rows * cols];
                let mut fused_b = inner_b.clone();
                for r in 0..m_rows {
                    for k in 0..rows {
                        let m = inner_m[r * rows + k];
                        if m == 0.0 {
                            continue;
                        }
                        for c in 0..cols {
                            fused[r * cols + c] += m * matrix[k * cols + c];
                        }
                        fused_b[r] += m * offset[k];
                    }
                }
                return child.affine(&fused, &fused_b, cols);
            }
            Node::Scale(c, inner) => return Self::scale(*c, inner.affine(matrix, offset, cols)),
            _ => {}
        }
        if rows == cols && offset.iter().all(|&b| b == 0.0) && is_identity(matrix, rows) {
            return self.clone();
        }
        Self::make(
            cols,
            Node::Affine {
                matrix: matrix.to_vec(),
                offset: offset.to_vec(),
                child: self.clone(),
            },
        )
    }

    /// [`affine`](Self::affine) with a square, invertible `A`.
    pub fn affine_precompose(&self, matrix: &[f64], offset: &[f64]) -> Result<Self> {
        let n = self.dim();
        if matrix.len() != n * n || offset.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        let det = determinant(matrix, n);
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::SingularMap { det });
        }
        Ok(self.affine(matrix, offset, n))
    }

    /// Embeds an expression on `Rᵐ` into `R^{cols}` by reading coordinates `first..first+m`.
    pub fn lift(&self, cols: usize, first: usize) -> Self {
        let m = self.dim();
        let mut a = vec![0.0; m * cols];
        for i in 0..m {
            a[i * cols + first + i] = 1.0;
        }
        self.affine(&a, &vec![0.0; m], cols)
    }

    /// Substitutes the leading `values.len()` coordinates by constants.
    pub fn bind_prefix(&self, values: &[f64]) -> Self {
        let d = self.dim();
        let k = values.len();
        let cols = d - k;
        let mut a = vec![0.0; d * cols];
        let mut b = vec![0.0; d];
        b[..k].copy_from_slice(values);
        for i in 0..cols {
            a[(k + i) * cols + i] = 1.0;
        }
        self.affine(&a, &b, cols)
    }

    pub fn compose(&self, inner: Vec<ScalarExpr>) -> Self {
        assert_eq!(inner.len(), self.dim(), "composition arity mismatch");
        assert!(!inner.is_empty());
        let dim = inner[0].dim();
        if let Some(c) = self.as_const() {
            return Self::constant(dim, c);
        }
        if let Node::Scale(c, e) = &self.0.node {
            return Self::scale(*c, e.compose(inner));
        }
        Self::make(dim, Node::Compose { outer: self.clone(), inner })
    }

    /// Checked evaluation.
    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(self.eval(y))
    }

    /// `∂^α self`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Self {
        assert_eq!(alpha.dim(), self.dim(), "multi-index dimension mismatch");
        let mut e = self.clone();
        for axis in alpha.to_axes() {
            e = e.diff(axis);
        }
        e
    }

    /// Cached sound support over-approximation.
    pub fn support(&self) -> &Support {
        self.0.support.get_or_init(|| support::compute(self))
    }

    /// Number of nodes reachable from the root (shared nodes counted once per use).
    pub fn size(&self) -> usize {
        1 + match &self.0.node {
            Node::Const(_) | Node::Coord(_) | Node::Poly(_) => 0,
            Node::Affine { child, .. } => child.size(),
            Node::Bump { arg, .. } | Node::Step { arg } => arg.size(),
            Node::Sum(c) | Node::Product(c) => c.iter().map(|e| e.size()).sum(),
            Node::Scale(_, e) | Node::Powi(e, _) => e.size(),
            Node::Compose { outer, inner } => {
                outer.size() + inner.iter().map(|e| e.size()).sum::<usize>()
            }
        }
    }
}

fn is_identity(m: &[f64], n: usize) -> bool {
    (0..n).all(|i| (0..n).all(|j| m[i * n + j] == if i == j { 1.0 } else { 0.0 }))
}

pub(crate) fn determinant(m: &[f64], n: usize) -> f64 {
    nalgebra::DMatrix::from_row_slice(n, n, m).determinant()
}

impl std::ops::Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(vec![self, rhs])
    }
}

impl std::ops::Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(vec![self, ScalarExpr::scale(-1.0, rhs)])
    }
}

impl std::ops::Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::product(vec![self, rhs])
    }
}

impl std::ops::Mul<ScalarExpr> for f64 {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        ScalarExpr::scale(self, rhs)
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::scale(-1.0, self)
    }
}

#[cfg(test)]
mod tests;
