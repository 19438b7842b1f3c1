//! JSON form of expressions, `{"op": "...", ...}`.

use super::{Node, ScalarExpr};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ExprSpec {
    Const {
        value: f64,
    },
    Coord {
        axis: usize,
    },
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        child: Box<ExprSpec>,
    },
    Bump {
        #[serde(default)]
        order: u32,
        arg: Box<ExprSpec>,
    },
    Step {
        arg: Box<ExprSpec>,
    },
    Poly {
        terms: Vec<(Vec<u32>, f64)>,
    },
    Sum {
        args: Vec<ExprSpec>,
    },
    Product {
        args: Vec<ExprSpec>,
    },
    Scale {
        factor: f64,
        arg: Box<ExprSpec>,
    },
    Powi {
        arg: Box<ExprSpec>,
        k: u32,
    },
    Compose {
        outer: Box<ExprSpec>,
        inner: Vec<ExprSpec>,
    },
    /// Tensor bump `Π b((yᵢ − cᵢ)/r)`.
    BumpAt {
        center: Vec<f64>,
        radius: f64,
    },
    /// Smooth step along `axis`: 0 at `a`, 1 at `b`.
    StepBetween {
        #[serde(default)]
        axis: usize,
        a: f64,
        b: f64,
    },
}

impl ExprSpec {
    /// Builds the expression on `Rᵈⁱᵐ`.
    pub fn build(&self, dim: usize) -> Result<ScalarExpr> {
        Ok(match self {
            ExprSpec::Const { value } => ScalarExpr::constant(dim, *value),
            ExprSpec::Coord { axis } => {
                if *axis >= dim {
                    return Err(Error::Invalid(format!("coordinate {axis} in dimension {dim}")));
                }
                ScalarExpr::coord(dim, *axis)
            }
            ExprSpec::Affine {
                matrix,
                offset,
                child,
            } => {
                let rows = offset.len();
                if matrix.len() != rows || matrix.iter().any(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: rows * dim,
                        got: matrix.iter().map(Vec::len).sum(),
                    });
                }
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                child.build(rows)?.affine(&flat, offset, dim)
            }
            ExprSpec::Bump { order, arg } => ScalarExpr::bump_derivative(*order, arg.build(dim)?),
            ExprSpec::Step { arg } => ScalarExpr::step(arg.build(dim)?),
            ExprSpec::Poly { terms } => {
                if terms.iter().any(|(e, _)| e.len() != dim) {
                    return Err(Error::Invalid(format!(
                        "polynomial exponents must have length {dim}"
                    )));
                }
                ScalarExpr::polynomial(dim, terms.clone())
            }
            ExprSpec::Sum { args } => ScalarExpr::sum_dim(
                dim,
                args.iter().map(|a| a.build(dim)).collect::<Result<_>>()?,
            ),
            ExprSpec::Product { args } => {
                if args.is_empty() {
                    ScalarExpr::one(dim)
                } else {
                    ScalarExpr::product(args.iter().map(|a| a.build(dim)).collect::<Result<_>>()?)
                }
            }
            ExprSpec::Scale { factor, arg } => ScalarExpr::scale(*factor, arg.build(dim)?),
            ExprSpec::Powi { arg, k } => ScalarExpr::powi(arg.build(dim)?, *k),
            ExprSpec::Compose { outer, inner } => {
                if inner.is_empty() {
                    return Err(Error::Invalid("compose needs at least one inner expression".into()));
                }
                let inner: Vec<ScalarExpr> =
                    inner.iter().map(|a| a.build(dim)).collect::<Result<_>>()?;
                outer.build(inner.len())?.compose(inner)
            }
            ExprSpec::BumpAt { center, radius } => {
                if center.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: center.len(),
                    });
                }
                if !(*radius > 0.0) {
                    return Err(Error::Invalid(format!("bump radius must be positive, got {radius}")));
                }
                ScalarExpr::bump_at(center, *radius)
            }
            ExprSpec::StepBetween { axis, a, b } => {
                if *axis >= dim {
                    return Err(Error::Invalid(format!("coordinate {axis} in dimension {dim}")));
                }
                if a == b || !a.is_finite() || !b.is_finite() {
                    return Err(Error::Invalid(format!("degenerate step between {a} and {b}")));
                }
                ScalarExpr::step_between(dim, *axis, *a, *b)
            }
        })
    }

    pub fn from_expr(e: &ScalarExpr) -> ExprSpec {
        let dim = e.dim();
        match e.node() {
            Node::Const(c) => ExprSpec::Const { value: *c },
            Node::Coord(i) => ExprSpec::Coord { axis: *i },
            Node::Affine {
                matrix,
                offset,
                child,
            } => ExprSpec::Affine {
                matrix: matrix.chunks(dim).map(<[f64]>::to_vec).collect(),
                offset: offset.clone(),
                child: Box::new(Self::from_expr(child)),
            },
            Node::Bump { order, arg } => ExprSpec::Bump {
                order: *order,
                arg: Box::new(Self::from_expr(arg)),
            },
            Node::Step { arg } => ExprSpec::Step {
                arg: Box::new(Self::from_expr(arg)),
            },
            Node::Poly(p) => ExprSpec::Poly {
                terms: p.terms.iter().map(|(e, c)| (e.to_vec(), *c)).collect(),
            },
            Node::Sum(c) => ExprSpec::Sum {
                args: c.iter().map(Self::from_expr).collect(),
            },
            Node::Product(c) => ExprSpec::Product {
                args: c.iter().map(Self::from_expr).collect(),
            },
            Node::Scale(f, a) => ExprSpec::Scale {
                factor: *f,
                arg: Box::new(Self::from_expr(a)),
            },
            Node::Powi(a, k) => ExprSpec::Powi {
                arg: Box::new(Self::from_expr(a)),
                k: *k,
            },
            Node::Compose { outer, inner } => ExprSpec::Compose {
                outer: Box::new(Self::from_expr(outer)),
                inner: inner.iter().map(Self::from_expr).collect(),
            },
        }
    }
}

impl ScalarExpr {
    /// Tensor bump `Π b((yᵢ − cᵢ)/r)`, supported in the cube of half-width `r` about `c`.
    pub fn bump_at(center: &[f64], radius: f64) -> ScalarExpr {
        let dim = center.len();
        let factors: Vec<ScalarExpr> = (0..dim)
            .map(|i| {
                let mut a = vec![0.0; dim];
                a[i] = 1.0 / radius;
                ScalarExpr::bump(ScalarExpr::linear(&a, -center[i] / radius))
            })
            .collect();
        ScalarExpr::product(factors)
    }
}

impl Serialize for ScalarExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExprSpec::from_expr(self).serialize(s)
    }
}
