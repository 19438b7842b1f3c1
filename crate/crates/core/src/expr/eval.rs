use super::bump::{bump_derivative, smooth_step};
use super::{Node, ScalarExpr};
use smallvec::SmallVec;

type Buf = SmallVec<[f64; 8]>;

impl ScalarExpr {
    /// Unchecked evaluation; `y.len()` must equal `self.dim()`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim());
        match &self.0.node {
            Node::Const(c) => *c,
            Node::Coord(i) => y[*i],
            Node::Affine {
                matrix,
                offset,
                child,
            } => {
                let cols = y.len();
                let z: Buf = offset
                    .iter()
                    .enumerate()
                    .map(|(r, &b)| {
                        let row = &matrix[r * cols..(r + 1) * cols];
                        row.iter().zip(y).fold(b, |acc, (&a, &v)| acc + a * v)
                    })
                    .collect();
                child.eval(&z)
            }
            Node::Bump { order, arg } => {
                let t = arg.eval(y);
                bump_derivative(*order, t)
            }
            Node::Step { arg } => smooth_step(arg.eval(y)),
            Node::Poly(p) => p
                .terms
                .iter()
                .map(|(e, c)| {
                    e.iter()
                        .zip(y)
                        .fold(*c, |acc, (&k, &v)| if k == 0 { acc } else { acc * v.powi(k as i32) })
                })
                .sum(),
            Node::Sum(children) => children.iter().map(|c| c.eval(y)).sum(),
            Node::Product(children) => {
                let mut acc = 1.0;
                for c in children {
                    let v = c.eval(y);
                    if v == 0.0 {
                        return 0.0;
                    }
                    acc *= v;
                }
                acc
            }
            Node::Scale(c, e) => c * e.eval(y),
            Node::Powi(e, k) => e.eval(y).powi(*k as i32),
            Node::Compose { outer, inner } => {
                let z: Buf = inner.iter().map(|e| e.eval(y)).collect();
                outer.eval(&z)
            }
        }
    }
}
