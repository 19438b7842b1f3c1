use super::{Node, ScalarExpr};
use crate::geometry::{Aabb, Interval, Support};

const WIDEN_REL: f64 = 1e-14;
const WIDEN_ABS: f64 = 1e-300;

impl ScalarExpr {
    /// `(a, c)` with `self(y) = a·y + c`, if the expression is affine.
    pub fn linear_form(&self) -> Option<(Vec<f64>, f64)> {
        let dim = self.dim();
        match &self.0.node {
            Node::Const(c) => Some((vec![0.0; dim], *c)),
            Node::Coord(i) => {
                let mut a = vec![0.0; dim];
                a[*i] = 1.0;
                Some((a, 0.0))
            }
            Node::Poly(p) => {
                let mut a = vec![0.0; dim];
                let mut c = 0.0;
                for (e, v) in &p.terms {
                    match e.iter().sum::<u32>() {
                        0 => c += v,
                        1 => a[e.iter().position(|&k| k == 1).unwrap()] += v,
                        _ => return None,
                    }
                }
                Some((a, c))
            }
            Node::Scale(s, e) => e
                .linear_form()
                .map(|(a, c)| (a.into_iter().map(|v| s * v).collect(), s * c)),
            Node::Sum(children) => {
                let mut a = vec![0.0; dim];
                let mut c = 0.0;
                for ch in children {
                    let (ai, ci) = ch.linear_form()?;
                    a.iter_mut().zip(ai).for_each(|(x, y)| *x += y);
                    c += ci;
                }
                Some((a, c))
            }
            Node::Affine {
                matrix,
                offset,
                child,
            } => {
                let (ac, cc) = child.linear_form()?;
                let mut a = vec![0.0; dim];
                let mut c = cc;
                for (r, &w) in ac.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    c += w * offset[r];
                    for j in 0..dim {
                        a[j] += w * matrix[r * dim + j];
                    }
                }
                Some((a, c))
            }
            _ => None,
        }
    }
}

/// If `arg = a_i y_i + c` depends on one coordinate only, returns `(i, a_i, c)`.
fn single_axis(arg: &ScalarExpr) -> Option<(usize, f64, f64)> {
    let (a, c) = arg.linear_form()?;
    let nz: Vec<usize> = (0..a.len()).filter(|&i| a[i] != 0.0).collect();
    (nz.len() == 1).then(|| (nz[0], a[nz[0]], c))
}

fn with_axis(dim: usize, axis: usize, iv: Interval) -> Support {
    let mut b = Aabb::entire(dim);
    b.axes[axis] = iv.widen(WIDEN_REL, WIDEN_ABS);
    Support::Within(b)
}

pub(super) fn compute(e: &ScalarExpr) -> Support {
    let dim = e.dim();
    match e.node() {
        Node::Const(c) => {
            if *c == 0.0 {
                Support::Empty
            } else {
                Support::entire(dim)
            }
        }
        Node::Coord(_) | Node::Poly(_) | Node::Compose { .. } => Support::entire(dim),
        Node::Bump { arg, .. } => match single_axis(arg) {
            // |a y + c| < 1
            Some((i, a, c)) => {
                let (p, q) = ((-1.0 - c) / a, (1.0 - c) / a);
                with_axis(dim, i, Interval::new(p.min(q), p.max(q)))
            }
            None => Support::entire(dim),
        },
        Node::Step { arg } => match single_axis(arg) {
            // a y + c > −1
            Some((i, a, c)) => {
                let t = (-1.0 - c) / a;
                let iv = if a > 0.0 {
                    Interval::new(t, f64::INFINITY)
                } else {
                    Interval::new(f64::NEG_INFINITY, t)
                };
                with_axis(dim, i, iv)
            }
            None => Support::entire(dim),
        },
        Node::Sum(children) => children
            .iter()
            .fold(Support::Empty, |acc, c| acc.union(c.support())),
        Node::Product(children) => children
            .iter()
            .fold(Support::entire(dim), |acc, c| acc.intersect(c.support())),
        Node::Scale(_, c) | Node::Powi(c, _) => c.support().clone(),
        Node::Affine {
            matrix,
            offset,
            child,
        } => {
            let inner = match child.support() {
                Support::Empty => return Support::Empty,
                Support::Within(b) => b.clone(),
            };
            let mut out = Aabb::entire(dim);
            for (r, iv) in inner.axes.iter().enumerate() {
                if iv.lo == f64::NEG_INFINITY && iv.hi == f64::INFINITY {
                    continue;
                }
                let row = &matrix[r * dim..(r + 1) * dim];
                let nz: Vec<usize> = (0..dim).filter(|&j| row[j] != 0.0).collect();
                match nz.len() {
                    0 => {
                        if !iv.contains(offset[r]) {
                            return Support::Empty;
                        }
                    }
                    1 => {
                        let j = nz[0];
                        let a = row[j];
                        let (p, q) = ((iv.lo - offset[r]) / a, (iv.hi - offset[r]) / a);
                        let pre = Interval::new(p.min(q), p.max(q)).widen(WIDEN_REL, WIDEN_ABS);
                        let cur = out.axes[j];
                        let lo = cur.lo.max(pre.lo);
                        let hi = cur.hi.min(pre.hi);
                        if lo > hi {
                            return Support::Empty;
                        }
                        out.axes[j] = Interval::new(lo, hi);
                    }
                    _ => {}
                }
            }
            Support::Within(out)
        }
    }
}
