use super::bump::bump_integral;
use super::{Node, ScalarExpr};

impl ScalarExpr {
    /// `∂ self / ∂ y_axis`.
    pub fn diff(&self, axis: usize) -> ScalarExpr {
        let dim = self.dim();
        assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
        let mut w = vec![0.0; dim];
        w[axis] = 1.0;
        self.directional(&w)
    }

    /// Constant-coefficient directional derivative `Σᵢ wᵢ ∂ᵢ self`.
    ///
    /// Coefficients are combined before descending through affine maps, so e.g. `∂_{x+y}` of a
    /// function of `y − x` folds to an exact zero.
    pub fn directional(&self, w: &[f64]) -> ScalarExpr {
        let dim = self.dim();
        assert_eq!(w.len(), dim, "direction length must equal dimension");
        match &self.0.node {
            Node::Const(_) => ScalarExpr::zero(dim),
            Node::Coord(i) => ScalarExpr::constant(dim, w[*i]),
            Node::Affine {
                matrix,
                offset,
                child,
            } => {
                let rows = child.dim();
                let terms: Vec<ScalarExpr> = (0..rows)
                    .filter_map(|k| {
                        let row = &matrix[k * dim..(k + 1) * dim];
                        let c: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
                        (c != 0.0).then(|| ScalarExpr::scale(c, child.diff(k).affine(matrix, offset, dim)))
                    })
                    .collect();
                ScalarExpr::sum_dim(dim, terms)
            }
            Node::Bump { order, arg } => {
                let inner = arg.directional(w);
                if inner.is_zero() {
                    return ScalarExpr::zero(dim);
                }
                ScalarExpr::bump_derivative(order + 1, arg.clone()) * inner
            }
            Node::Step { arg } => {
                let inner = arg.directional(w);
                if inner.is_zero() {
                    return ScalarExpr::zero(dim);
                }
                ScalarExpr::scale(1.0 / bump_integral(), ScalarExpr::bump(arg.clone()) * inner)
            }
            Node::Poly(p) => {
                let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
                for (axis, &wa) in w.iter().enumerate() {
                    if wa == 0.0 {
                        continue;
                    }
                    for (e, c) in p.terms.iter().filter(|(e, _)| e[axis] > 0) {
                        let mut e = e.to_vec();
                        let k = e[axis];
                        e[axis] -= 1;
                        terms.push((e, wa * c * f64::from(k)));
                    }
                }
                if terms.is_empty() {
                    return ScalarExpr::zero(dim);
                }
                ScalarExpr::polynomial(dim, terms)
            }
            Node::Sum(children) => {
                ScalarExpr::sum_dim(dim, children.iter().map(|c| c.directional(w)).collect())
            }
            Node::Product(children) => {
                let mut terms = Vec::new();
                for (i, c) in children.iter().enumerate() {
                    let d = c.directional(w);
                    if d.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<ScalarExpr> = children
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, f)| f.clone())
                        .collect();
                    factors.push(d);
                    terms.push(ScalarExpr::product(factors));
                }
                ScalarExpr::sum_dim(dim, terms)
            }
            Node::Scale(c, e) => ScalarExpr::scale(*c, e.directional(w)),
            Node::Powi(e, k) => {
                let d = e.directional(w);
                if d.is_zero() {
                    return ScalarExpr::zero(dim);
                }
                ScalarExpr::scale(f64::from(*k), ScalarExpr::powi(e.clone(), k - 1) * d)
            }
            Node::Compose { outer, inner } => {
                let terms: Vec<ScalarExpr> = inner
                    .iter()
                    .enumerate()
                    .filter_map(|(k, g)| {
                        let dg = g.directional(w);
                        (!dg.is_zero()).then(|| outer.diff(k).compose(inner.clone()) * dg)
                    })
                    .collect();
                ScalarExpr::sum_dim(dim, terms)
            }
        }
    }
}
