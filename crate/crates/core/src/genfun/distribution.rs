use crate::error::{Error, Result};
use crate::expr::{ExprSpec, ScalarExpr};
use crate::geometry::{Aabb, Interval};
use crate::kernels::Diffeomorphism;
use crate::multi_index::MultiIndex;
use crate::quadrature::{integrate, QuadConfig};
use crate::test_function::{TestFunction, VectorField};
use serde::{Deserialize, Serialize};

/// Finite-order distributions with closed-form pairings.
#[derive(Clone, Debug)]
pub enum Distribution {
    Delta {
        point: Vec<f64>,
    },
    /// `∂^α δ_a`, acting as `φ ↦ (−1)^{|α|} ∂^α φ(a)`.
    DeltaDerivative {
        alpha: MultiIndex,
        point: Vec<f64>,
    },
    /// `H(y_axis − threshold)`.
    Heaviside {
        dim: usize,
        axis: usize,
        threshold: f64,
    },
    /// `Σ 1_{Bₖ} fₖ` with boxes `Bₖ` (possibly unbounded) and smooth densities `fₖ`.
    LocallyIntegrable {
        dim: usize,
        pieces: Vec<(Aabb, ScalarExpr)>,
    },
    /// `PV 1/(y − c)` in one dimension.
    PrincipalValue {
        center: f64,
    },
    LinearCombination(Vec<(f64, Distribution)>),
    /// `L_X u`, acting as `φ ↦ −⟨u, L_X φ⟩`.
    LieDerivative {
        field: VectorField,
        inner: Box<Distribution>,
    },
}

/// Below this `|t|/R` the PV difference quotient is replaced by `2φ′(c)`.
const PV_GUARD: f64 = 1e-7;

impl Distribution {
    pub fn delta(point: &[f64]) -> Self {
        Distribution::Delta { point: point.to_vec() }
    }

    pub fn delta_derivative(alpha: MultiIndex, point: &[f64]) -> Self {
        Distribution::DeltaDerivative { alpha, point: point.to_vec() }
    }

    /// `H(y − t)` in one dimension.
    pub fn heaviside(threshold: f64) -> Self {
        Distribution::Heaviside { dim: 1, axis: 0, threshold }
    }

    /// A smooth function `f` regarded as a distribution.
    pub fn smooth(f: ScalarExpr) -> Self {
        Distribution::LocallyIntegrable {
            dim: f.dim(),
            pieces: vec![(Aabb::entire(f.dim()), f)],
        }
    }

    pub fn piecewise(pieces: Vec<(Aabb, ScalarExpr)>) -> Result<Self> {
        let dim = pieces
            .first()
            .map(|(b, _)| b.dim())
            .ok_or_else(|| Error::Invalid("piecewise density needs a piece".into()))?;
        if let Some((b, f)) = pieces.iter().find(|(b, f)| b.dim() != dim || f.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: b.dim().max(f.dim()) });
        }
        Ok(Distribution::LocallyIntegrable { dim, pieces })
    }

    /// `|y − c|·g(y)` in one dimension: continuous, not smooth at `c`.
    pub fn abs_times(c: f64, g: ScalarExpr) -> Result<Self> {
        let t = ScalarExpr::linear(&[1.0], -c);
        Self::piecewise(vec![
            (Aabb::new(&[f64::NEG_INFINITY], &[c]), -(t.clone() * g.clone())),
            (Aabb::new(&[c], &[f64::INFINITY]), t * g),
        ])
    }

    pub fn principal_value() -> Self {
        Distribution::PrincipalValue { center: 0.0 }
    }

    pub fn linear_combination(terms: Vec<(f64, Distribution)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, d)| d.dim())
            .ok_or_else(|| Error::Invalid("empty linear combination".into()))?;
        if let Some((_, d)) = terms.iter().find(|(_, d)| d.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: d.dim() });
        }
        Ok(Distribution::LinearCombination(terms))
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::Delta { point } | Distribution::DeltaDerivative { point, .. } => point.len(),
            Distribution::Heaviside { dim, .. } | Distribution::LocallyIntegrable { dim, .. } => *dim,
            Distribution::PrincipalValue { .. } => 1,
            Distribution::LinearCombination(t) => t.first().map_or(0, |(_, d)| d.dim()),
            Distribution::LieDerivative { field, .. } => field.dim(),
        }
    }

    /// Per-axis coordinates where the distribution stops being smooth.
    pub fn singular_coords(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.dim()];
        self.collect_singular(&mut out);
        for axis in &mut out {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        out
    }

    fn collect_singular(&self, out: &mut [Vec<f64>]) {
        match self {
            Distribution::Delta { point } | Distribution::DeltaDerivative { point, .. } => {
                for (k, &v) in point.iter().enumerate() {
                    out[k].push(v);
                }
            }
            Distribution::Heaviside { axis, threshold, .. } => out[*axis].push(*threshold),
            Distribution::LocallyIntegrable { pieces, .. } => {
                for (b, _) in pieces {
                    for (k, i) in b.axes.iter().enumerate() {
                        out[k].extend([i.lo, i.hi].into_iter().filter(|v| v.is_finite()));
                    }
                }
            }
            Distribution::PrincipalValue { center } => out[0].push(*center),
            Distribution::LinearCombination(terms) => terms.iter().for_each(|(_, d)| d.collect_singular(out)),
            Distribution::LieDerivative { inner, .. } => inner.collect_singular(out),
        }
    }

    /// `⟨u, φ⟩`.
    pub fn pair(&self, phi: &TestFunction, cfg: &QuadConfig) -> Result<f64> {
        if phi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: phi.dim() });
        }
        match self {
            Distribution::Delta { point } => Ok(phi.eval(point)),
            Distribution::DeltaDerivative { alpha, point } => {
                let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
                Ok(sign * phi.derivative(alpha).eval(point))
            }
            Distribution::Heaviside { axis, threshold, .. } => {
                let mut half = Aabb::entire(self.dim());
                half.axes[*axis] = Interval::new(*threshold, f64::INFINITY);
                integrate_on(&|y: &[f64]| phi.expr().eval(y), phi.support(), &half, cfg)
            }
            Distribution::LocallyIntegrable { pieces, .. } => {
                let mut total = 0.0;
                for (b, f) in pieces {
                    total += integrate_on(&|y: &[f64]| f.eval(y) * phi.expr().eval(y), phi.support(), b, cfg)?;
                }
                Ok(total)
            }
            Distribution::PrincipalValue { center } => {
                let c = *center;
                let s = phi.support().axes[0];
                let r = (s.hi - c).max(c - s.lo);
                if r <= 0.0 {
                    return Ok(0.0);
                }
                let d0 = 2.0 * phi.expr().diff(0).eval(&[c]);
                let g = |t: &[f64]| {
                    let t = t[0];
                    if t < PV_GUARD * r {
                        d0
                    } else {
                        (phi.eval(&[c + t]) - phi.eval(&[c - t])) / t
                    }
                };
                Ok(integrate(&g, &Aabb::new(&[0.0], &[r]), cfg)?.value)
            }
            Distribution::LinearCombination(terms) => {
                let mut total = 0.0;
                for (a, d) in terms {
                    total += a * d.pair(phi, cfg)?;
                }
                Ok(total)
            }
            Distribution::LieDerivative { field, inner } => Ok(-inner.pair(&phi.lie_derivative(field)?, cfg)?),
        }
    }

    /// `f·u` for smooth `f`.
    pub fn multiply_smooth(&self, f: &ScalarExpr) -> Result<Distribution> {
        match self {
            Distribution::Delta { point } => Ok(Distribution::LinearCombination(vec![(f.eval(point), self.clone())])),
            Distribution::Heaviside { .. } => self.as_pieces().expect("heaviside").multiply_smooth(f),
            Distribution::LocallyIntegrable { dim, pieces } => Ok(Distribution::LocallyIntegrable {
                dim: *dim,
                pieces: pieces.iter().map(|(b, g)| (b.clone(), g.clone() * f.clone())).collect(),
            }),
            Distribution::LinearCombination(terms) => Ok(Distribution::LinearCombination(
                terms
                    .iter()
                    .map(|(a, d)| Ok((*a, d.multiply_smooth(f)?)))
                    .collect::<Result<_>>()?,
            )),
            _ => Err(Error::Unsupported(format!("product of a smooth function with {}", self.kind()))),
        }
    }

    /// `μ*u`, defined by `⟨μ*u, φ⟩ = ⟨u, μ_*φ⟩`.
    pub fn pullback(&self, mu: &Diffeomorphism) -> Result<Distribution> {
        if mu.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: mu.dim() });
        }
        match self {
            Distribution::Delta { point } => {
                let w = mu.abs_inverse_det().eval(point);
                Ok(Distribution::LinearCombination(vec![(w, Distribution::delta(&mu.apply_inverse(point)))]))
            }
            Distribution::Heaviside { .. } => self.as_pieces().expect("heaviside").pullback(mu),
            Distribution::LocallyIntegrable { dim, pieces } => {
                let mut out = Vec::with_capacity(pieces.len());
                for (b, f) in pieces {
                    let pre = if b.axes.iter().all(|i| i.lo == f64::NEG_INFINITY && i.hi == f64::INFINITY) {
                        b.clone()
                    } else if *dim == 1 {
                        let map = |v: f64| if v.is_finite() { mu.apply_inverse(&[v])[0] } else { v * mu.orientation };
                        let (a, c) = (map(b.axes[0].lo), map(b.axes[0].hi));
                        Aabb::from_intervals(vec![Interval::new(a.min(c), a.max(c))])
                    } else {
                        return Err(Error::Unsupported(
                            "pullback of a piecewise density with bounded pieces in two dimensions".into(),
                        ));
                    };
                    out.push((pre, f.compose(mu.forward.clone())));
                }
                Ok(Distribution::LocallyIntegrable { dim: *dim, pieces: out })
            }
            Distribution::LinearCombination(terms) => Ok(Distribution::LinearCombination(
                terms
                    .iter()
                    .map(|(a, d)| Ok((*a, d.pullback(mu)?)))
                    .collect::<Result<_>>()?,
            )),
            _ => Err(Error::Unsupported(format!("pullback of {}", self.kind()))),
        }
    }

    /// `L_X u`, in closed form for `δ`, one-dimensional `H` and smooth densities.
    pub fn lie_derivative(&self, field: &VectorField) -> Result<Distribution> {
        if field.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: field.dim() });
        }
        let n = self.dim();
        match self {
            // −(L_Xφ)(a) = Σ Xⁱ(a)⟨∂ᵢδ_a, φ⟩ − (Div X)(a) φ(a)
            Distribution::Delta { point } => {
                let mut terms: Vec<(f64, Distribution)> = (0..n)
                    .map(|i| (field.components[i].eval(point), Distribution::delta_derivative(MultiIndex::unit(n, i), point)))
                    .collect();
                terms.push((-field.divergence().eval(point), self.clone()));
                Ok(Distribution::LinearCombination(terms))
            }
            // −∫_t^∞ (Xφ)′ = X(t)φ(t)
            Distribution::Heaviside { dim: 1, threshold, .. } => Ok(Distribution::LinearCombination(vec![(
                field.components[0].eval(&[*threshold]),
                Distribution::delta(&[*threshold]),
            )])),
            Distribution::LocallyIntegrable { pieces, .. }
                if pieces.len() == 1 && pieces[0].0.axes.iter().all(|i| !i.lo.is_finite() && !i.hi.is_finite()) =>
            {
                Ok(Distribution::smooth(field.apply(&pieces[0].1)))
            }
            Distribution::LinearCombination(terms) => Ok(Distribution::LinearCombination(
                terms
                    .iter()
                    .map(|(a, d)| Ok((*a, d.lie_derivative(field)?)))
                    .collect::<Result<_>>()?,
            )),
            _ => Ok(Distribution::LieDerivative { field: field.clone(), inner: Box::new(self.clone()) }),
        }
    }

    fn as_pieces(&self) -> Option<Distribution> {
        match self {
            Distribution::Heaviside { dim, axis, threshold } => {
                let mut half = Aabb::entire(*dim);
                half.axes[*axis] = Interval::new(*threshold, f64::INFINITY);
                Some(Distribution::LocallyIntegrable { dim: *dim, pieces: vec![(half, ScalarExpr::one(*dim))] })
            }
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Delta { .. } => "delta",
            Distribution::DeltaDerivative { .. } => "delta_derivative",
            Distribution::Heaviside { .. } => "heaviside",
            Distribution::LocallyIntegrable { .. } => "locally_integrable",
            Distribution::PrincipalValue { .. } => "principal_value",
            Distribution::LinearCombination(_) => "linear_combination",
            Distribution::LieDerivative { .. } => "lie_derivative",
        }
    }
}

/// `∫_{piece ∩ supp} g`.
fn integrate_on<F: Fn(&[f64]) -> f64>(g: &F, support: &Aabb, piece: &Aabb, cfg: &QuadConfig) -> Result<f64> {
    match support.intersect(piece) {
        Some(b) if b.volume() > 0.0 => Ok(integrate(g, &b, cfg)?.value),
        _ => Ok(0.0),
    }
}

/// One box of a piecewise density; missing bounds are infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    #[serde(default)]
    pub lo: Vec<Option<f64>>,
    #[serde(default)]
    pub hi: Vec<Option<f64>>,
    pub density: ExprSpec,
}

fn default_dim() -> usize {
    1
}

/// JSON form of [`Distribution`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Delta {
        point: Vec<f64>,
    },
    DeltaDerivative {
        alpha: Vec<u32>,
        point: Vec<f64>,
    },
    Heaviside {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        threshold: f64,
    },
    LocallyIntegrable {
        #[serde(default = "default_dim")]
        dim: usize,
        pieces: Vec<PieceSpec>,
    },
    PrincipalValue {
        #[serde(default)]
        center: f64,
    },
    LinearCombination {
        terms: Vec<(f64, DistributionSpec)>,
    },
    LieDerivative {
        field: Vec<ExprSpec>,
        inner: Box<DistributionSpec>,
    },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<Distribution> {
        let check_dim = |n: usize| if (1..=2).contains(&n) { Ok(()) } else { Err(Error::UnsupportedDimension(n)) };
        Ok(match self {
            DistributionSpec::Delta { point } => {
                check_dim(point.len())?;
                Distribution::delta(point)
            }
            DistributionSpec::DeltaDerivative { alpha, point } => {
                check_dim(point.len())?;
                if alpha.len() != point.len() {
                    return Err(Error::DimensionMismatch { expected: point.len(), got: alpha.len() });
                }
                Distribution::delta_derivative(MultiIndex::new(alpha), point)
            }
            DistributionSpec::Heaviside { dim, axis, threshold } => {
                check_dim(*dim)?;
                if axis >= dim {
                    return Err(Error::Invalid(format!("heaviside axis {axis} ≥ dimension {dim}")));
                }
                Distribution::Heaviside { dim: *dim, axis: *axis, threshold: *threshold }
            }
            DistributionSpec::LocallyIntegrable { dim, pieces } => {
                check_dim(*dim)?;
                let bound = |v: &[Option<f64>], k: usize, inf: f64| v.get(k).copied().flatten().unwrap_or(inf);
                Distribution::piecewise(
                    pieces
                        .iter()
                        .map(|p| {
                            let b = Aabb::from_intervals(
                                (0..*dim)
                                    .map(|k| Interval::new(bound(&p.lo, k, f64::NEG_INFINITY), bound(&p.hi, k, f64::INFINITY)))
                                    .collect(),
                            );
                            Ok((b, p.density.build(*dim)?))
                        })
                        .collect::<Result<_>>()?,
                )?
            }
            DistributionSpec::PrincipalValue { center } => Distribution::PrincipalValue { center: *center },
            DistributionSpec::LinearCombination { terms } => Distribution::linear_combination(
                terms.iter().map(|(a, d)| Ok((*a, d.build()?))).collect::<Result<_>>()?,
            )?,
            DistributionSpec::LieDerivative { field, inner } => {
                let inner = inner.build()?;
                let n = inner.dim();
                let field = VectorField::new(field.iter().map(|c| c.build(n)).collect::<Result<_>>()?)?;
                Distribution::LieDerivative { field, inner: Box::new(inner) }
            }
        })
    }

    pub fn from_distribution(d: &Distribution) -> DistributionSpec {
        let opt = |v: f64| v.is_finite().then_some(v);
        match d {
            Distribution::Delta { point } => DistributionSpec::Delta { point: point.clone() },
            Distribution::DeltaDerivative { alpha, point } => DistributionSpec::DeltaDerivative {
                alpha: alpha.entries().to_vec(),
                point: point.clone(),
            },
            Distribution::Heaviside { dim, axis, threshold } => DistributionSpec::Heaviside {
                dim: *dim,
                axis: *axis,
                threshold: *threshold,
            },
            Distribution::LocallyIntegrable { dim, pieces } => DistributionSpec::LocallyIntegrable {
                dim: *dim,
                pieces: pieces
                    .iter()
                    .map(|(b, f)| PieceSpec {
                        lo: b.axes.iter().map(|i| opt(i.lo)).collect(),
                        hi: b.axes.iter().map(|i| opt(i.hi)).collect(),
                        density: ExprSpec::from_expr(f),
                    })
                    .collect(),
            },
            Distribution::PrincipalValue { center } => DistributionSpec::PrincipalValue { center: *center },
            Distribution::LinearCombination(terms) => DistributionSpec::LinearCombination {
                terms: terms.iter().map(|(a, d)| (*a, Self::from_distribution(d))).collect(),
            },
            Distribution::LieDerivative { field, inner } => DistributionSpec::LieDerivative {
                field: field.components.iter().map(ExprSpec::from_expr).collect(),
                inner: Box::new(Self::from_distribution(inner)),
            },
        }
    }
}
