//! Smoothing kernels `(ε, x) ↦ φ̃_{ε,x}`, their constructors, and the LSK verifiers.
//!
//! A kernel is represented by its *slice* at fixed `ε`: a closed-form expression in the `2n`
//! variables `(x, y)`. Derivatives in `x`, in `y`, and along the diagonal `∂_{x+y}` are therefore
//! exact.

pub mod check;
pub mod diffeo;
pub mod domain;
pub mod lambda;

pub use check::{check_lsk, CheckConfig, LskCondition, LskReport, SweepRow};
pub use diffeo::{DiffeoCheck, DiffeoSpec, Diffeomorphism};
pub use domain::{cutoff, CompactProbe, Domain};
pub use lambda::LambdaPartition;

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::geometry::{Aabb, Interval};
use crate::mollifier::Mollifier;
use crate::multi_index::MultiIndex;
use crate::test_function::{TestFunction, VectorField};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// `Order`: LSK3 holds with `∂^α f(x)` on the right (class `A^q`);
/// `Vanishing`: LSK3′, the moments themselves are `O(ε^{q+1})` (class `A^q_0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelClass {
    Order,
    Vanishing,
}

#[derive(Clone)]
pub struct SmoothingKernel(Arc<Inner>);

struct Inner {
    name: String,
    dim: usize,
    order: u32,
    class: KernelClass,
    support_constant: f64,
    domain: Domain,
    kind: Kind,
}

enum Kind {
    Model {
        phi: TestFunction,
    },
    Glued {
        base: SmoothingKernel,
        lambdas: LambdaPartition,
        /// `χⱼ`, `j = 1..M−1`; later indices reuse the last one.
        cutoffs: Vec<ScalarExpr>,
    },
    RestrictExtend {
        inner: SmoothingKernel,
        background: SmoothingKernel,
        eps0: f64,
        lambda: ScalarExpr,
        chi: ScalarExpr,
        plateau: Aabb,
    },
    Derived {
        inner: SmoothingKernel,
        field: VectorField,
    },
    Lsk7 {
        terms: Vec<(MultiIndex, SmoothingKernel)>,
        lambdas: LambdaPartition,
        points: Vec<Vec<f64>>,
    },
    Pullback {
        inner: SmoothingKernel,
        mu: Diffeomorphism,
    },
}

impl fmt::Debug for SmoothingKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothingKernel")
            .field("name", &self.0.name)
            .field("dim", &self.0.dim)
            .field("order", &self.0.order)
            .field("class", &self.0.class)
            .field("support_constant", &self.0.support_constant)
            .finish()
    }
}

impl SmoothingKernel {
    fn make(name: String, dim: usize, order: u32, class: KernelClass, c: f64, domain: Domain, kind: Kind) -> Self {
        SmoothingKernel(Arc::new(Inner {
            name,
            dim,
            order,
            class,
            support_constant: c,
            domain,
            kind,
        }))
    }

    /// `φ̃°_{ε,x}(y) = ε^{−n} φ((y − x)/ε)`.
    pub fn model(m: &Mollifier) -> Self {
        let mut k = Self::model_from(m.phi.clone(), m.order);
        let shape = match m.shape {
            crate::mollifier::Shape::Symmetric => "symmetric",
            crate::mollifier::Shape::Shifted => "shifted",
        };
        Arc::get_mut(&mut k.0).expect("fresh").name = format!("model(q={}, n={}, {shape})", m.order, m.dim);
        k
    }

    /// Model kernel from an arbitrary test function declared to have order `q`.
    pub fn model_from(phi: TestFunction, q: u32) -> Self {
        let n = phi.dim();
        let c = phi.support().max_corner_distance(&vec![0.0; n]);
        Self::make(
            format!("model(q={q}, n={n})"),
            n,
            q,
            KernelClass::Order,
            c,
            Domain::entire(n),
            Kind::Model { phi },
        )
    }

    /// `φ̃_{ε,x}(y) = Σⱼ λⱼ(ε) χⱼ(y) k_{ε,x}(y)` with `χⱼ = 1` on `Kⱼ`, `supp χⱼ ⊆ Kⱼ₊₁`.
    pub fn glue_to_domain(k: &SmoothingKernel, domain: &Domain, lambdas: &LambdaPartition) -> Result<Self> {
        k.expect_dim(domain.dim)?;
        let ex = &domain.exhaustion;
        if ex.len() < 2 {
            return Err(Error::Invalid("gluing needs an exhaustion with at least two boxes".into()));
        }
        if !ex.iter().all(|b| b.is_bounded()) {
            return Err(Error::UnboundedBox);
        }
        let cutoffs = ex.windows(2).map(|w| cutoff(&w[0], &w[1])).collect();
        Ok(Self::make(
            format!("glued({})", k.name()),
            k.dim(),
            k.order(),
            k.class(),
            k.support_constant(),
            domain.clone(),
            Kind::Glued {
                base: k.clone(),
                lambdas: lambdas.clone(),
                cutoffs,
            },
        ))
    }

    /// `ψ̃ = λ(ε)χ(x)k + (1 − λ(ε)χ(x))ψ̃°` with `χ = 1` on `K`, agreeing with `k` for
    /// `ε < ε₀/2`, `x ∈ K`.
    pub fn restrict_extend(
        k: &SmoothingKernel,
        probe: &CompactProbe,
        v: &Domain,
        background: &SmoothingKernel,
    ) -> Result<Self> {
        let n = k.dim();
        background.expect_dim(n)?;
        probe.hull.dim().eq(&n).then_some(()).ok_or(Error::DimensionMismatch {
            expected: n,
            got: probe.hull.dim(),
        })?;
        let w = k.domain().intersect(v)?;
        let m = w.margin_of(&probe.hull);
        if !(m > 0.0) {
            return Err(Error::ProbeOutsideDomain {
                probe: probe.hull.to_string(),
                domain: format!("{:?}", w.region),
            });
        }
        let outer = probe.hull.expand(0.5 * m);
        let chi = cutoff(&probe.hull, &outer);
        let c = k.support_constant();
        let eps0 = if c > 0.0 { (0.5 * m / c).min(1.0) } else { 1.0 };
        let lambda = ScalarExpr::step_between(1, 0, eps0, 0.5 * eps0);
        Ok(Self::make(
            format!("restrict_extend({}, {})", k.name(), background.name()),
            n,
            k.order().min(background.order()),
            if k.class() == KernelClass::Order && background.class() == KernelClass::Order {
                KernelClass::Order
            } else {
                KernelClass::Vanishing
            },
            c.max(background.support_constant()),
            v.clone(),
            Kind::RestrictExtend {
                inner: k.clone(),
                background: background.clone(),
                eps0,
                lambda,
                chi,
                plateau: probe.hull.clone(),
            },
        ))
    }

    /// `(D_X^x + L_X^y) k`, a kernel of the vanishing class.
    pub fn derive(k: &SmoothingKernel, field: &VectorField) -> Result<Self> {
        k.expect_dim(field.dim())?;
        Ok(Self::make(
            format!("derived({})", k.name()),
            k.dim(),
            k.order(),
            KernelClass::Vanishing,
            k.support_constant(),
            k.domain().clone(),
            Kind::Derived {
                inner: k.clone(),
                field: field.clone(),
            },
        ))
    }

    /// `ψ̃_{ε,x}(y) = Σⱼ λⱼ(ε)(εⱼ/ε)ⁿ Σ_{β≤δ} (x−xⱼ)^β/β! (φ̃_β)_{εⱼ,xⱼ}(εⱼ(y−x)/ε + xⱼ)`.
    ///
    /// `terms` maps every `β ≤ δ` to `φ̃_β`; `φ̃_0` must be of the order class, the others of the
    /// vanishing class.
    pub fn lsk7(terms: Vec<(MultiIndex, SmoothingKernel)>, lambdas: &LambdaPartition, points: Vec<Vec<f64>>) -> Result<Self> {
        let (zero, phi0) = terms
            .iter()
            .find(|(b, _)| b.is_zero())
            .ok_or_else(|| Error::Invalid("missing φ̃_0 term".into()))?;
        let n = zero.dim();
        for (b, k) in &terms {
            k.expect_dim(n)?;
            if b.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.dim() });
            }
            if !b.is_zero() && k.class() != KernelClass::Vanishing {
                return Err(Error::Invalid(format!("φ̃_{b} must be of the vanishing class")));
            }
        }
        if phi0.class() != KernelClass::Order {
            return Err(Error::Invalid("φ̃_0 must be of the order class".into()));
        }
        if points.len() != lambdas.len() {
            return Err(Error::InvalidSequence(format!(
                "{} points for {} scales",
                points.len(),
                lambdas.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        let q = terms.iter().map(|(_, k)| k.order()).min().unwrap_or(0);
        let c = terms.iter().map(|(_, k)| k.support_constant()).fold(0.0, f64::max);
        Ok(Self::make(
            format!("lsk7({}, {} terms)", phi0.name(), terms.len()),
            n,
            q,
            KernelClass::Order,
            c,
            Domain::entire(n),
            Kind::Lsk7 {
                terms,
                lambdas: lambdas.clone(),
                points,
            },
        ))
    }

    /// `(μ*k)_{ε,x}(y) = k_{ε,μx}(μy)·|det Dμ(y)|`.
    pub fn pullback(mu: &Diffeomorphism, k: &SmoothingKernel) -> Result<Self> {
        k.expect_dim(mu.dim())?;
        Ok(Self::make(
            format!("pullback({}, {})", mu.name, k.name()),
            k.dim(),
            k.order(),
            k.class(),
            mu.inverse_lipschitz * k.support_constant(),
            mu.source.clone(),
            Kind::Pullback {
                inner: k.clone(),
                mu: mu.clone(),
            },
        ))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn order(&self) -> u32 {
        self.0.order
    }

    pub fn class(&self) -> KernelClass {
        self.0.class
    }

    /// `C` with `supp φ̃_{ε,x} ⊆ B(x, Cε)`.
    pub fn support_constant(&self) -> f64 {
        self.0.support_constant
    }

    pub fn domain(&self) -> &Domain {
        &self.0.domain
    }

    fn expect_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: n });
        }
        Ok(())
    }

    /// The slice `(x, y) ↦ φ̃_{ε,x}(y)` on `R^{2n}`.
    pub fn slice(&self, eps: f64) -> ScalarExpr {
        let n = self.dim();
        match &self.0.kind {
            Kind::Model { phi } => {
                let mut a = vec![0.0; 2 * n * n];
                for i in 0..n {
                    a[i * 2 * n + i] = -1.0 / eps;
                    a[i * 2 * n + n + i] = 1.0 / eps;
                }
                ScalarExpr::scale(eps.powi(-(n as i32)), phi.expr().affine(&a, &vec![0.0; n], 2 * n))
            }
            Kind::Glued { base, lambdas, cutoffs } => {
                let weight = ScalarExpr::sum_dim(
                    n,
                    lambdas
                        .weights(eps)
                        .into_iter()
                        .map(|(j, l)| ScalarExpr::scale(l, cutoffs[(j - 1).min(cutoffs.len() - 1)].clone()))
                        .collect(),
                );
                weight.lift(2 * n, n) * base.slice(eps)
            }
            Kind::RestrictExtend { inner, background, lambda, chi, .. } => {
                let l = lambda.eval(&[eps]);
                let bg = background.slice(eps);
                if l == 0.0 {
                    return bg;
                }
                let lc = ScalarExpr::scale(l, chi.lift(2 * n, 0));
                lc.clone() * inner.slice(eps) + (ScalarExpr::one(2 * n) - lc) * bg
            }
            Kind::Derived { inner, field } => {
                let s = inner.slice(eps);
                let fx = field.lift(2 * n, 0);
                let fy = field.lift(2 * n, n);
                let mut terms = Vec::with_capacity(2 * n + 1);
                for i in 0..n {
                    terms.push(fx.components[i].clone() * s.diff(i));
                    terms.push(fy.components[i].clone() * s.diff(n + i));
                }
                terms.push(field.divergence().lift(2 * n, n) * s);
                ScalarExpr::sum_dim(2 * n, terms)
            }
            Kind::Lsk7 { terms, lambdas, points } => {
                let mut out = Vec::new();
                for (j, l) in lambdas.weights(eps) {
                    let ej = lambdas.eps_at(j);
                    let xj = &points[j - 1];
                    let r = ej / eps;
                    let mut a = vec![0.0; 4 * n * n];
                    let mut b = vec![0.0; 2 * n];
                    for i in 0..n {
                        b[i] = xj[i];
                        b[n + i] = xj[i];
                        a[(n + i) * 2 * n + i] = -r;
                        a[(n + i) * 2 * n + n + i] = r;
                    }
                    let weight = l * r.powi(n as i32);
                    for (beta, k) in terms {
                        let shifted = k.slice(ej).affine(&a, &b, 2 * n);
                        let poly = ScalarExpr::product(
                            (0..n)
                                .map(|i| {
                                    let mut c = vec![0.0; 2 * n];
                                    c[i] = 1.0;
                                    ScalarExpr::powi(ScalarExpr::linear(&c, -xj[i]), beta.entries()[i])
                                })
                                .chain(std::iter::once(ScalarExpr::one(2 * n)))
                                .collect(),
                        );
                        out.push(ScalarExpr::scale(weight / beta.factorial(), poly * shifted));
                    }
                }
                ScalarExpr::sum_dim(2 * n, out)
            }
            Kind::Pullback { inner, mu } => {
                let mut args: Vec<ScalarExpr> = mu.forward.iter().map(|c| c.lift(2 * n, 0)).collect();
                args.extend(mu.forward.iter().map(|c| c.lift(2 * n, n)));
                inner.slice(eps).compose(args) * mu.abs_det().lift(2 * n, n)
            }
        }
    }

    /// A box containing `supp φ̃_{ε,x}`.
    pub fn support_at(&self, eps: f64, x: &[f64]) -> Aabb {
        let n = self.dim();
        match &self.0.kind {
            Kind::Model { phi } => Aabb::from_intervals(
                phi.support()
                    .axes
                    .iter()
                    .zip(x)
                    .map(|(i, &v)| Interval::new(v + eps * i.lo, v + eps * i.hi))
                    .collect(),
            ),
            Kind::Glued { base, .. } => {
                let b = base.support_at(eps, x);
                let outer = self.domain().exhaustion.last().expect("validated");
                b.intersect(outer).unwrap_or_else(|| Aabb::cube(x, 0.0))
            }
            Kind::RestrictExtend { inner, background, lambda, chi, .. } => {
                let w = lambda.eval(&[eps]) * chi.eval(x);
                if w == 0.0 {
                    background.support_at(eps, x)
                } else if w == 1.0 {
                    inner.support_at(eps, x)
                } else {
                    inner.support_at(eps, x).hull(&background.support_at(eps, x))
                }
            }
            Kind::Derived { inner, .. } => inner.support_at(eps, x),
            Kind::Lsk7 { terms, lambdas, points } => {
                let mut out: Option<Aabb> = None;
                for (j, _) in lambdas.weights(eps) {
                    let ej = lambdas.eps_at(j);
                    let xj = &points[j - 1];
                    let r = ej / eps;
                    for (_, k) in terms {
                        let s = k.support_at(ej, xj);
                        let b = Aabb::from_intervals(
                            (0..n)
                                .map(|i| {
                                    Interval::new(x[i] + (s.axes[i].lo - xj[i]) / r, x[i] + (s.axes[i].hi - xj[i]) / r)
                                })
                                .collect(),
                        );
                        out = Some(match out {
                            None => b,
                            Some(o) => o.hull(&b),
                        });
                    }
                }
                out.unwrap_or_else(|| Aabb::cube(x, 0.0))
            }
            Kind::Pullback { inner, mu } => {
                let mx = mu.apply(x);
                let s = inner.support_at(eps, &mx);
                let r = mu.inverse_lipschitz * s.max_corner_distance(&mx);
                let ball = Aabb::cube(x, r);
                mu.preimage_box(&s).intersect(&ball).unwrap_or(ball)
            }
        }
    }

    /// `φ̃_{ε,x}` as a test function in `y`.
    pub fn test_function(&self, eps: f64, x: &[f64]) -> Result<TestFunction> {
        self.expect_dim(x.len())?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidSequence(format!("ε = {eps} outside (0, 1]")));
        }
        TestFunction::from_slice(&self.slice(eps), x, self.support_at(eps, x))
    }

    pub fn eval(&self, eps: f64, x: &[f64], y: &[f64]) -> f64 {
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        self.slice(eps).eval(&p)
    }

    /// For a glued kernel: the largest recorded `ε₀(K)` below which it coincides with its base
    /// kernel for `x ∈ K`. For a restrict-extend kernel: half its blending threshold (agreement
    /// with the restricted kernel on its plateau). Other kinds agree with themselves everywhere.
    pub fn agreement_eps(&self, k: &Aabb) -> Result<f64> {
        match &self.0.kind {
            Kind::Glued { lambdas, .. } => {
                let ex = &self.domain().exhaustion;
                let c = self.support_constant();
                for j in 1..=lambdas.len() {
                    let e = lambdas.eps_at(j);
                    let target = &ex[j.min(ex.len() - 1) - 1];
                    if k.expand(c * e).margin_in(target) >= 0.0 {
                        return Ok(e);
                    }
                }
                Err(Error::ProbeOutsideDomain {
                    probe: k.to_string(),
                    domain: format!("{:?}", ex.get(ex.len() - 2)),
                })
            }
            Kind::RestrictExtend { eps0, plateau, .. } => {
                if k.margin_in(plateau) >= 0.0 {
                    Ok(0.5 * eps0)
                } else {
                    Err(Error::ProbeOutsideDomain {
                        probe: k.to_string(),
                        domain: plateau.to_string(),
                    })
                }
            }
            _ => Ok(1.0),
        }
    }
}

/// `∂_{x+y}^α` applied to a slice on `R^{2n}`.
pub fn diagonal_derivative(slice: &ScalarExpr, alpha: &MultiIndex) -> ScalarExpr {
    let n = alpha.dim();
    let mut e = slice.clone();
    for axis in alpha.to_axes() {
        let mut w = vec![0.0; 2 * n];
        w[axis] = 1.0;
        w[n + axis] = 1.0;
        e = e.directional(&w);
    }
    e
}

/// `∂_y^β` applied to a slice on `R^{2n}`.
pub fn y_derivative(slice: &ScalarExpr, beta: &MultiIndex) -> ScalarExpr {
    let n = beta.dim();
    beta.to_axes().into_iter().fold(slice.clone(), |e, a| e.diff(n + a))
}

/// `∂_x^α` applied to a slice on `R^{2n}`.
pub fn x_derivative(slice: &ScalarExpr, alpha: &MultiIndex) -> ScalarExpr {
    alpha.to_axes().into_iter().fold(slice.clone(), |e, a| e.diff(a))
}
