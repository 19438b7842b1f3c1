//! The basic space: functions `R(φ, x)` of a test function and a point, built as trees over
//! embedded distributions and smooth functions.

pub mod distribution;
mod json;

pub use distribution::{Distribution, DistributionSpec, PieceSpec};
pub use json::{BoxSpec, GenFunSpec, PartitionSpec};

use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::geometry::Aabb;
use crate::kernels::{Diffeomorphism, Domain};
use crate::multi_index::{set_partitions, MultiIndex};
use crate::quadrature::QuadConfig;
use crate::test_function::{TestFunction, VectorField};
use std::collections::HashMap;
use std::sync::Arc;

/// Nesting cap for Lie derivative nodes.
pub const MAX_LIE_DEPTH: usize = 3;

/// Quadrature accuracy used for pairings.
pub fn pairing_config() -> QuadConfig {
    QuadConfig::with_tol(1e-12, 1e-15)
}

#[derive(Clone)]
pub struct GenFun {
    node: Arc<Node>,
    dim: usize,
    domain: Domain,
}

/// One term of a gluing partition: `χⱼ` and its plateau function `θⱼ` attached to a piece.
#[derive(Clone, Debug)]
pub struct GluePart {
    pub piece: usize,
    pub chi: ScalarExpr,
    pub theta: ScalarExpr,
}

enum Node {
    Iota(Distribution),
    Sigma(ScalarExpr),
    Sum(Vec<GenFun>),
    Product(Vec<GenFun>),
    Scale(f64, GenFun),
    Pullback(Diffeomorphism, GenFun),
    Lie(VectorField, GenFun),
    Glue { pieces: Vec<GenFun>, parts: Vec<GluePart> },
}

impl std::fmt::Debug for GenFun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GenFun[{}]({})", self.dim, self.describe())
    }
}

impl GenFun {
    fn make(node: Node, dim: usize, domain: Domain) -> Self {
        GenFun { node: Arc::new(node), dim, domain }
    }

    /// `ι(u)(φ, x) = ⟨u, φ⟩`.
    pub fn iota(u: Distribution) -> Self {
        let n = u.dim();
        Self::make(Node::Iota(u), n, Domain::entire(n))
    }

    /// `σ(f)(φ, x) = f(x)`.
    pub fn sigma(f: ScalarExpr) -> Self {
        let n = f.dim();
        Self::make(Node::Sigma(f), n, Domain::entire(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::sigma(ScalarExpr::zero(n))
    }

    pub fn sum(children: Vec<GenFun>) -> Result<Self> {
        let (n, d) = Self::common(&children)?;
        Ok(Self::make(Node::Sum(children), n, d))
    }

    pub fn product(children: Vec<GenFun>) -> Result<Self> {
        let (n, d) = Self::common(&children)?;
        Ok(Self::make(Node::Product(children), n, d))
    }

    pub fn scale(c: f64, r: GenFun) -> Self {
        let (n, d) = (r.dim, r.domain.clone());
        Self::make(Node::Scale(c, r), n, d)
    }

    /// `R − S`.
    pub fn difference(r: GenFun, s: GenFun) -> Result<Self> {
        Self::sum(vec![r, Self::scale(-1.0, s)])
    }

    /// `(μ*R)(φ, x) = R(μ_*φ, μx)`.
    pub fn pullback(mu: &Diffeomorphism, r: GenFun) -> Result<Self> {
        if mu.dim() != r.dim {
            return Err(Error::DimensionMismatch { expected: r.dim, got: mu.dim() });
        }
        let d = mu.source.clone();
        Ok(Self::make(Node::Pullback(mu.clone(), r), mu.dim(), d))
    }

    /// `(L̂_X R)(φ, x) = −d₁R(φ, x)(L_Xφ) + (D_X^x R)(φ, x)`.
    pub fn lie_derivative(field: &VectorField, r: GenFun) -> Result<Self> {
        if field.dim() != r.dim {
            return Err(Error::DimensionMismatch { expected: r.dim, got: field.dim() });
        }
        let depth = r.lie_depth() + 1;
        if depth > MAX_LIE_DEPTH {
            return Err(Error::NestingTooDeep(depth, MAX_LIE_DEPTH));
        }
        let (n, d) = (r.dim, r.domain.clone());
        Ok(Self::make(Node::Lie(field.clone(), r), n, d))
    }

    /// Same function on a smaller open set.
    pub fn restrict(&self, sub: &Domain) -> Result<Self> {
        if !sub.is_subdomain_of(&self.domain) {
            return Err(Error::NotSubdomain(format!("{:?} ⊄ {:?}", sub.region, self.domain.region)));
        }
        Ok(GenFun { node: self.node.clone(), dim: self.dim, domain: sub.clone() })
    }

    /// `T(ω, x) = Σⱼ χⱼ(x) T_{λ(j)}(θⱼω, x)`.
    pub fn sheaf_glue(pieces: Vec<GenFun>, cover: &[Domain], parts: Vec<GluePart>) -> Result<Self> {
        if pieces.is_empty() || pieces.len() != cover.len() {
            return Err(Error::CoverMismatch(format!("{} pieces for {} cover sets", pieces.len(), cover.len())));
        }
        let n = pieces[0].dim;
        for (k, (p, u)) in pieces.iter().zip(cover).enumerate() {
            if p.dim != n || u.dim != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.dim.max(u.dim) });
            }
            if !u.is_subdomain_of(&p.domain) {
                return Err(Error::CoverMismatch(format!("piece {k} is not defined on its cover set")));
            }
        }
        let region: Vec<_> = cover.iter().flat_map(|u| u.region.iter().cloned()).collect();
        let hull = region.iter().skip(1).fold(region[0].clone(), |a, b| a.hull(b));
        for (j, part) in parts.iter().enumerate() {
            if part.piece >= cover.len() {
                return Err(Error::CoverMismatch(format!("part {j} names missing piece {}", part.piece)));
            }
            for e in [&part.chi, &part.theta] {
                if e.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: e.dim() });
                }
            }
        }
        // sampled: Σχⱼ = 1, supp χⱼ and supp θⱼ inside their cover set, θⱼ = 1 where χⱼ ≠ 0
        let window = hull.intersect(&Aabb::cube(&vec![0.0; n], 8.0)).unwrap_or(hull.clone());
        let inside = Domain { dim: n, region: region.clone(), exhaustion: vec![] };
        for p in window.grid(if n == 1 { 801 } else { 61 }) {
            if !inside.contains(&p) {
                continue;
            }
            let mut s = 0.0;
            for (j, part) in parts.iter().enumerate() {
                let (c, t) = (part.chi.eval(&p), part.theta.eval(&p));
                s += c;
                let u = &cover[part.piece];
                if (c != 0.0 || t != 0.0) && !u.contains(&p) {
                    return Err(Error::CoverMismatch(format!(
                        "χ_{0} or θ_{0} is nonzero at {p:?} outside cover set {1}",
                        j + 1,
                        part.piece
                    )));
                }
                if c != 0.0 && (t - 1.0).abs() > 1e-14 {
                    return Err(Error::CoverMismatch(format!("θ_{0} ≠ 1 at {p:?} in supp χ_{0}", j + 1)));
                }
            }
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::CoverMismatch(format!("Σχⱼ({p:?}) = {s}")));
            }
        }
        let domain = Domain::new(region, vec![])?;
        Ok(Self::make(Node::Glue { pieces, parts }, n, domain))
    }

    fn common(children: &[GenFun]) -> Result<(usize, Domain)> {
        let first = children.first().ok_or_else(|| Error::Invalid("empty sum/product".into()))?;
        let mut d = first.domain.clone();
        for c in &children[1..] {
            if c.dim != first.dim {
                return Err(Error::DimensionMismatch { expected: first.dim, got: c.dim });
            }
            if c.domain != d {
                d = if d.is_subdomain_of(&c.domain) {
                    d
                } else if c.domain.is_subdomain_of(&d) {
                    c.domain.clone()
                } else {
                    d.intersect(&c.domain)?
                };
            }
        }
        Ok((first.dim, d))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn lie_depth(&self) -> usize {
        match &*self.node {
            Node::Iota(_) | Node::Sigma(_) => 0,
            Node::Sum(c) | Node::Product(c) => c.iter().map(GenFun::lie_depth).max().unwrap_or(0),
            Node::Scale(_, c) | Node::Pullback(_, c) => c.lie_depth(),
            Node::Lie(_, c) => 1 + c.lie_depth(),
            Node::Glue { pieces, .. } => pieces.iter().map(GenFun::lie_depth).max().unwrap_or(0),
        }
    }

    /// Per-axis coordinates near which `x ↦ R(φ̃_{ε,x}, x)` concentrates for small `ε`.
    pub fn singular_coords(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.dim];
        match &*self.node {
            Node::Iota(u) => out = u.singular_coords(),
            Node::Sigma(_) => {}
            Node::Sum(c) | Node::Product(c) | Node::Glue { pieces: c, .. } => {
                for child in c {
                    for (k, v) in child.singular_coords().into_iter().enumerate() {
                        out[k].extend(v);
                    }
                }
            }
            Node::Scale(_, c) | Node::Lie(_, c) => out = c.singular_coords(),
            Node::Pullback(mu, c) => {
                if self.dim == 1 {
                    out[0] = c.singular_coords()[0].iter().map(|&v| mu.apply_inverse(&[v])[0]).collect();
                }
            }
        }
        for axis in &mut out {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        out
    }

    /// Short human-readable form.
    pub fn describe(&self) -> String {
        let join = |c: &[GenFun], sep: &str| c.iter().map(GenFun::describe).collect::<Vec<_>>().join(sep);
        match &*self.node {
            Node::Iota(u) => format!("ι({})", u.kind()),
            Node::Sigma(_) => "σ(f)".into(),
            Node::Sum(c) => format!("({})", join(c, " + ")),
            Node::Product(c) => format!("({})", join(c, "·")),
            Node::Scale(a, c) => format!("{a}·{}", c.describe()),
            Node::Pullback(mu, c) => format!("{}*{}", mu.name, c.describe()),
            Node::Lie(_, c) => format!("L̂_X {}", c.describe()),
            Node::Glue { pieces, .. } => format!("glue[{}]", join(pieces, ", ")),
        }
    }

    /// `R(φ, x)`.
    pub fn evaluate(&self, phi: &TestFunction, x: &[f64]) -> Result<f64> {
        self.jet(phi, x, &[], &MultiIndex::zero(self.dim), &pairing_config())
    }

    /// `d₁R(φ, x)(ψ)`.
    pub fn d1(&self, phi: &TestFunction, x: &[f64], psi: &TestFunction) -> Result<f64> {
        self.jet(phi, x, std::slice::from_ref(psi), &MultiIndex::zero(self.dim), &pairing_config())
    }

    /// `d₁^k R(φ, x)(ψ₁, …, ψ_k)`.
    pub fn gateaux(&self, phi: &TestFunction, x: &[f64], dirs: &[TestFunction]) -> Result<f64> {
        self.jet(phi, x, dirs, &MultiIndex::zero(self.dim), &pairing_config())
    }

    /// `∂_x^γ R(φ, x)` at fixed `φ`.
    pub fn x_derivative(&self, phi: &TestFunction, x: &[f64], gamma: &MultiIndex) -> Result<f64> {
        self.jet(phi, x, &[], gamma, &pairing_config())
    }

    /// `∂_x^γ d₁^k R(φ, x)(ψ₁, …, ψ_k)`: the single rule table behind every evaluation.
    pub fn jet(&self, phi: &TestFunction, x: &[f64], dirs: &[TestFunction], gamma: &MultiIndex, cfg: &QuadConfig) -> Result<f64> {
        let n = self.dim;
        if x.len() != n || phi.dim() != n || gamma.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        self.check_domain(phi, x)?;
        match &*self.node {
            Node::Iota(u) => {
                if !gamma.is_zero() {
                    return Ok(0.0);
                }
                match dirs {
                    [] => u.pair(phi, cfg),
                    [psi] => u.pair(psi, cfg),
                    _ => Ok(0.0),
                }
            }
            Node::Sigma(f) => {
                if dirs.is_empty() {
                    Ok(f.derivative(gamma).eval(x))
                } else {
                    Ok(0.0)
                }
            }
            Node::Sum(children) => {
                let mut total = 0.0;
                for c in children {
                    total += c.jet(phi, x, dirs, gamma, cfg)?;
                }
                Ok(total)
            }
            Node::Scale(a, c) => Ok(a * c.jet(phi, x, dirs, gamma, cfg)?),
            Node::Product(children) => leibniz(children, phi, x, dirs, gamma, cfg),
            Node::Pullback(mu, inner) => {
                let pphi = mu.push_forward(phi)?;
                let pdirs = dirs.iter().map(|d| mu.push_forward(d)).collect::<Result<Vec<_>>>()?;
                let mx = mu.apply(x);
                if gamma.is_zero() {
                    return inner.jet(&pphi, &mx, &pdirs, gamma, cfg);
                }
                // Faà di Bruno over set partitions of the differentiation axes
                let axes = gamma.to_axes();
                let mut total = 0.0;
                for partition in set_partitions(axes.len()) {
                    let blocks = partition.len();
                    for choice in 0..n.pow(blocks as u32) {
                        let mut c = choice;
                        let mut outer = Vec::with_capacity(blocks);
                        let mut weight = 1.0;
                        for block in &partition {
                            let j = c % n;
                            c /= n;
                            outer.push(j);
                            let inner_axes: Vec<usize> = block.iter().map(|&b| axes[b]).collect();
                            weight *= mu.forward[j].derivative(&MultiIndex::from_axes(n, &inner_axes)).eval(x);
                            if weight == 0.0 {
                                break;
                            }
                        }
                        if weight != 0.0 {
                            total += weight * inner.jet(&pphi, &mx, &pdirs, &MultiIndex::from_axes(n, &outer), cfg)?;
                        }
                    }
                }
                Ok(total)
            }
            Node::Lie(field, inner) => {
                let lphi = phi.lie_derivative(field)?;
                let mut with_l = dirs.to_vec();
                with_l.push(lphi);
                let mut total = -inner.jet(phi, x, &with_l, gamma, cfg)?;
                for k in 0..dirs.len() {
                    let mut swapped = dirs.to_vec();
                    swapped[k] = dirs[k].lie_derivative(field)?;
                    total -= inner.jet(phi, x, &swapped, gamma, cfg)?;
                }
                for i in 0..n {
                    let unit = MultiIndex::unit(n, i);
                    for rho in gamma.lower_set() {
                        let xi = field.components[i].derivative(&rho).eval(x);
                        if xi == 0.0 {
                            continue;
                        }
                        let rest = gamma.checked_sub(&rho).expect("ρ ≤ γ").add(&unit);
                        total += gamma.binomial(&rho) * xi * inner.jet(phi, x, dirs, &rest, cfg)?;
                    }
                }
                Ok(total)
            }
            Node::Glue { pieces, parts } => {
                let mut total = 0.0;
                for part in parts {
                    if !part.chi.support().contains(x) {
                        continue;
                    }
                    let tphi = phi.multiply(&part.theta);
                    let tdirs: Vec<TestFunction> = dirs.iter().map(|d| d.multiply(&part.theta)).collect();
                    for rho in gamma.lower_set() {
                        let c = part.chi.derivative(&rho).eval(x);
                        if c == 0.0 {
                            continue;
                        }
                        let rest = gamma.checked_sub(&rho).expect("ρ ≤ γ");
                        total += gamma.binomial(&rho) * c * pieces[part.piece].jet(&tphi, x, &tdirs, &rest, cfg)?;
                    }
                }
                Ok(total)
            }
        }
    }

    fn check_domain(&self, phi: &TestFunction, x: &[f64]) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::SupportEscapesDomain(format!("point {x:?} outside {:?}", self.domain.region)));
        }
        let s = phi.support();
        if s.volume() > 0.0 && !(self.domain.margin_of(s) >= 0.0) {
            return Err(Error::SupportEscapesDomain(format!("supp φ ⊆ {s} not inside {:?}", self.domain.region)));
        }
        Ok(())
    }
}

/// Leibniz rule for `∂_x^γ d^k (Π Rᵢ)`: every direction and every differentiation axis is handed
/// to exactly one factor.
fn leibniz(children: &[GenFun], phi: &TestFunction, x: &[f64], dirs: &[TestFunction], gamma: &MultiIndex, cfg: &QuadConfig) -> Result<f64> {
    let m = children.len();
    let n = gamma.dim();
    let axes = gamma.to_axes();
    let slots = dirs.len() + axes.len();
    let mut cache: HashMap<(usize, u64, Vec<u32>), f64> = HashMap::new();
    let mut total = 0.0;
    for assignment in 0..m.pow(slots as u32) {
        let mut a = assignment;
        let mut masks = vec![0u64; m];
        let mut gammas = vec![vec![0u32; n]; m];
        for s in 0..slots {
            let c = a % m;
            a /= m;
            if s < dirs.len() {
                masks[c] |= 1 << s;
            } else {
                gammas[c][axes[s - dirs.len()]] += 1;
            }
        }
        let mut term = 1.0;
        for c in 0..m {
            let key = (c, masks[c], gammas[c].clone());
            let v = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let sub: Vec<TestFunction> = (0..dirs.len()).filter(|s| masks[c] & (1 << s) != 0).map(|s| dirs[s].clone()).collect();
                    let v = children[c].jet(phi, x, &sub, &MultiIndex::new(&gammas[c]), cfg)?;
                    cache.insert(key, v);
                    v
                }
            };
            term *= v;
            if term == 0.0 {
                break;
            }
        }
        total += term;
    }
    Ok(total)
}

#[cfg(test)]
mod tests;
