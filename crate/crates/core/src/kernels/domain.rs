use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::geometry::{Aabb, Interval};
use serde::{Deserialize, Serialize};

/// Open region (finite union of open boxes) with a compact exhaustion `K₁ ⊂⊂ K₂ ⊂⊂ …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub dim: usize,
    pub region: Vec<Aabb>,
    pub exhaustion: Vec<Aabb>,
}

impl Domain {
    /// `Rⁿ` with the exhaustion `[−2ʲ, 2ʲ]ⁿ`, `j = 1..=6`.
    pub fn entire(n: usize) -> Self {
        Domain {
            dim: n,
            region: vec![Aabb::entire(n)],
            exhaustion: (1..=6).map(|j| Aabb::cube(&vec![0.0; n], f64::from(1 << j))).collect(),
        }
    }

    pub fn new(region: Vec<Aabb>, exhaustion: Vec<Aabb>) -> Result<Self> {
        let dim = region
            .first()
            .ok_or_else(|| Error::Invalid("domain needs at least one region box".into()))?
            .dim();
        if region.iter().chain(&exhaustion).any(|b| b.dim() != dim) {
            return Err(Error::Invalid("domain boxes have mixed dimensions".into()));
        }
        for w in exhaustion.windows(2) {
            if !(w[0].margin_in(&w[1]) > 0.0) {
                return Err(Error::Invalid(format!(
                    "exhaustion box {} is not compactly contained in {}",
                    w[0], w[1]
                )));
            }
        }
        let d = Domain {
            dim,
            region,
            exhaustion,
        };
        if let Some(k) = d.exhaustion.last() {
            if !(d.margin_of(k) > 0.0) {
                return Err(Error::Invalid(format!("exhaustion box {k} leaves the region")));
            }
        }
        Ok(d)
    }

    /// Single open box `b` exhausted by `levels` boxes shrinking towards it geometrically.
    pub fn open_box(b: Aabb, levels: usize) -> Result<Self> {
        if !b.is_bounded() {
            return Err(Error::UnboundedBox);
        }
        let w = b.axes.iter().map(Interval::width).fold(f64::INFINITY, f64::min);
        let exhaustion = (1..=levels)
            .map(|j| shrink(&b, 0.25 * w * 0.5f64.powi(j as i32 - 1)))
            .collect();
        Domain::new(vec![b], exhaustion)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.region
            .iter()
            .any(|b| b.axes.iter().zip(p).all(|(i, &v)| i.lo < v && v < i.hi))
    }

    /// Distance from the closed box `k` to the complement of the region, taking the best
    /// single region box (positive iff `k ⊂⊂` that box).
    pub fn margin_of(&self, k: &Aabb) -> f64 {
        self.region
            .iter()
            .map(|b| k.margin_in(b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn compactly_contains(&self, k: &Aabb) -> bool {
        self.margin_of(k) > 0.0
    }

    /// Every region box lies in some region box of `other`.
    pub fn is_subdomain_of(&self, other: &Domain) -> bool {
        self.dim == other.dim
            && self
                .region
                .iter()
                .all(|a| other.region.iter().any(|b| a.margin_in(b) >= 0.0))
    }

    /// Pairwise box intersections; the exhaustion is rebuilt from the first one.
    pub fn intersect(&self, other: &Domain) -> Result<Domain> {
        let mut region = Vec::new();
        for a in &self.region {
            for b in &other.region {
                if let Some(c) = a.intersect(b) {
                    if c.axes.iter().all(|i| i.width() > 0.0) {
                        region.push(c);
                    }
                }
            }
        }
        if region.is_empty() {
            return Err(Error::NotSubdomain("domains do not overlap".into()));
        }
        if region.len() == 1 && region[0].is_bounded() {
            return Domain::open_box(region.pop().unwrap(), 6);
        }
        Domain::new(region, vec![])
    }

    /// `χ = 1` on `inner`, `supp χ ⊆ outer`.
    pub fn cutoff(inner: &Aabb, outer: &Aabb) -> ScalarExpr {
        cutoff(inner, outer)
    }
}

pub(crate) fn shrink(b: &Aabb, m: f64) -> Aabb {
    Aabb::from_intervals(b.axes.iter().map(|i| Interval::new(i.lo + m, i.hi - m)).collect())
}

/// Product of smooth steps: 1 on `inner`, 0 outside `outer` (`inner ⊂⊂ outer`).
pub fn cutoff(inner: &Aabb, outer: &Aabb) -> ScalarExpr {
    let n = inner.dim();
    let mut factors = Vec::with_capacity(2 * n);
    for k in 0..n {
        let (i, o) = (inner.axes[k], outer.axes[k]);
        if o.lo.is_finite() {
            factors.push(ScalarExpr::step_between(n, k, o.lo, i.lo));
        }
        if o.hi.is_finite() {
            factors.push(ScalarExpr::step_between(n, k, o.hi, i.hi));
        }
    }
    if factors.is_empty() {
        ScalarExpr::one(n)
    } else {
        ScalarExpr::product(factors)
    }
}

/// `K ⊂⊂ Ω` represented by a box and a sample grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactProbe {
    pub hull: Aabb,
    pub grid: Vec<Vec<f64>>,
    pub margin: f64,
}

impl CompactProbe {
    /// Uniform grid with `per_axis` points per axis (a single point if the hull is degenerate).
    pub fn new(hull: Aabb, per_axis: usize, domain: &Domain) -> Result<Self> {
        let margin = domain.margin_of(&hull);
        if !(margin > 0.0) {
            return Err(Error::ProbeOutsideDomain {
                probe: hull.to_string(),
                domain: format!("{:?}", domain.region),
            });
        }
        let grid = if hull.volume() == 0.0 && hull.axes.iter().all(|i| i.width() == 0.0) {
            vec![hull.center()]
        } else {
            hull.grid(per_axis)
        };
        Ok(CompactProbe { hull, grid, margin })
    }

    pub fn points(hull: Aabb, grid: Vec<Vec<f64>>, domain: &Domain) -> Result<Self> {
        if let Some(p) = grid.iter().find(|p| !hull.contains(p)) {
            return Err(Error::Invalid(format!("grid point {p:?} outside probe hull {hull}")));
        }
        let margin = domain.margin_of(&hull);
        if !(margin > 0.0) {
            return Err(Error::ProbeOutsideDomain {
                probe: hull.to_string(),
                domain: format!("{:?}", domain.region),
            });
        }
        Ok(CompactProbe { hull, grid, margin })
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.hull
            .axes
            .iter()
            .map(|i| {
                let k = (self.grid.len() as f64).powf(1.0 / self.hull.dim() as f64).round();
                if k > 1.0 {
                    i.width() / (k - 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}
