//! Intervals, axis-aligned boxes and support descriptors.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Closed interval `[lo, hi]`; bounds may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::asymptotics::nonfinite")]
    pub lo: f64,
    #[serde(with = "crate::asymptotics::nonfinite")]
    pub hi: f64,
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(c * self.lo, c * self.hi)
        } else {
            Interval::new(c * self.hi, c * self.lo)
        }
    }

    pub fn mul(self, o: Interval) -> Interval {
        let c = [
            mul0(self.lo, o.lo),
            mul0(self.lo, o.hi),
            mul0(self.hi, o.lo),
            mul0(self.hi, o.hi),
        ];
        Interval::new(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    pub fn powi(self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(1.0);
        }
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        if k % 2 == 1 {
            Interval::new(a, b)
        } else if self.lo >= 0.0 {
            Interval::new(a, b)
        } else if self.hi <= 0.0 {
            Interval::new(b, a)
        } else {
            Interval::new(0.0, a.max(b))
        }
    }

    pub fn hull(self, o: Interval) -> Interval {
        Interval::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    /// Widens by a relative plus absolute margin to absorb rounding.
    pub fn widen(self, rel: f64, abs: f64) -> Interval {
        let finite = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
        let m = rel * finite(self.lo).max(finite(self.hi)) + abs;
        Interval::new(self.lo - m, self.hi + m)
    }
}

// 0 · ∞ = 0 for enclosure purposes
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Axis-aligned box `Π [loᵢ, hiᵢ]`, bounds possibly infinite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub axes: Vec<Interval>,
}

impl Aabb {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        Aabb {
            axes: lo.iter().zip(hi).map(|(&l, &h)| Interval::new(l, h)).collect(),
        }
    }

    pub fn from_intervals(axes: Vec<Interval>) -> Self {
        Aabb { axes }
    }

    pub fn entire(n: usize) -> Self {
        Aabb {
            axes: vec![Interval::ENTIRE; n],
        }
    }

    /// Cube of half-width `r` centred at `c`.
    pub fn cube(c: &[f64], r: f64) -> Self {
        Aabb {
            axes: c.iter().map(|&v| Interval::new(v - r, v + r)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn lo(&self) -> Vec<f64> {
        self.axes.iter().map(|i| i.lo).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.axes.iter().map(|i| i.hi).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.axes.iter().map(|i| i.mid()).collect()
    }

    pub fn is_bounded(&self) -> bool {
        self.axes.iter().all(|i| i.is_bounded())
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|i| i.width()).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.axes.iter().zip(p).all(|(i, &v)| i.contains(v))
    }

    /// `self` lies in the interior of `other` with at least `margin` to spare on every side.
    pub fn inside_with_margin(&self, other: &Aabb, margin: f64) -> bool {
        self.axes
            .iter()
            .zip(&other.axes)
            .all(|(a, b)| a.lo >= b.lo + margin && a.hi <= b.hi - margin)
    }

    /// Smallest distance from `self` to the complement of `other` (negative if not contained).
    pub fn margin_in(&self, other: &Aabb) -> f64 {
        self.axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| (a.lo - b.lo).min(b.hi - a.hi))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        let axes: Vec<Interval> = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| Interval::new(a.lo.max(b.lo), a.hi.min(b.hi)))
            .collect();
        if axes.iter().any(|i| i.lo > i.hi) {
            None
        } else {
            Some(Aabb { axes })
        }
    }

    pub fn hull(&self, other: &Aabb) -> Aabb {
        Aabb {
            axes: self
                .axes
                .iter()
                .zip(&other.axes)
                .map(|(a, b)| a.hull(*b))
                .collect(),
        }
    }

    pub fn expand(&self, r: f64) -> Aabb {
        Aabb {
            axes: self
                .axes
                .iter()
                .map(|i| Interval::new(i.lo - r, i.hi + r))
                .collect(),
        }
    }

    /// Largest Euclidean distance from `p` to a corner of the box.
    pub fn max_corner_distance(&self, p: &[f64]) -> f64 {
        self.axes
            .iter()
            .zip(p)
            .map(|(i, &v)| {
                let d = (i.lo - v).abs().max((i.hi - v).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform tensor grid with `per_axis` points per axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axis_points: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|i| {
                if per_axis <= 1 {
                    vec![i.mid()]
                } else {
                    (0..per_axis)
                        .map(|k| i.lo + i.width() * k as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out: Vec<Vec<f64>> = vec![vec![]];
        for pts in &axis_points {
            let mut next = Vec::with_capacity(out.len() * pts.len());
            for base in &out {
                for &v in pts {
                    let mut p = base.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Debug for Aabb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.axes.iter().enumerate() {
            if k > 0 {
                write!(f, " × ")?;
            }
            write!(f, "[{}, {}]", i.lo, i.hi)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Aabb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Sound over-approximation of `{y : e(y) ≠ 0}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    Empty,
    Within(Aabb),
}

impl Support {
    pub fn entire(n: usize) -> Self {
        Support::Within(Aabb::entire(n))
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Support::Empty)
    }

    pub fn as_box(&self) -> Option<&Aabb> {
        match self {
            Support::Empty => None,
            Support::Within(b) => Some(b),
        }
    }

    pub fn intersect(&self, other: &Support) -> Support {
        match (self, other) {
            (Support::Within(a), Support::Within(b)) => match a.intersect(b) {
                Some(c) => Support::Within(c),
                None => Support::Empty,
            },
            _ => Support::Empty,
        }
    }

    pub fn union(&self, other: &Support) -> Support {
        match (self, other) {
            (Support::Within(a), Support::Within(b)) => Support::Within(a.hull(b)),
            (Support::Empty, s) | (s, Support::Empty) => s.clone(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Support::Empty => false,
            Support::Within(b) => b.contains(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_products_enclose() {
        let a = Interval::new(-1.0, 2.0);
        let b = Interval::new(-3.0, 0.5);
        let p = a.mul(b);
        assert_eq!(p, Interval::new(-6.0, 3.0));
        assert_eq!(a.powi(2), Interval::new(0.0, 4.0));
        assert_eq!(Interval::new(-3.0, -1.0).powi(2), Interval::new(1.0, 9.0));
    }

    #[test]
    fn grid_and_margins() {
        let b = Aabb::new(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(b.grid(3).len(), 9);
        let inner = Aabb::new(&[0.25, 0.5], &[0.75, 1.0]);
        assert!(inner.inside_with_margin(&b, 0.2));
        assert!((inner.margin_in(&b) - 0.25).abs() < 1e-15);
        assert!((b.max_corner_distance(&[0.0, 0.0]) - 5f64.sqrt()).abs() < 1e-15);
    }
}
