//! Multi-indices `α = (α₁, …, αₙ)` and the usual combinatorics on them.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(SmallVec<[u32; 4]>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, n))
    }

    pub fn new(entries: &[u32]) -> Self {
        MultiIndex(SmallVec::from_slice(entries))
    }

    /// Unit multi-index `eᵢ` in `n` dimensions.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zero(n);
        m.0[i] = 1;
        m
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `|α| = Σ αᵢ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`, `None` unless `other ≤ self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// `α! = Π αᵢ!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// `binom(self, other) = Π binom(αᵢ, βᵢ)`.
    pub fn binomial(&self, other: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| binomial(a, b))
            .product()
    }

    /// `y^α`.
    pub fn monomial(&self, y: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(y)
            .map(|(&a, &v)| v.powi(a as i32))
            .product()
    }

    /// All `β ≤ self`, in lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(self.dim())];
        for (i, &ai) in self.0.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * (ai as usize + 1));
            for base in &out {
                for v in 0..=ai {
                    let mut m = base.clone();
                    m.0[i] = v;
                    next.push(m);
                }
            }
            out = next;
        }
        out
    }

    /// All multi-indices in `n` dimensions with `|α| ≤ max_order`, sorted by order then lexicographically.
    pub fn all_up_to(n: usize, max_order: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            out.extend(Self::all_of_order(n, order));
        }
        out
    }

    /// All multi-indices in `n` dimensions with `|α| = order`.
    pub fn all_of_order(n: usize, order: u32) -> Vec<MultiIndex> {
        fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == n {
                prefix.push(left);
                out.push(MultiIndex::new(prefix));
                prefix.pop();
                return;
            }
            for v in (0..=left).rev() {
                prefix.push(v);
                rec(n, left - v, prefix, out);
                prefix.pop();
            }
        }
        if n == 0 {
            return if order == 0 { vec![MultiIndex::zero(0)] } else { vec![] };
        }
        let mut out = Vec::new();
        rec(n, order, &mut Vec::with_capacity(n), &mut out);
        out
    }

    /// Expands `α` into the list of axis indices, e.g. `(2,1)` → `[0,0,1]`.
    pub fn to_axes(&self) -> Vec<usize> {
        let mut axes = Vec::with_capacity(self.order() as usize);
        for (i, &a) in self.0.iter().enumerate() {
            axes.extend(std::iter::repeat(i).take(a as usize));
        }
        axes
    }

    pub fn from_axes(n: usize, axes: &[usize]) -> Self {
        let mut m = Self::zero(n);
        for &a in axes {
            m.0[a] += 1;
        }
        m
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// All set partitions of `{0, …, k−1}`, each as a list of blocks.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for e in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(e);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![e]);
            next.push(q);
        }
        out = next;
    }
    out
}
