use crate::error::{Error, Result};
use crate::expr::ScalarExpr;

/// Smooth partition of unity `λ₁, …, λ_J` on `(0, 1]` subordinate to a decreasing scale sequence.
///
/// With smooth steps `s₀` (rising on `[1, 2]`) and `sⱼ` (rising on `[εⱼ₊₁, εⱼ]`),
/// `λⱼ = sⱼ (1 − sⱼ₋₁)` for `j < J` and `λ_J = 1 − s_{J−1}` absorbs the tail `ε → 0`.
#[derive(Clone, Debug)]
pub struct LambdaPartition {
    eps: Vec<f64>,
    lambdas: Vec<ScalarExpr>,
}

const MAX_DECAY: f64 = 1e-6;
const MIN_GAP: f64 = 1e-9;

impl LambdaPartition {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidSequence("empty".into()));
        }
        for (j, &e) in eps.iter().enumerate() {
            let bound = 1.0 / (j + 1) as f64;
            if !(e > 0.0 && e < 1.0 && (j == 0 || e < bound)) {
                return Err(Error::InvalidSequence(format!(
                    "ε_{} = {e} violates 0 < ε_j < min(1, 1/j)",
                    j + 1
                )));
            }
        }
        for (j, w) in eps.windows(2).enumerate() {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidSequence(format!(
                    "not strictly decreasing at j = {}: {} ≥ {}",
                    j + 1,
                    w[1],
                    w[0]
                )));
            }
            if w[1] / w[0] < MAX_DECAY || (w[0] - w[1]) < MIN_GAP * w[0] {
                return Err(Error::InvalidSequence(format!(
                    "degenerate gap between ε_{} = {} and ε_{} = {}",
                    j + 1,
                    w[0],
                    j + 2,
                    w[1]
                )));
            }
        }
        let big_j = eps.len();
        // s[0] rises on [1, 2]; s[j] on [ε_{j+1}, ε_j]
        let mut s = vec![ScalarExpr::step_between(1, 0, 1.0, 2.0)];
        for j in 1..big_j {
            s.push(ScalarExpr::step_between(1, 0, eps[j], eps[j - 1]));
        }
        let one = ScalarExpr::one(1);
        let mut lambdas = Vec::with_capacity(big_j);
        for j in 1..big_j {
            lambdas.push(s[j].clone() * (one.clone() - s[j - 1].clone()));
        }
        lambdas.push(one - s[big_j - 1].clone());
        Ok(LambdaPartition { eps, lambdas })
    }

    /// `εⱼ = ε₁ ρ^{j−1}`, `j = 1..=len`.
    pub fn geometric(first: f64, ratio: f64, len: usize) -> Result<Self> {
        Self::new((0..len).map(|j| first * ratio.powi(j as i32)).collect())
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// `εⱼ` with `ε₀ = 2` (1-based).
    pub fn eps_at(&self, j: usize) -> f64 {
        if j == 0 {
            2.0
        } else {
            self.eps[j - 1]
        }
    }

    /// `λⱼ(ε)`, 1-based.
    pub fn lambda(&self, j: usize, eps: f64) -> f64 {
        self.lambdas[j - 1].eval(&[eps])
    }

    pub fn lambda_expr(&self, j: usize) -> &ScalarExpr {
        &self.lambdas[j - 1]
    }

    /// Non-zero `(j, λⱼ(ε))`.
    pub fn weights(&self, eps: f64) -> Vec<(usize, f64)> {
        (1..=self.len())
            .filter_map(|j| {
                let lower = self.eps.get(j).copied().unwrap_or(0.0);
                let upper = self.eps_at(j - 1);
                if eps <= lower || eps >= upper {
                    return None;
                }
                let v = self.lambda(j, eps);
                (v != 0.0).then_some((j, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp() -> LambdaPartition {
        LambdaPartition::new(vec![0.9, 0.4, 0.3, 0.1, 0.05, 0.01]).unwrap()
    }

    #[test]
    fn partition_of_unity() {
        let p = lp();
        for i in 0..=2000 {
            let e = 1e-3 + (1.0 - 1e-3) * i as f64 / 2000.0;
            let s: f64 = (1..=p.len()).map(|j| p.lambda(j, e)).sum();
            assert!((s - 1.0).abs() < 1e-10, "ε = {e}: Σ = {s}");
            let w: f64 = p.weights(e).iter().map(|(_, v)| v).sum();
            assert!((w - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn lemma_properties() {
        let p = lp();
        for j in 1..=p.len() {
            assert!((p.lambda(j, p.eps_at(j)) - 1.0).abs() < 1e-15, "λ_{j}(ε_{j})");
            let hi = p.eps_at(j - 1);
            let lo = if j < p.len() { p.eps_at(j + 1) } else { 0.0 };
            // outside the support
            if j > 1 {
                let gap = p.eps_at(j - 2) - hi;
                assert_eq!(p.lambda(j, hi + 0.01 * gap), 0.0);
            }
            if j < p.len() {
                assert_eq!(p.lambda(j, lo), 0.0);
                assert_eq!(p.lambda(j, 0.5 * lo), 0.0);
            }
            // positive inside
            for k in 1..20 {
                let e = lo + (hi.min(1.0) - lo) * k as f64 / 20.0;
                assert!(p.lambda(j, e) > 0.0, "λ_{j}({e})");
            }
        }
        for k in 0..=10 {
            let e = 0.9 + 0.01 * k as f64;
            assert_eq!(p.lambda(1, e), 1.0);
        }
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(LambdaPartition::new(vec![0.9, 0.95]).is_err());
        assert!(LambdaPartition::new(vec![0.9, 0.6]).is_err());
        assert!(LambdaPartition::new(vec![0.9, 0.4, 0.4]).is_err());
        assert!(LambdaPartition::new(vec![0.9, 1e-8]).is_err());
    }
}
