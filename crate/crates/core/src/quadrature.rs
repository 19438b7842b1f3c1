//! Composite tensor Gauss–Legendre quadrature with global adaptive dyadic refinement.

use crate::error::{Error, Result};
use crate::expr::bump::gl_rule;
use crate::expr::ScalarExpr;
use crate::geometry::{Aabb, Interval, Support};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

pub const PANEL_ORDER: usize = 12;
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;
const PANEL_NOISE: f64 = 1024.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections of any panel.
    pub max_depth: u32,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_depth: 24,
            max_panels: 200_000,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        QuadConfig {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of `|fine − coarse|` over the final panels.
    pub error: f64,
    pub panels: usize,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        error: 0.0,
        panels: 0,
    };
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gl_rule(PANEL_ORDER))
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in it {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

/// Tensor Gauss–Legendre rule of order [`PANEL_ORDER`] on one panel.
pub fn panel_rule<F: Fn(&[f64]) -> f64>(f: &F, panel: &Aabb) -> f64 {
    panel_rule_abs(f, panel).0
}

/// The panel rule applied to `f` and to `|f|`.
fn panel_rule_abs<F: Fn(&[f64]) -> f64>(f: &F, panel: &Aabb) -> (f64, f64) {
    let r = rule();
    let n = panel.dim();
    let half: Vec<f64> = panel.axes.iter().map(|i| 0.5 * i.width()).collect();
    let mid: Vec<f64> = panel.axes.iter().map(|i| i.mid()).collect();
    let jac: f64 = half.iter().product();
    let mut idx = vec![0usize; n];
    let mut y = mid.clone();
    let mut acc = 0.0;
    let mut comp = 0.0;
    let mut mag = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..n {
            let (t, wk) = r[idx[k]];
            y[k] = mid[k] + half[k] * t;
            w *= wk;
        }
        let v = w * f(&y);
        mag += v.abs();
        let t = acc + v;
        if acc.abs() >= v.abs() {
            comp += (acc - t) + v;
        } else {
            comp += (v - t) + acc;
        }
        acc = t;
        // odometer increment
        let mut k = 0;
        loop {
            if k == n {
                return (jac * (acc + comp), jac * mag);
            }
            idx[k] += 1;
            if idx[k] < r.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn bisect(panel: &Aabb) -> Vec<Aabb> {
    let mut out = vec![panel.clone()];
    for k in 0..panel.dim() {
        let mut next = Vec::with_capacity(out.len() * 2);
        for p in out {
            let iv = p.axes[k];
            let m = iv.mid();
            let mut a = p.clone();
            a.axes[k] = Interval::new(iv.lo, m);
            let mut b = p;
            b.axes[k] = Interval::new(m, iv.hi);
            next.push(a);
            next.push(b);
        }
        out = next;
    }
    out
}

struct Panel {
    region: Aabb,
    depth: u32,
    fine: f64,
    mag: f64,
    children: Vec<f64>,
    err: f64,
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err).then_with(|| o.seq.cmp(&self.seq))
    }
}

fn make_panel<F: Fn(&[f64]) -> f64>(f: &F, region: Aabb, depth: u32, coarse: f64, seq: usize) -> Panel {
    let parts: Vec<(f64, f64)> = bisect(&region).iter().map(|c| panel_rule_abs(f, c)).collect();
    let children: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let fine = compensated_sum(children.iter().copied());
    Panel {
        err: (fine - coarse).abs(),
        region,
        depth,
        fine,
        mag: parts.iter().map(|p| p.1).sum(),
        children,
        seq,
    }
}

/// Integrates `f` over the bounded box `region`.
///
/// Panels are refined (largest local difference first) until the summed difference between the
/// one-panel and the bisected estimate drops below `max(abs_tol, rel_tol·|I|)`, or below the
/// rounding floor `64·u·∫|f|` that cancellation makes unreachable anyway.
pub fn integrate<F: Fn(&[f64]) -> f64>(f: &F, region: &Aabb, cfg: &QuadConfig) -> Result<QuadResult> {
    if !region.is_bounded() {
        return Err(Error::UnboundedBox);
    }
    if region.axes.iter().any(|i| i.width() <= 0.0) {
        return Ok(QuadResult::ZERO);
    }
    let mut seq = 0;
    let coarse = panel_rule(f, region);
    let first = make_panel(f, region.clone(), 0, coarse, seq);
    let mut evaluated = 1 + (1 << region.dim());
    let mut total = first.fine;
    let mut mag = first.mag;
    // panels whose difference is at rounding level for their own mass are never split again;
    // `err` sums the refinable panels only
    let mut frozen: Vec<Panel> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut err = park(first, &mut heap, &mut frozen);
    let tol = |total: f64, mag: f64| cfg.abs_tol.max(cfg.rel_tol * total.abs()).max(ROUNDING_FLOOR * mag);
    loop {
        if err <= tol(total, mag) || heap.is_empty() {
            // recompute exactly to shed drift from the running sums
            let all = || heap.iter().chain(frozen.iter());
            total = compensated_sum(all().map(|p| p.fine));
            err = heap.iter().map(|p| p.err).sum();
            mag = all().map(|p| p.mag).sum();
            if err <= tol(total, mag) || heap.is_empty() {
                return Ok(QuadResult {
                    value: total,
                    error: all().map(|p| p.err).sum(),
                    panels: evaluated,
                });
            }
        }
        if !total.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                depth: 0,
                difference: f64::NAN,
            });
        }
        let worst = heap.pop().expect("non-empty");
        if worst.depth >= cfg.max_depth || evaluated >= cfg.max_panels {
            return Err(Error::QuadratureNonConvergence {
                depth: worst.depth,
                difference: err,
            });
        }
        total -= worst.fine;
        err -= worst.err;
        mag -= worst.mag;
        for (child, coarse) in bisect(&worst.region).into_iter().zip(worst.children) {
            seq += 1;
            let p = make_panel(f, child, worst.depth + 1, coarse, seq);
            total += p.fine;
            mag += p.mag;
            err += park(p, &mut heap, &mut frozen);
            evaluated += 1 << region.dim();
        }
    }
}

/// Files `p` as refinable or frozen; returns its contribution to the refinable error.
fn park(p: Panel, heap: &mut BinaryHeap<Panel>, frozen: &mut Vec<Panel>) -> f64 {
    if p.err <= PANEL_NOISE * p.mag && p.depth > 0 {
        frozen.push(p);
        0.0
    } else {
        let e = p.err;
        heap.push(p);
        e
    }
}

/// Integrates over `region` after splitting it at the given interior breakpoints (one list per
/// axis); use for integrands with kinks or jumps at known locations.
pub fn integrate_split<F: Fn(&[f64]) -> f64>(
    f: &F,
    region: &Aabb,
    breaks: &[Vec<f64>],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let mut cells = vec![region.clone()];
    for (k, bs) in breaks.iter().enumerate() {
        let mut sorted: Vec<f64> = bs
            .iter()
            .copied()
            .filter(|&b| region.axes[k].lo < b && b < region.axes[k].hi)
            .collect();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut next = Vec::new();
        for c in cells {
            let mut lo = c.axes[k].lo;
            for &b in sorted.iter().chain(std::iter::once(&c.axes[k].hi)) {
                let mut piece = c.clone();
                piece.axes[k] = Interval::new(lo, b);
                next.push(piece);
                lo = b;
            }
        }
        cells = next;
    }
    let mut out = QuadResult::ZERO;
    let mut values = Vec::with_capacity(cells.len());
    for c in &cells {
        let r = integrate(f, c, cfg)?;
        values.push(r.value);
        out.error += r.error;
        out.panels += r.panels;
    }
    out.value = compensated_sum(values);
    Ok(out)
}

/// Integrates a closed-form expression over `region`, clipped to the expression's support.
pub fn integrate_expr(e: &ScalarExpr, region: &Aabb, cfg: &QuadConfig) -> Result<QuadResult> {
    if region.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: region.dim(),
        });
    }
    let clipped = match e.support() {
        Support::Empty => return Ok(QuadResult::ZERO),
        Support::Within(b) => match b.intersect(region) {
            Some(c) => c,
            None => return Ok(QuadResult::ZERO),
        },
    };
    integrate(&|y: &[f64]| e.eval(y), &clipped, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_index::MultiIndex;
    use proptest::prelude::*;

    #[test]
    fn parabola() {
        let e = ScalarExpr::polynomial(1, vec![(vec![0], 1.0), (vec![2], -1.0)]);
        let r = integrate_expr(&e, &Aabb::new(&[-1.0], &[1.0]), &QuadConfig::default()).unwrap();
        assert!((r.value - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn bump_integral_against_trapezoid_oracle() {
        // trapezoid on 10⁷ points converges spectrally for the flat bump
        let m = 10_000_000usize;
        let h = 2.0 / m as f64;
        let trap = compensated_sum((1..m).map(|i| crate::expr::bump::bump(-1.0 + i as f64 * h))) * h;
        let b = ScalarExpr::bump(ScalarExpr::coord(1, 0));
        let r = integrate_expr(&b, &Aabb::new(&[-1.0], &[1.0]), &QuadConfig::default()).unwrap();
        assert!((r.value - trap).abs() < 1e-12, "{} vs {}", r.value, trap);
        assert!((r.value - 0.443994).abs() < 5e-7);
    }

    #[test]
    fn disjoint_box_visits_no_panels() {
        let b = ScalarExpr::bump_at(&[0.0, 0.0], 1.0);
        let r = integrate_expr(&b, &Aabb::new(&[2.0, 2.0], &[3.0, 3.0]), &QuadConfig::default()).unwrap();
        assert_eq!(r, QuadResult::ZERO);
    }

    #[test]
    fn unbounded_box_is_rejected() {
        let f = |_: &[f64]| 1.0;
        assert_eq!(
            integrate(&f, &Aabb::entire(1), &QuadConfig::default()),
            Err(Error::UnboundedBox)
        );
    }

    #[test]
    fn singular_integrand_reports_non_convergence() {
        let f = |y: &[f64]| 1.0 / y[0];
        let cfg = QuadConfig {
            max_depth: 12,
            ..Default::default()
        };
        assert!(matches!(
            integrate(&f, &Aabb::new(&[0.0], &[1.0]), &cfg),
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }

    #[test]
    fn split_handles_kinks() {
        let f = |y: &[f64]| y[0].abs();
        let r = integrate_split(&f, &Aabb::new(&[-1.0], &[2.0]), &[vec![0.0]], &QuadConfig::default()).unwrap();
        assert!((r.value - 2.5).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_for_degree_up_to_23(
            a in 0u32..=23, b in 0u32..=23,
            lo0 in -2.0f64..0.0, lo1 in -2.0f64..0.0, w0 in 0.1f64..2.0, w1 in 0.1f64..2.0,
        ) {
            let mono = ScalarExpr::monomial(&MultiIndex::new(&[a, b]));
            let region = Aabb::new(&[lo0, lo1], &[lo0 + w0, lo1 + w1]);
            let single = panel_rule(&|y: &[f64]| mono.eval(y), &region);
            let prim = |k: u32, l: f64, h: f64| (h.powi(k as i32 + 1) - l.powi(k as i32 + 1)) / f64::from(k + 1);
            let exact = prim(a, lo0, lo0 + w0) * prim(b, lo1, lo1 + w1);
            prop_assert!((single - exact).abs() <= 1e-13 * exact.abs().max(1.0), "{single} vs {exact}");
        }
    }
}
