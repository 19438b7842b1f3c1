//! The non-analytic primitive `b(t) = exp(−1/(1−t²))` on `|t| < 1`, its derivatives, and the
//! normalised smooth step `H(t) = ∫_{−1}^{t} b / ∫_{−1}^{1} b`.

use gauss_quad::GaussLegendre;
use std::sync::OnceLock;

const CACHED_ORDERS: usize = 24;
const STEP_CELLS: usize = 1024;

/// Coefficients (ascending powers of `t`) of `P_k` with `b^{(k)}(t) = P_k(t) (1−t²)^{−2k} b(t)`.
fn derivative_polys() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys = vec![vec![1.0]];
        for k in 0..CACHED_ORDERS - 1 {
            let next = next_poly(&polys[k], k as u32);
            polys.push(next);
        }
        polys
    })
}

// P_{k+1} = P_k' (1−t²)² + 4k t P_k (1−t²) − 2t P_k
fn next_poly(p: &[f64], k: u32) -> Vec<f64> {
    let deg = p.len() - 1;
    let mut out = vec![0.0; deg + 4];
    let one_minus_t2_sq = [1.0, 0.0, -2.0, 0.0, 1.0];
    for i in 1..=deg {
        let c = p[i] * i as f64;
        for (j, &w) in one_minus_t2_sq.iter().enumerate() {
            out[i - 1 + j] += c * w;
        }
    }
    let kk = 4.0 * f64::from(k);
    for (i, &c) in p.iter().enumerate() {
        out[i + 1] += kk * c;
        out[i + 3] -= kk * c;
        out[i + 1] -= 2.0 * c;
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

pub(crate) fn bump_poly(k: u32) -> std::borrow::Cow<'static, [f64]> {
    let polys = derivative_polys();
    if (k as usize) < polys.len() {
        std::borrow::Cow::Borrowed(&polys[k as usize])
    } else {
        let mut p = polys.last().unwrap().clone();
        for j in (polys.len() - 1)..k as usize {
            p = next_poly(&p, j as u32);
        }
        std::borrow::Cow::Owned(p)
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

/// `b^{(k)}(t)`; exactly zero for `|t| ≥ 1`.
pub fn bump_derivative(k: u32, t: f64) -> f64 {
    if !(t.abs() < 1.0) {
        return 0.0;
    }
    let s = (1.0 - t) * (1.0 + t);
    let exponent = -1.0 / s - 2.0 * f64::from(k) * s.ln();
    if exponent < -745.0 {
        return 0.0;
    }
    horner(&bump_poly(k), t) * exponent.exp()
}

pub fn bump(t: f64) -> f64 {
    bump_derivative(0, t)
}

pub(crate) fn gl_rule(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(n.try_into().expect("positive degree"))
        .as_node_weight_pairs()
        .to_vec()
}

struct StepTable {
    /// cumulative ∫_{−1}^{t_i} b at the cell boundaries
    cumulative: Vec<f64>,
    total: f64,
    rule: Vec<(f64, f64)>,
}

fn step_table() -> &'static StepTable {
    static TABLE: OnceLock<StepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let fine = gl_rule(20);
        let h = 2.0 / STEP_CELLS as f64;
        let mut cumulative = Vec::with_capacity(STEP_CELLS + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        cumulative.push(0.0);
        for i in 0..STEP_CELLS {
            let a = -1.0 + h * i as f64;
            let cell: f64 = fine
                .iter()
                .map(|&(x, w)| 0.5 * h * w * bump(a + 0.5 * h * (x + 1.0)))
                .sum();
            // Neumaier summation
            let t = sum + cell;
            if sum.abs() >= cell.abs() {
                comp += (sum - t) + cell;
            } else {
                comp += (cell - t) + sum;
            }
            sum = t;
            cumulative.push(sum + comp);
        }
        StepTable {
            total: sum + comp,
            cumulative,
            rule: gl_rule(10),
        }
    })
}

/// `∫_{−1}^{1} b(t) dt`.
pub fn bump_integral() -> f64 {
    step_table().total
}

fn partial_integral(t: f64) -> f64 {
    let tab = step_table();
    let h = 2.0 / STEP_CELLS as f64;
    let idx = (((t + 1.0) / h).floor() as usize).min(STEP_CELLS - 1);
    let a = -1.0 + h * idx as f64;
    let len = t - a;
    let tail: f64 = tab
        .rule
        .iter()
        .map(|&(x, w)| 0.5 * len * w * bump(a + 0.5 * len * (x + 1.0)))
        .sum();
    tab.cumulative[idx] + tail
}

/// Smooth step: 0 for `t ≤ −1`, 1 for `t ≥ 1`, `H(t) + H(−t) = 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else if t <= 0.0 {
        partial_integral(t) / step_table().total
    } else {
        1.0 - partial_integral(-t) / step_table().total
    }
}
