use super::domain::Domain;
use crate::error::{Error, Result};
use crate::expr::{ExprSpec, ScalarExpr};
use serde::{Deserialize, Serialize};
use crate::geometry::{Aabb, Interval};
use crate::test_function::TestFunction;
use nalgebra::DMatrix;

/// Diffeomorphism `μ: Ω → Ω′` with closed-form forward and inverse maps.
#[derive(Clone, Debug)]
pub struct Diffeomorphism {
    pub name: String,
    pub forward: Vec<ScalarExpr>,
    pub inverse: Vec<ScalarExpr>,
    /// `jacobian[i][j] = ∂μⁱ/∂x_j`.
    pub jacobian: Vec<Vec<ScalarExpr>>,
    pub det: ScalarExpr,
    /// `det D(μ⁻¹)`.
    pub inverse_det: ScalarExpr,
    /// Sign of `det Dμ` (constant on a connected source).
    pub orientation: f64,
    /// Upper bound for `‖Dμ‖₂`.
    pub lipschitz: f64,
    /// Upper bound for `‖Dμ⁻¹‖₂`.
    pub inverse_lipschitz: f64,
    pub source: Domain,
    pub target: Domain,
    /// Recipe for the named constructors, used for serialization.
    pub spec: Option<DiffeoSpec>,
}

/// JSON form of the named constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffeoSpec {
    Identity { dim: usize },
    Translation { shift: Vec<f64> },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    Shear { g: ExprSpec },
    PerturbedIdentity { g: ExprSpec, amplitude: f64 },
    Compose { first: Box<DiffeoSpec>, then: Box<DiffeoSpec> },
}

impl DiffeoSpec {
    pub fn build(&self) -> Result<Diffeomorphism> {
        match self {
            DiffeoSpec::Identity { dim } => {
                if !(1..=2).contains(dim) {
                    return Err(Error::UnsupportedDimension(*dim));
                }
                Ok(Diffeomorphism::identity(*dim))
            }
            DiffeoSpec::Translation { shift } => {
                if !(1..=2).contains(&shift.len()) {
                    return Err(Error::UnsupportedDimension(shift.len()));
                }
                Ok(Diffeomorphism::translation(shift))
            }
            DiffeoSpec::Affine { matrix, offset } => {
                let n = offset.len();
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch { expected: n, got: matrix.len() });
                }
                Diffeomorphism::affine(&matrix.concat(), offset)
            }
            DiffeoSpec::Shear { g } => Diffeomorphism::shear(g.build(1)?),
            DiffeoSpec::PerturbedIdentity { g, amplitude } => Diffeomorphism::perturbed_identity(g.build(1)?, *amplitude),
            DiffeoSpec::Compose { first, then } => first.build()?.then(&then.build()?),
        }
    }
}

/// Result of [`Diffeomorphism::check`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoCheck {
    pub max_roundtrip: f64,
    pub min_abs_det: f64,
}

pub const ROUNDTRIP_TOL: f64 = 1e-10;

fn jacobian_of(f: &[ScalarExpr]) -> Vec<Vec<ScalarExpr>> {
    let n = f.len();
    f.iter().map(|c| (0..n).map(|j| c.diff(j)).collect()).collect()
}

fn det_of(j: &[Vec<ScalarExpr>]) -> ScalarExpr {
    match j.len() {
        1 => j[0][0].clone(),
        2 => j[0][0].clone() * j[1][1].clone() - j[0][1].clone() * j[1][0].clone(),
        n => panic!("determinant of a {n}×{n} jacobian is not supported"),
    }
}

fn spectral_norm(m: &[f64], n: usize) -> f64 {
    DMatrix::from_row_slice(n, n, m).singular_values().max()
}

impl Diffeomorphism {
    /// Generic constructor; Lipschitz bounds are the caller's responsibility
    /// (see [`Diffeomorphism::estimate_lipschitz`]).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        forward: Vec<ScalarExpr>,
        inverse: Vec<ScalarExpr>,
        source: Domain,
        target: Domain,
        lipschitz: f64,
        inverse_lipschitz: f64,
    ) -> Result<Self> {
        let n = forward.len();
        if !(1..=2).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if inverse.len() != n || forward.iter().chain(&inverse).any(|e| e.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: inverse.len() });
        }
        if source.dim != n || target.dim != n {
            return Err(Error::DimensionMismatch { expected: n, got: source.dim });
        }
        let jacobian = jacobian_of(&forward);
        let det = det_of(&jacobian);
        let inverse_det = det_of(&jacobian_of(&inverse));
        let p = reference_point(&source);
        let d0 = det.eval(&p);
        if !(d0 != 0.0 && d0.is_finite()) {
            return Err(Error::InvalidDiffeomorphism(format!("det Dμ({p:?}) = {d0}")));
        }
        Ok(Diffeomorphism {
            name: name.into(),
            forward,
            inverse,
            jacobian,
            det,
            inverse_det,
            orientation: d0.signum(),
            lipschitz,
            inverse_lipschitz,
            source,
            target,
            spec: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.forward.len()
    }

    pub fn identity(n: usize) -> Self {
        let mut d = Self::affine(&identity_matrix(n), &vec![0.0; n]).expect("identity is invertible");
        d.name = "identity".into();
        d.spec = Some(DiffeoSpec::Identity { dim: n });
        d
    }

    /// `x ↦ x + a`.
    pub fn translation(a: &[f64]) -> Self {
        let mut d = Self::affine(&identity_matrix(a.len()), a).expect("translation is invertible");
        d.name = format!("translation{a:?}");
        d.spec = Some(DiffeoSpec::Translation { shift: a.to_vec() });
        d
    }

    /// `x ↦ A x + b` on `Rⁿ`.
    pub fn affine(a: &[f64], b: &[f64]) -> Result<Self> {
        let n = b.len();
        if a.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: a.len() });
        }
        let m = DMatrix::from_row_slice(n, n, a);
        let inv = m
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMap { det: m.determinant() })?;
        let inv_b = -(&inv * nalgebra::DVector::from_column_slice(b));
        let rows = |mat: &DMatrix<f64>, off: &[f64]| -> Vec<ScalarExpr> {
            (0..n)
                .map(|i| ScalarExpr::linear(&(0..n).map(|j| mat[(i, j)]).collect::<Vec<_>>(), off[i]))
                .collect()
        };
        let forward = rows(&m, b);
        let inverse = rows(&inv, inv_b.as_slice());
        let inv_flat: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| inv[(i, j)]).collect();
        let mut d = Self::new(
            format!("affine(A={a:?}, b={b:?})"),
            forward,
            inverse,
            Domain::entire(n),
            Domain::entire(n),
            spectral_norm(a, n),
            spectral_norm(&inv_flat, n),
        )?;
        d.spec = Some(DiffeoSpec::Affine {
            matrix: a.chunks(n).map(<[f64]>::to_vec).collect(),
            offset: b.to_vec(),
        });
        Ok(d)
    }

    /// `(x₁, x₂) ↦ (x₁, x₂ + g(x₁))` with a compactly supported `g`.
    pub fn shear(g: ScalarExpr) -> Result<Self> {
        if g.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: g.dim() });
        }
        let s = sup_abs_1d(&g.diff(0))?;
        let g2 = g.lift(2, 0);
        let x1 = ScalarExpr::coord(2, 0);
        let x2 = ScalarExpr::coord(2, 1);
        let norm = 0.5 * (s + (s * s + 4.0).sqrt());
        let spec = DiffeoSpec::Shear { g: ExprSpec::from_expr(&g) };
        Self::new(
            "shear",
            vec![x1.clone(), x2.clone() + g2.clone()],
            vec![x1, x2 - g2],
            Domain::entire(2),
            Domain::entire(2),
            norm,
            norm,
        )
        .map(|d| Diffeomorphism { spec: Some(spec), ..d })
    }

    /// `x ↦ x + a·g(x)` in one dimension, with `|a|·sup|g′| < 1` and `g` compactly supported.
    /// The inverse is the fixed-point iteration `x ← y − a g(x)` unrolled to machine precision.
    pub fn perturbed_identity(g: ScalarExpr, a: f64) -> Result<Self> {
        if g.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: g.dim() });
        }
        let kappa = a.abs() * sup_abs_1d(&g.diff(0))?;
        if kappa >= 0.9 {
            return Err(Error::InvalidDiffeomorphism(format!(
                "contraction constant |a|·sup|g′| = {kappa} too close to 1"
            )));
        }
        let amp = a.abs() * sup_abs_1d(&g)?;
        let depth = if kappa == 0.0 || amp == 0.0 {
            1
        } else {
            ((1e-18 / amp).ln() / kappa.ln()).ceil().clamp(1.0, 80.0) as usize
        };
        let spec = DiffeoSpec::PerturbedIdentity { g: ExprSpec::from_expr(&g), amplitude: a };
        let y = ScalarExpr::coord(1, 0);
        let ag = ScalarExpr::scale(a, g);
        let mut x = y.clone();
        for _ in 0..depth {
            x = y.clone() - ag.compose(vec![x]);
        }
        Self::new(
            format!("perturbed_identity(a={a})"),
            vec![y + ag],
            vec![x],
            Domain::entire(1),
            Domain::entire(1),
            1.0 + kappa,
            1.0 / (1.0 - kappa),
        )
        .map(|d| Diffeomorphism { spec: Some(spec), ..d })
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &Diffeomorphism) -> Result<Self> {
        if self.dim() != after.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: after.dim() });
        }
        let forward = after.forward.iter().map(|c| c.compose(self.forward.clone())).collect();
        let inverse = self.inverse.iter().map(|c| c.compose(after.inverse.clone())).collect();
        let spec = match (&self.spec, &after.spec) {
            (Some(a), Some(b)) => Some(DiffeoSpec::Compose {
                first: Box::new(a.clone()),
                then: Box::new(b.clone()),
            }),
            _ => None,
        };
        Self::new(
            format!("{}∘{}", after.name, self.name),
            forward,
            inverse,
            self.source.clone(),
            after.target.clone(),
            self.lipschitz * after.lipschitz,
            self.inverse_lipschitz * after.inverse_lipschitz,
        )
        .map(|d| Diffeomorphism { spec, ..d })
    }

    /// Replaces the Lipschitz bounds by sampled suprema over `region` (×1.05).
    pub fn estimate_lipschitz(mut self, region: &Aabb, per_axis: usize) -> Self {
        let n = self.dim();
        let jinv = jacobian_of(&self.inverse);
        let (mut l, mut li) = (0.0f64, 0.0f64);
        for p in region.grid(per_axis) {
            let m: Vec<f64> = self.jacobian.iter().flatten().map(|e| e.eval(&p)).collect();
            l = l.max(spectral_norm(&m, n));
            let m: Vec<f64> = jinv.iter().flatten().map(|e| e.eval(&p)).collect();
            li = li.max(spectral_norm(&m, n));
        }
        self.lipschitz = 1.05 * l;
        self.inverse_lipschitz = 1.05 * li;
        self
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.forward.iter().map(|c| c.eval(x)).collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        self.inverse.iter().map(|c| c.eval(y)).collect()
    }

    pub fn abs_det(&self) -> ScalarExpr {
        ScalarExpr::scale(self.orientation, self.det.clone())
    }

    pub fn abs_inverse_det(&self) -> ScalarExpr {
        ScalarExpr::scale(self.orientation, self.inverse_det.clone())
    }

    /// Round trip `μ⁻¹(μ(x)) = x` and `det Dμ ≠ 0` (with constant sign) on `grid`.
    pub fn check(&self, grid: &[Vec<f64>]) -> Result<DiffeoCheck> {
        let mut out = DiffeoCheck { max_roundtrip: 0.0, min_abs_det: f64::INFINITY };
        for p in grid {
            let back = self.apply_inverse(&self.apply(p));
            let err = back.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            out.max_roundtrip = out.max_roundtrip.max(err);
            let d = self.det.eval(p);
            if d * self.orientation <= 0.0 {
                return Err(Error::InvalidDiffeomorphism(format!("det Dμ({p:?}) = {d}")));
            }
            out.min_abs_det = out.min_abs_det.min(d.abs());
        }
        if !(out.max_roundtrip <= ROUNDTRIP_TOL) {
            return Err(Error::InvalidDiffeomorphism(format!(
                "round-trip error {:e} exceeds {ROUNDTRIP_TOL:e}",
                out.max_roundtrip
            )));
        }
        Ok(out)
    }

    /// Box containing `μ(b)`.
    pub fn image_box(&self, b: &Aabb) -> Aabb {
        enclose(&self.forward, b, self.lipschitz)
    }

    /// Box containing `μ⁻¹(b)`.
    pub fn preimage_box(&self, b: &Aabb) -> Aabb {
        enclose(&self.inverse, b, self.inverse_lipschitz)
    }

    /// `μ*ρ = ρ∘μ·|det Dμ|`.
    pub fn pull_back(&self, rho: &TestFunction) -> Result<TestFunction> {
        self.same_dim(rho)?;
        let expr = rho.expr().compose(self.forward.clone()) * self.abs_det();
        TestFunction::with_support(expr, self.preimage_box(rho.support()))
    }

    /// `μ_*φ = (μ⁻¹)*φ = φ∘μ⁻¹·|det Dμ⁻¹|`.
    pub fn push_forward(&self, phi: &TestFunction) -> Result<TestFunction> {
        self.same_dim(phi)?;
        let img = self.image_box(phi.support());
        if !self.target.compactly_contains(&img) {
            return Err(Error::SupportEscapesDomain(format!(
                "μ(supp φ) ⊆ {img} leaves the target of {}",
                self.name
            )));
        }
        let expr = phi.expr().compose(self.inverse.clone()) * self.abs_inverse_det();
        TestFunction::with_support(expr, img)
    }

    fn same_dim(&self, f: &TestFunction) -> Result<()> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.dim() });
        }
        Ok(())
    }
}

fn identity_matrix(n: usize) -> Vec<f64> {
    (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

fn reference_point(d: &Domain) -> Vec<f64> {
    d.exhaustion
        .first()
        .or(d.region.first())
        .map(|b| b.center().into_iter().map(|v| if v.is_finite() { v } else { 0.0 }).collect())
        .unwrap_or_default()
}

/// Image of `b` under `f` by sampling plus a Lipschitz pad covering the gaps between samples.
fn enclose(f: &[ScalarExpr], b: &Aabb, lip: f64) -> Aabb {
    let n = b.dim();
    let per_axis = if n == 1 { 65 } else { 17 };
    let h: f64 = b
        .axes
        .iter()
        .map(|i| (i.width() / (per_axis - 1) as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut out: Option<Aabb> = None;
    for p in b.grid(per_axis) {
        let img = Aabb::from_intervals(f.iter().map(|c| Interval::point(c.eval(&p))).collect());
        out = Some(match out {
            None => img,
            Some(o) => o.hull(&img),
        });
    }
    out.expect("non-empty grid").expand(0.5 * lip * h * 1.01 + 1e-14)
}

/// Sampled `sup |g|` over the support of a 1-d expression, with a 1% margin.
fn sup_abs_1d(g: &ScalarExpr) -> Result<f64> {
    let b = g
        .support()
        .as_box()
        .cloned()
        .unwrap_or_else(|| Aabb::new(&[0.0], &[0.0]));
    if b.is_bounded() {
        let i = b.axes[0];
        let m = 20_000;
        let vals = (0..=m).map(|k| g.eval(&[i.lo + i.width() * k as f64 / m as f64]).abs());
        Ok(1.01 * vals.fold(0.0, f64::max))
    } else if let Some(c) = g.as_const() {
        Ok(c.abs())
    } else {
        Err(Error::InvalidDiffeomorphism(
            "perturbation must be compactly supported".into(),
        ))
    }
}
