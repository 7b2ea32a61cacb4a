//! Weighted total least squares for the implicit line `a·x + b·y + c = 0`.
//!
//! The normal `(a, b)` is the unit eigenvector of the smallest eigenvalue of
//! the weighted centered scatter matrix and the line passes through the
//! weighted centroid. Signs are fixed so that `c ≤ 0`, i.e. `(a, b)` points
//! from the sensor towards the line.

use nalgebra::{Matrix3, Vector2, Vector3};

use super::{dxy_drho, dxy_dtheta, FitInput};
use crate::error::{Error, Result};
use crate::scan::normalize_angle;
use crate::segment::SegmentSpan;

const COINCIDENT_REL: f64 = 1e-12;
const AMBIGUOUS_REL: f64 = 1e-12;
/// Eigenvalue gap (relative to the trace) below which the propagated
/// covariance is flagged as unreliable.
pub const UNRELIABLE_GAP_REL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImplicitLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub cov: Option<Matrix3<f64>>,
    pub support: Option<SegmentSpan>,
}

impl ImplicitLine {
    pub fn normal(&self) -> Vector2<f64> {
        Vector2::new(self.a, self.b)
    }

    /// `(r, α)` with `r = −c`.
    pub fn to_polar(&self) -> (f64, f64) {
        (-self.c, normalize_angle(self.b.atan2(self.a)))
    }

    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiadatCovariance {
    pub cov: Matrix3<f64>,
    /// False when the scatter eigenvalues are nearly equal, where first-order
    /// propagation through the eigenvector breaks down.
    pub reliable: bool,
}

struct Scatter {
    w: f64,
    m: Vector2<f64>,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl Scatter {
    fn of(input: &FitInput) -> Self {
        let samples = input.samples();
        let w = input.total_weight();
        let (mut mx, mut my) = (0.0, 0.0);
        for s in samples {
            mx += s.weight * s.x;
            my += s.weight * s.y;
        }
        let m = Vector2::new(mx / w, my / w);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for s in samples {
            let (dx, dy) = (s.x - m.x, s.y - m.y);
            sxx += s.weight * dx * dx;
            sxy += s.weight * dx * dy;
            syy += s.weight * dy * dy;
        }
        Self { w, m, sxx, sxy, syy }
    }

    fn trace(&self) -> f64 {
        self.sxx + self.syy
    }

    /// `(λ_min, λ_max − λ_min)`.
    fn eigen(&self) -> (f64, f64) {
        let half = 0.5 * (self.sxx - self.syy);
        let rad = half.hypot(self.sxy);
        (0.5 * self.trace() - rad, 2.0 * rad)
    }

    fn min_eigenvector(&self, lambda: f64) -> Vector2<f64> {
        let u = Vector2::new(self.sxy, lambda - self.sxx);
        let v = Vector2::new(lambda - self.syy, self.sxy);
        let e = if u.norm_squared() >= v.norm_squared() { u } else { v };
        e.normalize()
    }

    fn check(&self) -> Result<()> {
        let spread = self.m.norm_squared() * self.w + self.trace();
        if !(self.trace() > COINCIDENT_REL * spread) {
            return Err(Error::DegenerateGeometry("all points coincide".into()));
        }
        Ok(())
    }
}

pub fn fit_line_siadat(input: &FitInput) -> Result<ImplicitLine> {
    let sc = Scatter::of(input);
    sc.check()?;
    let (lambda, gap) = sc.eigen();
    if !(gap > AMBIGUOUS_REL * sc.trace()) {
        return Err(Error::AmbiguousDirection);
    }
    let mut n = sc.min_eigenvector(lambda);
    let mut c = -n.dot(&sc.m);
    let flip = if c != 0.0 {
        c > 0.0
    } else if n.x != 0.0 {
        n.x < 0.0
    } else {
        n.y < 0.0
    };
    if flip {
        n = -n;
        c = -c;
    }
    Ok(ImplicitLine {
        a: n.x,
        b: n.y,
        c: c + 0.0,
        cov: None,
        support: input.support(),
    })
}

/// Calls `f(k, ∂(a, b, c)/∂ρ_k, ∂(a, b, c)/∂θ_k)`; returns the eigenvalue gap
/// and the trace of the scatter matrix.
///
/// For the eigenvector `n` of `λ_min` and the unit tangent `t`,
/// `dn = −(tᵀ dS n / Δλ)·t`, where only the centered form
/// `dS = dω q qᵀ + ω (dp qᵀ + q dpᵀ)`, `q = p_k − m` survives.
fn visit_partials(
    line: &ImplicitLine,
    input: &FitInput,
    mut f: impl FnMut(usize, Vector3<f64>, Vector3<f64>),
) -> Result<(f64, f64)> {
    let sc = Scatter::of(input);
    sc.check()?;
    let (_, gap) = sc.eigen();
    if !(gap > 0.0) {
        return Err(Error::AmbiguousDirection);
    }
    let n = line.normal();
    let t = Vector2::new(-n.y, n.x);
    let m = sc.m;
    for (k, s) in input.samples().iter().enumerate() {
        let q = Vector2::new(s.x - m.x, s.y - m.y);
        let (tq, nq) = (t.dot(&q), n.dot(&q));
        let w = s.weight;
        let partial = |dp: Vector2<f64>, dw: f64| {
            let tdsn = dw * tq * nq + w * (t.dot(&dp) * nq + tq * dp.dot(&n));
            let dn = -(tdsn / gap) * t;
            let dm = (dw * q + w * dp) / sc.w;
            let dc = -(dn.dot(&m) + n.dot(&dm));
            Vector3::new(dn.x, dn.y, dc)
        };
        let (dx, dy) = dxy_drho(s);
        let g_rho = partial(Vector2::new(dx, dy), s.dweight_drho);
        let (dx, dy) = dxy_dtheta(s);
        let g_theta = partial(Vector2::new(dx, dy), 0.0);
        f(k, g_rho, g_theta);
    }
    Ok((gap, sc.trace()))
}

/// Per-sample partials of `(a, b, c)`.
pub fn siadat_line_jacobian(line: &ImplicitLine, input: &FitInput) -> Result<Vec<(Vector3<f64>, Vector3<f64>)>> {
    let mut out = Vec::with_capacity(input.len());
    visit_partials(line, input, |_, dr, dt| out.push((dr, dt)))?;
    Ok(out)
}

/// Covariance of `(a, b, c)`; singular by construction since `a² + b² = 1`.
pub fn siadat_line_covariance(line: &ImplicitLine, input: &FitInput) -> Result<SiadatCovariance> {
    let (vr, vt) = (input.noise().var_rho(), input.noise().var_theta());
    let mut cov = Matrix3::zeros();
    let (gap, trace) = visit_partials(line, input, |_, gr, gt| {
        cov += vr * gr * gr.transpose() + vt * gt * gt.transpose();
    })?;
    Ok(SiadatCovariance {
        cov,
        reliable: gap > UNRELIABLE_GAP_REL * trace,
    })
}
