//! Line fitting in the inverted plane.
//!
//! A line not through the origin is represented by the inversion point
//! `Q = (x_q, y_q)`, the image of the foot of the perpendicular from the
//! origin under `w = 1/z`. Every point `(x, y)` of the line satisfies the
//! linear constraint `x_q·x − y_q·y = 1`, so `Q` is the weighted linear
//! least-squares solution of that constraint over the samples.

use nalgebra::{Matrix2, Vector2};

use super::{dxy_drho, dxy_dtheta, FitInput};
use crate::error::{Error, Result};
use crate::scan::normalize_angle;
use crate::segment::SegmentSpan;

/// Relative determinant below which the normal matrix counts as singular.
pub const DEGENERACY_REL_DET: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionPointLine {
    pub xq: f64,
    pub yq: f64,
    pub cov: Option<Matrix2<f64>>,
    pub support: Option<SegmentSpan>,
}

impl InversionPointLine {
    pub fn q(&self) -> Vector2<f64> {
        Vector2::new(self.xq, self.yq)
    }

    /// Constraint residual `x_q·x − y_q·y − 1` of a point.
    pub fn residual(&self, x: f64, y: f64) -> f64 {
        self.xq * x - self.yq * y - 1.0
    }
}

/// Weighted sums of the normal equations
/// `[[Σωx², −Σωxy], [−Σωxy, Σωy²]]·Q = [Σωx, −Σωy]`.
struct NormalSystem {
    sxx: f64,
    sxy: f64,
    syy: f64,
    sx: f64,
    sy: f64,
    det: f64,
}

impl NormalSystem {
    fn accumulate(input: &FitInput) -> Result<Self> {
        let (mut sxx, mut sxy, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in input.samples() {
            let wx = s.weight * s.x;
            let wy = s.weight * s.y;
            sxx += wx * s.x;
            sxy += wx * s.y;
            syy += wy * s.y;
            sx += wx;
            sy += wy;
        }
        let det = sxx * syy - sxy * sxy;
        let scale = (sxx + syy) * (sxx + syy);
        if !(det > DEGENERACY_REL_DET * scale) {
            return Err(Error::DegenerateGeometry(
                "singular normal matrix: points on a line through the origin or coincident".into(),
            ));
        }
        Ok(Self {
            sxx,
            sxy,
            syy,
            sx,
            sy,
            det,
        })
    }

    fn solve(&self) -> (f64, f64) {
        (
            (self.syy * self.sx - self.sxy * self.sy) / self.det,
            (self.sxy * self.sx - self.sxx * self.sy) / self.det,
        )
    }

    /// `A⁻¹ v`.
    fn apply_inverse(&self, v: (f64, f64)) -> Vector2<f64> {
        Vector2::new(
            (self.syy * v.0 + self.sxy * v.1) / self.det,
            (self.sxy * v.0 + self.sxx * v.1) / self.det,
        )
    }
}

/// Fits `Q` minimizing `Σ ω_i (x_q x_i − y_q y_i − 1)²`. Covariance is left unset.
pub fn fit_line_wclm(input: &FitInput) -> Result<InversionPointLine> {
    let sys = NormalSystem::accumulate(input)?;
    let (xq, yq) = sys.solve();
    if !(xq.is_finite() && yq.is_finite()) || (xq == 0.0 && yq == 0.0) {
        return Err(Error::DegenerateGeometry(
            "fitted inversion point is at the origin".into(),
        ));
    }
    Ok(InversionPointLine {
        xq,
        yq,
        cov: None,
        support: input.support(),
    })
}

/// Calls `f(i, ∂Q/∂ρ_i, ∂Q/∂θ_i)` for every sample.
///
/// Differentiating the normal equations `Σ ω h (hᵀQ − 1) = 0` with
/// `h = (x, −y)` gives
/// `A dQ = −Σ [dω·e·h + ω·(e·dh + h·(dhᵀQ))]`, `e = hᵀQ − 1`.
pub(crate) fn visit_partials(
    line: &InversionPointLine,
    input: &FitInput,
    mut f: impl FnMut(usize, Vector2<f64>, Vector2<f64>),
) -> Result<()> {
    let sys = NormalSystem::accumulate(input)?;
    let (xq, yq) = (line.xq, line.yq);
    for (i, s) in input.samples().iter().enumerate() {
        let (hx, hy) = (s.x, -s.y);
        let e = xq * hx + yq * hy - 1.0;
        let w = s.weight;

        let (dx, dy) = dxy_drho(s);
        let (dhx, dhy) = (dx, -dy);
        let proj = dhx * xq + dhy * yq;
        let k = s.dweight_drho * e;
        let v_rho = (k * hx + w * (e * dhx + hx * proj), k * hy + w * (e * dhy + hy * proj));

        let (dx, dy) = dxy_dtheta(s);
        let (dhx, dhy) = (dx, -dy);
        let proj = dhx * xq + dhy * yq;
        let v_theta = (w * (e * dhx + hx * proj), w * (e * dhy + hy * proj));

        f(i, -sys.apply_inverse(v_rho), -sys.apply_inverse(v_theta));
    }
    Ok(())
}

/// Per-sample partials `(∂Q/∂ρ_i, ∂Q/∂θ_i)`.
pub fn wclm_line_jacobian(line: &InversionPointLine, input: &FitInput) -> Result<Vec<(Vector2<f64>, Vector2<f64>)>> {
    let mut out = Vec::with_capacity(input.len());
    visit_partials(line, input, |_, dr, dt| out.push((dr, dt)))?;
    Ok(out)
}

/// Covariance of `(x_q, y_q)` propagated from the sensor noise.
pub fn wclm_line_covariance(line: &InversionPointLine, input: &FitInput) -> Result<Matrix2<f64>> {
    let (vr, vt) = (input.noise().var_rho(), input.noise().var_theta());
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    visit_partials(line, input, |_, gr, gt| {
        a += vr * gr.x * gr.x + vt * gt.x * gt.x;
        b += vr * gr.x * gr.y + vt * gt.x * gt.y;
        c += vr * gr.y * gr.y + vt * gt.y * gt.y;
    })?;
    Ok(Matrix2::new(a, b, b, c))
}

/// `(r, α)`: distance to the origin and normal bearing of the line.
pub fn inversion_line_to_polar(line: &InversionPointLine) -> (f64, f64) {
    let r = 1.0 / line.xq.hypot(line.yq);
    (r, normalize_angle((-line.yq).atan2(line.xq)))
}

/// Inverse of [`inversion_line_to_polar`]: `Q = conj(P)/|P|²` with `P = r·(cos α, sin α)`.
pub fn polar_to_inversion_line(r: f64, alpha: f64) -> InversionPointLine {
    let (s, c) = alpha.sin_cos();
    InversionPointLine {
        xq: c / r,
        yq: -s / r,
        cov: None,
        support: None,
    }
}
