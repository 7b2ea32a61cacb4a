//! Corners as intersections of two fitted lines, with covariance propagated
//! from the two line covariances (the lines are treated as independent).
//!
//! Every representation reduces to a 2×2 system `M p = v`. Perturbing row `i`
//! gives `dp = M⁻¹ e_i (dv_i − dM_i·p)`, which is all the Jacobians below use.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, SMatrix, Vector2};

use crate::error::{Error, Result};
use crate::fit::{ImplicitLine, InversionPointLine, Method, PolarLine};

/// Lines whose directions differ by less than this sine are treated as parallel.
pub const PARALLEL_SIN_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CornerFeature {
    pub x: f64,
    pub y: f64,
    pub cov: Option<Matrix2<f64>>,
    pub method: Method,
    /// Indices of the two source lines in their feature map.
    pub sources: Option<[usize; 2]>,
}

impl CornerFeature {
    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn with_sources(mut self, i: usize, j: usize) -> Self {
        self.sources = Some([i, j]);
        self
    }

    /// Standard deviations along x and y.
    pub fn sigmas(&self) -> Option<(f64, f64)> {
        self.cov.map(|c| (c[(0, 0)].max(0.0).sqrt(), c[(1, 1)].max(0.0).sqrt()))
    }
}

/// `M⁻¹` columns, i.e. `(M⁻¹e_1, M⁻¹e_2)`, for `M = [[m11, m12], [m21, m22]]`.
fn inverse_columns(m11: f64, m12: f64, m21: f64, m22: f64, det: f64) -> (Vector2<f64>, Vector2<f64>) {
    (Vector2::new(m22 / det, -m21 / det), Vector2::new(-m12 / det, m11 / det))
}

fn propagate<const K: usize>(
    j1: &SMatrix<f64, 2, K>,
    c1: &SMatrix<f64, K, K>,
    j2: &SMatrix<f64, 2, K>,
    c2: &SMatrix<f64, K, K>,
) -> Matrix2<f64> {
    let cov = j1 * c1 * j1.transpose() + j2 * c2 * j2.transpose();
    0.5 * (cov + cov.transpose())
}

// --- inversion points -------------------------------------------------------

struct WclmSystem {
    p: Vector2<f64>,
    inv: (Vector2<f64>, Vector2<f64>),
}

fn wclm_system(l1: &InversionPointLine, l2: &InversionPointLine) -> Result<WclmSystem> {
    // rows (x_qi, −y_qi), right-hand side (1, 1)
    let det = l1.yq * l2.xq - l1.xq * l2.yq;
    if !(det.abs() > PARALLEL_SIN_TOL * l1.q().norm() * l2.q().norm()) {
        return Err(Error::ParallelLines);
    }
    let p = Vector2::new((l1.yq - l2.yq) / det, (l1.xq - l2.xq) / det);
    Ok(WclmSystem {
        p,
        inv: inverse_columns(l1.xq, -l1.yq, l2.xq, -l2.yq, det),
    })
}

/// `∂(x, y)/∂(x_q, y_q)` for each of the two lines.
pub fn corner_wclm_jacobian(l1: &InversionPointLine, l2: &InversionPointLine) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let s = wclm_system(l1, l2)?;
    let block = |col: Vector2<f64>| Matrix2::from_columns(&[-col * s.p.x, col * s.p.y]);
    Ok((block(s.inv.0), block(s.inv.1)))
}

/// Intersection of two inversion-point lines; the covariance is filled in
/// when both lines carry one.
pub fn corner_wclm(l1: &InversionPointLine, l2: &InversionPointLine) -> Result<CornerFeature> {
    let s = wclm_system(l1, l2)?;
    let cov = match (l1.cov, l2.cov) {
        (Some(c1), Some(c2)) => {
            let (j1, j2) = corner_wclm_jacobian(l1, l2)?;
            Some(propagate(&j1, &c1, &j2, &c2))
        }
        _ => None,
    };
    Ok(CornerFeature {
        x: s.p.x,
        y: s.p.y,
        cov,
        method: Method::Wclm,
        sources: None,
    })
}

pub fn corner_wclm_covariance(l1: &InversionPointLine, l2: &InversionPointLine) -> Result<Matrix2<f64>> {
    let (Some(c1), Some(c2)) = (l1.cov, l2.cov) else {
        return Err(Error::MissingCovariance);
    };
    let (j1, j2) = corner_wclm_jacobian(l1, l2)?;
    Ok(propagate(&j1, &c1, &j2, &c2))
}

// --- polar lines --------------------------------------------------------------

struct PolarSystem {
    p: Vector2<f64>,
    inv: (Vector2<f64>, Vector2<f64>),
}

fn polar_system(l1: &PolarLine, l2: &PolarLine) -> Result<PolarSystem> {
    // rows (cos α_i, sin α_i), right-hand side r_i
    let (s1, c1) = l1.alpha.sin_cos();
    let (s2, c2) = l2.alpha.sin_cos();
    let det = c1 * s2 - s1 * c2;
    if !(det.abs() > PARALLEL_SIN_TOL) {
        return Err(Error::ParallelLines);
    }
    let p = Vector2::new((l1.r * s2 - l2.r * s1) / det, (c1 * l2.r - c2 * l1.r) / det);
    Ok(PolarSystem {
        p,
        inv: inverse_columns(c1, s1, c2, s2, det),
    })
}

/// `∂(x, y)/∂(r, α)` for each of the two lines.
pub fn corner_arras_jacobian(l1: &PolarLine, l2: &PolarLine) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let s = polar_system(l1, l2)?;
    let block = |col: Vector2<f64>, alpha: f64| {
        let (sa, ca) = alpha.sin_cos();
        let along = -sa * s.p.x + ca * s.p.y;
        Matrix2::from_columns(&[col, -col * along])
    };
    Ok((block(s.inv.0, l1.alpha), block(s.inv.1, l2.alpha)))
}

pub fn corner_arras(l1: &PolarLine, l2: &PolarLine) -> Result<CornerFeature> {
    let s = polar_system(l1, l2)?;
    let cov = match (l1.cov, l2.cov) {
        (Some(c1), Some(c2)) => {
            let (j1, j2) = corner_arras_jacobian(l1, l2)?;
            Some(propagate(&j1, &c1, &j2, &c2))
        }
        _ => None,
    };
    Ok(CornerFeature {
        x: s.p.x,
        y: s.p.y,
        cov,
        method: Method::Arras,
        sources: None,
    })
}

pub fn corner_arras_covariance(l1: &PolarLine, l2: &PolarLine) -> Result<Matrix2<f64>> {
    let (Some(c1), Some(c2)) = (l1.cov, l2.cov) else {
        return Err(Error::MissingCovariance);
    };
    let (j1, j2) = corner_arras_jacobian(l1, l2)?;
    Ok(propagate(&j1, &c1, &j2, &c2))
}

// --- implicit lines -------------------------------------------------------------

fn implicit_system(l1: &ImplicitLine, l2: &ImplicitLine) -> Result<PolarSystem> {
    // rows (a_i, b_i), right-hand side −c_i
    let det = l1.a * l2.b - l1.b * l2.a;
    if !(det.abs() > PARALLEL_SIN_TOL * l1.normal().norm() * l2.normal().norm()) {
        return Err(Error::ParallelLines);
    }
    let p = Vector2::new((-l1.c * l2.b + l2.c * l1.b) / det, (-l2.c * l1.a + l1.c * l2.a) / det);
    Ok(PolarSystem {
        p,
        inv: inverse_columns(l1.a, l1.b, l2.a, l2.b, det),
    })
}

/// `∂(x, y)/∂(a, b, c)` for each of the two lines.
pub fn corner_siadat_jacobian(l1: &ImplicitLine, l2: &ImplicitLine) -> Result<(Matrix2x3<f64>, Matrix2x3<f64>)> {
    let s = implicit_system(l1, l2)?;
    let block = |col: Vector2<f64>| Matrix2x3::from_columns(&[-col * s.p.x, -col * s.p.y, -col]);
    Ok((block(s.inv.0), block(s.inv.1)))
}

pub fn corner_siadat(l1: &ImplicitLine, l2: &ImplicitLine) -> Result<CornerFeature> {
    let s = implicit_system(l1, l2)?;
    let cov = match (l1.cov, l2.cov) {
        (Some(c1), Some(c2)) => Some(siadat_propagate(l1, l2, &c1, &c2)?),
        _ => None,
    };
    Ok(CornerFeature {
        x: s.p.x,
        y: s.p.y,
        cov,
        method: Method::Siadat,
        sources: None,
    })
}

fn siadat_propagate(
    l1: &ImplicitLine,
    l2: &ImplicitLine,
    c1: &Matrix3<f64>,
    c2: &Matrix3<f64>,
) -> Result<Matrix2<f64>> {
    let (j1, j2) = corner_siadat_jacobian(l1, l2)?;
    Ok(propagate(&j1, c1, &j2, c2))
}

pub fn corner_siadat_covariance(l1: &ImplicitLine, l2: &ImplicitLine) -> Result<Matrix2<f64>> {
    let (Some(c1), Some(c2)) = (l1.cov, l2.cov) else {
        return Err(Error::MissingCovariance);
    };
    siadat_propagate(l1, l2, &c1, &c2)
}
