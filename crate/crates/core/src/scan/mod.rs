//! Polar scan types, the sensor noise model and the per-point primitives
//! shared by every fitter: Cartesian conversion with covariance, complex
//! inversion and the frame-independent point weight.

pub(crate) mod io;

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::error::{Error, Result};

pub use io::{load_scan, parse_scan, save_scan, write_scan};

/// Wraps an angle into `[-π, π)`. Exactly `+π` maps to `-π`.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to 2π for tiny negative inputs
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// One range/bearing sample in the sensor frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarPoint {
    rho: f64,
    theta: f64,
}

impl PolarPoint {
    /// Validates the range and normalizes the bearing into `[-π, π)`.
    pub fn new(rho: f64, theta: f64) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::Validation(format!(
                "range must be finite and positive, got {rho}"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::Validation(format!("bearing must be finite, got {theta}")));
        }
        Ok(Self {
            rho,
            theta: normalize_angle(theta),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn to_cartesian(&self) -> (f64, f64) {
        polar_to_cartesian(*self)
    }
}

/// Independent Gaussian range and bearing noise.
///
/// Zero deviations are accepted so that noise-free scans can be synthesized,
/// in which case propagated covariances vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    sigma_rho: f64,
    sigma_theta: f64,
}

impl NoiseModel {
    /// RPLIDAR S1: 5 cm range accuracy, half of the 0.391° angular resolution.
    pub const RPLIDAR_S1: NoiseModel = NoiseModel {
        sigma_rho: 0.05,
        sigma_theta: 0.1955 * PI / 180.0,
    };

    pub const NOISELESS: NoiseModel = NoiseModel {
        sigma_rho: 0.0,
        sigma_theta: 0.0,
    };

    pub fn new(sigma_rho: f64, sigma_theta: f64) -> Result<Self> {
        for (name, v) in [("sigma_rho", sigma_rho), ("sigma_theta", sigma_theta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self { sigma_rho, sigma_theta })
    }

    pub fn sigma_rho(&self) -> f64 {
        self.sigma_rho
    }

    pub fn sigma_theta(&self) -> f64 {
        self.sigma_theta
    }

    pub fn var_rho(&self) -> f64 {
        self.sigma_rho * self.sigma_rho
    }

    pub fn var_theta(&self) -> f64 {
        self.sigma_theta * self.sigma_theta
    }

    /// Both deviations strictly positive.
    pub fn is_positive(&self) -> bool {
        self.sigma_rho > 0.0 && self.sigma_theta > 0.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::RPLIDAR_S1
    }
}

/// A Cartesian point with its propagated 2×2 covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartesianPointWithCov {
    pub x: f64,
    pub y: f64,
    pub cov: Matrix2<f64>,
}

impl CartesianPointWithCov {
    pub fn from_polar(p: PolarPoint, noise: &NoiseModel) -> Self {
        let (x, y) = polar_to_cartesian(p);
        Self {
            x,
            y,
            cov: point_covariance(p, noise),
        }
    }

    /// Squared correlation coefficient of the x and y errors.
    pub fn correlation_sq(&self) -> f64 {
        let (vx, vy, cxy) = (self.cov[(0, 0)], self.cov[(1, 1)], self.cov[(0, 1)]);
        if vx <= 0.0 || vy <= 0.0 {
            0.0
        } else {
            cxy * cxy / (vx * vy)
        }
    }
}

pub fn polar_to_cartesian(p: PolarPoint) -> (f64, f64) {
    let (s, c) = p.theta.sin_cos();
    (p.rho * c, p.rho * s)
}

/// Complex inversion `w = 1/z`.
///
/// The convention negates the phase: `z = |z|e^{iθ}` maps to
/// `w = e^{-iθ}/|z|`, i.e. `(x, y) -> (x, -y) / (x² + y²)`. Under this map a
/// line not through the origin becomes a circle through the origin, and the
/// line's points satisfy `x_q·x − y_q·y = 1` where `(x_q, y_q)` is the image
/// of the line's foot of perpendicular.
pub fn invert_point(x: f64, y: f64) -> Result<(f64, f64)> {
    let m2 = x * x + y * y;
    if m2 == 0.0 || !m2.is_finite() {
        return Err(Error::OriginInversion);
    }
    Ok((x / m2, -y / m2))
}

/// First-order covariance of the Cartesian point, `J diag(σρ², σθ²) Jᵀ`.
pub fn point_covariance(p: PolarPoint, noise: &NoiseModel) -> Matrix2<f64> {
    let (s, c) = p.theta.sin_cos();
    let vr = noise.var_rho();
    let vt = p.rho * p.rho * noise.var_theta();
    let vx = vr * c * c + vt * s * s;
    let vy = vr * s * s + vt * c * c;
    let cxy = (vr - vt) * s * c;
    Matrix2::new(vx, cxy, cxy, vy)
}

/// Point weight `1 / (σρ² ρ² σθ²)`, the inverse determinant of
/// [`point_covariance`]. Depends on the range only, so it is the same in any
/// rotated frame. Units m⁻⁴.
pub fn point_weight(p: PolarPoint, noise: &NoiseModel) -> f64 {
    1.0 / (noise.var_rho() * p.rho * p.rho * noise.var_theta())
}

/// An ordered sweep of polar samples with the noise model that describes them.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarScan {
    points: Vec<PolarPoint>,
    noise: NoiseModel,
    metadata: Vec<String>,
}

impl PolarScan {
    /// Bearings must be strictly increasing.
    pub fn new(points: Vec<PolarPoint>, noise: NoiseModel, metadata: Vec<String>) -> Result<Self> {
        for (i, w) in points.windows(2).enumerate() {
            if w[1].theta <= w[0].theta {
                return Err(Error::Validation(format!(
                    "point {}: bearing {} does not increase past {}",
                    i + 1,
                    w[1].theta,
                    w[0].theta
                )));
            }
        }
        Ok(Self {
            points,
            noise,
            metadata,
        })
    }

    pub fn points(&self) -> &[PolarPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn metadata(&self) -> &[String] {
        &self.metadata
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn cartesian(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| p.to_cartesian()).collect()
    }

    /// Content digest over the exact bit patterns of every sample, used to
    /// tie derived files back to the scan they came from.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for p in &self.points {
            h.update(p.theta.to_bits().to_le_bytes());
            h.update(p.rho.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
