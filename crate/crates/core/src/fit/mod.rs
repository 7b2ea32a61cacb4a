//! Line fitters and their first-order covariance propagation.
//!
//! All three estimators are functions of the raw `(ρ_i, θ_i)` samples,
//! including the range-dependent weights, and every Jacobian here is the
//! exact derivative of that function. Line covariances are
//! `σρ² Σ gρ gρᵀ + σθ² Σ gθ gθᵀ` over the per-sample partial vectors.

pub mod arras;
pub mod siadat;
pub mod wclm;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scan::{point_weight, NoiseModel, PolarPoint, PolarScan};
use crate::segment::SegmentSpan;

pub use arras::{
    arras_line_covariance, arras_line_covariance_with, arras_line_jacobian, fit_line_arras, fit_line_arras_with,
    ArrasSums, PolarLine,
};
pub use siadat::{fit_line_siadat, siadat_line_covariance, siadat_line_jacobian, ImplicitLine, SiadatCovariance};
pub use wclm::{
    fit_line_wclm, inversion_line_to_polar, polar_to_inversion_line, wclm_line_covariance, wclm_line_jacobian,
    InversionPointLine,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Wclm,
    Arras,
    Siadat,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Wclm, Method::Arras, Method::Siadat];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Wclm => "wclm",
            Method::Arras => "arras",
            Method::Siadat => "siadat",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wclm" => Ok(Method::Wclm),
            "arras" => Ok(Method::Arras),
            "siadat" => Ok(Method::Siadat),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// How per-sample weights are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    /// `1 / (σρ² ρ² σθ²)`, the inverse determinant of the point covariance.
    #[default]
    Sensor,
    /// All weights one.
    Unit,
}

/// One sample with everything the fitters need precomputed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub rho: f64,
    pub theta: f64,
    pub cos: f64,
    pub sin: f64,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
    /// `∂weight/∂ρ`; weights do not depend on the bearing.
    pub dweight_drho: f64,
}

/// The weighted point set handed to a fitter.
#[derive(Clone, Debug, PartialEq)]
pub struct FitInput {
    samples: Vec<Sample>,
    noise: NoiseModel,
    weighting: Weighting,
    support: Option<SegmentSpan>,
}

impl FitInput {
    pub fn new(points: &[PolarPoint], noise: NoiseModel, weighting: Weighting) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation(format!(
                "a line fit needs at least 2 points, got {}",
                points.len()
            )));
        }
        let samples = points
            .iter()
            .map(|&p| {
                let (sin, cos) = p.theta().sin_cos();
                let (weight, dweight_drho) = match weighting {
                    Weighting::Sensor => {
                        // only relative weights matter, so a noiseless model falls back to 1/ρ²
                        let w = if noise.is_positive() {
                            point_weight(p, &noise)
                        } else {
                            1.0 / (p.rho() * p.rho())
                        };
                        (w, -2.0 * w / p.rho())
                    }
                    Weighting::Unit => (1.0, 0.0),
                };
                Sample {
                    rho: p.rho(),
                    theta: p.theta(),
                    cos,
                    sin,
                    x: p.rho() * cos,
                    y: p.rho() * sin,
                    weight,
                    dweight_drho,
                }
            })
            .collect();
        Ok(Self {
            samples,
            noise,
            weighting,
            support: None,
        })
    }

    /// The points of `span` in sweep order.
    pub fn from_span(scan: &PolarScan, span: SegmentSpan, noise: NoiseModel, weighting: Weighting) -> Result<Self> {
        let n = scan.len();
        if span.start_index >= n || span.end_index >= n {
            return Err(Error::Validation(format!("span {span:?} exceeds scan of {n} points")));
        }
        let pts: Vec<_> = span.indices(n).map(|i| scan.points()[i]).collect();
        let mut input = Self::new(&pts, noise, weighting)?;
        input.support = Some(span);
        Ok(input)
    }

    pub fn with_support(mut self, span: SegmentSpan) -> Self {
        self.support = Some(span);
        self
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn support(&self) -> Option<SegmentSpan> {
        self.support
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }
}

/// Derivatives of the Cartesian coordinates of one sample.
#[inline]
pub(crate) fn dxy_drho(s: &Sample) -> (f64, f64) {
    (s.cos, s.sin)
}

#[inline]
pub(crate) fn dxy_dtheta(s: &Sample) -> (f64, f64) {
    (-s.y, s.x)
}
