//! Helpers shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::scan::{NoiseModel, PolarPoint};

/// `n` points evenly spaced along the line `(r, α)` for tangent offsets `t0..=t1`.
pub fn line_points(r: f64, alpha: f64, t0: f64, t1: f64, n: usize) -> Vec<(f64, f64)> {
    let (s, c) = alpha.sin_cos();
    (0..n)
        .map(|i| {
            let t = if n == 1 {
                t0
            } else {
                t0 + (t1 - t0) * i as f64 / (n - 1) as f64
            };
            (r * c - t * s, r * s + t * c)
        })
        .collect()
}

pub fn to_polar(pts: &[(f64, f64)]) -> Vec<PolarPoint> {
    pts.iter()
        .map(|&(x, y)| PolarPoint::new(x.hypot(y), y.atan2(x)).unwrap())
        .collect()
}

/// A random wall segment 1–5 m away seen with the default sensor noise.
pub fn random_noisy_line(seed: u64, n: usize) -> (Vec<PolarPoint>, NoiseModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = NoiseModel::default();
    let r = rng.random_range(1.0..5.0);
    let alpha = rng.random_range(-3.0..3.0);
    let t0 = rng.random_range(-2.0..0.0);
    let len = rng.random_range(0.8..3.0);
    let nr = Normal::new(0.0, noise.sigma_rho()).unwrap();
    let nt = Normal::new(0.0, noise.sigma_theta()).unwrap();
    let pts = to_polar(&line_points(r, alpha, t0, t0 + len, n))
        .into_iter()
        .map(|p| PolarPoint::new(p.rho() + nr.sample(&mut rng), p.theta() + nt.sample(&mut rng)).unwrap())
        .collect();
    (pts, noise)
}

/// Central differences of `f` with respect to `ρ_i` and `θ_i`.
pub fn central_difference(
    f: &dyn Fn(&[PolarPoint]) -> Vec<f64>,
    pts: &[PolarPoint],
    i: usize,
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let shifted = |dr: f64, dt: f64| {
        let mut p = pts.to_vec();
        p[i] = PolarPoint::new(pts[i].rho() + dr, pts[i].theta() + dt).unwrap();
        f(&p)
    };
    let hr = h * pts[i].rho().max(1.0);
    let diff = |plus: Vec<f64>, minus: Vec<f64>, step: f64| -> Vec<f64> {
        plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * step)).collect()
    };
    (
        diff(shifted(hr, 0.0), shifted(-hr, 0.0), hr),
        diff(shifted(0.0, h), shifted(0.0, -h), h),
    )
}
