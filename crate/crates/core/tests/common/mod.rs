#![allow(dead_code)]

use std::path::PathBuf;

use csf_core::scan::{NoiseModel, PolarPoint, PolarScan};
use csf_core::world::{cast_scan, load_world, Pose};
use csf_core::ExtractConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn worlds_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../worlds")
}

/// Scatter applied when synthesizing the noisy fixtures. Propagation on
/// those fixtures uses the sensor datasheet model instead.
pub fn fixture_noise() -> NoiseModel {
    NoiseModel::new(0.004, 0.0005).unwrap()
}

pub fn sensor_noise_config() -> ExtractConfig {
    ExtractConfig {
        noise: Some(NoiseModel::RPLIDAR_S1),
        ..ExtractConfig::default()
    }
}

pub fn env_b_scan() -> PolarScan {
    let world = load_world(worlds_dir().join("env_b_like.txt")).unwrap();
    cast_scan(&world, &Pose::new(0.3, -0.2, 0.0).unwrap(), 1112, &fixture_noise(), 7).unwrap()
}

pub fn env_a_scan() -> PolarScan {
    let world = load_world(worlds_dir().join("env_a_like.txt")).unwrap();
    cast_scan(
        &world,
        &Pose::new(0.4, -0.3, 10f64.to_radians()).unwrap(),
        884,
        &fixture_noise(),
        11,
    )
    .unwrap()
}

pub fn square_scan(noise: &NoiseModel, rays: usize, pose: Pose, seed: u64) -> PolarScan {
    let world = load_world(worlds_dir().join("square.txt")).unwrap();
    cast_scan(&world, &pose, rays, noise, seed).unwrap()
}

/// `n` points evenly spaced along the line `(r, α)` for tangent offsets `t0..=t1`.
pub fn line_points(r: f64, alpha: f64, t0: f64, t1: f64, n: usize) -> Vec<(f64, f64)> {
    let (s, c) = alpha.sin_cos();
    (0..n)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / (n - 1).max(1) as f64;
            (r * c - t * s, r * s + t * c)
        })
        .collect()
}

pub fn to_polar(pts: &[(f64, f64)]) -> Vec<PolarPoint> {
    pts.iter()
        .map(|&(x, y)| PolarPoint::new(x.hypot(y), y.atan2(x)).unwrap())
        .collect()
}

/// Random segment 1–6 m away with `n` points perturbed by `noise`.
pub fn random_segment(rng: &mut ChaCha8Rng, n: usize, noise: &NoiseModel) -> Vec<PolarPoint> {
    let r = rng.random_range(1.0..6.0);
    let alpha = rng.random_range(-3.1..3.1);
    let t0 = rng.random_range(-3.0..1.0);
    let len = rng.random_range(0.8..4.0);
    let nr = Normal::new(0.0, noise.sigma_rho()).unwrap();
    let nt = Normal::new(0.0, noise.sigma_theta()).unwrap();
    to_polar(&line_points(r, alpha, t0, t0 + len, n))
        .into_iter()
        .map(|p| PolarPoint::new(p.rho() + nr.sample(rng), p.theta() + nt.sample(rng)).unwrap())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
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

/// Largest `|a − b|` relative to the norm of `b`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Richardson-extrapolated central differences: fourth order in `h`, so a
/// coarser step keeps rounding noise down without raising truncation error.
pub fn richardson_difference(
    f: &dyn Fn(&[PolarPoint]) -> Vec<f64>,
    pts: &[PolarPoint],
    i: usize,
    h: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (cr, ct) = central_difference(f, pts, i, h);
    let (fr, ft) = central_difference(f, pts, i, h / 2.0);
    let combine = |c: Vec<f64>, f: Vec<f64>| c.iter().zip(&f).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    (combine(cr, fr), combine(ct, ft))
}
