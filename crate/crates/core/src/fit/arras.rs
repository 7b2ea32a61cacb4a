//! Closed-form weighted orthogonal regression in polar form.
//!
//! With `a_i = ω_i ρ_i`, `b_i = ω_i ρ_i²` and `W = Σω`, the normal bearing is
//! `α = ½·atan2(−N, −D)` where
//! `N = Σ b sin 2θ − 2P/W`, `D = Σ b cos 2θ − Q/W`,
//! `P = ΣΣ a_i a_j cos θ_i sin θ_j` and `Q = ΣΣ a_i a_j cos(θ_i + θ_j)`.
//! The distance is `r = Σ a cos(θ − α) / W`.

use nalgebra::{Matrix2, Vector2};

use super::{FitInput, Sample};
use crate::error::{Error, Result};
use crate::scan::normalize_angle;
use crate::segment::SegmentSpan;

const COINCIDENT_REL: f64 = 1e-12;
const ISOTROPIC_REL: f64 = 1e-12;

/// Evaluation strategy for the double sums `P` and `Q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ArrasSums {
    /// Literal `O(n²)` double summation.
    #[default]
    DoubleSum,
    /// Factored `O(n)` evaluation; same result up to rounding.
    Factored,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarLine {
    pub r: f64,
    pub alpha: f64,
    pub cov: Option<Matrix2<f64>>,
    pub support: Option<SegmentSpan>,
}

struct Harmonics {
    w: f64,
    sum_b: f64,
    sum_ac: f64,
    sum_as: f64,
    n: f64,
    d: f64,
    p: f64,
    q: f64,
}

fn a_of(s: &Sample) -> f64 {
    s.weight * s.rho
}

fn b_of(s: &Sample) -> f64 {
    s.weight * s.rho * s.rho
}

/// `(Σ_j a_j sin(θ_k + θ_j), Σ_j a_j cos(θ_k + θ_j))`.
fn cross_sums(samples: &[Sample], k: &Sample, sums: ArrasSums, ac: f64, as_: f64) -> (f64, f64) {
    match sums {
        ArrasSums::DoubleSum => {
            let (mut s, mut c) = (0.0, 0.0);
            for j in samples {
                let a = a_of(j);
                s += a * (k.sin * j.cos + k.cos * j.sin);
                c += a * (k.cos * j.cos - k.sin * j.sin);
            }
            (s, c)
        }
        ArrasSums::Factored => (k.sin * ac + k.cos * as_, k.cos * ac - k.sin * as_),
    }
}

fn harmonics(input: &FitInput, sums: ArrasSums) -> Harmonics {
    let samples = input.samples();
    let (mut w, mut sum_b, mut sum_ac, mut sum_as, mut b_sin2, mut b_cos2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let a = a_of(s);
        let b = b_of(s);
        w += s.weight;
        sum_b += b;
        sum_ac += a * s.cos;
        sum_as += a * s.sin;
        b_sin2 += b * 2.0 * s.sin * s.cos;
        b_cos2 += b * (s.cos * s.cos - s.sin * s.sin);
    }
    let (p, q) = match sums {
        ArrasSums::DoubleSum => {
            let (mut p, mut q) = (0.0, 0.0);
            for i in samples {
                let ai = a_of(i);
                for j in samples {
                    let aa = ai * a_of(j);
                    p += aa * i.cos * j.sin;
                    q += aa * (i.cos * j.cos - i.sin * j.sin);
                }
            }
            (p, q)
        }
        ArrasSums::Factored => (sum_ac * sum_as, sum_ac * sum_ac - sum_as * sum_as),
    };
    Harmonics {
        w,
        sum_b,
        sum_ac,
        sum_as,
        n: b_sin2 - 2.0 * p / w,
        d: b_cos2 - q / w,
        p,
        q,
    }
}

pub fn fit_line_arras(input: &FitInput) -> Result<PolarLine> {
    fit_line_arras_with(input, ArrasSums::DoubleSum)
}

pub fn fit_line_arras_with(input: &FitInput, sums: ArrasSums) -> Result<PolarLine> {
    let h = harmonics(input, sums);
    let trace = h.sum_b - (h.sum_ac * h.sum_ac + h.sum_as * h.sum_as) / h.w;
    if !(trace > COINCIDENT_REL * h.sum_b) {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    if !(h.n.hypot(h.d) > ISOTROPIC_REL * trace) {
        return Err(Error::AmbiguousDirection);
    }
    let mut alpha = 0.5 * (-h.n).atan2(-h.d);
    let mut r = 0.0;
    for s in input.samples() {
        r += a_of(s) * (s.theta - alpha).cos();
    }
    r /= h.w;
    if r < 0.0 {
        r = -r;
        alpha += std::f64::consts::PI;
    }
    Ok(PolarLine {
        r,
        alpha: normalize_angle(alpha),
        cov: None,
        support: input.support(),
    })
}

/// Calls `f(k, ∂(r, α)/∂ρ_k, ∂(r, α)/∂θ_k)` for every sample.
fn visit_partials(
    line: &PolarLine,
    input: &FitInput,
    sums: ArrasSums,
    mut f: impl FnMut(usize, Vector2<f64>, Vector2<f64>),
) -> Result<()> {
    let h = harmonics(input, sums);
    let den = h.n * h.n + h.d * h.d;
    if !(den > 0.0) {
        return Err(Error::AmbiguousDirection);
    }
    let samples = input.samples();
    let alpha = line.alpha;
    let (sa, ca) = alpha.sin_cos();
    // Σ_j a_j sin(θ_j − α)
    let tangential: f64 = samples.iter().map(|s| a_of(s) * (s.sin * ca - s.cos * sa)).sum();
    let w = h.w;

    for (k, s) in samples.iter().enumerate() {
        let a = a_of(s);
        let b = b_of(s);
        let dw = s.dweight_drho;
        let da = s.weight + s.rho * dw;
        let db = 2.0 * s.weight * s.rho + s.rho * s.rho * dw;
        let sin2 = 2.0 * s.sin * s.cos;
        let cos2 = s.cos * s.cos - s.sin * s.sin;
        let (sk, ck) = cross_sums(samples, s, sums, h.sum_ac, h.sum_as);

        let dn_rho = db * sin2 - 2.0 * da * sk / w + 2.0 * h.p * dw / (w * w);
        let dd_rho = db * cos2 - 2.0 * da * ck / w + h.q * dw / (w * w);
        let dn_theta = 2.0 * b * cos2 - 2.0 * a * ck / w;
        let dd_theta = -2.0 * b * sin2 + 2.0 * a * sk / w;

        let dalpha_rho = 0.5 * (h.d * dn_rho - h.n * dd_rho) / den;
        let dalpha_theta = 0.5 * (h.d * dn_theta - h.n * dd_theta) / den;

        let cos_k = s.cos * ca + s.sin * sa;
        let sin_k = s.sin * ca - s.cos * sa;
        let dr_rho = (da * cos_k + tangential * dalpha_rho - line.r * dw) / w;
        let dr_theta = (-a * sin_k + tangential * dalpha_theta) / w;

        f(
            k,
            Vector2::new(dr_rho, dalpha_rho),
            Vector2::new(dr_theta, dalpha_theta),
        );
    }
    Ok(())
}

/// Per-sample partials of `(r, α)`.
pub fn arras_line_jacobian(line: &PolarLine, input: &FitInput) -> Result<Vec<(Vector2<f64>, Vector2<f64>)>> {
    let mut out = Vec::with_capacity(input.len());
    visit_partials(line, input, ArrasSums::DoubleSum, |_, dr, dt| out.push((dr, dt)))?;
    Ok(out)
}

/// Covariance of `(r, α)` with the double sums evaluated literally.
pub fn arras_line_covariance(line: &PolarLine, input: &FitInput) -> Result<Matrix2<f64>> {
    arras_line_covariance_with(line, input, ArrasSums::DoubleSum)
}

pub fn arras_line_covariance_with(line: &PolarLine, input: &FitInput, sums: ArrasSums) -> Result<Matrix2<f64>> {
    let (vr, vt) = (input.noise().var_rho(), input.noise().var_theta());
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    visit_partials(line, input, sums, |_, gr, gt| {
        a += vr * gr.x * gr.x + vt * gt.x * gt.x;
        b += vr * gr.x * gr.y + vt * gt.x * gt.y;
        c += vr * gr.y * gr.y + vt * gt.y * gt.y;
    })?;
    Ok(Matrix2::new(a, b, b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::Weighting;
    use crate::scan::{NoiseModel, PolarPoint};
    use crate::testutil::{central_difference, line_points, random_noisy_line, to_polar};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn input_xy(pts: &[(f64, f64)], w: Weighting) -> FitInput {
        FitInput::new(&to_polar(pts), NoiseModel::default(), w).unwrap()
    }

    #[test]
    fn axis_aligned_lines() {
        let l = fit_line_arras(&input_xy(&[(2.0, 0.0), (2.0, 1.0), (2.0, -1.0)], Weighting::Unit)).unwrap();
        assert_relative_eq!(l.r, 2.0, epsilon = 1e-14);
        assert!(l.alpha.abs() < 1e-14);
        let l = fit_line_arras(&input_xy(&[(0.0, 3.0), (1.0, 3.0), (-1.0, 3.0)], Weighting::Unit)).unwrap();
        assert_relative_eq!(l.r, 3.0, epsilon = 1e-14);
        assert_relative_eq!(l.alpha, FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_line() {
        let l = fit_line_arras(&input_xy(&line_points(2.0, FRAC_PI_4, -1.0, 1.5, 7), Weighting::Sensor)).unwrap();
        assert_relative_eq!(l.r, 2.0, epsilon = 1e-12);
        assert_relative_eq!(l.alpha, FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn line_behind_the_sensor() {
        let l = fit_line_arras(&input_xy(&[(-2.0, -1.0), (-2.0, 0.5), (-2.0, 1.0)], Weighting::Unit)).unwrap();
        assert_relative_eq!(l.r, 2.0, epsilon = 1e-14);
        assert_relative_eq!(l.alpha, -PI, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        let e = fit_line_arras(&input_xy(&[(1.0, 2.0), (1.0, 2.0), (1.0, 2.0)], Weighting::Unit));
        assert!(matches!(e, Err(Error::DegenerateGeometry(_))));
        // four points on a square have isotropic scatter
        let e = fit_line_arras(&input_xy(
            &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)],
            Weighting::Unit,
        ));
        assert!(matches!(e, Err(Error::AmbiguousDirection)));
    }

    #[test]
    fn factored_sums_agree() {
        for seed in 0..10 {
            let (pts, noise) = random_noisy_line(seed, 40);
            let input = FitInput::new(&pts, noise, Weighting::Sensor).unwrap();
            let a = fit_line_arras_with(&input, ArrasSums::DoubleSum).unwrap();
            let b = fit_line_arras_with(&input, ArrasSums::Factored).unwrap();
            assert_relative_eq!(a.r, b.r, max_relative = 1e-10);
            assert!(normalize_angle(a.alpha - b.alpha).abs() < 1e-10);
            let ca = arras_line_covariance_with(&a, &input, ArrasSums::DoubleSum).unwrap();
            let cb = arras_line_covariance_with(&a, &input, ArrasSums::Factored).unwrap();
            assert_relative_eq!(ca, cb, max_relative = 1e-8);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        for seed in 0..5 {
            let (pts, noise) = random_noisy_line(seed, 20);
            let input = FitInput::new(&pts, noise, Weighting::Sensor).unwrap();
            let line = fit_line_arras(&input).unwrap();
            let jac = arras_line_jacobian(&line, &input).unwrap();
            let f = |p: &[PolarPoint]| {
                let l = fit_line_arras(&FitInput::new(p, noise, Weighting::Sensor).unwrap()).unwrap();
                vec![l.r, line.alpha + normalize_angle(l.alpha - line.alpha)]
            };
            for (i, (dr, dt)) in jac.iter().enumerate() {
                let (fr, ft) = central_difference(&f, &pts, i, 1e-6);
                for k in 0..2 {
                    assert_relative_eq!(dr[k], fr[k], max_relative = 1e-5, epsilon = 1e-9 * dr.norm().max(1e-12));
                    assert_relative_eq!(dt[k], ft[k], max_relative = 1e-5, epsilon = 1e-9 * dt.norm().max(1e-12));
                }
            }
        }
    }

    #[test]
    fn covariance_shrinks_with_more_points() {
        let mut last = f64::INFINITY;
        for n in [10, 20, 40, 80] {
            let input = input_xy(&line_points(3.0, 0.4, -1.5, 1.0, n), Weighting::Sensor);
            let l = fit_line_arras(&input).unwrap();
            let t = arras_line_covariance(&l, &input).unwrap().trace();
            assert!(t <= last, "trace grew at n={n}");
            last = t;
        }
    }

    proptest! {
        #[test]
        fn exact_recovery(r in 0.3f64..20.0, alpha in -PI..PI, t0 in -5.0f64..0.0, len in 0.2f64..5.0, n in 2usize..60) {
            let l = fit_line_arras(&input_xy(&line_points(r, alpha, t0, t0 + len, n), Weighting::Sensor)).unwrap();
            prop_assert!((l.r - r).abs() < 1e-9 * r.max(1.0));
            prop_assert!(normalize_angle(l.alpha - alpha).abs() < 1e-9);
        }

        #[test]
        fn rotation_equivariance(seed in 0u64..1000, phi in -PI..PI) {
            let (pts, noise) = random_noisy_line(seed, 15);
            let rotated: Vec<_> = pts.iter().map(|p| PolarPoint::new(p.rho(), p.theta() + phi).unwrap()).collect();
            let a = fit_line_arras(&FitInput::new(&pts, noise, Weighting::Sensor).unwrap()).unwrap();
            let b = fit_line_arras(&FitInput::new(&rotated, noise, Weighting::Sensor).unwrap()).unwrap();
            prop_assert!((a.r - b.r).abs() <= 1e-9 * a.r);
            prop_assert!(normalize_angle(b.alpha - a.alpha - phi).abs() < 1e-9);
        }

        #[test]
        fn weight_scaling_invariance(seed in 0u64..1000, k in 0.1f64..10.0) {
            let (pts, noise) = random_noisy_line(seed, 15);
            let other = NoiseModel::new(noise.sigma_rho() * k, noise.sigma_theta()).unwrap();
            let a = fit_line_arras(&FitInput::new(&pts, noise, Weighting::Sensor).unwrap()).unwrap();
            let b = fit_line_arras(&FitInput::new(&pts, other, Weighting::Sensor).unwrap()).unwrap();
            prop_assert!((a.r - b.r).abs() <= 1e-11 * a.r);
            prop_assert!(normalize_angle(a.alpha - b.alpha).abs() < 1e-11);
        }
    }
}
