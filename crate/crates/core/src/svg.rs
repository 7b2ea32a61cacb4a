//! SVG rendering of feature maps and benchmark curves.
//!
//! Output depends only on the inputs: coordinates are printed with a fixed
//! number of decimals and elements are emitted in input order.

use std::fmt::Write as _;

use nalgebra::Matrix2;

use crate::bench::BenchRow;
use crate::error::Result;
use crate::features::FeatureMap;
use crate::fit::Method;
use crate::scan::PolarScan;

const MAP_WIDTH: f64 = 800.0;
const MARGIN: f64 = 40.0;
const LEGEND_HEIGHT: f64 = 110.0;
/// Mahalanobis radius of the drawn covariance contour.
pub const ELLIPSE_SIGMAS: f64 = 3.0;

fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// World → screen transform with y pointing up in the world.
struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn fit(xs: impl Iterator<Item = (f64, f64)>) -> (Self, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (-1.0f64, 1.0f64, -1.0f64, 1.0f64);
        for (x, y) in xs {
            if x.is_finite() && y.is_finite() {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
        let pad = 0.05 * (x1 - x0).max(y1 - y0);
        let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
        let scale = (MAP_WIDTH - 2.0 * MARGIN) / (x1 - x0);
        let height = (y1 - y0) * scale + 2.0 * MARGIN;
        (Self { x0, y1, scale }, height)
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.y1 - y) * self.scale
    }
}

/// Semi-axes and orientation (radians, world frame) of the contour
/// `dᵀ C⁻¹ d = k²`.
pub fn covariance_ellipse(cov: &Matrix2<f64>, k: f64) -> (f64, f64, f64) {
    let (a, b, c) = (cov[(0, 0)], 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)]);
    let mid = 0.5 * (a + c);
    let rad = (0.5 * (a - c)).hypot(b);
    let major = (mid + rad).max(0.0).sqrt() * k;
    let minor = (mid - rad).max(0.0).sqrt() * k;
    (major, minor, 0.5 * (2.0 * b).atan2(a - c))
}

fn triangle(cx: f64, cy: f64, size: f64) -> String {
    let h = size * 0.866;
    format!(
        "{},{} {},{} {},{}",
        px(cx),
        px(cy - 2.0 * h / 3.0),
        px(cx - size / 2.0),
        px(cy + h / 3.0),
        px(cx + size / 2.0),
        px(cy + h / 3.0)
    )
}

/// Raw points, fitted lines, corners with their covariance ellipses, and
/// the sensor origin.
pub fn render_map_svg(map: &FeatureMap, scan: &PolarScan) -> Result<String> {
    map.check_scan(scan)?;
    let pts = scan.cartesian();
    let (view, map_height) = View::fit(pts.iter().copied().chain(map.corners.iter().map(|c| (c.x, c.y))));
    let height = map_height + LEGEND_HEIGHT;

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = px(MAP_WIDTH),
        h = px(height)
    );
    let _ = writeln!(
        o,
        "<title>{} features: {} lines, {} corners</title>",
        map.method,
        map.lines.len(),
        map.corners.len()
    );
    let _ = writeln!(o, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let _ = writeln!(o, r##"<g class="points" fill="#7f7f7f">"##);
    for &(x, y) in &pts {
        let _ = writeln!(o, r#"<circle cx="{}" cy="{}" r="1.5"/>"#, px(view.x(x)), px(view.y(y)));
    }
    let _ = writeln!(o, "</g>");

    let _ = writeln!(
        o,
        r##"<g class="lines" stroke="#1f77b4" stroke-width="3" stroke-linecap="round" opacity="0.8">"##
    );
    for l in &map.lines {
        let (r, alpha) = l.params.polar();
        let (s, c) = alpha.sin_cos();
        let project = |i: usize| {
            let (x, y) = pts[i];
            let d = c * x + s * y - r;
            (x - d * c, y - d * s)
        };
        let (a, b) = (project(l.span.start_index), project(l.span.end_index));
        let _ = writeln!(
            o,
            r#"<line class="line" data-id="{}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            l.id,
            px(view.x(a.0)),
            px(view.y(a.1)),
            px(view.x(b.0)),
            px(view.y(b.1))
        );
    }
    let _ = writeln!(o, "</g>");

    let _ = writeln!(
        o,
        r##"<g class="ellipses" fill="none" stroke="#d62728" stroke-width="1">"##
    );
    for (k, corner) in map.corners.iter().enumerate() {
        let cov = corner.cov.unwrap_or_else(Matrix2::zeros);
        let (major, minor, angle) = covariance_ellipse(&cov, ELLIPSE_SIGMAS);
        let (cx, cy) = (view.x(corner.x), view.y(corner.y));
        let _ = writeln!(
            o,
            r#"<ellipse class="cov-ellipse" data-id="{k}" cx="{}" cy="{}" rx="{}" ry="{}" transform="rotate({} {} {})"/>"#,
            px(cx),
            px(cy),
            px(major * view.scale),
            px(minor * view.scale),
            px(-angle.to_degrees()),
            px(cx),
            px(cy)
        );
    }
    let _ = writeln!(o, "</g>");

    let _ = writeln!(o, r##"<g class="corners" fill="#000000">"##);
    for (k, corner) in map.corners.iter().enumerate() {
        let _ = writeln!(
            o,
            r#"<polygon class="corner" data-id="{k}" points="{}"/>"#,
            triangle(view.x(corner.x), view.y(corner.y), 10.0)
        );
    }
    let _ = writeln!(o, "</g>");

    let (ox, oy) = (view.x(0.0), view.y(0.0));
    let _ = writeln!(o, r##"<g class="sensor" stroke="#ff0000" stroke-width="2">"##);
    let _ = writeln!(
        o,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        px(ox - 7.0),
        px(oy - 7.0),
        px(ox + 7.0),
        px(oy + 7.0)
    );
    let _ = writeln!(
        o,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        px(ox - 7.0),
        px(oy + 7.0),
        px(ox + 7.0),
        px(oy - 7.0)
    );
    let _ = writeln!(o, "</g>");

    legend(
        &mut o,
        map_height,
        map.method,
        map.noise.sigma_rho(),
        map.noise.sigma_theta(),
    );
    let _ = writeln!(o, "</svg>");
    Ok(o)
}

fn legend(o: &mut String, top: f64, method: Method, sigma_rho: f64, sigma_theta: f64) {
    let x = MARGIN;
    let row = |i: usize| top + 10.0 + 18.0 * i as f64;
    let _ = writeln!(o, r#"<g class="legend">"#);
    let _ = writeln!(
        o,
        r##"<circle cx="{}" cy="{}" r="2" fill="#7f7f7f"/>"##,
        px(x + 10.0),
        px(row(0))
    );
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}">scan points</text>"#,
        px(x + 30.0),
        px(row(0) + 4.0)
    );
    let _ = writeln!(
        o,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#1f77b4" stroke-width="3"/>"##,
        px(x),
        px(row(1)),
        px(x + 20.0),
        px(row(1))
    );
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}">fitted lines ({method})</text>"#,
        px(x + 30.0),
        px(row(1) + 4.0)
    );
    let _ = writeln!(
        o,
        r##"<path d="M {} Z" fill="#000000"/>"##,
        triangle(x + 10.0, row(2), 10.0).replace(' ', " L ")
    );
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}">corners</text>"#,
        px(x + 30.0),
        px(row(2) + 4.0)
    );
    let _ = writeln!(
        o,
        r##"<path d="M {} {} a 9 5 0 1 0 18 0 a 9 5 0 1 0 -18 0" fill="none" stroke="#d62728"/>"##,
        px(x + 1.0),
        px(row(3))
    );
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}">corner covariance, {}σ contour (σρ = {:.1} mm, σθ = {:.4}°)</text>"#,
        px(x + 30.0),
        px(row(3) + 4.0),
        ELLIPSE_SIGMAS,
        sigma_rho * 1000.0,
        sigma_theta.to_degrees()
    );
    let _ = writeln!(
        o,
        r##"<path d="M {} {} l 10 10 m 0 -10 l -10 10" stroke="#ff0000" stroke-width="2"/>"##,
        px(x + 5.0),
        px(row(4) - 5.0)
    );
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}">sensor</text>"#,
        px(x + 30.0),
        px(row(4) + 4.0)
    );
    let _ = writeln!(o, "</g>");
}

// --- benchmark chart ------------------------------------------------------------

const CHART_W: f64 = 820.0;
const CHART_H: f64 = 520.0;
const PLOT_L: f64 = 70.0;
const PLOT_R: f64 = 730.0;
const PLOT_T: f64 = 40.0;
const PLOT_B: f64 = 400.0;

/// Rounds up to 1, 2 or 5 times a power of ten.
fn nice_ceiling(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return 1.0;
    }
    let p = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * p)
        .find(|&c| c >= v * (1.0 - 1e-12))
        .unwrap_or(10.0 * p)
}

fn series_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(",")
}

/// Corner uncertainty per method on the left axis and time ratios
/// against WCLM on the right axis, both over the number of points.
pub fn render_bench_svg(rows: &[BenchRow]) -> String {
    let ns: Vec<f64> = rows.iter().map(|r| r.n_points as f64).collect();
    let (n_lo, n_hi) = match (ns.first(), ns.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let sigma_series: Vec<(String, Vec<f64>)> = Method::ALL
        .iter()
        .enumerate()
        .flat_map(|(i, m)| {
            [
                (format!("sx_{m}_mm"), rows.iter().map(|r| r.sigma_mm[i].0).collect()),
                (format!("sy_{m}_mm"), rows.iter().map(|r| r.sigma_mm[i].1).collect()),
            ]
        })
        .collect();
    let ratio_series: Vec<(String, Vec<f64>)> = vec![
        (
            "arras/wclm".into(),
            rows.iter().map(|r| r.t_us[1] / r.t_us[0]).collect(),
        ),
        (
            "siadat/wclm".into(),
            rows.iter().map(|r| r.t_us[2] / r.t_us[0]).collect(),
        ),
    ];
    let max_of = |s: &[(String, Vec<f64>)]| {
        s.iter()
            .flat_map(|(_, v)| v.iter().copied())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    };
    let sigma_top = nice_ceiling(max_of(&sigma_series));
    let ratio_top = nice_ceiling(max_of(&ratio_series).max(1.0));

    let sx = |n: f64| PLOT_L + (n - n_lo) / (n_hi - n_lo) * (PLOT_R - PLOT_L);
    let sy = |v: f64, top: f64| PLOT_B - v / top * (PLOT_B - PLOT_T);

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = px(CHART_W),
        h = px(CHART_H)
    );
    let _ = writeln!(
        o,
        "<title>corner uncertainty and relative time over supporting points</title>"
    );
    let _ = writeln!(o, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    // axes and ticks
    let _ = writeln!(o, r##"<g class="axes" stroke="#000000" fill="none">"##);
    let _ = writeln!(
        o,
        r#"<path d="M {l} {t} L {l} {b} L {r} {b} L {r} {t}"/>"#,
        l = px(PLOT_L),
        t = px(PLOT_T),
        b = px(PLOT_B),
        r = px(PLOT_R)
    );
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, r#"<g class="ticks">"#);
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let y = PLOT_B - f * (PLOT_B - PLOT_T);
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            px(PLOT_L - 6.0),
            px(y + 4.0),
            fmt_tick(f * sigma_top)
        );
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}">{}</text>"#,
            px(PLOT_R + 6.0),
            px(y + 4.0),
            fmt_tick(f * ratio_top)
        );
    }
    for &n in &ns {
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(sx(n)),
            px(PLOT_B + 16.0),
            n
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{}" y="{}" text-anchor="middle">supporting points per line</text>"#,
        px(0.5 * (PLOT_L + PLOT_R)),
        px(PLOT_B + 36.0)
    );
    let _ = writeln!(
        o,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">corner σ (mm)</text>"#,
        y = px(0.5 * (PLOT_T + PLOT_B))
    );
    let _ = writeln!(
        o,
        r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(90 {x} {y})">time ratio to wclm</text>"#,
        x = px(CHART_W - 20.0),
        y = px(0.5 * (PLOT_T + PLOT_B))
    );
    let _ = writeln!(o, "</g>");

    let colors = ["#1f77b4", "#ff7f0e", "#2ca02c"];
    let polyline = |o: &mut String, class: &str, name: &str, values: &[f64], top: f64, color: &str, dash: &str| {
        let points: Vec<_> = ns
            .iter()
            .zip(values)
            .map(|(&n, &v)| format!("{},{}", px(sx(n)), px(sy(v, top))))
            .collect();
        let _ = writeln!(
            o,
            r#"<polyline class="{class}" data-series="{name}" data-values="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            series_values(values),
            points.join(" ")
        );
    };
    let _ = writeln!(o, r#"<g class="series">"#);
    for (k, (name, values)) in sigma_series.iter().enumerate() {
        let dash = if k % 2 == 0 { "" } else { r#" stroke-dasharray="2 3""# };
        polyline(&mut o, "sigma", name, values, sigma_top, colors[k / 2], dash);
    }
    for (k, (name, values)) in ratio_series.iter().enumerate() {
        polyline(
            &mut o,
            "ratio",
            name,
            values,
            ratio_top,
            colors[k + 1],
            r#" stroke-dasharray="8 4""#,
        );
    }
    let _ = writeln!(o, "</g>");

    let _ = writeln!(o, r#"<g class="legend">"#);
    let entries = [
        ("σx (solid) and σy (dotted), wclm", colors[0], ""),
        ("σx (solid) and σy (dotted), arras", colors[1], ""),
        ("σx (solid) and σy (dotted), siadat", colors[2], ""),
        ("time arras / wclm (right axis)", colors[1], "8 4"),
        ("time siadat / wclm (right axis)", colors[2], "8 4"),
    ];
    for (k, (label, color, dash)) in entries.iter().enumerate() {
        let y = PLOT_B + 56.0 + 12.0 * (k % 3) as f64;
        let x = PLOT_L + 330.0 * (k / 3) as f64;
        let _ = writeln!(
            o,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            px(x),
            px(y - 4.0),
            px(x + 24.0),
            px(y - 4.0)
        );
        let _ = writeln!(o, r#"<text x="{}" y="{}">{label}</text>"#, px(x + 30.0), px(y));
    }
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, "</svg>");
    o
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ellipse_axes() {
        let (a, b, t) = covariance_ellipse(&Matrix2::new(4.0, 0.0, 0.0, 1.0), 3.0);
        assert_relative_eq!(a, 6.0);
        assert_relative_eq!(b, 3.0);
        assert_eq!(t, 0.0);
        let (a, b, t) = covariance_ellipse(&Matrix2::new(2.0, 1.0, 1.0, 2.0), 1.0);
        assert_relative_eq!(a, 3f64.sqrt());
        assert_relative_eq!(b, 1.0);
        assert_relative_eq!(t, std::f64::consts::FRAC_PI_4);
    }

    #[test]
    fn nice_ceilings() {
        assert_eq!(nice_ceiling(0.0), 1.0);
        assert_eq!(nice_ceiling(1.3), 2.0);
        assert_eq!(nice_ceiling(37.0), 50.0);
        assert_eq!(nice_ceiling(50.0), 50.0);
    }

    #[test]
    fn flat_ratios_for_identical_times() {
        let rows: Vec<_> = [10, 20, 30]
            .iter()
            .map(|&n| BenchRow {
                n_points: n,
                t_us: [2.0, 2.0, 2.0],
                sigma_mm: [(5.0, 4.0); 3],
                t_arras_factored_us: None,
            })
            .collect();
        let svg = render_bench_svg(&rows);
        assert!(svg.contains(r#"data-series="arras/wclm" data-values="1.000,1.000,1.000""#));
        assert!(svg.contains(r#"data-series="siadat/wclm" data-values="1.000,1.000,1.000""#));
    }
}
