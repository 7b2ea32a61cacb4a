//! Line-tracking segmentation of a scan into straight-wall runs.

use crate::error::{Error, Result};
use crate::scan::PolarScan;

/// Inclusive index range into the source scan. On a closed 360° sweep the
/// wall crossing the sweep seam is reported as one span with
/// `start_index > end_index`, covering `start..n` then `0..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SegmentSpan {
    pub start_index: usize,
    pub end_index: usize,
    pub count: usize,
}

impl SegmentSpan {
    pub fn new(start_index: usize, end_index: usize) -> Self {
        assert!(start_index <= end_index, "use SegmentSpan::wrapping for seam spans");
        Self {
            start_index,
            end_index,
            count: end_index - start_index + 1,
        }
    }

    pub fn wrapping(start_index: usize, end_index: usize, scan_len: usize) -> Self {
        let count = if start_index <= end_index {
            end_index - start_index + 1
        } else {
            scan_len - start_index + end_index + 1
        };
        Self {
            start_index,
            end_index,
            count,
        }
    }

    pub fn wraps(&self) -> bool {
        self.start_index > self.end_index
    }

    /// Scan indices in sweep order.
    pub fn indices(&self, scan_len: usize) -> impl Iterator<Item = usize> + '_ {
        let (head, tail) = if self.wraps() {
            (self.start_index..scan_len, 0..self.end_index + 1)
        } else {
            (self.start_index..self.end_index + 1, 0..0)
        };
        head.chain(tail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentConfig {
    /// Maximum perpendicular distance to the running line (m).
    pub threshold_m: f64,
    /// Shorter runs are discarded.
    pub min_points: usize,
    /// Samples beyond this range are dropped and break the current run.
    pub max_range_m: f64,
}

impl SegmentConfig {
    pub const DEFAULT_THRESHOLD_M: f64 = 0.02;
    pub const DEFAULT_MIN_POINTS: usize = 5;
    pub const DEFAULT_MAX_RANGE_M: f64 = 40.0;

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_m > 0.0 && self.threshold_m.is_finite()) {
            return Err(Error::Config(format!(
                "threshold must be positive, got {}",
                self.threshold_m
            )));
        }
        if self.min_points < 2 {
            return Err(Error::Config(format!(
                "min_points must be at least 2, got {}",
                self.min_points
            )));
        }
        if !(self.max_range_m > 0.0) {
            return Err(Error::Config("max range must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            threshold_m: Self::DEFAULT_THRESHOLD_M,
            min_points: Self::DEFAULT_MIN_POINTS,
            max_range_m: Self::DEFAULT_MAX_RANGE_M,
        }
    }
}

/// Unweighted orthogonal line fit with running sums, relative to an anchor
/// point to keep the second moments well conditioned.
#[derive(Clone, Copy)]
struct RunningLine {
    anchor: (f64, f64),
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl RunningLine {
    fn new(anchor: (f64, f64)) -> Self {
        Self {
            anchor,
            n: 0.0,
            sx: 0.0,
            sy: 0.0,
            sxx: 0.0,
            sxy: 0.0,
            syy: 0.0,
        }
    }

    fn add(&mut self, p: (f64, f64)) {
        let (x, y) = (p.0 - self.anchor.0, p.1 - self.anchor.1);
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.sxy += x * y;
        self.syy += y * y;
    }

    /// Centroid (anchor-relative) and unit normal.
    fn line(&self) -> ((f64, f64), (f64, f64)) {
        let (mx, my) = (self.sx / self.n, self.sy / self.n);
        let cxx = self.sxx / self.n - mx * mx;
        let cxy = self.sxy / self.n - mx * my;
        let cyy = self.syy / self.n - my * my;
        let phi = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
        let (s, c) = phi.sin_cos();
        ((mx, my), (-s, c))
    }

    fn distance(&self, p: (f64, f64)) -> f64 {
        let ((mx, my), (nx, ny)) = self.line();
        let (x, y) = (p.0 - self.anchor.0, p.1 - self.anchor.1);
        (nx * (x - mx) + ny * (y - my)).abs()
    }

    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Option<Self> {
        let mut points = points.peekable();
        let mut acc = RunningLine::new(*points.peek()?);
        points.for_each(|p| acc.add(p));
        Some(acc)
    }
}

/// Bearing gaps wider than this many typical steps (missing returns) end a run.
const MAX_GAP_STEPS: f64 = 3.0;

fn median_bearing_step(scan: &PolarScan) -> f64 {
    let mut gaps: Vec<f64> = scan.points().windows(2).map(|w| w[1].theta() - w[0].theta()).collect();
    if gaps.is_empty() {
        return f64::INFINITY;
    }
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Whether the samples close a full turn: the gap across the `±π` seam is
/// no wider than a few typical bearing steps.
pub fn is_closed_sweep(scan: &PolarScan) -> bool {
    let pts = scan.points();
    if pts.len() < 3 {
        return false;
    }
    let seam = pts[0].theta() + 2.0 * std::f64::consts::PI - pts[pts.len() - 1].theta();
    seam <= MAX_GAP_STEPS * median_bearing_step(scan)
}

/// Splits the scan into straight runs.
///
/// Runs never cross out-of-range samples or bearing gaps of missing returns.
/// Each run is seeded by two consecutive points. A following point joins
/// when its perpendicular distance to the line fitted through the run so far
/// is at most `threshold_m`; otherwise the run closes and the rejected point
/// seeds the next one. A closed run is re-checked against its final line and
/// trimmed so that every retained point stays within the threshold. Runs
/// shorter than `min_points` are discarded. On a closed sweep, the runs on
/// either side of the seam are joined when they lie on one line.
pub fn segment_scan(scan: &PolarScan, cfg: &SegmentConfig) -> Result<Vec<SegmentSpan>> {
    cfg.validate()?;
    let n = scan.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let xy = scan.cartesian();
    let mut spans = Vec::new();

    // maximal blocks of consecutive in-range samples without bearing gaps
    let pts = scan.points();
    let max_gap = MAX_GAP_STEPS * median_bearing_step(scan);
    let mut k = 0;
    while k < n {
        if pts[k].rho() > cfg.max_range_m {
            k += 1;
            continue;
        }
        let start = k;
        k += 1;
        while k < n && pts[k].rho() <= cfg.max_range_m && pts[k].theta() - pts[k - 1].theta() <= max_gap {
            k += 1;
        }
        track_block(&xy, start, k, cfg, &mut spans);
    }

    if spans.len() >= 2 && is_closed_sweep(scan) {
        let first = spans[0];
        let last = spans[spans.len() - 1];
        if first.start_index == 0 && last.end_index == n - 1 {
            let merged = SegmentSpan::wrapping(last.start_index, first.end_index, n);
            let line = RunningLine::fit(merged.indices(n).map(|i| xy[i])).expect("non-empty");
            if merged.indices(n).all(|i| line.distance(xy[i]) <= cfg.threshold_m) {
                spans.remove(0);
                *spans.last_mut().expect("non-empty") = merged;
            }
        }
    }
    Ok(spans)
}

fn track_block(xy: &[(f64, f64)], begin: usize, end: usize, cfg: &SegmentConfig, spans: &mut Vec<SegmentSpan>) {
    let thr = cfg.threshold_m;
    let mut i = begin;
    while i + 1 < end {
        let mut line = RunningLine::new(xy[i]);
        line.add(xy[i]);
        line.add(xy[i + 1]);
        let mut j = i + 2;
        while j < end && line.distance(xy[j]) <= thr {
            line.add(xy[j]);
            j += 1;
        }

        // [s, e) must sit within thr of its own final fit
        let (mut s, mut e) = (i, j);
        while e - s >= 2 {
            let fit = RunningLine::fit(xy[s..e].iter().copied()).expect("non-empty");
            match (s..e).find(|&q| fit.distance(xy[q]) > thr) {
                None => break,
                Some(q) if q == s => s += 1,
                Some(q) => e = q,
            }
        }
        if e - s >= cfg.min_points {
            spans.push(SegmentSpan::new(s, e - 1));
        }
        i = if e < j { e.max(i + 1) } else { j };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{NoiseModel, PolarPoint};
    use crate::world::{cast_scan, square_room, Pose};

    fn scan_from_xy(pts: &[(f64, f64)]) -> PolarScan {
        let mut polar: Vec<_> = pts
            .iter()
            .map(|&(x, y)| PolarPoint::new(x.hypot(y), y.atan2(x)).unwrap())
            .collect();
        polar.sort_by(|a, b| a.theta().total_cmp(&b.theta()));
        PolarScan::new(polar, NoiseModel::default(), vec![]).unwrap()
    }

    #[test]
    fn collinear_points_form_one_span() {
        let pts: Vec<_> = (0..10).map(|k| (2.0, -0.9 + 0.2 * k as f64)).collect();
        let spans = segment_scan(&scan_from_xy(&pts), &SegmentConfig::default()).unwrap();
        assert_eq!(spans, vec![SegmentSpan::new(0, 9)]);
    }

    #[test]
    fn offset_point_splits_the_run() {
        let mut pts: Vec<_> = (0..12).map(|k| (2.0, -1.1 + 0.2 * k as f64)).collect();
        // push the 7th point 25 mm away from the wall, the rest continue on a parallel line
        for p in pts.iter_mut().skip(6) {
            p.0 += 0.025;
        }
        let spans = segment_scan(&scan_from_xy(&pts), &SegmentConfig::default()).unwrap();
        assert_eq!(spans, vec![SegmentSpan::new(0, 5), SegmentSpan::new(6, 11)]);
    }

    #[test]
    fn tiny_scans_give_nothing() {
        let one = scan_from_xy(&[(1.0, 0.0)]);
        assert!(segment_scan(&one, &SegmentConfig::default()).unwrap().is_empty());
        let bad = SegmentConfig {
            threshold_m: 0.0,
            ..Default::default()
        };
        assert!(segment_scan(&one, &bad).is_err());
        let bad = SegmentConfig {
            min_points: 1,
            ..Default::default()
        };
        assert!(segment_scan(&one, &bad).is_err());
    }

    #[test]
    fn square_room_gives_four_spans() {
        let scan = cast_scan(&square_room(2.0), &Pose::origin(), 360, &NoiseModel::NOISELESS, 0).unwrap();
        let spans = segment_scan(&scan, &SegmentConfig::default()).unwrap();
        assert_eq!(spans.len(), 4);
        assert!(spans.last().unwrap().wraps());
        let xy = scan.cartesian();
        // brute force: each span lies on one of the four walls
        for s in &spans {
            let idx: Vec<_> = s.indices(scan.len()).collect();
            let on_wall = |f: &dyn Fn((f64, f64)) -> bool| idx.iter().all(|&i| f(xy[i]));
            let walls: [&dyn Fn((f64, f64)) -> bool; 4] = [
                &|p| (p.0 - 2.0).abs() < 1e-12,
                &|p| (p.0 + 2.0).abs() < 1e-12,
                &|p| (p.1 - 2.0).abs() < 1e-12,
                &|p| (p.1 + 2.0).abs() < 1e-12,
            ];
            assert_eq!(walls.iter().filter(|w| on_wall(w)).count(), 1);
        }
        let total: usize = spans.iter().map(|s| s.count).sum();
        assert_eq!(total, 360);
    }

    #[test]
    fn far_points_break_runs() {
        let mut pts: Vec<_> = (0..12).map(|k| (2.0, -1.1 + 0.2 * k as f64)).collect();
        pts[6].0 = 60.0;
        pts[6].1 *= 30.0;
        let spans = segment_scan(&scan_from_xy(&pts), &SegmentConfig::default()).unwrap();
        assert_eq!(spans, vec![SegmentSpan::new(0, 5), SegmentSpan::new(7, 11)]);
    }

    #[test]
    fn wrapping_span_indices() {
        let s = SegmentSpan::wrapping(8, 1, 10);
        assert_eq!(s.count, 4);
        assert_eq!(s.indices(10).collect::<Vec<_>>(), vec![8, 9, 0, 1]);
    }
}
