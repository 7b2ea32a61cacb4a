//! Scan → lines → corners, and the feature-map file format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Matrix3};
use serde::Deserialize;

use crate::corners::{corner_arras, corner_siadat, corner_wclm, CornerFeature};
use crate::error::{Error, Result};
use crate::fit::{
    arras_line_covariance, fit_line_arras, fit_line_siadat, fit_line_wclm, inversion_line_to_polar,
    siadat_line_covariance, wclm_line_covariance, FitInput, ImplicitLine, InversionPointLine, Method, PolarLine,
    Weighting,
};
use crate::scan::io::fmt17;
use crate::scan::{NoiseModel, PolarScan};
use crate::segment::{is_closed_sweep, segment_scan, SegmentConfig, SegmentSpan};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractConfig {
    pub segmentation: SegmentConfig,
    /// A corner must lie within this distance (m) of the nearer end of each
    /// of its two spans.
    pub gate_m: f64,
    pub weighting: Weighting,
    /// Propagation noise; `None` uses the scan header.
    pub noise: Option<NoiseModel>,
}

impl ExtractConfig {
    pub const DEFAULT_GATE_M: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        self.segmentation.validate()?;
        if !(self.gate_m > 0.0 && self.gate_m.is_finite()) {
            return Err(Error::Config(format!(
                "corner gate must be positive, got {}",
                self.gate_m
            )));
        }
        Ok(())
    }
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            segmentation: SegmentConfig::default(),
            gate_m: Self::DEFAULT_GATE_M,
            weighting: Weighting::Sensor,
            noise: None,
        }
    }
}

/// Noise used for weighting and propagation: the override if given, else
/// the scan header.
pub fn effective_noise(scan: &PolarScan, noise_override: Option<NoiseModel>) -> NoiseModel {
    noise_override.unwrap_or(*scan.noise())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineParams {
    Wclm(InversionPointLine),
    Arras(PolarLine),
    Siadat(ImplicitLine),
}

impl LineParams {
    pub fn method(&self) -> Method {
        match self {
            LineParams::Wclm(_) => Method::Wclm,
            LineParams::Arras(_) => Method::Arras,
            LineParams::Siadat(_) => Method::Siadat,
        }
    }

    /// `(r, α)` of the line.
    pub fn polar(&self) -> (f64, f64) {
        match self {
            LineParams::Wclm(l) => inversion_line_to_polar(l),
            LineParams::Arras(l) => (l.r, l.alpha),
            LineParams::Siadat(l) => l.to_polar(),
        }
    }

    /// Native parameters: `(x_q, y_q)`, `(r, α)` or `(a, b, c)`.
    pub fn values(&self) -> Vec<f64> {
        match self {
            LineParams::Wclm(l) => vec![l.xq, l.yq],
            LineParams::Arras(l) => vec![l.r, l.alpha],
            LineParams::Siadat(l) => vec![l.a, l.b, l.c],
        }
    }

    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let dyn2 = |m: Matrix2<f64>| DMatrix::from_iterator(2, 2, m.iter().copied());
        match self {
            LineParams::Wclm(l) => l.cov.map(dyn2),
            LineParams::Arras(l) => l.cov.map(dyn2),
            LineParams::Siadat(l) => l.cov.map(|m| DMatrix::from_iterator(3, 3, m.iter().copied())),
        }
    }

    fn from_values(method: Method, v: &[f64], cov: Option<&DMatrix<f64>>, span: SegmentSpan) -> Result<Self> {
        let k = if method == Method::Siadat { 3 } else { 2 };
        if v.len() != k || cov.is_some_and(|c| c.nrows() != k || c.ncols() != k) {
            return Err(Error::Validation(format!(
                "{method} line needs {k} parameters and a {k}x{k} covariance"
            )));
        }
        let m2 = |c: &DMatrix<f64>| Matrix2::from_iterator(c.iter().copied());
        Ok(match method {
            Method::Wclm => LineParams::Wclm(InversionPointLine {
                xq: v[0],
                yq: v[1],
                cov: cov.map(m2),
                support: Some(span),
            }),
            Method::Arras => LineParams::Arras(PolarLine {
                r: v[0],
                alpha: v[1],
                cov: cov.map(m2),
                support: Some(span),
            }),
            Method::Siadat => LineParams::Siadat(ImplicitLine {
                a: v[0],
                b: v[1],
                c: v[2],
                cov: cov.map(|c| Matrix3::from_iterator(c.iter().copied())),
                support: Some(span),
            }),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineFeature {
    pub id: usize,
    pub span: SegmentSpan,
    pub params: LineParams,
    /// False when the covariance came from a near-degenerate configuration.
    pub cov_reliable: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub method: Method,
    pub weighting: Weighting,
    pub noise: NoiseModel,
    pub scan_points: usize,
    pub scan_digest: String,
    pub lines: Vec<LineFeature>,
    pub corners: Vec<CornerFeature>,
    pub diagnostics: Vec<String>,
}

impl FeatureMap {
    pub fn line(&self, id: usize) -> Option<&LineFeature> {
        self.lines.iter().find(|l| l.id == id)
    }

    /// Spans of the two lines a corner came from.
    pub fn corner_spans(&self, corner: &CornerFeature) -> Option<(SegmentSpan, SegmentSpan)> {
        let [i, j] = corner.sources?;
        Some((self.line(i)?.span, self.line(j)?.span))
    }

    /// Fails unless this map was extracted from `scan`.
    pub fn check_scan(&self, scan: &PolarScan) -> Result<()> {
        if self.scan_points != scan.len() || self.scan_digest != scan.digest() {
            return Err(Error::Validation(format!(
                "feature map was extracted from a different scan ({} points, digest {}) than the one given ({} points, digest {})",
                self.scan_points,
                self.scan_digest,
                scan.len(),
                scan.digest()
            )));
        }
        Ok(())
    }
}

pub fn extract_feature_map(scan: &PolarScan, method: Method, cfg: &ExtractConfig) -> Result<FeatureMap> {
    cfg.validate()?;
    let spans = segment_scan(scan, &cfg.segmentation)?;
    Ok(build_map(scan, &spans, method, cfg))
}

/// Consecutive span pairs in sweep order, closing the loop on a full sweep.
pub(crate) fn candidate_pairs(scan: &PolarScan, n_spans: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<_> = (1..n_spans).map(|k| (k - 1, k)).collect();
    if n_spans >= 3 && is_closed_sweep(scan) {
        pairs.push((n_spans - 1, 0));
    }
    pairs
}

/// Fits one span and attaches its covariance.
pub fn fit_span(
    scan: &PolarScan,
    span: SegmentSpan,
    method: Method,
    noise: NoiseModel,
    weighting: Weighting,
) -> Result<(LineParams, bool)> {
    let input = FitInput::from_span(scan, span, noise, weighting)?;
    fit_input(&input, method)
}

pub(crate) fn fit_input(input: &FitInput, method: Method) -> Result<(LineParams, bool)> {
    Ok(match method {
        Method::Wclm => {
            let mut l = fit_line_wclm(input)?;
            l.cov = Some(wclm_line_covariance(&l, input)?);
            (LineParams::Wclm(l), true)
        }
        Method::Arras => {
            let mut l = fit_line_arras(input)?;
            l.cov = Some(arras_line_covariance(&l, input)?);
            (LineParams::Arras(l), true)
        }
        Method::Siadat => {
            let mut l = fit_line_siadat(input)?;
            let c = siadat_line_covariance(&l, input)?;
            l.cov = Some(c.cov);
            (LineParams::Siadat(l), c.reliable)
        }
    })
}

pub fn intersect(a: &LineParams, b: &LineParams) -> Result<CornerFeature> {
    match (a, b) {
        (LineParams::Wclm(a), LineParams::Wclm(b)) => corner_wclm(a, b),
        (LineParams::Arras(a), LineParams::Arras(b)) => corner_arras(a, b),
        (LineParams::Siadat(a), LineParams::Siadat(b)) => corner_siadat(a, b),
        _ => Err(Error::Validation("cannot intersect lines of different methods".into())),
    }
}

fn endpoint_distance(scan: &PolarScan, span: SegmentSpan, x: f64, y: f64) -> f64 {
    [span.start_index, span.end_index]
        .iter()
        .map(|&i| {
            let (px, py) = scan.points()[i].to_cartesian();
            (px - x).hypot(py - y)
        })
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn build_map(scan: &PolarScan, spans: &[SegmentSpan], method: Method, cfg: &ExtractConfig) -> FeatureMap {
    let noise = effective_noise(scan, cfg.noise);
    let mut diagnostics = Vec::new();
    let mut lines = Vec::new();
    let mut line_of_span = vec![None; spans.len()];

    for (k, &span) in spans.iter().enumerate() {
        match fit_span(scan, span, method, noise, cfg.weighting) {
            Ok((params, cov_reliable)) => {
                if !cov_reliable {
                    diagnostics.push(format!(
                        "span {k} [{}..{}]: covariance unreliable (nearly isotropic scatter)",
                        span.start_index, span.end_index
                    ));
                }
                line_of_span[k] = Some(lines.len());
                lines.push(LineFeature {
                    id: lines.len(),
                    span,
                    params,
                    cov_reliable,
                });
            }
            Err(e) => diagnostics.push(format!("span {k} [{}..{}]: {e}", span.start_index, span.end_index)),
        }
    }

    let mut corners = Vec::new();
    for (k, l) in candidate_pairs(scan, spans.len()) {
        let (Some(i), Some(j)) = (line_of_span[k], line_of_span[l]) else {
            continue;
        };
        let corner = match intersect(&lines[i].params, &lines[j].params) {
            Ok(c) => c,
            Err(e) => {
                diagnostics.push(format!("lines {i} and {j}: no corner: {e}"));
                continue;
            }
        };
        let d = endpoint_distance(scan, spans[k], corner.x, corner.y)
            .max(endpoint_distance(scan, spans[l], corner.x, corner.y));
        if d > cfg.gate_m {
            diagnostics.push(format!(
                "lines {i} and {j}: intersection {d:.3} m from span ends exceeds gate {} m",
                cfg.gate_m
            ));
            continue;
        }
        corners.push(corner.with_sources(i, j));
    }

    FeatureMap {
        method,
        weighting: cfg.weighting,
        noise,
        scan_points: scan.len(),
        scan_digest: scan.digest(),
        lines,
        corners,
        diagnostics,
    }
}

// --- serialization --------------------------------------------------------------

fn num(v: f64) -> String {
    if v.is_finite() {
        fmt17(v)
    } else {
        "null".into()
    }
}

fn vector(v: &[f64]) -> String {
    let items: Vec<_> = v.iter().map(|&x| num(x)).collect();
    format!("[{}]", items.join(", "))
}

fn matrix(m: Option<DMatrix<f64>>) -> String {
    match m {
        None => "null".into(),
        Some(m) => {
            let rows: Vec<_> = (0..m.nrows())
                .map(|r| vector(&m.row(r).iter().copied().collect::<Vec<_>>()))
                .collect();
            format!("[{}]", rows.join(", "))
        }
    }
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn weighting_name(w: Weighting) -> &'static str {
    match w {
        Weighting::Sensor => "sensor",
        Weighting::Unit => "unit",
    }
}

/// JSON text with every number at 17 significant digits.
pub fn write_feature_map(map: &FeatureMap) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "{{");
    let _ = writeln!(o, "  \"method\": {},", quoted(map.method.as_str()));
    let _ = writeln!(o, "  \"weighting\": {},", quoted(weighting_name(map.weighting)));
    let _ = writeln!(
        o,
        "  \"noise\": {{\"sigma_rho_m\": {}, \"sigma_theta_rad\": {}}},",
        num(map.noise.sigma_rho()),
        num(map.noise.sigma_theta())
    );
    let _ = writeln!(o, "  \"scan_points\": {},", map.scan_points);
    let _ = writeln!(o, "  \"scan_digest\": {},", quoted(&map.scan_digest));

    let _ = write!(o, "  \"lines\": [");
    for (k, l) in map.lines.iter().enumerate() {
        let (r, a) = l.params.polar();
        let _ = write!(
            o,
            "{}\n    {{\"id\": {}, \"method\": {}, \"params\": {}, \"polar\": {}, \"cov\": {}, \"cov_reliable\": {}, \"support\": [{}, {}], \"count\": {}}}",
            if k == 0 { "" } else { "," },
            l.id,
            quoted(l.params.method().as_str()),
            vector(&l.params.values()),
            vector(&[r, a]),
            matrix(l.params.covariance()),
            l.cov_reliable,
            l.span.start_index,
            l.span.end_index,
            l.span.count
        );
    }
    let _ = writeln!(o, "{}],", if map.lines.is_empty() { "" } else { "\n  " });

    let _ = write!(o, "  \"corners\": [");
    for (k, c) in map.corners.iter().enumerate() {
        let cov = c.cov.map(|m| DMatrix::from_iterator(2, 2, m.iter().copied()));
        let lines = match c.sources {
            Some([i, j]) => format!("[{i}, {j}]"),
            None => "null".into(),
        };
        let _ = write!(
            o,
            "{}\n    {{\"id\": {k}, \"x\": {}, \"y\": {}, \"cov\": {}, \"lines\": {lines}, \"method\": {}}}",
            if k == 0 { "" } else { "," },
            num(c.x),
            num(c.y),
            matrix(cov),
            quoted(c.method.as_str())
        );
    }
    let _ = writeln!(o, "{}],", if map.corners.is_empty() { "" } else { "\n  " });

    let diags: Vec<_> = map.diagnostics.iter().map(|d| format!("    {}", quoted(d))).collect();
    if diags.is_empty() {
        let _ = writeln!(o, "  \"diagnostics\": []");
    } else {
        let _ = writeln!(o, "  \"diagnostics\": [\n{}\n  ]", diags.join(",\n"));
    }
    let _ = writeln!(o, "}}");
    o
}

pub fn save_feature_map(map: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_feature_map(map)).map_err(|e| Error::io(path, e))
}

pub fn load_feature_map(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_map(&text)
}

#[derive(Deserialize)]
struct NoiseDoc {
    sigma_rho_m: f64,
    sigma_theta_rad: f64,
}

#[derive(Deserialize)]
struct LineDoc {
    id: usize,
    method: String,
    params: Vec<f64>,
    cov: Option<Vec<Vec<f64>>>,
    cov_reliable: bool,
    support: [usize; 2],
    count: usize,
}

#[derive(Deserialize)]
struct CornerDoc {
    x: f64,
    y: f64,
    cov: Option<[[f64; 2]; 2]>,
    lines: Option<[usize; 2]>,
    method: String,
}

#[derive(Deserialize)]
struct MapDoc {
    method: String,
    weighting: String,
    noise: NoiseDoc,
    scan_points: usize,
    scan_digest: String,
    lines: Vec<LineDoc>,
    corners: Vec<CornerDoc>,
    diagnostics: Vec<String>,
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Validation("covariance must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn parse_feature_map(text: &str) -> Result<FeatureMap> {
    let doc: MapDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let method: Method = doc
        .method
        .parse()
        .map_err(|e: Error| Error::Validation(e.to_string()))?;
    let weighting = match doc.weighting.as_str() {
        "sensor" => Weighting::Sensor,
        "unit" => Weighting::Unit,
        other => return Err(Error::Validation(format!("unknown weighting {other:?}"))),
    };
    let noise = NoiseModel::new(doc.noise.sigma_rho_m, doc.noise.sigma_theta_rad)?;

    let mut lines = Vec::with_capacity(doc.lines.len());
    for l in doc.lines {
        let m: Method = l.method.parse().map_err(|e: Error| Error::Validation(e.to_string()))?;
        let cov = l.cov.as_deref().map(rows_to_matrix).transpose()?;
        let [s, e] = l.support;
        if s >= doc.scan_points || e >= doc.scan_points {
            return Err(Error::Validation(format!(
                "line {} support [{s}, {e}] outside the scan",
                l.id
            )));
        }
        let span = SegmentSpan::wrapping(s, e, doc.scan_points);
        if span.count != l.count {
            return Err(Error::Validation(format!(
                "line {} count {} disagrees with its support",
                l.id, l.count
            )));
        }
        lines.push(LineFeature {
            id: l.id,
            span,
            params: LineParams::from_values(m, &l.params, cov.as_ref(), span)?,
            cov_reliable: l.cov_reliable,
        });
    }

    let mut corners = Vec::with_capacity(doc.corners.len());
    for c in doc.corners {
        let m: Method = c.method.parse().map_err(|e: Error| Error::Validation(e.to_string()))?;
        corners.push(CornerFeature {
            x: c.x,
            y: c.y,
            cov: c.cov.map(|r| Matrix2::new(r[0][0], r[0][1], r[1][0], r[1][1])),
            method: m,
            sources: c.lines,
        });
    }

    Ok(FeatureMap {
        method,
        weighting,
        noise,
        scan_points: doc.scan_points,
        scan_digest: doc.scan_digest,
        lines,
        corners,
        diagnostics: doc.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{cast_scan, square_room, Pose, Wall, WorldModel};

    fn square_scan() -> PolarScan {
        cast_scan(&square_room(2.0), &Pose::origin(), 360, &NoiseModel::NOISELESS, 1).unwrap()
    }

    #[test]
    fn square_room_yields_four_corners_for_every_method() {
        let scan = square_scan();
        for m in Method::ALL {
            let map = extract_feature_map(&scan, m, &ExtractConfig::default()).unwrap();
            assert_eq!(map.lines.len(), 4, "{m}");
            assert_eq!(map.corners.len(), 4, "{m}: {:?}", map.diagnostics);
            for c in &map.corners {
                assert!(
                    (c.x.abs() - 2.0).abs() < 1e-9 && (c.y.abs() - 2.0).abs() < 1e-9,
                    "{m}: {c:?}"
                );
                assert!(c.cov.is_some());
            }
        }
    }

    #[test]
    fn single_wall_has_no_corner() {
        let world = WorldModel::new(
            vec![Wall {
                a: (2.0, -1.0),
                b: (2.0, 1.0),
            }],
            "wall",
        )
        .unwrap();
        let scan = cast_scan(&world, &Pose::origin(), 360, &NoiseModel::NOISELESS, 1).unwrap();
        let map = extract_feature_map(&scan, Method::Wclm, &ExtractConfig::default()).unwrap();
        assert_eq!(map.lines.len(), 1);
        assert!(map.corners.is_empty());
    }

    #[test]
    fn collinear_spans_produce_no_corner() {
        // a wall with a step-free gap: two collinear spans
        let world = WorldModel::new(
            vec![
                Wall {
                    a: (2.0, -2.0),
                    b: (2.0, -0.2),
                },
                Wall {
                    a: (2.0, 0.2),
                    b: (2.0, 2.0),
                },
            ],
            "gap",
        )
        .unwrap();
        let scan = cast_scan(&world, &Pose::origin(), 720, &NoiseModel::NOISELESS, 1).unwrap();
        let map = extract_feature_map(&scan, Method::Arras, &ExtractConfig::default()).unwrap();
        assert_eq!(map.lines.len(), 2);
        assert!(map.corners.is_empty());
        assert!(
            map.diagnostics.iter().any(|d| d.contains("parallel")),
            "{:?}",
            map.diagnostics
        );
    }

    #[test]
    fn far_intersections_are_gated() {
        let joined = WorldModel::new(
            vec![
                Wall {
                    a: (3.0, -2.0),
                    b: (3.0, 0.0),
                },
                Wall {
                    a: (3.0, 0.0),
                    b: (2.9, 2.0),
                },
            ],
            "joined",
        )
        .unwrap();
        let scan = cast_scan(&joined, &Pose::origin(), 720, &NoiseModel::NOISELESS, 1).unwrap();
        let map = extract_feature_map(&scan, Method::Wclm, &ExtractConfig::default()).unwrap();
        assert_eq!(map.corners.len(), 1, "{:?}", map.diagnostics);

        // the extension of the second wall meets the first 1.6 m from its end
        let apart = WorldModel::new(
            vec![
                Wall {
                    a: (3.0, -2.0),
                    b: (3.0, -0.5),
                },
                Wall {
                    a: (2.5, 0.5),
                    b: (2.0, 2.0),
                },
            ],
            "apart",
        )
        .unwrap();
        let scan = cast_scan(&apart, &Pose::origin(), 720, &NoiseModel::NOISELESS, 1).unwrap();
        let map = extract_feature_map(&scan, Method::Wclm, &ExtractConfig::default()).unwrap();
        assert_eq!(map.lines.len(), 2);
        assert!(map.corners.is_empty());
        assert!(
            map.diagnostics.iter().any(|d| d.contains("gate")),
            "{:?}",
            map.diagnostics
        );
    }

    #[test]
    fn json_round_trip() {
        let scan = cast_scan(
            &square_room(2.0),
            &Pose::new(0.3, -0.1, 0.2).unwrap(),
            360,
            &NoiseModel::new(0.004, 0.0005).unwrap(),
            5,
        )
        .unwrap();
        for m in Method::ALL {
            let map = extract_feature_map(&scan, m, &ExtractConfig::default()).unwrap();
            let text = write_feature_map(&map);
            let back = parse_feature_map(&text).unwrap();
            assert_eq!(back, map);
            assert_eq!(write_feature_map(&back), text);
            back.check_scan(&scan).unwrap();
        }
    }

    #[test]
    fn empty_map_round_trips() {
        let scan = PolarScan::new(vec![], NoiseModel::default(), vec![]).unwrap();
        let map = extract_feature_map(&scan, Method::Siadat, &ExtractConfig::default()).unwrap();
        assert_eq!(parse_feature_map(&write_feature_map(&map)).unwrap(), map);
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            parse_feature_map("{\n  \"method\": "),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn mismatched_scan_is_rejected() {
        let scan = square_scan();
        let map = extract_feature_map(&scan, Method::Wclm, &ExtractConfig::default()).unwrap();
        let other = cast_scan(&square_room(2.5), &Pose::origin(), 360, &NoiseModel::NOISELESS, 1).unwrap();
        assert!(matches!(map.check_scan(&other), Err(Error::Validation(_))));
    }
}
