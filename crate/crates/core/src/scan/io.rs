//! Scan files: `#`-prefixed header lines followed by one
//! `theta_rad<TAB>rho_m` record per line. The header keys `sigma_rho_m` and
//! `sigma_theta_rad` carry the noise model; every other comment line is kept
//! as free metadata. Numbers are written with 17 significant digits so that
//! a save/load round trip is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{NoiseModel, PolarPoint, PolarScan};
use crate::error::{Error, Result};

const SIGMA_RHO_KEY: &str = "sigma_rho_m";
const SIGMA_THETA_KEY: &str = "sigma_theta_rad";

/// `{:.16e}` keeps 17 significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_scan(scan: &PolarScan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {SIGMA_RHO_KEY}: {}", fmt17(scan.noise.sigma_rho()));
    let _ = writeln!(out, "# {SIGMA_THETA_KEY}: {}", fmt17(scan.noise.sigma_theta()));
    for m in &scan.metadata {
        let _ = writeln!(out, "# {m}");
    }
    for p in &scan.points {
        let _ = writeln!(out, "{}\t{}", fmt17(p.theta()), fmt17(p.rho()));
    }
    out
}

pub fn save_scan(scan: &PolarScan, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_scan(scan)).map_err(|e| Error::io(path, e))
}

pub fn load_scan(path: impl AsRef<Path>) -> Result<PolarScan> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scan(&text)
}

/// Parses scan text. Missing sigma headers fall back to the RPLIDAR S1 model.
pub fn parse_scan(text: &str) -> Result<PolarScan> {
    let mut sigma_rho = None;
    let mut sigma_theta = None;
    let mut metadata = Vec::new();
    let mut points = Vec::new();

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if let Some(comment) = line.strip_prefix('#') {
            let body = comment.strip_prefix(' ').unwrap_or(comment);
            if let Some(v) = header_value(body, SIGMA_RHO_KEY) {
                sigma_rho = Some(parse_number(v, lineno)?);
            } else if let Some(v) = header_value(body, SIGMA_THETA_KEY) {
                sigma_theta = Some(parse_number(v, lineno)?);
            } else {
                metadata.push(body.to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(t), Some(r), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: "expected `theta_rad<TAB>rho_m`".into(),
            });
        };
        let theta = parse_number(t, lineno)?;
        let rho = parse_number(r, lineno)?;
        let index = points.len();
        let p = PolarPoint::new(rho, theta)
            .map_err(|e| Error::Validation(format!("point {index} (line {lineno}): {e}")))?;
        points.push(p);
    }

    let default = NoiseModel::default();
    let noise = NoiseModel::new(
        sigma_rho.unwrap_or(default.sigma_rho()),
        sigma_theta.unwrap_or(default.sigma_theta()),
    )?;
    PolarScan::new(points, noise, metadata)
}

fn header_value<'a>(body: &'a str, key: &str) -> Option<&'a str> {
    let rest = body.strip_prefix(key)?;
    let rest = rest.trim_start().strip_prefix(':')?;
    Some(rest.trim())
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {s:?}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::PolarPoint;
    use proptest::prelude::*;

    #[test]
    fn empty_scan_round_trips() {
        let scan = PolarScan::new(vec![], NoiseModel::default(), vec![]).unwrap();
        let back = parse_scan(&write_scan(&scan)).unwrap();
        assert!(back.is_empty());
        assert_eq!(back, scan);
    }

    #[test]
    fn three_points_round_trip_through_a_file() {
        let pts = vec![
            PolarPoint::new(1.25, -2.0).unwrap(),
            PolarPoint::new(std::f64::consts::PI, 0.1).unwrap(),
            PolarPoint::new(7.0 / 3.0, 1.0 / 3.0).unwrap(),
        ];
        let scan = PolarScan::new(
            pts,
            NoiseModel::new(0.01, 0.002).unwrap(),
            vec!["source: unit test".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        save_scan(&scan, &path).unwrap();
        assert_eq!(load_scan(&path).unwrap(), scan);
    }

    #[test]
    fn negative_range_names_the_index() {
        let text = "# sigma_rho_m: 0.05\n0.0\t1.0\n0.5\t-1\n";
        match parse_scan(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("point 1"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_record_reports_line() {
        let text = "# header\n0.0\t1.0\n0.5 2.0\n";
        match parse_scan(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_scan("0.1\tabc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn headers_are_recognized() {
        let scan = parse_scan("# sigma_rho_m: 0.01\n# sigma_theta_rad : 0.002\n# note\n").unwrap();
        assert_eq!(scan.noise().sigma_rho(), 0.01);
        assert_eq!(scan.noise().sigma_theta(), 0.002);
        assert_eq!(scan.metadata(), &["note".to_string()]);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(raw in prop::collection::vec((1e-3f64..100.0, -3.1f64..3.1), 0..40)) {
            let mut raw = raw;
            raw.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            raw.dedup_by(|a, b| a.1 == b.1);
            let pts = raw.iter().map(|&(r, t)| PolarPoint::new(r, t).unwrap()).collect();
            let scan = PolarScan::new(pts, NoiseModel::default(), vec![]).unwrap();
            let back = parse_scan(&write_scan(&scan)).unwrap();
            for (a, b) in scan.points().iter().zip(back.points()) {
                prop_assert_eq!(a.rho().to_bits(), b.rho().to_bits());
                prop_assert_eq!(a.theta().to_bits(), b.theta().to_bits());
            }
        }
    }
}
