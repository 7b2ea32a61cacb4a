//! Side-by-side corner uncertainties of the three fitters on one scan.

use std::fmt::Write as _;

use crate::corners::CornerFeature;
use crate::error::Result;
use crate::features::{build_map, candidate_pairs, ExtractConfig, FeatureMap};
use crate::fit::Method;
use crate::scan::PolarScan;
use crate::segment::segment_scan;

/// One adjacent span pair, with the corner each method found there.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub id: usize,
    /// Indices of the two spans in the segmentation.
    pub spans: (usize, usize),
    /// Indexed like [`Method::ALL`].
    pub corners: [Option<CornerFeature>; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    /// The per-method feature maps, indexed like [`Method::ALL`].
    pub maps: Vec<FeatureMap>,
}

fn method_index(m: Method) -> usize {
    Method::ALL.iter().position(|&x| x == m).expect("listed method")
}

/// Runs every method on the same segmentation and matches corners by span pair.
pub fn compare_methods(scan: &PolarScan, cfg: &ExtractConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let spans = segment_scan(scan, &cfg.segmentation)?;
    let maps: Vec<_> = Method::ALL.iter().map(|&m| build_map(scan, &spans, m, cfg)).collect();

    let mut rows = Vec::new();
    for (k, l) in candidate_pairs(scan, spans.len()) {
        let mut corners = [None; 3];
        for (slot, map) in corners.iter_mut().zip(&maps) {
            *slot = map
                .corners
                .iter()
                .find(|c| map.corner_spans(c) == Some((spans[k], spans[l])))
                .copied();
        }
        if corners.iter().any(Option::is_some) {
            rows.push(ComparisonRow {
                id: rows.len(),
                spans: (k, l),
                corners,
            });
        }
    }
    Ok(ComparisonReport { rows, maps })
}

const MM: f64 = 1000.0;

impl ComparisonReport {
    /// Mean `(σx, σy)` in meters over the rows where `method` found a corner.
    pub fn mean_sigmas(&self, method: Method) -> Option<(f64, f64)> {
        let i = method_index(method);
        let s: Vec<_> = self.rows.iter().filter_map(|r| r.corners[i]?.sigmas()).collect();
        if s.is_empty() {
            return None;
        }
        let n = s.len() as f64;
        Some((
            s.iter().map(|v| v.0).sum::<f64>() / n,
            s.iter().map(|v| v.1).sum::<f64>() / n,
        ))
    }

    fn header() -> Vec<String> {
        let mut h = vec!["corner".to_string()];
        for m in Method::ALL {
            for col in ["x_m", "y_m", "sx_mm", "sy_mm"] {
                let (name, unit) = col.split_once('_').expect("unit suffix");
                h.push(format!("{name}_{m}_{unit}"));
            }
        }
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut cells = vec![r.id.to_string()];
                for c in &r.corners {
                    match c {
                        Some(c) => {
                            cells.push(format!("{:.6}", c.x));
                            cells.push(format!("{:.6}", c.y));
                            match c.sigmas() {
                                Some((sx, sy)) => {
                                    cells.push(format!("{:.3}", sx * MM));
                                    cells.push(format!("{:.3}", sy * MM));
                                }
                                None => cells.extend(["NA".into(), "NA".into()]),
                            }
                        }
                        None => cells.extend(std::iter::repeat_n("NA".to_string(), 4)),
                    }
                }
                cells
            })
            .collect()
    }

    fn mean_lines(&self) -> Vec<String> {
        Method::ALL
            .iter()
            .map(|&m| match self.mean_sigmas(m) {
                Some((sx, sy)) => format!("# mean {m}: sx_mm={:.3} sy_mm={:.3}", sx * MM, sy * MM),
                None => format!("# mean {m}: NA"),
            })
            .collect()
    }

    /// Tab-separated table, one row per corner, with per-method means as
    /// trailing `#` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::header().join("\t"));
        for row in self.cells() {
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        for l in self.mean_lines() {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    /// The same content with space-aligned columns.
    pub fn to_table(&self) -> String {
        let header = Self::header();
        let cells = self.cells();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].len())
                    .chain([header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let fmt_row = |row: &[String]| {
            row.iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", fmt_row(&header));
        for row in &cells {
            let _ = writeln!(out, "{}", fmt_row(row));
        }
        for l in self.mean_lines() {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}
