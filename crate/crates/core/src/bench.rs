//! Per-corner timing and uncertainty as a function of supporting points.
//!
//! For each ladder entry `n`, both spans of the chosen corner are thinned to
//! `n` evenly spaced points and the full computation (two line fits, two
//! line covariances, intersection and corner covariance) is timed per method.
//! Inputs are prepared before timing starts, so the timed region does not
//! allocate. Each repetition times a batch of back-to-back runs long enough
//! to swamp timer resolution; the reported value is the median over
//! repetitions of the per-run batch average.

use std::fmt::Write as _;
use std::fs;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corners::CornerFeature;
use crate::error::{Error, Result};
use crate::features::{effective_noise, extract_feature_map, fit_input, intersect, ExtractConfig};
use crate::fit::{ArrasSums, FitInput, Method};
use crate::scan::PolarScan;
use crate::segment::SegmentSpan;
use crate::svg::render_bench_svg;

pub const MIN_REPETITIONS: usize = 31;
pub const WARMUP_RUNS: usize = 5;

pub const CSV_COLUMNS: [&str; 10] = [
    "n_points",
    "t_wclm_us",
    "t_arras_us",
    "t_siadat_us",
    "sx_wclm_mm",
    "sy_wclm_mm",
    "sx_arras_mm",
    "sy_arras_mm",
    "sx_siadat_mm",
    "sy_siadat_mm",
];

/// `lo..hi..step`, inclusive of `hi` when it falls on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ladder {
    pub lo: usize,
    pub hi: usize,
    pub step: usize,
}

impl Ladder {
    pub fn new(lo: usize, hi: usize, step: usize) -> Result<Self> {
        if lo < 2 || step == 0 || hi < lo {
            return Err(Error::Config(format!(
                "ladder needs 2 <= lo <= hi and step > 0, got {lo}..{hi}..{step}"
            )));
        }
        Ok(Self { lo, hi, step })
    }

    pub fn values(&self) -> Vec<usize> {
        (self.lo..=self.hi).step_by(self.step).collect()
    }
}

impl FromStr for Ladder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.split("..").collect();
        let bad = || Error::Config(format!("ladder must look like LO..HI..STEP, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let num = |p: &str| p.trim().parse::<usize>().map_err(|_| bad());
        Ladder::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub repetitions: usize,
    pub seed: u64,
    /// Segmentation, gate and noise used to locate the corner and propagate.
    pub extract: ExtractConfig,
    /// Shortest timed batch.
    pub min_batch: Duration,
    /// Also time the factored single-sum evaluation of the polar fit.
    pub arras_factored: bool,
    pub pin_cpu: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repetitions: MIN_REPETITIONS,
            seed: 0,
            extract: ExtractConfig::default(),
            min_batch: Duration::from_millis(1),
            arras_factored: false,
            pin_cpu: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n_points: usize,
    /// Median µs per full corner computation, indexed like [`Method::ALL`].
    pub t_us: [f64; 3],
    /// Propagated corner `(σx, σy)` in mm, indexed like [`Method::ALL`].
    pub sigma_mm: [(f64, f64); 3],
    /// Same as the polar entry of `t_us` with factored sums, when requested.
    pub t_arras_factored_us: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `key: value` pairs written as comments atop the CSV.
    pub environment: Vec<(String, String)>,
}

/// `n` indices spread evenly over `0..m`, shifted by a seeded phase.
pub fn even_subsample(m: usize, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let stride = m as f64 / n as f64;
    let phase = rng.random_range(0.0..1.0) * stride;
    (0..n)
        .map(|i| ((phase + i as f64 * stride).floor() as usize).min(m - 1))
        .collect()
}

fn span_input(scan: &PolarScan, span: SegmentSpan, pick: &[usize], cfg: &ExtractConfig) -> Result<FitInput> {
    let all: Vec<_> = span.indices(scan.len()).collect();
    let pts: Vec<_> = pick.iter().map(|&i| scan.points()[all[i]]).collect();
    Ok(FitInput::new(&pts, effective_noise(scan, cfg.noise), cfg.weighting)?.with_support(span))
}

fn full_corner(method: Method, sums: ArrasSums, a: &FitInput, b: &FitInput) -> Result<CornerFeature> {
    use crate::features::LineParams;
    if method == Method::Arras && sums == ArrasSums::Factored {
        let fit = |i: &FitInput| -> Result<LineParams> {
            let mut l = crate::fit::fit_line_arras_with(i, sums)?;
            l.cov = Some(crate::fit::arras_line_covariance_with(&l, i, sums)?);
            Ok(LineParams::Arras(l))
        };
        return intersect(&fit(a)?, &fit(b)?);
    }
    let (la, _) = fit_input(a, method)?;
    let (lb, _) = fit_input(b, method)?;
    intersect(&la, &lb)
}

/// Median µs of one full computation for each `(method, sums)` entry.
/// Repetitions interleave the entries so slow drifts in machine load hit
/// all of them alike.
fn time_methods(entries: &[(Method, ArrasSums)], a: &FitInput, b: &FitInput, cfg: &BenchConfig) -> Result<Vec<f64>> {
    let batch = |(method, sums): (Method, ArrasSums), inner: usize| {
        let t0 = Instant::now();
        for _ in 0..inner {
            let _ = full_corner(black_box(method), sums, black_box(a), black_box(b)).map(black_box);
        }
        t0.elapsed()
    };
    let mut inners = Vec::with_capacity(entries.len());
    for &(method, sums) in entries {
        full_corner(method, sums, a, b)?;
        let mut inner = 1usize;
        while batch((method, sums), inner) < cfg.min_batch && inner < 1 << 24 {
            inner *= 2;
        }
        inners.push(inner);
    }
    let mut samples = vec![Vec::with_capacity(cfg.repetitions); entries.len()];
    for rep in 0..WARMUP_RUNS + cfg.repetitions {
        for (k, (&entry, &inner)) in entries.iter().zip(&inners).enumerate() {
            let us = batch(entry, inner).as_secs_f64() * 1e6 / inner as f64;
            if rep >= WARMUP_RUNS {
                samples[k].push(us);
            }
        }
    }
    Ok(samples
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        })
        .collect())
}

pub fn run_corner_bench(
    scan: &PolarScan,
    corner_id: usize,
    ladder: &[usize],
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>> {
    if cfg.repetitions < MIN_REPETITIONS {
        return Err(Error::Config(format!(
            "at least {MIN_REPETITIONS} repetitions are required, got {}",
            cfg.repetitions
        )));
    }
    if ladder.is_empty() {
        return Err(Error::Config("empty ladder".into()));
    }
    let map = extract_feature_map(scan, Method::Wclm, &cfg.extract)?;
    let corner = map.corners.get(corner_id).ok_or_else(|| {
        Error::Config(format!(
            "corner {corner_id} does not exist; the scan has {} corners",
            map.corners.len()
        ))
    })?;
    let (span_a, span_b) = map
        .corner_spans(corner)
        .ok_or_else(|| Error::Validation(format!("corner {corner_id} has no source lines")))?;
    let available = span_a.count.min(span_b.count);
    let largest = *ladder.iter().max().expect("non-empty");
    if largest > available || ladder.iter().any(|&n| n < 2) {
        return Err(Error::Config(format!(
            "ladder entries must lie in 2..={available} (points on the shorter line of corner {corner_id}), got max {largest}"
        )));
    }

    let _pin = cfg.pin_cpu.then(CpuPin::current);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let a = span_input(scan, span_a, &even_subsample(span_a.count, n, &mut rng), &cfg.extract)?;
        let b = span_input(scan, span_b, &even_subsample(span_b.count, n, &mut rng), &cfg.extract)?;
        let mut sigma_mm = [(0.0, 0.0); 3];
        for (i, &m) in Method::ALL.iter().enumerate() {
            let c = full_corner(m, ArrasSums::DoubleSum, &a, &b)?;
            let (sx, sy) = c.sigmas().unwrap_or((f64::NAN, f64::NAN));
            sigma_mm[i] = (sx * 1000.0, sy * 1000.0);
        }
        let mut entries: Vec<_> = Method::ALL.iter().map(|&m| (m, ArrasSums::DoubleSum)).collect();
        if cfg.arras_factored {
            entries.push((Method::Arras, ArrasSums::Factored));
        }
        let t = time_methods(&entries, &a, &b, cfg)?;
        let t_us = [t[0], t[1], t[2]];
        let t_arras_factored_us = t.get(3).copied();
        rows.push(BenchRow {
            n_points: n,
            t_us,
            sigma_mm,
            t_arras_factored_us,
        });
    }
    Ok(rows)
}

/// Host description and methodology, for the CSV header.
pub fn environment_metadata(cfg: &BenchConfig, corner_id: usize) -> Vec<(String, String)> {
    let cpu = fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|t| {
            t.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".into());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    vec![
        ("cpu".into(), cpu),
        ("os".into(), format!("{} {}", std::env::consts::OS, std::env::consts::ARCH)),
        ("logical_cpus".into(), threads.to_string()),
        ("pinned_to_one_cpu".into(), (cfg.pin_cpu && cfg!(target_os = "linux")).to_string()),
        ("corner".into(), corner_id.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("repetitions".into(), cfg.repetitions.to_string()),
        ("warmup_batches".into(), WARMUP_RUNS.to_string()),
        ("min_batch_us".into(), cfg.min_batch.as_micros().to_string()),
        (
            "timing".into(),
            "monotonic clock; median over repetitions of per-run batch averages; scope = 2 fits + 2 line covariances + corner + corner covariance".into(),
        ),
        ("arras_sums".into(), "double sums, O(n^2)".into()),
        ("subsampling".into(), "evenly spaced with seeded phase, n points per line".into()),
    ]
}

pub fn write_bench_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    for (k, v) in &report.environment {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(out, "{}", CSV_COLUMNS.join(","));
    for r in &report.rows {
        let mut cells = vec![r.n_points.to_string()];
        cells.extend(r.t_us.iter().map(|t| format!("{t:.4}")));
        for (sx, sy) in r.sigma_mm {
            cells.push(format!("{sx:.6}"));
            cells.push(format!("{sy:.6}"));
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    for r in &report.rows {
        if let Some(t) = r.t_arras_factored_us {
            let _ = writeln!(out, "# t_arras_factored_us n={}: {t:.4}", r.n_points);
        }
    }
    out
}

/// Parses the data rows of a bench CSV, skipping `#` lines.
pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h == CSV_COLUMNS.join(",") => {}
        Some((i, _)) => {
            return Err(Error::Parse {
                line: i + 1,
                message: "unexpected bench CSV header".into(),
            })
        }
        None => return Ok(vec![]),
    }
    lines
        .map(|(i, l)| {
            let bad = |message: String| Error::Parse { line: i + 1, message };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != CSV_COLUMNS.len() {
                return Err(bad(format!("expected {} fields", CSV_COLUMNS.len())));
            }
            let v = |k: usize| f[k].parse::<f64>().map_err(|_| bad(format!("bad number {:?}", f[k])));
            Ok(BenchRow {
                n_points: f[0].parse().map_err(|_| bad(format!("bad count {:?}", f[0])))?,
                t_us: [v(1)?, v(2)?, v(3)?],
                sigma_mm: [(v(4)?, v(5)?), (v(6)?, v(7)?), (v(8)?, v(9)?)],
                t_arras_factored_us: None,
            })
        })
        .collect()
}

/// Writes `<prefix>.csv` and `<prefix>.svg`.
pub fn emit_bench_report(report: &BenchReport, out_prefix: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    if report.rows.is_empty() {
        return Err(Error::Config("no bench rows to report".into()));
    }
    let prefix = out_prefix.as_ref().as_os_str().to_owned();
    let with_ext = |ext: &str| {
        let mut p = prefix.clone();
        p.push(ext);
        PathBuf::from(p)
    };
    let (csv, svg) = (with_ext(".csv"), with_ext(".svg"));
    fs::write(&csv, write_bench_csv(report)).map_err(|e| Error::io(&csv, e))?;
    fs::write(&svg, render_bench_svg(&report.rows)).map_err(|e| Error::io(&svg, e))?;
    Ok((csv, svg))
}

/// Pins the calling thread to the CPU it is running on and restores the
/// previous affinity on drop.
struct CpuPin {
    #[cfg(target_os = "linux")]
    previous: Option<libc::cpu_set_t>,
}

impl CpuPin {
    #[cfg(target_os = "linux")]
    fn current() -> Self {
        // SAFETY: cpu_set_t is plain data; the libc calls only read/write the
        // provided set for the calling thread (pid 0).
        unsafe {
            let mut previous: libc::cpu_set_t = std::mem::zeroed();
            let size = std::mem::size_of::<libc::cpu_set_t>();
            if libc::sched_getaffinity(0, size, &mut previous) != 0 {
                return Self { previous: None };
            }
            let cpu = libc::sched_getcpu();
            if cpu < 0 {
                return Self { previous: None };
            }
            let mut one: libc::cpu_set_t = std::mem::zeroed();
            libc::CPU_SET(cpu as usize, &mut one);
            if libc::sched_setaffinity(0, size, &one) != 0 {
                return Self { previous: None };
            }
            Self {
                previous: Some(previous),
            }
        }
    }

    #[cfg(not(target_os = "linux"))]
    fn current() -> Self {
        Self {}
    }
}

#[cfg(target_os = "linux")]
impl Drop for CpuPin {
    fn drop(&mut self) {
        if let Some(previous) = self.previous {
            // SAFETY: restores a set previously returned by sched_getaffinity.
            unsafe {
                libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &previous);
            }
        }
    }
}
