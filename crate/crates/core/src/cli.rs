//! The `csf` command line.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{emit_bench_report, environment_metadata, run_corner_bench, BenchConfig, BenchReport, Ladder};
use crate::error::{Error, Result};
use crate::features::{extract_feature_map, load_feature_map, save_feature_map, ExtractConfig};
use crate::fit::{Method, Weighting};
use crate::report::compare_methods;
use crate::scan::{load_scan, save_scan, NoiseModel, PolarScan};
use crate::segment::SegmentConfig;
use crate::svg::render_map_svg;
use crate::world::{cast_scan, load_world, Pose};

#[derive(Debug, Parser)]
#[command(
    name = "csf",
    version,
    about = "2D LiDAR line and corner extraction with uncertainty propagation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ray-cast a synthetic scan of a wall world.
    Generate(GenerateArgs),
    /// Segment a scan, fit lines with one method and intersect adjacent lines.
    Extract(ExtractArgs),
    /// Run all three methods on one scan and tabulate corner uncertainties.
    Compare(CompareArgs),
    /// Time the full per-corner computation over a ladder of point counts.
    Bench(BenchArgs),
    /// Draw a feature map over its scan as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// World file: one wall `x1 y1 x2 y2` (m) per line.
    #[arg(long)]
    pub world: PathBuf,
    /// Sensor pose `X,Y,H`: position in m, heading in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub pose: String,
    /// Rays evenly spaced over a full turn.
    #[arg(long)]
    pub rays: usize,
    /// Noise seed; falls back to $CSF_SEED.
    #[arg(long, env = "CSF_SEED")]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Range noise applied to the samples, in mm (RPLIDAR S1 range accuracy by default).
    #[arg(long, default_value_t = 50.0)]
    pub sigma_rho_mm: f64,
    /// Bearing noise applied to the samples, in degrees (half the RPLIDAR S1 angular resolution by default).
    #[arg(long, default_value_t = 0.1955)]
    pub sigma_theta_deg: f64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Line-tracking distance threshold in mm.
    #[arg(long, default_value_t = 20.0)]
    pub threshold_mm: f64,
    /// Minimum points per segment.
    #[arg(long, default_value_t = SegmentConfig::DEFAULT_MIN_POINTS)]
    pub min_points: usize,
    /// Samples farther than this (m) are dropped.
    #[arg(long, default_value_t = SegmentConfig::DEFAULT_MAX_RANGE_M)]
    pub max_range_m: f64,
    /// A corner must lie within this distance (m) of both of its spans' nearer ends.
    #[arg(long, default_value_t = ExtractConfig::DEFAULT_GATE_M)]
    pub gate_m: f64,
    /// Range deviation (mm) used for weighting and propagation; defaults to the scan header.
    #[arg(long)]
    pub sigma_rho_mm: Option<f64>,
    /// Bearing deviation (degrees) used for weighting and propagation; defaults to the scan header.
    #[arg(long)]
    pub sigma_theta_deg: Option<f64>,
    /// Weight every point equally instead of by the inverse determinant of its covariance.
    #[arg(long)]
    pub unit_weights: bool,
}

impl PipelineArgs {
    pub fn config(&self, scan: &PolarScan) -> Result<ExtractConfig> {
        if !(self.threshold_mm > 0.0) {
            return Err(Error::Config(format!(
                "--threshold-mm must be positive, got {}",
                self.threshold_mm
            )));
        }
        let noise = match (self.sigma_rho_mm, self.sigma_theta_deg) {
            (None, None) => None,
            (r, t) => Some(
                NoiseModel::new(
                    r.map_or(scan.noise().sigma_rho(), |mm| mm / 1000.0),
                    t.map_or(scan.noise().sigma_theta(), f64::to_radians),
                )
                .map_err(|e| Error::Config(e.to_string()))?,
            ),
        };
        let cfg = ExtractConfig {
            segmentation: SegmentConfig {
                threshold_m: self.threshold_mm / 1000.0,
                min_points: self.min_points,
                max_range_m: self.max_range_m,
            },
            gate_m: self.gate_m,
            weighting: if self.unit_weights {
                Weighting::Unit
            } else {
                Weighting::Sensor
            },
            noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub scan: PathBuf,
    /// wclm, arras or siadat.
    #[arg(long, default_value = "wclm")]
    pub method: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scan: PathBuf,
    /// Tab-separated report; an aligned copy goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scan: PathBuf,
    /// Corner index in the wclm feature map of the scan.
    #[arg(long)]
    pub corner: usize,
    /// Points per line as LO..HI..STEP.
    #[arg(long, default_value = "10..130..10")]
    pub ladder: String,
    /// Timed repetitions per entry, at least 31.
    #[arg(long, default_value_t = crate::bench::MIN_REPETITIONS)]
    pub reps: usize,
    /// Writes PREFIX.csv and PREFIX.svg.
    #[arg(long)]
    pub out_prefix: PathBuf,
    /// Subsampling seed; falls back to $CSF_SEED, then 0.
    #[arg(long, env = "CSF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Also time the factored O(n) evaluation of the polar fit (reported as comments).
    #[arg(long)]
    pub arras_factored: bool,
    /// Do not pin the timing thread to one CPU.
    #[arg(long)]
    pub no_pin: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pose(s: &str) -> Result<Pose> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("--pose must be X,Y,H, got {s:?}")))?;
    let [x, y, h] = v[..] else {
        return Err(Error::Config(format!("--pose must be X,Y,H, got {s:?}")));
    };
    Pose::new(x, y, h.to_radians()).map_err(|e| Error::Config(e.to_string()))
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let world = load_world(&a.world)?;
            let pose = parse_pose(&a.pose)?;
            let noise = NoiseModel::new(a.sigma_rho_mm / 1000.0, a.sigma_theta_deg.to_radians())
                .map_err(|e| Error::Config(e.to_string()))?;
            let scan = cast_scan(&world, &pose, a.rays, &noise, a.seed)?;
            save_scan(&scan, &a.out)?;
            eprintln!(
                "{} of {} rays hit a wall; wrote {}",
                scan.len(),
                a.rays,
                a.out.display()
            );
        }
        Command::Extract(a) => {
            let method: Method = a.method.parse().map_err(|_| {
                Error::Config(format!(
                    "--method must be wclm, arras or siadat, got {:?} (use `compare` for all three)",
                    a.method
                ))
            })?;
            let scan = load_scan(&a.scan)?;
            let cfg = a.pipeline.config(&scan)?;
            let map = extract_feature_map(&scan, method, &cfg)?;
            save_feature_map(&map, &a.out)?;
            for d in &map.diagnostics {
                eprintln!("note: {d}");
            }
            eprintln!(
                "{} lines, {} corners; wrote {}",
                map.lines.len(),
                map.corners.len(),
                a.out.display()
            );
        }
        Command::Compare(a) => {
            let scan = load_scan(&a.scan)?;
            let cfg = a.pipeline.config(&scan)?;
            let report = compare_methods(&scan, &cfg)?;
            write_text(&a.out, &report.to_tsv())?;
            print!("{}", report.to_table());
        }
        Command::Bench(a) => {
            let ladder: Ladder = a.ladder.parse()?;
            let scan = load_scan(&a.scan)?;
            let cfg = BenchConfig {
                repetitions: a.reps,
                seed: a.seed,
                extract: a.pipeline.config(&scan)?,
                arras_factored: a.arras_factored,
                pin_cpu: !a.no_pin,
                ..BenchConfig::default()
            };
            let rows = run_corner_bench(&scan, a.corner, &ladder.values(), &cfg)?;
            let report = BenchReport {
                rows,
                environment: environment_metadata(&cfg, a.corner),
            };
            let (csv, svg) = emit_bench_report(&report, &a.out_prefix)?;
            eprintln!("wrote {} and {}", csv.display(), svg.display());
        }
        Command::Plot(a) => {
            let map = load_feature_map(&a.features)?;
            let scan = load_scan(&a.scan)?;
            write_text(&a.out, &render_map_svg(&map, &scan)?)?;
            eprintln!("wrote {}", a.out.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn pose_parsing() {
        let p = parse_pose("-1.5,2,90").unwrap();
        assert_eq!((p.x, p.y), (-1.5, 2.0));
        assert!((p.heading() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(parse_pose("1,2"), Err(Error::Config(_))));
        assert!(matches!(parse_pose("1,x,2"), Err(Error::Config(_))));
    }
}
