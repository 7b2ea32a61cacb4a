//! Polygonal ground-truth environments and a seeded ray-casting range sensor.
//!
//! Random draws use ChaCha8 (`rand_chacha`) seeded with `seed_from_u64(seed)`;
//! ray `k` reads its noise from ChaCha stream `k`, so every ray's draw is
//! independent of how many other rays were cast or in what order. Gaussian
//! samples come from `rand_distr::Normal`, range error first, then bearing.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scan::{normalize_angle, NoiseModel, PolarPoint, PolarScan};

const MIN_SEGMENT_LENGTH: f64 = 1e-9;
const PARALLEL_GUARD: f64 = 1e-12;
const ENDPOINT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Wall {
    pub fn length(&self) -> f64 {
        (self.b.0 - self.a.0).hypot(self.b.1 - self.a.1)
    }

    fn distance_to(&self, p: (f64, f64)) -> f64 {
        let (ex, ey) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let (px, py) = (p.0 - self.a.0, p.1 - self.a.1);
        let u = ((px * ex + py * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
        (px - u * ex).hypot(py - u * ey)
    }

    /// Ray parameter of the hit, if the ray from `o` along unit `d` meets the wall.
    fn intersect(&self, o: (f64, f64), d: (f64, f64)) -> Option<f64> {
        let (ex, ey) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let denom = d.0 * ey - d.1 * ex;
        if denom.abs() < PARALLEL_GUARD * self.length() {
            return None;
        }
        let (ax, ay) = (self.a.0 - o.0, self.a.1 - o.1);
        let t = (ax * ey - ay * ex) / denom;
        let u = (ax * d.1 - ay * d.0) / denom;
        (t > 0.0 && (-ENDPOINT_SLACK..=1.0 + ENDPOINT_SLACK).contains(&u)).then_some(t)
    }
}

/// Wall segments in world coordinates (meters).
#[derive(Clone, Debug, PartialEq)]
pub struct WorldModel {
    walls: Vec<Wall>,
    name: String,
}

impl WorldModel {
    pub fn new(walls: Vec<Wall>, name: impl Into<String>) -> Result<Self> {
        if walls.is_empty() {
            return Err(Error::Validation("world needs at least one wall".into()));
        }
        for (i, w) in walls.iter().enumerate() {
            let finite = [w.a.0, w.a.1, w.b.0, w.b.1].iter().all(|v| v.is_finite());
            if !finite || w.length() <= MIN_SEGMENT_LENGTH {
                return Err(Error::Validation(format!(
                    "wall {i} has zero length or bad coordinates"
                )));
            }
        }
        Ok(Self {
            walls,
            name: name.into(),
        })
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Nearest wall hit along the world-frame direction `angle`.
    pub fn ray_range(&self, origin: (f64, f64), angle: f64) -> Option<f64> {
        let d = (angle.cos(), angle.sin());
        self.walls
            .iter()
            .filter_map(|w| w.intersect(origin, d))
            .min_by(f64::total_cmp)
    }
}

/// Parses `x1 y1 x2 y2` lines. `#` starts a comment; `# name: X` names the world.
pub fn parse_world(text: &str, default_name: &str) -> Result<WorldModel> {
    let mut walls = Vec::new();
    let mut name = default_name.to_string();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let (body, comment) = match raw.find('#') {
            Some(k) => (&raw[..k], Some(raw[k + 1..].trim())),
            None => (raw, None),
        };
        if let Some(n) = comment.and_then(|c| c.strip_prefix("name:")) {
            name = n.trim().to_string();
        }
        if body.trim().is_empty() {
            continue;
        }
        let nums = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let [x1, y1, x2, y2] = nums[..] else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 numbers `x1 y1 x2 y2`, got {}", nums.len()),
            });
        };
        walls.push(Wall {
            a: (x1, y1),
            b: (x2, y2),
        });
    }
    WorldModel::new(walls, name)
}

pub fn load_world(path: impl AsRef<Path>) -> Result<WorldModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("world");
    parse_world(&text, stem)
}

/// Sensor pose in the world frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && heading.is_finite()) {
            return Err(Error::Validation("pose must be finite".into()));
        }
        Ok(Self {
            x,
            y,
            heading: normalize_angle(heading),
        })
    }

    pub fn origin() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// World-frame point expressed in the sensor frame.
    pub fn to_sensor(&self, p: (f64, f64)) -> (f64, f64) {
        let (s, c) = self.heading.sin_cos();
        let (dx, dy) = (p.0 - self.x, p.1 - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Sensor-frame bearing of ray `k` out of `n_rays`, uniform over `[-π, π)`.
pub fn ray_bearing(k: usize, n_rays: usize) -> f64 {
    -PI + 2.0 * PI * (k as f64) / (n_rays as f64)
}

/// Casts one ray and applies noise drawn from substream `ray_index`.
/// Returns `None` when the ray escapes or the noisy range is not positive.
pub fn sample_ray(
    world: &WorldModel,
    pose: &Pose,
    bearing: f64,
    noise: &NoiseModel,
    seed: u64,
    ray_index: u64,
) -> Result<Option<PolarPoint>> {
    let Some(range) = world.ray_range((pose.x, pose.y), pose.heading + bearing) else {
        return Ok(None);
    };
    let (mut rho, mut theta) = (range, bearing);
    if noise.sigma_rho() > 0.0 || noise.sigma_theta() > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ray_index);
        let er = Normal::new(0.0, noise.sigma_rho()).expect("validated deviation");
        let et = Normal::new(0.0, noise.sigma_theta()).expect("validated deviation");
        rho += er.sample(&mut rng);
        theta += et.sample(&mut rng);
    }
    if rho <= 0.0 {
        return Ok(None);
    }
    PolarPoint::new(rho, theta).map(Some)
}

/// Synthesizes a scan of `world` from `pose` with `n_rays` uniformly spaced
/// bearings. Rays that hit nothing are omitted. Bearing noise can swap
/// neighbouring samples, so the output is sorted by measured bearing.
pub fn cast_scan(world: &WorldModel, pose: &Pose, n_rays: usize, noise: &NoiseModel, seed: u64) -> Result<PolarScan> {
    if n_rays == 0 {
        return Err(Error::Config("n_rays must be at least 1".into()));
    }
    if let Some(i) = world
        .walls
        .iter()
        .position(|w| w.distance_to((pose.x, pose.y)) < MIN_SEGMENT_LENGTH)
    {
        return Err(Error::DegenerateGeometry(format!("pose lies on wall {i}")));
    }
    let mut points = Vec::with_capacity(n_rays);
    for k in 0..n_rays {
        if let Some(p) = sample_ray(world, pose, ray_bearing(k, n_rays), noise, seed, k as u64)? {
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.theta().total_cmp(&b.theta()));
    points.dedup_by(|a, b| a.theta() == b.theta());
    let metadata = vec![
        format!("world: {}", world.name),
        format!("pose: {} {} {}", pose.x, pose.y, pose.heading),
        format!("rays: {n_rays}"),
        format!("seed: {seed}"),
        "rng: ChaCha8 stream-per-ray".to_string(),
    ];
    PolarScan::new(points, *noise, metadata)
}

/// Shared endpoints of consecutive walls (including last→first for closed
/// chains of three or more walls), in wall order.
pub fn ground_truth_corners(world: &WorldModel) -> Vec<(f64, f64)> {
    let w = &world.walls;
    let shared = |p: &Wall, q: &Wall| {
        let close = |u: (f64, f64), v: (f64, f64)| (u.0 - v.0).hypot(u.1 - v.1) < MIN_SEGMENT_LENGTH;
        [p.b, p.a].into_iter().find(|&e| close(e, q.a) || close(e, q.b))
    };
    let mut corners: Vec<_> = w.windows(2).filter_map(|pair| shared(&pair[0], &pair[1])).collect();
    if w.len() >= 3 {
        if let Some(c) = shared(&w[w.len() - 1], &w[0]) {
            corners.push(c);
        }
    }
    corners
}

/// Axis-aligned square room with walls at `±half` (closed chain).
pub fn square_room(half: f64) -> WorldModel {
    let h = half;
    let walls = vec![
        Wall {
            a: (-h, -h),
            b: (h, -h),
        },
        Wall { a: (h, -h), b: (h, h) },
        Wall { a: (h, h), b: (-h, h) },
        Wall {
            a: (-h, h),
            b: (-h, -h),
        },
    ];
    WorldModel::new(walls, "square").expect("valid square")
}

/// Builds a closed polygon world from its vertices.
pub fn polygon_world(vertices: &[(f64, f64)], name: &str) -> Result<WorldModel> {
    let n = vertices.len();
    let walls = (0..n)
        .map(|i| Wall {
            a: vertices[i],
            b: vertices[(i + 1) % n],
        })
        .collect();
    WorldModel::new(walls, name)
}
