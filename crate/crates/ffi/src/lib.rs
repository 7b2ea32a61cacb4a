//! C ABI over `csf-core`.
//!
//! Scans and feature maps are opaque handles created and released through
//! this interface. Every fallible call returns a [`CsfStatus`]; the message of
//! the most recent failure on the calling thread is available from
//! [`csf_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use csf_core::features::{extract_feature_map, load_feature_map, save_feature_map, write_feature_map};
use csf_core::scan::{load_scan, save_scan};
use csf_core::world::load_world;
use csf_core::{
    cast_scan, Error, ExtractConfig, FeatureMap, Method, NoiseModel, PolarPoint, PolarScan, Pose, SegmentConfig,
    Weighting,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsfStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad configuration, unknown method, non-UTF-8 string.
    InvalidArgument = 2,
    /// Malformed scan, world or feature-map text.
    Parse = 3,
    /// Input that is well formed but inconsistent.
    Validation = 4,
    /// Coincident points, isotropic scatter, a point at the origin.
    Degenerate = 5,
    ParallelLines = 6,
    MissingCovariance = 7,
    Io = 8,
    /// Index past the end of a collection.
    OutOfRange = 9,
    /// Internal error; the message says more.
    Panic = 10,
}

/// Line estimator.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsfMethod {
    /// Linear fit of the inversion point `(x_q, y_q)`.
    Wclm = 0,
    /// Polar `(r, alpha)` regression.
    Arras = 1,
    /// Implicit `(a, b, c)` total least squares.
    Siadat = 2,
}

impl From<CsfMethod> for Method {
    fn from(m: CsfMethod) -> Self {
        match m {
            CsfMethod::Wclm => Method::Wclm,
            CsfMethod::Arras => Method::Arras,
            CsfMethod::Siadat => Method::Siadat,
        }
    }
}

impl From<Method> for CsfMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Wclm => CsfMethod::Wclm,
            Method::Arras => CsfMethod::Arras,
            Method::Siadat => CsfMethod::Siadat,
        }
    }
}

/// Opaque scan handle.
pub struct CsfScan(PolarScan);

/// Opaque feature-map handle.
pub struct CsfFeatureMap(FeatureMap);

/// Segmentation and propagation settings for [`csf_extract`]. Start from
/// [`csf_extract_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsfExtractOptions {
    pub threshold_m: f64,
    pub min_points: usize,
    pub max_range_m: f64,
    pub gate_m: f64,
    /// Range deviation (m) for weighting and propagation; negative uses the scan header.
    pub sigma_rho: f64,
    /// Bearing deviation (rad); negative uses the scan header.
    pub sigma_theta: f64,
    /// Weight every point equally.
    pub unit_weights: bool,
}

/// Fitted line parameters with their covariance.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsfLine {
    pub method: CsfMethod,
    /// `(x_q, y_q)`, `(r, alpha)` or `(a, b, c)`; unused entries are zero.
    pub params: [f64; 3],
    pub n_params: usize,
    /// Row-major `n_params x n_params` covariance in the leading entries.
    pub cov: [f64; 9],
    /// Perpendicular distance and normal bearing, whatever the method.
    pub r: f64,
    pub alpha: f64,
    /// False when the covariance comes from a near-degenerate configuration.
    pub cov_reliable: bool,
    /// First and last scan index of the supporting span, and its size.
    pub start_index: usize,
    pub end_index: usize,
    pub count: usize,
}

/// Corner position with its covariance.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsfCorner {
    pub x: f64,
    pub y: f64,
    /// Row-major 2x2 covariance; zero when `has_cov` is false.
    pub cov: [f64; 4],
    pub has_cov: bool,
    /// Ids of the two source lines, or `SIZE_MAX` when unknown.
    pub line_a: usize,
    pub line_b: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CsfStatus {
    match e {
        Error::Config(_) => CsfStatus::InvalidArgument,
        Error::Parse { .. } => CsfStatus::Parse,
        Error::Validation(_) => CsfStatus::Validation,
        Error::OriginInversion | Error::DegenerateGeometry(_) | Error::AmbiguousDirection => CsfStatus::Degenerate,
        Error::ParallelLines => CsfStatus::ParallelLines,
        Error::MissingCovariance => CsfStatus::MissingCovariance,
        Error::Io { .. } => CsfStatus::Io,
    }
}

struct Failure(CsfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: CsfStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, recording any failure or panic for [`csf_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CsfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CsfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&msg);
            CsfStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return fail(CsfStatus::NullPointer, format!("{what} is null"));
    }
    match unsafe { CStr::from_ptr(p) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(CsfStatus::InvalidArgument, format!("{what} is not valid UTF-8")),
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| Failure(CsfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| Failure(CsfStatus::NullPointer, format!("{what} is null")))
}

unsafe fn polar_points(rho: *const f64, theta: *const f64, n: usize) -> Result<Vec<PolarPoint>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if rho.is_null() || theta.is_null() {
        return fail(CsfStatus::NullPointer, "rho or theta is null");
    }
    let (rho, theta) = unsafe { (std::slice::from_raw_parts(rho, n), std::slice::from_raw_parts(theta, n)) };
    Ok(rho
        .iter()
        .zip(theta)
        .map(|(&r, &t)| PolarPoint::new(r, t))
        .collect::<csf_core::Result<_>>()?)
}

// --- library ------------------------------------------------------------------

/// Version string of the library, static storage.
#[no_mangle]
pub extern "C" fn csf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn csf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn csf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

// --- scans --------------------------------------------------------------------

/// Builds a scan from `n` range/bearing pairs (m, rad) and the sensor noise.
///
/// # Safety
/// `rho` and `theta` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_new(
    rho: *const f64,
    theta: *const f64,
    n: usize,
    sigma_rho: f64,
    sigma_theta: f64,
    out: *mut *mut CsfScan,
) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let points = unsafe { polar_points(rho, theta, n) }?;
        let noise = NoiseModel::new(sigma_rho, sigma_theta)?;
        let scan = PolarScan::new(points, noise, Vec::new())?;
        *out = Box::into_raw(Box::new(CsfScan(scan)));
        Ok(())
    })
}

/// Reads a scan file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_load(path: *const c_char, out: *mut *mut CsfScan) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let scan = load_scan(unsafe { path_arg(path, "path") }?)?;
        *out = Box::into_raw(Box::new(CsfScan(scan)));
        Ok(())
    })
}

/// Writes a scan file.
///
/// # Safety
/// `scan` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_save(scan: *const CsfScan, path: *const c_char) -> CsfStatus {
    guard(|| {
        let scan = unsafe { handle(scan, "scan") }?;
        save_scan(&scan.0, unsafe { path_arg(path, "path") }?)?;
        Ok(())
    })
}

/// Ray-casts a scan of the world file from pose `(x, y, heading)` (m, m, rad)
/// with `n_rays` bearings over a full turn and the given noise.
///
/// # Safety
/// `world_path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_generate(
    world_path: *const c_char,
    x: f64,
    y: f64,
    heading: f64,
    n_rays: usize,
    sigma_rho: f64,
    sigma_theta: f64,
    seed: u64,
    out: *mut *mut CsfScan,
) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let world = load_world(unsafe { path_arg(world_path, "world_path") }?)?;
        let pose = Pose::new(x, y, heading)?;
        let noise = NoiseModel::new(sigma_rho, sigma_theta)?;
        let scan = cast_scan(&world, &pose, n_rays, &noise, seed)?;
        *out = Box::into_raw(Box::new(CsfScan(scan)));
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `scan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_len(scan: *const CsfScan) -> usize {
    unsafe { scan.as_ref() }.map_or(0, |s| s.0.len())
}

/// Copies sample `i` as range and bearing.
///
/// # Safety
/// `scan` must be a live handle; `rho` and `theta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_point(scan: *const CsfScan, i: usize, rho: *mut f64, theta: *mut f64) -> CsfStatus {
    guard(|| {
        let scan = unsafe { handle(scan, "scan") }?;
        let (rho, theta) = (unsafe { out_arg(rho, "rho") }?, unsafe { out_arg(theta, "theta") }?);
        let Some(p) = scan.0.points().get(i) else {
            return fail(CsfStatus::OutOfRange, format!("point {i} of {}", scan.0.len()));
        };
        (*rho, *theta) = (p.rho(), p.theta());
        Ok(())
    })
}

/// Releases a scan. Null is ignored.
///
/// # Safety
/// `scan` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csf_scan_free(scan: *mut CsfScan) {
    if !scan.is_null() {
        drop(unsafe { Box::from_raw(scan) });
    }
}

// --- line fits ----------------------------------------------------------------

fn line_of(f: &csf_core::LineFeature) -> CsfLine {
    let values = f.params.values();
    let mut params = [0.0; 3];
    params[..values.len()].copy_from_slice(&values);
    let k = values.len();
    let mut cov = [0.0; 9];
    if let Some(c) = f.params.covariance() {
        for i in 0..k {
            for j in 0..k {
                cov[i * k + j] = c[(i, j)];
            }
        }
    }
    let (r, alpha) = f.params.polar();
    CsfLine {
        method: f.params.method().into(),
        params,
        n_params: k,
        cov,
        r,
        alpha,
        cov_reliable: f.cov_reliable,
        start_index: f.span.start_index,
        end_index: f.span.end_index,
        count: f.span.count,
    }
}

/// Fits one line to `n` range/bearing pairs and propagates the given noise.
/// The span fields of the result index the input arrays.
///
/// # Safety
/// `rho` and `theta` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_fit_line(
    method: CsfMethod,
    rho: *const f64,
    theta: *const f64,
    n: usize,
    sigma_rho: f64,
    sigma_theta: f64,
    out: *mut CsfLine,
) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let points = unsafe { polar_points(rho, theta, n) }?;
        let noise = NoiseModel::new(sigma_rho, sigma_theta)?;
        let scan = PolarScan::new(points, noise, Vec::new())?;
        let span = csf_core::SegmentSpan::new(0, n.saturating_sub(1));
        let (params, cov_reliable) =
            csf_core::features::fit_span(&scan, span, method.into(), noise, Weighting::Sensor)?;
        *out = line_of(&csf_core::LineFeature {
            id: 0,
            span,
            params,
            cov_reliable,
        });
        Ok(())
    })
}

// --- feature maps -------------------------------------------------------------

/// Defaults used by the command line tool.
#[no_mangle]
pub extern "C" fn csf_extract_options_default() -> CsfExtractOptions {
    let seg = SegmentConfig::default();
    CsfExtractOptions {
        threshold_m: seg.threshold_m,
        min_points: seg.min_points,
        max_range_m: seg.max_range_m,
        gate_m: ExtractConfig::DEFAULT_GATE_M,
        sigma_rho: -1.0,
        sigma_theta: -1.0,
        unit_weights: false,
    }
}

fn extract_config(o: &CsfExtractOptions, scan: &PolarScan) -> Result<ExtractConfig, Failure> {
    let noise = match (o.sigma_rho < 0.0, o.sigma_theta < 0.0) {
        (true, true) => None,
        (r, t) => Some(NoiseModel::new(
            if r { scan.noise().sigma_rho() } else { o.sigma_rho },
            if t { scan.noise().sigma_theta() } else { o.sigma_theta },
        )?),
    };
    let cfg = ExtractConfig {
        segmentation: SegmentConfig {
            threshold_m: o.threshold_m,
            min_points: o.min_points,
            max_range_m: o.max_range_m,
        },
        gate_m: o.gate_m,
        weighting: if o.unit_weights {
            Weighting::Unit
        } else {
            Weighting::Sensor
        },
        noise,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Segments `scan`, fits every span with `method` and intersects adjacent
/// lines. `options` may be null for the defaults.
///
/// # Safety
/// `scan` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn csf_extract(
    scan: *const CsfScan,
    method: CsfMethod,
    options: *const CsfExtractOptions,
    out: *mut *mut CsfFeatureMap,
) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let scan = unsafe { handle(scan, "scan") }?;
        let opts = unsafe { options.as_ref() }
            .copied()
            .unwrap_or_else(|| csf_extract_options_default());
        let cfg = extract_config(&opts, &scan.0)?;
        let map = extract_feature_map(&scan.0, method.into(), &cfg)?;
        *out = Box::into_raw(Box::new(CsfFeatureMap(map)));
        Ok(())
    })
}

/// Reads a feature-map JSON file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_load(path: *const c_char, out: *mut *mut CsfFeatureMap) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let map = load_feature_map(unsafe { path_arg(path, "path") }?)?;
        *out = Box::into_raw(Box::new(CsfFeatureMap(map)));
        Ok(())
    })
}

/// Writes a feature-map JSON file.
///
/// # Safety
/// `map` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_save(map: *const CsfFeatureMap, path: *const c_char) -> CsfStatus {
    guard(|| {
        let map = unsafe { handle(map, "map") }?;
        save_feature_map(&map.0, unsafe { path_arg(path, "path") }?)?;
        Ok(())
    })
}

/// The map as JSON in a new string; release it with [`csf_string_free`].
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_to_json(map: *const CsfFeatureMap, out: *mut *mut c_char) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let map = unsafe { handle(map, "map") }?;
        let text = CString::new(write_feature_map(&map.0)).expect("JSON has no nul");
        *out = text.into_raw();
        Ok(())
    })
}

/// Estimator the map was built with.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_method(map: *const CsfFeatureMap, out: *mut CsfMethod) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        *out = unsafe { handle(map, "map") }?.0.method.into();
        Ok(())
    })
}

/// Number of lines, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_line_count(map: *const CsfFeatureMap) -> usize {
    unsafe { map.as_ref() }.map_or(0, |m| m.0.lines.len())
}

/// Number of corners, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_corner_count(map: *const CsfFeatureMap) -> usize {
    unsafe { map.as_ref() }.map_or(0, |m| m.0.corners.len())
}

/// Copies line `i` (in map order, not by id).
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_line(map: *const CsfFeatureMap, i: usize, out: *mut CsfLine) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let map = unsafe { handle(map, "map") }?;
        let Some(l) = map.0.lines.get(i) else {
            return fail(CsfStatus::OutOfRange, format!("line {i} of {}", map.0.lines.len()));
        };
        *out = line_of(l);
        Ok(())
    })
}

/// Copies corner `i`.
///
/// # Safety
/// `map` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_corner(map: *const CsfFeatureMap, i: usize, out: *mut CsfCorner) -> CsfStatus {
    guard(|| {
        let out = unsafe { out_arg(out, "out") }?;
        let map = unsafe { handle(map, "map") }?;
        let Some(c) = map.0.corners.get(i) else {
            return fail(CsfStatus::OutOfRange, format!("corner {i} of {}", map.0.corners.len()));
        };
        let [line_a, line_b] = c.sources.unwrap_or([usize::MAX; 2]);
        *out = CsfCorner {
            x: c.x,
            y: c.y,
            cov: c.cov.map_or([0.0; 4], |m| [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]),
            has_cov: c.cov.is_some(),
            line_a,
            line_b,
        };
        Ok(())
    })
}

/// Releases a feature map. Null is ignored.
///
/// # Safety
/// `map` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csf_feature_map_free(map: *mut CsfFeatureMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}
