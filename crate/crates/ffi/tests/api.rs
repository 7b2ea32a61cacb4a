use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use csf_ffi::*;

fn worlds() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../worlds")
}

fn cpath(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(csf_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn square_scan() -> *mut CsfScan {
    let world = cpath(&worlds().join("square.txt"));
    let mut scan = ptr::null_mut();
    let s = unsafe { csf_scan_generate(world.as_ptr(), 0.2, -0.1, 0.0, 720, 0.004, 0.0005, 3, &mut scan) };
    assert_eq!(s, CsfStatus::Ok, "{}", last_error());
    scan
}

#[test]
fn extract_square_room_through_handles() {
    let scan = square_scan();
    let n = unsafe { csf_scan_len(scan) };
    assert!(n > 600);

    let mut opts = csf_extract_options_default();
    opts.sigma_rho = 0.05;
    opts.sigma_theta = 0.0034121;
    for method in [CsfMethod::Wclm, CsfMethod::Arras, CsfMethod::Siadat] {
        let mut map = ptr::null_mut();
        assert_eq!(unsafe { csf_extract(scan, method, &opts, &mut map) }, CsfStatus::Ok);
        let mut m = CsfMethod::Wclm;
        assert_eq!(unsafe { csf_feature_map_method(map, &mut m) }, CsfStatus::Ok);
        assert_eq!(m, method);
        assert_eq!(unsafe { csf_feature_map_line_count(map) }, 4);
        assert_eq!(unsafe { csf_feature_map_corner_count(map) }, 4);
        for i in 0..4 {
            let mut c = std::mem::MaybeUninit::<CsfCorner>::uninit();
            assert_eq!(unsafe { csf_feature_map_corner(map, i, c.as_mut_ptr()) }, CsfStatus::Ok);
            let c = unsafe { c.assume_init() };
            assert!(c.has_cov && c.cov[0] > 0.0 && c.cov[3] > 0.0);
            assert_eq!(c.cov[1], c.cov[2]);
            // pose (0.2, -0.1) inside a ±2 m room
            assert!((c.x.abs() - 2.0).abs() < 0.25 && (c.y.abs() - 2.0).abs() < 0.25);
            assert_ne!(c.line_a, c.line_b);
        }
        let mut line = std::mem::MaybeUninit::<CsfLine>::uninit();
        assert_eq!(
            unsafe { csf_feature_map_line(map, 0, line.as_mut_ptr()) },
            CsfStatus::Ok
        );
        let line = unsafe { line.assume_init() };
        assert_eq!(line.method, method);
        assert_eq!(line.n_params, if method == CsfMethod::Siadat { 3 } else { 2 });

        let mut out = std::mem::MaybeUninit::<CsfCorner>::uninit();
        assert_eq!(
            unsafe { csf_feature_map_corner(map, 4, out.as_mut_ptr()) },
            CsfStatus::OutOfRange
        );
        assert!(last_error().contains("corner 4"));
        unsafe { csf_feature_map_free(map) };
    }
    unsafe { csf_scan_free(scan) };
}

#[test]
fn json_round_trip_through_files() {
    let dir = tempfile::TempDir::new().unwrap();
    let scan = square_scan();
    let mut map = ptr::null_mut();
    assert_eq!(
        unsafe { csf_extract(scan, CsfMethod::Wclm, ptr::null(), &mut map) },
        CsfStatus::Ok
    );
    let path = cpath(&dir.path().join("m.json"));
    assert_eq!(unsafe { csf_feature_map_save(map, path.as_ptr()) }, CsfStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { csf_feature_map_load(path.as_ptr(), &mut loaded) },
        CsfStatus::Ok
    );

    let json = |m: *const CsfFeatureMap| {
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { csf_feature_map_to_json(m, &mut s) }, CsfStatus::Ok);
        let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
        unsafe { csf_string_free(s) };
        text
    };
    assert_eq!(json(map), json(loaded));

    let scan_path = cpath(&dir.path().join("s.scan"));
    assert_eq!(unsafe { csf_scan_save(scan, scan_path.as_ptr()) }, CsfStatus::Ok);
    let mut reread = ptr::null_mut();
    assert_eq!(unsafe { csf_scan_load(scan_path.as_ptr(), &mut reread) }, CsfStatus::Ok);
    assert_eq!(unsafe { csf_scan_len(reread) }, unsafe { csf_scan_len(scan) });
    let (mut r0, mut t0, mut r1, mut t1) = (0.0, 0.0, 0.0, 0.0);
    assert_eq!(unsafe { csf_scan_point(scan, 7, &mut r0, &mut t0) }, CsfStatus::Ok);
    assert_eq!(unsafe { csf_scan_point(reread, 7, &mut r1, &mut t1) }, CsfStatus::Ok);
    assert_eq!((r0.to_bits(), t0.to_bits()), (r1.to_bits(), t1.to_bits()));

    unsafe {
        csf_feature_map_free(map);
        csf_feature_map_free(loaded);
        csf_scan_free(scan);
        csf_scan_free(reread);
    }
}

#[test]
fn fit_line_recovers_a_wall() {
    // points on x = 2
    let theta: Vec<f64> = (0..20).map(|i| -0.5 + i as f64 * 0.05).collect();
    let rho: Vec<f64> = theta.iter().map(|t| 2.0 / t.cos()).collect();
    for method in [CsfMethod::Wclm, CsfMethod::Arras, CsfMethod::Siadat] {
        let mut line = std::mem::MaybeUninit::<CsfLine>::uninit();
        let s = unsafe {
            csf_fit_line(
                method,
                rho.as_ptr(),
                theta.as_ptr(),
                rho.len(),
                0.05,
                0.0034121,
                line.as_mut_ptr(),
            )
        };
        assert_eq!(s, CsfStatus::Ok, "{}", last_error());
        let line = unsafe { line.assume_init() };
        assert!((line.r - 2.0).abs() < 1e-12 && line.alpha.abs() < 1e-12);
        assert_eq!((line.start_index, line.end_index, line.count), (0, 19, 20));
        assert!(line.cov[0] > 0.0);
    }
}

#[test]
fn error_statuses() {
    let mut scan = ptr::null_mut();
    let missing = CString::new("/nonexistent/scan.txt").unwrap();
    assert_eq!(unsafe { csf_scan_load(missing.as_ptr(), &mut scan) }, CsfStatus::Io);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { csf_scan_load(ptr::null(), &mut scan) }, CsfStatus::NullPointer);

    let dir = tempfile::TempDir::new().unwrap();
    let bad = dir.path().join("bad.scan");
    std::fs::write(&bad, "garbage\n").unwrap();
    assert_eq!(
        unsafe { csf_scan_load(cpath(&bad).as_ptr(), &mut scan) },
        CsfStatus::Parse
    );

    let rho = [1.0, -1.0];
    let theta = [0.0, 0.1];
    assert_eq!(
        unsafe { csf_scan_new(rho.as_ptr(), theta.as_ptr(), 2, 0.05, 0.003, &mut scan) },
        CsfStatus::Validation
    );

    // repeated bearings are rejected before any fit
    let rho = [1.0, 2.0, 3.0];
    let theta = [0.3; 3];
    let mut line = std::mem::MaybeUninit::<CsfLine>::uninit();
    let s = unsafe {
        csf_fit_line(
            CsfMethod::Wclm,
            rho.as_ptr(),
            theta.as_ptr(),
            3,
            0.05,
            0.003,
            line.as_mut_ptr(),
        )
    };
    assert_eq!(s, CsfStatus::Validation);

    // sensor placed on a wall
    let world = cpath(&worlds().join("square.txt"));
    let s = unsafe { csf_scan_generate(world.as_ptr(), 2.0, 0.0, 0.0, 90, 0.004, 0.0005, 1, &mut scan) };
    assert_eq!(s, CsfStatus::Degenerate);

    let ok_scan = square_scan();
    let mut opts = csf_extract_options_default();
    opts.threshold_m = -1.0;
    let mut map = ptr::null_mut();
    assert_eq!(
        unsafe { csf_extract(ok_scan, CsfMethod::Wclm, &opts, &mut map) },
        CsfStatus::InvalidArgument
    );
    assert!(map.is_null());
    unsafe { csf_scan_free(ok_scan) };

    assert_eq!(unsafe { csf_scan_len(ptr::null()) }, 0);
    unsafe {
        csf_scan_free(ptr::null_mut());
        csf_feature_map_free(ptr::null_mut());
        csf_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(csf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
