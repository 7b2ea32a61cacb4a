mod common;

use common::*;
use csf_core::features::extract_feature_map;
use csf_core::world::{ground_truth_corners, load_world, Pose};
use csf_core::{FeatureMap, Method};

/// Every corner lies within `k` propagated sigmas (plus `slack` m) of a true
/// wall joint, and no joint is claimed twice.
fn assert_matches_truth(map: &FeatureMap, truth: &[(f64, f64)], pose: &Pose, k: f64, slack: f64) {
    let mut used = vec![false; truth.len()];
    for c in &map.corners {
        let (sx, sy) = c.sigmas().expect("covariance");
        let (j, d) = truth
            .iter()
            .map(|&t| pose.to_sensor(t))
            .enumerate()
            .map(|(j, (x, y))| (j, ((c.x - x) / (k * sx + slack)).hypot((c.y - y) / (k * sy + slack))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(
            d <= 1.0,
            "{} corner ({:.3}, {:.3}) is off the nearest joint",
            map.method,
            c.x,
            c.y
        );
        assert!(!used[j], "joint {j} matched twice");
        used[j] = true;
    }
}

#[test]
fn env_b_corners_sit_on_wall_joints() {
    let world = load_world(worlds_dir().join("env_b_like.txt")).unwrap();
    let truth = ground_truth_corners(&world);
    assert_eq!(truth.len(), 8);
    let scan = env_b_scan();
    let pose = Pose::new(0.3, -0.2, 0.0).unwrap();
    for m in Method::ALL {
        let map = extract_feature_map(&scan, m, &sensor_noise_config()).unwrap();
        assert_eq!(map.corners.len(), 8, "{m}");
        assert_matches_truth(&map, &truth, &pose, 3.0, 0.0);
    }
}

#[test]
fn env_a_finds_most_joints() {
    let world = load_world(worlds_dir().join("env_a_like.txt")).unwrap();
    let truth = ground_truth_corners(&world);
    assert_eq!(truth.len(), 24);
    let scan = env_a_scan();
    let pose = Pose::new(0.4, -0.3, 10f64.to_radians()).unwrap();
    for m in Method::ALL {
        let map = extract_feature_map(&scan, m, &sensor_noise_config()).unwrap();
        assert!(map.corners.len() >= 20, "{m}: {} corners", map.corners.len());
        assert_matches_truth(&map, &truth, &pose, 3.0, 0.0);
    }
}

#[test]
fn fixtures_load_and_describe_closed_rooms() {
    for (name, walls) in [("square.txt", 4), ("env_b_like.txt", 8), ("env_a_like.txt", 24)] {
        let w = load_world(worlds_dir().join(name)).unwrap();
        assert_eq!(w.walls().len(), walls, "{name}");
        assert_eq!(ground_truth_corners(&w).len(), walls, "{name}");
    }
}
