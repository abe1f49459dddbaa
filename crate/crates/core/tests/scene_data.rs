use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfk_core::scene::{
    compute_stats, generate_synthetic, generate_synthetic_detailed, load_scene_set, write_scene_set, DatasetStats,
    Domains, RadarPoint, SceneSet, SynthConfig,
};

fn small(frames: usize) -> SynthConfig {
    SynthConfig { frames, ..SynthConfig::default() }
}

// Welford running mean, independent of the summation used by the library.
fn welford(values: impl Iterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    for (n, v) in values.enumerate() {
        mean += (v - mean) / (n + 1) as f64;
    }
    mean
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn json_round_trip_preserves_frames() {
    let scenes = generate_synthetic(3, &small(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenes.json");
    write_scene_set(&scenes, &path).unwrap();
    let back = load_scene_set(&path).unwrap();
    assert_eq!(back.frames.len(), scenes.frames.len());
    for (a, b) in scenes.frames.iter().zip(&back.frames) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.radar_points, b.radar_points);
        assert_eq!(a.boxes, b.boxes);
        assert_eq!(a.calibration, b.calibration);
        assert_eq!(a.tag, b.tag);
        assert_eq!(a.image.pixels, b.image.pixels);
    }
}

#[test]
fn stats_match_welford_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let points: Vec<RadarPoint> = (0..1000)
        .map(|_| RadarPoint::new(rng.random_range(0.5..180.0), rng.random_range(-40.0..40.0), 0.0, 0.0, rng.random_range(-4.9..52.9)))
        .collect();
    let stats = DatasetStats::from_points(&points).unwrap();
    let d = welford(points.iter().map(|p| (p.x * p.x + p.y * p.y).sqrt()));
    let r = welford(points.iter().map(|p| p.rcs));
    assert!((stats.mean_distance - d).abs() < 1e-9 * d.abs());
    assert!((stats.mean_rcs - r).abs() < 1e-9 * r.abs().max(1.0));
    assert_eq!(stats.point_count, 1000);
}

#[test]
fn full_correlation_shows_in_object_rcs() {
    let cfg = SynthConfig { frames: 200, rcs_height_correlation: 1.0, ..SynthConfig::default() };
    let detailed = generate_synthetic_detailed(5, &cfg).unwrap();
    let objects: Vec<_> = detailed.objects.iter().flatten().take(500).collect();
    assert!(objects.len() >= 500);
    let h: Vec<f64> = objects.iter().map(|o| o.height).collect();
    let r: Vec<f64> = objects.iter().map(|o| o.rcs).collect();
    assert!(pearson(&h, &r) > 0.95, "pearson {}", pearson(&h, &r));
}

#[test]
fn configured_correlation_is_roughly_reproduced() {
    let cfg = SynthConfig { frames: 300, rcs_height_correlation: 0.8, ..SynthConfig::default() };
    let detailed = generate_synthetic_detailed(9, &cfg).unwrap();
    let objects: Vec<_> = detailed.objects.iter().flatten().collect();
    let h: Vec<f64> = objects.iter().map(|o| o.height).collect();
    let r: Vec<f64> = objects.iter().map(|o| o.rcs).collect();
    let rho = pearson(&h, &r);
    assert!((rho - 0.8).abs() < 0.08, "pearson {rho}");
}

#[test]
fn empty_scene_set_has_no_stats() {
    assert!(compute_stats(&SceneSet::new(vec![])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_frames_are_valid(seed in any::<u64>()) {
        let scenes = generate_synthetic(seed, &small(3)).unwrap();
        let domains = Domains::default();
        for f in &scenes.frames {
            prop_assert!(f.validate(&domains).is_ok());
        }
    }

    #[test]
    fn generation_is_reproducible(seed in any::<u64>()) {
        let a = generate_synthetic(seed, &small(2)).unwrap();
        let b = generate_synthetic(seed, &small(2)).unwrap();
        prop_assert_eq!(a.frames, b.frames);
    }

    #[test]
    fn stats_are_permutation_invariant(seed in 0u64..1000, rot in 0usize..50) {
        let scenes = generate_synthetic(seed, &small(4)).unwrap();
        let base = compute_stats(&scenes).unwrap();
        let mut shuffled = scenes.clone();
        shuffled.frames.reverse();
        for f in &mut shuffled.frames {
            let n = f.radar_points.len();
            if n > 0 {
                f.radar_points.rotate_left(rot % n);
            }
        }
        let other = compute_stats(&shuffled).unwrap();
        prop_assert_eq!(base.point_count, other.point_count);
        prop_assert!((base.mean_distance - other.mean_distance).abs() <= 1e-12 * base.mean_distance);
        prop_assert!((base.mean_rcs - other.mean_rcs).abs() <= 1e-12 * base.mean_rcs.abs().max(1.0));
    }
}
