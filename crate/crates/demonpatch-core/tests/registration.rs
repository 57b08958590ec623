//! Behavior of the time-limited registration loop on synthetic objects.

use demonpatch_core::demon::{interpolate_path, register, RegistrationConfig};
use demonpatch_core::image::{mean_absolute_error, ScalarImage};
use demonpatch_core::synth::fixtures::FixtureRng;
use demonpatch_core::synth::{render, transform_shape, ExperimentKind, ShapeSpec};

fn random_image(w: usize, h: usize, rng: &mut FixtureRng) -> ScalarImage {
    ScalarImage::from_fn(w, h, |_, _| rng.next_f64())
}

fn translated_disk_pair(d: f64) -> (ScalarImage, ScalarImage) {
    let base = ShapeSpec::default_disk();
    let target = transform_shape(&base, ExperimentKind::Translation, d).unwrap();
    (render(&base).unwrap(), render(&target).unwrap())
}

/// Intensity-weighted centroid of the dark object on a light ground.
fn dark_centroid_x(img: &ScalarImage) -> f64 {
    let mut weight = 0.0;
    let mut moment = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let w = (0.9 - img.get(x, y)).max(0.0);
            weight += w;
            moment += w * x as f64;
        }
    }
    moment / weight
}

#[test]
fn registering_an_image_to_itself_is_an_exact_fixed_point() {
    let mut rng = FixtureRng::new(11);
    let cfg = RegistrationConfig {
        iterations: 25,
        ..RegistrationConfig::default()
    };
    for _ in 0..20 {
        let img = random_image(32, 32, &mut rng);
        let res = register(&img, &img, &cfg).unwrap();
        assert!(res.mae_history.iter().all(|&v| v == 0.0));
        assert!(res.total_field.dx.data().iter().all(|&v| v == 0.0));
        assert!(res.total_field.dy.data().iter().all(|&v| v == 0.0));
        assert_eq!(res.deformed, img);
    }
}

#[test]
fn moderate_translation_succeeds_within_the_budget() {
    let (m, s) = translated_disk_pair(5.0);
    let initial = mean_absolute_error(&m, &s).unwrap();
    let res = register(&m, &s, &RegistrationConfig::default()).unwrap();
    let final_mae = *res.mae_history.last().unwrap();
    assert!(
        final_mae < 0.1 * initial,
        "expected success: final {final_mae} vs initial {initial}"
    );
}

#[test]
fn drastic_translation_fails_within_the_budget() {
    let (m, s) = translated_disk_pair(15.0);
    let initial = mean_absolute_error(&m, &s).unwrap();
    let res = register(&m, &s, &RegistrationConfig::default()).unwrap();
    let final_mae = *res.mae_history.last().unwrap();
    assert!(
        final_mae > 0.5 * initial,
        "expected failure: final {final_mae} vs initial {initial}"
    );
}

#[test]
fn forces_remain_finite_over_long_runs() {
    let mut rng = FixtureRng::new(23);
    let m = random_image(32, 32, &mut rng);
    let s = random_image(32, 32, &mut rng);
    let cfg = RegistrationConfig {
        iterations: 500,
        ..RegistrationConfig::default()
    };
    let res = register(&m, &s, &cfg).unwrap();
    assert!(res.total_field.is_finite());
    assert!(res.deformed.data().iter().all(|v| v.is_finite()));
    assert!(res.mae_history.iter().all(|v| v.is_finite()));
}

#[test]
fn identical_runs_are_bit_identical() {
    let (m, s) = translated_disk_pair(7.0);
    let cfg = RegistrationConfig {
        iterations: 40,
        ..RegistrationConfig::default()
    };
    let a = register(&m, &s, &cfg).unwrap();
    let b = register(&m, &s, &cfg).unwrap();
    assert_eq!(a.deformed, b.deformed);
    assert_eq!(a.total_field, b.total_field);
    assert_eq!(a.mae_history, b.mae_history);
}

#[test]
fn deformation_path_centroid_moves_monotonically_toward_target() {
    let (m, s) = translated_disk_pair(5.0);
    let cfg = RegistrationConfig::default();
    let path = interpolate_path(&m, &s, &cfg, &[0, 50, 100, 150, 200]).unwrap();
    let centroids: Vec<f64> = path.iter().map(dark_centroid_x).collect();
    let target_x = dark_centroid_x(&s);
    assert!((centroids[0] - 32.0).abs() < 0.5);
    for pair in centroids.windows(2) {
        assert!(
            pair[1] >= pair[0] - 1e-6,
            "centroid moved backwards: {centroids:?}"
        );
    }
    assert!(
        (centroids.last().unwrap() - target_x).abs() < 0.5,
        "final centroid {} vs target {target_x}",
        centroids.last().unwrap()
    );
}

#[test]
fn convergence_history_is_windowed_non_increasing_until_plateau() {
    let (m, s) = translated_disk_pair(5.0);
    let res = register(&m, &s, &RegistrationConfig::default()).unwrap();
    let history = &res.mae_history;
    let initial = mean_absolute_error(&m, &s).unwrap();
    let final_mae = *history.last().unwrap();
    assert!(final_mae < 0.05 * initial);

    let window_means: Vec<f64> = history
        .chunks(10)
        .map(|w| w.iter().sum::<f64>() / w.len() as f64)
        .collect();
    // Plateau begins once a window mean comes within 5% of the floor.
    let floor = window_means.last().unwrap();
    let plateau_start = window_means
        .iter()
        .position(|&w| w <= floor * 1.05 + 1e-12)
        .unwrap_or(window_means.len());
    for pair in window_means[..plateau_start].windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-4,
            "window means increased before plateau: {window_means:?}"
        );
    }
}

#[test]
fn residual_at_the_time_limit_is_non_increasing_in_the_budget() {
    let (m, s) = translated_disk_pair(5.0);
    let res = register(&m, &s, &RegistrationConfig::default()).unwrap();
    let at = |t: usize| res.mae_history[t - 1];
    assert!(at(100) <= at(50));
    assert!(at(200) <= at(100));
}
