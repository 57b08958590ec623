//! End-to-end behavior of the semantic-patch enhancement pipeline on the
//! synthetic-face fixture.

use std::collections::BTreeMap;

use demonpatch_core::affinity::{AffinityConfig, FeatureKind};
use demonpatch_core::color::rgb_to_hsv;
use demonpatch_core::enhance::{
    crop_bbox, embed, enhance, infer_correlated, select_examples, EmbedPlan, RegionManifest,
};
use demonpatch_core::filter::gradient_energy;
use demonpatch_core::image::{mean_absolute_error, Bbox, ColorImage};
use demonpatch_core::space::PatchRecord;
use demonpatch_core::synth::fixtures::{
    degrade_face, face_catalog, face_drastic_mouth_patch, face_input_params, face_manifest,
    face_moderate_eye_params, face_tight_regions, FixtureRng, FACE_IDENTITY, FACE_POSE,
};
use demonpatch_core::synth::{face_layout, render_face};

const SEED: u64 = 7;
const BLEND_LEVELS: usize = 4;

struct Fixture {
    cfg: AffinityConfig,
    truth: ColorImage,
    input: ColorImage,
    manifest: RegionManifest,
    catalog: demonpatch_core::enhance::PriorCatalog,
}

fn fixture() -> Fixture {
    let cfg = AffinityConfig::default();
    let truth = render_face(&face_input_params());
    let mut rng = FixtureRng::new(SEED);
    let input = degrade_face(&truth, &mut rng);
    Fixture {
        catalog: face_catalog(&cfg).unwrap(),
        manifest: face_manifest(),
        cfg,
        truth,
        input,
    }
}

fn region_mae(a: &ColorImage, b: &ColorImage, bbox: Bbox) -> f64 {
    let ca = crop_bbox(a, bbox).unwrap();
    let cb = crop_bbox(b, bbox).unwrap();
    (mean_absolute_error(&ca.r, &cb.r).unwrap()
        + mean_absolute_error(&ca.g, &cb.g).unwrap()
        + mean_absolute_error(&ca.b, &cb.b).unwrap())
        / 3.0
}

/// Gradient energy summed over the HSV planes of a region.
fn region_structure_energy(img: &ColorImage, bbox: Bbox) -> f64 {
    let hsv = rgb_to_hsv(&crop_bbox(img, bbox).unwrap());
    gradient_energy(&hsv.h).unwrap()
        + gradient_energy(&hsv.s).unwrap()
        + gradient_energy(&hsv.v).unwrap()
}

#[test]
fn selection_picks_the_nearest_principal_modes() {
    let f = fixture();
    let selection = select_examples(&f.input, &f.manifest, &f.catalog, &f.cfg).unwrap();
    assert_eq!(selection[&FeatureKind::LeftEye].best_id, "srcB_left_eye");
    assert_eq!(selection[&FeatureKind::Mouth].best_id, "srcB_mouth");
}

#[test]
fn correlated_regions_follow_their_source_photos() {
    let f = fixture();
    let selection = select_examples(&f.input, &f.manifest, &f.catalog, &f.cfg).unwrap();
    let plan = infer_correlated(&selection, &f.manifest, &f.catalog).unwrap();
    // Right eye comes from the left-eye match's photo.
    let right = plan.right_eye.as_ref().expect("source declares a right eye");
    assert_eq!(right.source_image_id, plan.left_eye.source_image_id);
    // Head and background follow the mouth match's photo.
    let head = plan.head.as_ref().expect("source declares a head");
    assert_eq!(head.source_image_id, plan.mouth.source_image_id);
    let mouth_source = &f.catalog.sources[&plan.mouth.source_image_id];
    assert_eq!(plan.background, mouth_source.image);
}

#[test]
fn self_embedding_reproduces_the_brightened_input() {
    let f = fixture();
    let layout: BTreeMap<FeatureKind, Bbox> = face_layout().into_iter().collect();
    let crop_rec = |kind: FeatureKind| PatchRecord {
        id: format!("self_{}", kind.name()),
        image: crop_bbox(&f.input, layout[&kind]).unwrap(),
        kind,
        identity: FACE_IDENTITY.into(),
        pose: FACE_POSE.into(),
        source_image_id: "self".into(),
    };
    let plan = EmbedPlan {
        left_eye: crop_rec(FeatureKind::LeftEye),
        right_eye: Some(crop_rec(FeatureKind::RightEye)),
        mouth: crop_rec(FeatureKind::Mouth),
        head: Some(crop_rec(FeatureKind::Head)),
        background: f.input.clone(),
        left_eye_distance: 0.0,
        mouth_distance: 0.0,
    };
    let out = embed(&f.input, &f.manifest, &plan, &f.cfg, BLEND_LEVELS).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in [
        (&out.composite.r, &out.brightened.r),
        (&out.composite.g, &out.brightened.g),
        (&out.composite.b, &out.brightened.b),
    ] {
        for (x, y) in a.data().iter().zip(b.data()) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst < 2e-2, "self-embedding diverged by {worst}");
    // None of the regions should be flagged.
    assert!(out.report.regions.iter().all(|r| !r.flagged));
}

#[test]
fn enhancement_halves_feature_residuals() {
    let f = fixture();
    let (_selection, out) = enhance(&f.input, &f.manifest, &f.catalog, &f.cfg, BLEND_LEVELS).unwrap();
    for (kind, bbox) in face_tight_regions() {
        let out_mae = region_mae(&out.composite, &f.truth, bbox);
        let bright_mae = region_mae(&out.brightened, &f.truth, bbox);
        assert!(
            out_mae <= 0.5 * bright_mae,
            "{}: output {out_mae:.5} vs brightened {bright_mae:.5}",
            kind.name()
        );
    }
}

#[test]
fn enhancement_restores_feature_structure() {
    let f = fixture();
    let (_selection, out) = enhance(&f.input, &f.manifest, &f.catalog, &f.cfg, BLEND_LEVELS).unwrap();
    for (kind, bbox) in face_tight_regions() {
        let e_out = region_structure_energy(&out.composite, bbox);
        let e_bright = region_structure_energy(&out.brightened, bbox);
        let e_truth = region_structure_energy(&f.truth, bbox);
        assert!(
            e_out >= 1.5 * e_bright,
            "{}: energy {e_out:.3} vs brightened {e_bright:.3}",
            kind.name()
        );
        assert!(
            (e_out - e_truth).abs() <= 0.3 * e_truth,
            "{}: energy {e_out:.3} vs truth {e_truth:.3}",
            kind.name()
        );
    }
}

#[test]
fn pixels_away_from_the_regions_are_untouched() {
    let f = fixture();
    let (_selection, out) = enhance(&f.input, &f.manifest, &f.catalog, &f.cfg, BLEND_LEVELS).unwrap();
    let halo = 1usize << BLEND_LEVELS;
    let layout: BTreeMap<FeatureKind, Bbox> = face_layout().into_iter().collect();
    let mut checked = 0usize;
    for y in 0..f.input.height() {
        for x in 0..f.input.width() {
            let far = layout.values().all(|b| {
                x + halo < b.x
                    || x >= b.x + b.width + halo
                    || y + halo < b.y
                    || y >= b.y + b.height + halo
            });
            if far {
                checked += 1;
                for (a, b) in [
                    (&out.composite.r, &out.brightened.r),
                    (&out.composite.g, &out.brightened.g),
                    (&out.composite.b, &out.brightened.b),
                ] {
                    // Repeated pyramid collapses carry float rounding noise
                    // of the reconstruction everywhere; anything below the
                    // round-trip epsilon counts as untouched.
                    let diff = (a.get(x, y) - b.get(x, y)).abs();
                    assert!(diff < 1e-6, "pixel ({x},{y}) changed by {diff}");
                }
            }
        }
    }
    assert!(checked > 0, "no pixels outside the halo to check");
}

#[test]
fn moderate_selection_errors_are_absorbed() {
    let f = fixture();
    let selection = select_examples(&f.input, &f.manifest, &f.catalog, &f.cfg).unwrap();
    let plan = infer_correlated(&selection, &f.manifest, &f.catalog).unwrap();
    let correct = embed(&f.input, &f.manifest, &plan, &f.cfg, BLEND_LEVELS).unwrap();

    let layout: BTreeMap<FeatureKind, Bbox> = face_layout().into_iter().collect();
    let wrong_plan = EmbedPlan {
        left_eye: PatchRecord {
            id: "moderate_eye".into(),
            image: crop_bbox(
                &render_face(&face_moderate_eye_params()),
                layout[&FeatureKind::LeftEye],
            )
            .unwrap(),
            kind: FeatureKind::LeftEye,
            identity: FACE_IDENTITY.into(),
            pose: FACE_POSE.into(),
            source_image_id: "srcB".into(),
        },
        ..plan
    };
    let wrong = embed(&f.input, &f.manifest, &wrong_plan, &f.cfg, BLEND_LEVELS).unwrap();

    let bbox = face_tight_regions()[&FeatureKind::LeftEye];
    let correct_mae = region_mae(&correct.composite, &f.truth, bbox);
    let wrong_mae = region_mae(&wrong.composite, &f.truth, bbox);
    assert!(
        wrong_mae <= 1.5 * correct_mae,
        "moderate error not absorbed: {wrong_mae:.5} vs correct {correct_mae:.5}"
    );
}

#[test]
fn drastic_selection_errors_are_flagged() {
    let f = fixture();
    let selection = select_examples(&f.input, &f.manifest, &f.catalog, &f.cfg).unwrap();
    let plan = infer_correlated(&selection, &f.manifest, &f.catalog).unwrap();
    let drastic_plan = EmbedPlan {
        mouth: PatchRecord {
            id: "drastic_mouth".into(),
            image: face_drastic_mouth_patch(),
            kind: FeatureKind::Mouth,
            identity: FACE_IDENTITY.into(),
            pose: FACE_POSE.into(),
            source_image_id: "srcB".into(),
        },
        ..plan
    };
    let out = embed(&f.input, &f.manifest, &drastic_plan, &f.cfg, BLEND_LEVELS).unwrap();
    let mouth = out
        .report
        .regions
        .iter()
        .find(|r| r.kind == FeatureKind::Mouth)
        .unwrap();
    assert!(
        mouth.flagged,
        "drastic mouth not flagged: before {:.5} after {:.5}",
        mouth.registration_mae_before, mouth.registration_mae_after
    );
    assert!(mouth.registration_mae_after > mouth.registration_mae_before);
}

#[test]
fn report_orders_and_flags_are_consistent() {
    let f = fixture();
    let (_selection, out) = enhance(&f.input, &f.manifest, &f.catalog, &f.cfg, BLEND_LEVELS).unwrap();
    for region in &out.report.regions {
        assert_eq!(
            region.flagged,
            region.registration_mae_after > region.registration_mae_before
        );
        assert!(!region.flagged, "{:?} unexpectedly flagged", region.kind);
    }
    // Two measured selections carry distances, inferred regions do not.
    let with_distance = out
        .report
        .regions
        .iter()
        .filter(|r| r.distance.is_some())
        .count();
    assert_eq!(with_distance, 2);
}

#[test]
fn missing_required_regions_are_reported_by_stage() {
    let f = fixture();
    let mut manifest = f.manifest.clone();
    manifest.regions.remove(&FeatureKind::Mouth);
    let err = select_examples(&f.input, &manifest, &f.catalog, &f.cfg).unwrap_err();
    match err {
        demonpatch_core::Error::MissingFeature { kind, .. } => {
            assert_eq!(kind, FeatureKind::Mouth)
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn out_of_bounds_manifest_regions_are_rejected() {
    let f = fixture();
    let mut manifest = f.manifest.clone();
    manifest
        .regions
        .get_mut(&FeatureKind::Mouth)
        .unwrap()
        .bbox = Bbox::new(80, 80, 40, 20);
    assert!(matches!(
        select_examples(&f.input, &manifest, &f.catalog, &f.cfg),
        Err(demonpatch_core::Error::BboxOutOfBounds { .. })
    ));
}
