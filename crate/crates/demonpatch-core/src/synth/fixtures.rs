//! Frozen fixtures for the experiment and verification harnesses: degraded
//! query recipes, the retrieval mode set, and the synthetic-face catalog.
//!
//! Everything here is deterministic given a seed; the RNG is self-contained
//! so results are bit-stable across platforms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affinity::{AffinityConfig, FeatureKind};
use crate::color::{hsv_to_rgb, rgb_to_hsv};
use crate::enhance::{PriorCatalog, RegionManifest, RegionSpec, SourcePrior, SpaceKey};
use crate::filter::gaussian_smooth;
use crate::image::{Bbox, ColorImage, HsvImage, ScalarImage};
use crate::space::{PatchRecord, PatchSpace};
use crate::synth::{face_layout, render_face, FaceParams};
use crate::Result;

/// SplitMix64: tiny deterministic generator for fixture noise.
#[derive(Debug, Clone)]
pub struct FixtureRng {
    state: u64,
}

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        FixtureRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        crate::math::sqrt(-2.0 * libm::log(u1))
            * crate::math::cos(2.0 * core::f64::consts::PI * u2)
    }
}

/// Adds clamped Gaussian noise to every pixel.
pub fn add_noise(img: &ScalarImage, sigma: f64, rng: &mut FixtureRng) -> ScalarImage {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = (*v + rng.next_gaussian() * sigma).clamp(0.0, 1.0);
    }
    out
}

/// Adds one shared noise field across the three RGB planes.
pub fn add_noise_rgb(img: &ColorImage, sigma: f64, rng: &mut FixtureRng) -> ColorImage {
    ColorImage {
        r: add_noise(&img.r, sigma, rng),
        g: add_noise(&img.g, sigma, rng),
        b: add_noise(&img.b, sigma, rng),
    }
}

/// 2x down/up-sampling round trip (resolution reduction).
pub fn down_up_sample(img: &ColorImage, factor: f64) -> ColorImage {
    let (w, h) = img.dims();
    let dw = ((w as f64 / factor) as usize).max(1);
    let dh = ((h as f64 / factor) as usize).max(1);
    img.resize(dw, dh).resize(w, h)
}

/// Blurs hue and saturation while keeping value: chroma degradation in the
/// style of cellular chroma subsampling.
pub fn blur_chroma(img: &ColorImage, sigma: f64) -> Result<ColorImage> {
    let hsv = rgb_to_hsv(img);
    Ok(hsv_to_rgb(&HsvImage {
        h: gaussian_smooth(&hsv.h, sigma)?,
        s: gaussian_smooth(&hsv.s, sigma)?,
        v: hsv.v,
    }))
}

/// Retrieval-suite degradation: Gaussian noise, 2x down/up-sampling, then
/// brightness halved.
pub fn degrade_for_retrieval(img: &ColorImage, rng: &mut FixtureRng) -> ColorImage {
    let noisy = add_noise_rgb(img, 0.05, rng);
    down_up_sample(&noisy, 2.0).map_planes(|p| p.map(|v| v * 0.5))
}

/// Face-suite degradation: mild noise, 2x down/up-sampling, chroma blur,
/// then darkening.
pub fn degrade_face(img: &ColorImage, rng: &mut FixtureRng) -> ColorImage {
    let noisy = add_noise_rgb(img, 0.02, rng);
    let blurred = down_up_sample(&noisy, 2.0);
    blur_chroma(&blurred, 1.5)
        .expect("fixed sigma is valid")
        .map_planes(|p| p.map(|v| v * 0.55))
}

/// Canvas size of the retrieval mode patches.
pub const RETRIEVAL_CANVAS: usize = 64;

/// Ten structurally separated eye modes: 2-D pupil offsets on a fixed
/// outline, pairwise at least ~9 px apart.
pub const RETRIEVAL_MODES: [(f64, f64); 10] = [
    (-13.0, -8.0),
    (-4.0, -8.0),
    (5.0, -8.0),
    (14.0, -8.0),
    (-8.5, 0.0),
    (0.5, 0.0),
    (9.5, 0.0),
    (-13.0, 8.0),
    (-4.0, 8.0),
    (5.0, 8.0),
];

/// Renders one retrieval mode: the eye outline with the pupil at a 2-D
/// offset from the center.
pub fn retrieval_mode_patch(dx: f64, dy: f64) -> ColorImage {
    let n = RETRIEVAL_CANVAS;
    let cx = n as f64 / 2.0;
    let cy = n as f64 / 2.0;
    let rx = crate::synth::EYE_RX_FRAC * n as f64;
    let ry = crate::synth::EYE_RY_FRAC * n as f64;
    let ring = crate::synth::EYE_RING_FRAC * n as f64;
    let rp = 6.0;
    let plane = ScalarImage::from_fn(n, n, |x, y| {
        let px = x as f64;
        let py = y as f64;
        let nx = (px - cx) / rx;
        let ny = (py - cy) / ry;
        let inx = (px - cx) / (rx - ring);
        let iny = (py - cy) / (ry - ring);
        let on_ring = nx * nx + ny * ny <= 1.0 && inx * inx + iny * iny >= 1.0;
        let pdx = px - (cx + dx);
        let pdy = py - (cy + dy);
        let in_pupil = pdx * pdx + pdy * pdy <= rp * rp;
        if on_ring || in_pupil {
            0.1
        } else {
            0.9
        }
    });
    ColorImage::from_gray(&plane)
}

/// The ten-record retrieval space.
pub fn retrieval_records() -> Vec<PatchRecord> {
    RETRIEVAL_MODES
        .iter()
        .enumerate()
        .map(|(i, &(dx, dy))| PatchRecord {
            id: format!("m{i:02}"),
            image: retrieval_mode_patch(dx, dy),
            kind: FeatureKind::LeftEye,
            identity: String::from("synthetic"),
            pose: String::from("front"),
            source_image_id: String::from("synthetic"),
        })
        .collect()
}

/// Identity and pose labels of the face fixture.
pub const FACE_IDENTITY: &str = "id1";
pub const FACE_POSE: &str = "front";

/// The three prior photos' principal modes.
pub fn face_source_params() -> [(&'static str, FaceParams); 3] {
    [
        (
            "srcA",
            FaceParams {
                gaze: -5.0,
                mouth_len: 16.0,
                mouth_thick: 5.0,
                mouth_gap: 0.0,
            },
        ),
        (
            "srcB",
            FaceParams {
                gaze: 5.0,
                mouth_len: 26.0,
                mouth_thick: 7.0,
                mouth_gap: 2.5,
            },
        ),
        (
            "srcC",
            FaceParams {
                gaze: 0.0,
                mouth_len: 22.0,
                mouth_thick: 6.0,
                mouth_gap: 0.0,
            },
        ),
    ]
}

/// The degraded input's own configuration: close to `srcB` but not equal to
/// any prior mode.
pub fn face_input_params() -> FaceParams {
    FaceParams {
        gaze: 4.0,
        mouth_len: 24.0,
        mouth_thick: 7.0,
        mouth_gap: 2.5,
    }
}

/// A mildly wrong eye example: gaze 2 px off the input (about 17% of the
/// 18 px eye width).
pub fn face_moderate_eye_params() -> FaceParams {
    FaceParams {
        gaze: 2.0,
        ..face_input_params()
    }
}

/// The manifest shared by the face fixture's input and priors.
pub fn face_manifest() -> RegionManifest {
    RegionManifest {
        identity: String::from(FACE_IDENTITY),
        pose: String::from(FACE_POSE),
        regions: face_layout()
            .into_iter()
            .map(|(kind, bbox)| (kind, RegionSpec { bbox, mask: None }))
            .collect(),
    }
}

/// Tight feature extents used when scoring output quality (inside the
/// manifest bboxes, clear of the blend feathering).
pub fn face_tight_regions() -> BTreeMap<FeatureKind, Bbox> {
    [
        (FeatureKind::LeftEye, Bbox::new(18, 32, 24, 16)),
        (FeatureKind::RightEye, Bbox::new(54, 32, 24, 16)),
        (FeatureKind::Mouth, Bbox::new(33, 63, 30, 14)),
    ]
    .into_iter()
    .collect()
}

/// Builds the in-memory catalog of the three prior photos and their left-eye
/// and mouth affinity spaces.
pub fn face_catalog(cfg: &AffinityConfig) -> Result<PriorCatalog> {
    let layout: BTreeMap<FeatureKind, Bbox> = face_layout().into_iter().collect();
    let mut catalog = PriorCatalog::default();
    let mut eye_records = Vec::new();
    let mut mouth_records = Vec::new();
    for (id, params) in face_source_params() {
        let img = render_face(&params);
        for (kind, records) in [
            (FeatureKind::LeftEye, &mut eye_records),
            (FeatureKind::Mouth, &mut mouth_records),
        ] {
            let b = layout[&kind];
            records.push(PatchRecord {
                id: format!("{id}_{}", kind.name()),
                image: img.crop(b.x, b.y, b.width, b.height)?,
                kind,
                identity: String::from(FACE_IDENTITY),
                pose: String::from(FACE_POSE),
                source_image_id: String::from(id),
            });
        }
        catalog.sources.insert(
            String::from(id),
            SourcePrior {
                image: img,
                manifest: face_manifest(),
            },
        );
    }
    catalog.spaces.insert(
        SpaceKey {
            identity: String::from(FACE_IDENTITY),
            pose: String::from(FACE_POSE),
            kind: FeatureKind::LeftEye,
        },
        PatchSpace::build(eye_records, cfg, false)?,
    );
    catalog.spaces.insert(
        SpaceKey {
            identity: String::from(FACE_IDENTITY),
            pose: String::from(FACE_POSE),
            kind: FeatureKind::Mouth,
        },
        PatchSpace::build(mouth_records, cfg, false)?,
    );
    Ok(catalog)
}

/// A drastically wrong mouth example: its hue structure sits above the lip
/// line while a strong value bar sits on it, so a hue-driven registration
/// drags the aligned value structure out of place.
pub fn face_drastic_mouth_patch() -> ColorImage {
    let layout: BTreeMap<FeatureKind, Bbox> = face_layout().into_iter().collect();
    let b = layout[&FeatureKind::Mouth];
    let r = ScalarImage::from_fn(b.width, b.height, |_x, y| {
        if (2..=6).contains(&y) {
            0.80
        } else if (9..=13).contains(&y) {
            0.22
        } else {
            0.80
        }
    });
    let g = ScalarImage::from_fn(b.width, b.height, |_x, y| {
        if (2..=6).contains(&y) {
            0.32
        } else if (9..=13).contains(&y) {
            0.20
        } else {
            0.66
        }
    });
    let bl = ScalarImage::from_fn(b.width, b.height, |_x, y| {
        if (2..=6).contains(&y) {
            0.22
        } else if (9..=13).contains(&y) {
            0.18
        } else {
            0.50
        }
    });
    ColorImage::new(r, g, bl).expect("planes share dimensions")
}
