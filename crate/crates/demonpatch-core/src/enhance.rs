//! End-to-end semantic-patch enhancement: select the best high-quality
//! exemplar per feature, infer correlated regions from the matching source
//! photos, and embed the registered high-quality content into a brightened
//! copy of the input.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affinity::{select_channel, AffinityConfig, FeatureKind};
use crate::color::{hsv_to_rgb, rgb_to_hsv};
use crate::demon::{register, RegistrationConfig};
use crate::filter::gaussian_smooth;
use crate::histogram::histogram_match;
use crate::image::{mean_absolute_error, BlendMask, ColorImage, HsvImage, ScalarImage};
use crate::math;
use crate::par;
use crate::pyramid::blend_multiresolution;
use crate::space::{PatchRecord, PatchSpace, QueryResult};
use crate::warp::warp_rgb;
use crate::{Error, Result};

/// Regularization width of the embedding stage's fine registration.
pub const FINE_REGISTRATION_SIGMA: f64 = 2.0;

/// Channel smoothing applied to both sides before computing the
/// fine-registration field.
pub const FINE_PRESMOOTH_SIGMA: f64 = 1.75;

/// Iteration cap of the fine registration. Alignment of a selected example
/// needs only a short run; longer runs start bending the example into the
/// degradation of the target.
pub const FINE_REGISTRATION_ITERATIONS: usize = 30;

/// Displacements below this magnitude (pixels) are treated as registration
/// noise and removed from the fine field by soft shrinkage.
pub const FINE_FIELD_FLOOR: f64 = 0.3;

fn soft_shrink_field(
    field: &crate::field::DisplacementField,
    floor: f64,
) -> crate::field::DisplacementField {
    let mut dx = field.dx.clone();
    let mut dy = field.dy.clone();
    for i in 0..dx.data().len() {
        let ux = dx.data()[i];
        let uy = dy.data()[i];
        let mag = crate::math::sqrt(ux * ux + uy * uy);
        let scale = if mag > floor { (mag - floor) / mag } else { 0.0 };
        dx.data_mut()[i] = ux * scale;
        dy.data_mut()[i] = uy * scale;
    }
    crate::field::DisplacementField::new(dx, dy).expect("components share dimensions")
}

/// Crops the rectangle described by `bbox`.
pub fn crop_bbox(img: &ColorImage, bbox: Bbox) -> Result<ColorImage> {
    img.crop(bbox.x, bbox.y, bbox.width, bbox.height)
}

pub use crate::image::Bbox;

/// One declared feature region: where it sits and, optionally, a
/// caller-supplied blend mask of the same size.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub bbox: Bbox,
    pub mask: Option<ScalarImage>,
}

/// Declarative description of an image's semantic regions. Both degraded
/// inputs and high-quality prior photos carry the same structure.
#[derive(Debug, Clone)]
pub struct RegionManifest {
    pub identity: String,
    pub pose: String,
    pub regions: BTreeMap<FeatureKind, RegionSpec>,
}

impl RegionManifest {
    pub fn region(&self, kind: FeatureKind) -> Option<&RegionSpec> {
        self.regions.get(&kind)
    }

    /// Checks every declared bbox (and mask size) against the image size.
    pub fn validate_against(&self, width: usize, height: usize) -> Result<()> {
        for (kind, spec) in &self.regions {
            spec.bbox.validate_within(width, height)?;
            if let Some(mask) = &spec.mask {
                if mask.dims() != (spec.bbox.width, spec.bbox.height) {
                    return Err(Error::InvalidParameter(format!(
                        "{} mask size {}x{} does not match its bbox {}x{}",
                        kind.name(),
                        mask.width(),
                        mask.height(),
                        spec.bbox.width,
                        spec.bbox.height
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A prior photo with its region manifest.
#[derive(Debug, Clone)]
pub struct SourcePrior {
    pub image: ColorImage,
    pub manifest: RegionManifest,
}

/// Lookup key for an affinity space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpaceKey {
    pub identity: String,
    pub pose: String,
    pub kind: FeatureKind,
}

/// In-memory catalog of affinity spaces and the prior photos their records
/// were cut from.
#[derive(Debug, Clone, Default)]
pub struct PriorCatalog {
    pub spaces: BTreeMap<SpaceKey, PatchSpace>,
    pub sources: BTreeMap<String, SourcePrior>,
}

impl PriorCatalog {
    pub fn space(&self, identity: &str, pose: &str, kind: FeatureKind) -> Option<&PatchSpace> {
        self.spaces.get(&SpaceKey {
            identity: String::from(identity),
            pose: String::from(pose),
            kind,
        })
    }

    pub fn source(&self, id: &str) -> Result<&SourcePrior> {
        self.sources.get(id).ok_or_else(|| Error::UnresolvedSource {
            id: String::from(id),
        })
    }

    /// Every record of every space must resolve to a catalog source.
    pub fn validate(&self) -> Result<()> {
        for space in self.spaces.values() {
            for record in space.records() {
                self.source(&record.source_image_id)?;
            }
        }
        Ok(())
    }
}

/// Per-feature nearest-neighbor selections from the measure.
pub type SelectionMap = BTreeMap<FeatureKind, QueryResult>;

/// Step one of the pipeline: crop each queryable feature from the input,
/// resample it to the space's canonical size, and run the measure-based
/// nearest-neighbor search. Only the left eye and mouth are queried; the
/// right eye and head are inferred afterwards.
pub fn select_examples(
    input: &ColorImage,
    manifest: &RegionManifest,
    catalog: &PriorCatalog,
    cfg: &AffinityConfig,
) -> Result<SelectionMap> {
    cfg.validate()?;
    manifest.validate_against(input.width(), input.height())?;
    let mut jobs = Vec::new();
    for kind in [FeatureKind::LeftEye, FeatureKind::Mouth] {
        let region = manifest.region(kind).ok_or(Error::MissingFeature {
            kind,
            stage: "select",
        })?;
        let space =
            catalog
                .space(&manifest.identity, &manifest.pose, kind)
                .ok_or(Error::MissingFeature {
                    kind,
                    stage: "select",
                })?;
        let bbox = region.bbox;
        let query = input.crop(bbox.x, bbox.y, bbox.width, bbox.height)?;
        let (cw, ch) = space.canonical_size();
        jobs.push((kind, space, query.resize(cw, ch)));
    }
    let results: Vec<Result<(FeatureKind, QueryResult)>> =
        par::map_ordered(&jobs, |(kind, space, query)| {
            Ok((*kind, space.nn_query(query, cfg)?))
        });
    let mut selection = SelectionMap::new();
    for r in results {
        let (kind, q) = r?;
        selection.insert(kind, q);
    }
    Ok(selection)
}

/// The regions feeding the embedding stage, resolved to concrete patches.
#[derive(Debug, Clone)]
pub struct EmbedPlan {
    pub left_eye: PatchRecord,
    /// Cut from the left-eye match's source photo; present when that photo's
    /// manifest declares a right-eye region.
    pub right_eye: Option<PatchRecord>,
    pub mouth: PatchRecord,
    /// Cut from the mouth match's source photo when declared there.
    pub head: Option<PatchRecord>,
    /// The mouth match's source photo: illumination reference for brightening.
    pub background: ColorImage,
    /// Measure distances of the two direct selections.
    pub left_eye_distance: f64,
    pub mouth_distance: f64,
}

/// Step two: resolve correlated regions. The right eye is cut from the same
/// photo the left-eye match came from; head/skin and the background
/// illumination reference follow the best-matching mouth's photo.
pub fn infer_correlated(
    selection: &SelectionMap,
    manifest: &RegionManifest,
    catalog: &PriorCatalog,
) -> Result<EmbedPlan> {
    let left_q = selection
        .get(&FeatureKind::LeftEye)
        .ok_or(Error::MissingFeature {
            kind: FeatureKind::LeftEye,
            stage: "infer",
        })?;
    let mouth_q = selection
        .get(&FeatureKind::Mouth)
        .ok_or(Error::MissingFeature {
            kind: FeatureKind::Mouth,
            stage: "infer",
        })?;

    let left_space = catalog
        .space(&manifest.identity, &manifest.pose, FeatureKind::LeftEye)
        .ok_or(Error::MissingFeature {
            kind: FeatureKind::LeftEye,
            stage: "infer",
        })?;
    let mouth_space = catalog
        .space(&manifest.identity, &manifest.pose, FeatureKind::Mouth)
        .ok_or(Error::MissingFeature {
            kind: FeatureKind::Mouth,
            stage: "infer",
        })?;

    let left_rec = left_space
        .record(&left_q.best_id)
        .ok_or_else(|| Error::UnknownRecord {
            id: left_q.best_id.clone(),
        })?
        .clone();
    let mouth_rec = mouth_space
        .record(&mouth_q.best_id)
        .ok_or_else(|| Error::UnknownRecord {
            id: mouth_q.best_id.clone(),
        })?
        .clone();

    let eye_source = catalog.source(&left_rec.source_image_id)?;
    let right_eye = match eye_source.manifest.region(FeatureKind::RightEye) {
        Some(region) => {
            let b = region.bbox;
            Some(PatchRecord {
                id: format!("{}:right_eye", left_rec.source_image_id),
                image: eye_source.image.crop(b.x, b.y, b.width, b.height)?,
                kind: FeatureKind::RightEye,
                identity: left_rec.identity.clone(),
                pose: left_rec.pose.clone(),
                source_image_id: left_rec.source_image_id.clone(),
            })
        }
        None => None,
    };

    let mouth_source = catalog.source(&mouth_rec.source_image_id)?;
    let head = match mouth_source.manifest.region(FeatureKind::Head) {
        Some(region) => {
            let b = region.bbox;
            Some(PatchRecord {
                id: format!("{}:head", mouth_rec.source_image_id),
                image: mouth_source.image.crop(b.x, b.y, b.width, b.height)?,
                kind: FeatureKind::Head,
                identity: mouth_rec.identity.clone(),
                pose: mouth_rec.pose.clone(),
                source_image_id: mouth_rec.source_image_id.clone(),
            })
        }
        None => None,
    };

    Ok(EmbedPlan {
        left_eye_distance: left_q.distance,
        mouth_distance: mouth_q.distance,
        left_eye: left_rec,
        right_eye,
        mouth: mouth_rec,
        head,
        background: mouth_source.image.clone(),
    })
}

/// Report entry for one embedded region.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub kind: FeatureKind,
    pub chosen_id: String,
    /// Measure distance of the selection; `None` for inferred regions.
    pub distance: Option<f64>,
    pub registration_mae_before: f64,
    pub registration_mae_after: f64,
    /// Set when registration failed to reduce the residual.
    pub flagged: bool,
}

/// Report of a completed embedding.
#[derive(Debug, Clone, Default)]
pub struct EnhanceReport {
    pub regions: Vec<RegionReport>,
}

/// Intermediate images for debugging dumps.
#[derive(Debug, Clone)]
pub struct RegionDump {
    pub kind: FeatureKind,
    pub adjusted_input: ColorImage,
    pub deformed: ColorImage,
}

/// Output of the embedding stage.
#[derive(Debug, Clone)]
pub struct EmbedOutput {
    pub composite: ColorImage,
    /// The input after illumination adjustment toward the background source.
    pub brightened: ColorImage,
    pub report: EnhanceReport,
    pub region_dumps: Vec<RegionDump>,
}

fn replace_value_plane(img: &ColorImage, v: ScalarImage) -> ColorImage {
    let hsv = rgb_to_hsv(img);
    hsv_to_rgb(&HsvImage {
        h: hsv.h,
        s: hsv.s,
        v,
    })
}

/// Weight-1 core ramping linearly to 0 at the bbox edge over 10% of the bbox
/// width (at least one pixel).
pub fn feathered_mask(width: usize, height: usize, bbox: Bbox) -> Result<BlendMask> {
    bbox.validate_within(width, height)?;
    let ramp = (math::round(0.1 * bbox.width as f64) as usize).max(1);
    let weights = ScalarImage::from_fn(width, height, |x, y| {
        if x < bbox.x || y < bbox.y || x >= bbox.x + bbox.width || y >= bbox.y + bbox.height {
            return 0.0;
        }
        let i = x - bbox.x;
        let j = y - bbox.y;
        let d = (i + 1)
            .min(bbox.width - i)
            .min(j + 1)
            .min(bbox.height - j);
        (d as f64 / ramp as f64).min(1.0)
    });
    BlendMask::new(weights)
}

fn mask_for_region(
    width: usize,
    height: usize,
    bbox: Bbox,
    supplied: Option<&ScalarImage>,
) -> Result<BlendMask> {
    match supplied {
        Some(mask) => {
            let zeros = ScalarImage::filled(width, height, 0.0);
            BlendMask::new(zeros.paste(mask, bbox.x, bbox.y)?)
        }
        None => feathered_mask(width, height, bbox),
    }
}

struct PreparedRegion {
    kind: FeatureKind,
    bbox: Bbox,
    patch: ColorImage,
    mask: BlendMask,
    report: RegionReport,
    dump: RegionDump,
}

fn prepare_feature(
    brightened: &ColorImage,
    bbox: Bbox,
    supplied_mask: Option<&ScalarImage>,
    record: &PatchRecord,
    distance: Option<f64>,
    cfg: &AffinityConfig,
) -> Result<PreparedRegion> {
    let kind = record.kind;
    let input_patch = brightened.crop(bbox.x, bbox.y, bbox.width, bbox.height)?;
    let hq = record.image.resize(bbox.width, bbox.height);

    // Illumination: bring the input feature to the example's brightness
    // before the fine registration.
    let hq_v = rgb_to_hsv(&hq).v;
    let input_v = rgb_to_hsv(&input_patch).v;
    let adjusted_input = replace_value_plane(&input_patch, histogram_match(&input_v, &hq_v));

    let rgb_mae = |a: &ColorImage, b: &ColorImage| -> Result<f64> {
        Ok((mean_absolute_error(&a.r, &b.r)?
            + mean_absolute_error(&a.g, &b.g)?
            + mean_absolute_error(&a.b, &b.b)?)
            / 3.0)
    };
    let moving = select_channel(&hq, kind);
    let target = select_channel(&adjusted_input, kind);
    let channel_before = mean_absolute_error(&moving, &target)?;
    let mae_before = rgb_mae(&hq, &adjusted_input)?;

    // A pair already aligned to below half an 8-bit quantization level has
    // nothing for the registration to act on except quantization dither,
    // which the force equation would amplify; keep the example as is.
    let (deformed, mae_after) = if channel_before <= 0.5 / 256.0 {
        (hq.clone(), mae_before)
    } else {
        // The fine registration aligns structure onto a degraded target.
        // The field is computed on mildly smoothed channels under a short,
        // strongly regularized budget, and sub-pixel chatter is removed by
        // soft shrinkage, so it captures whole-feature motion instead of
        // bending the example into the target's noise or blur; the crisp
        // example is then warped by that field.
        let moving_s = gaussian_smooth(&moving, FINE_PRESMOOTH_SIGMA)?;
        let target_s = gaussian_smooth(&target, FINE_PRESMOOTH_SIGMA)?;
        let fine_cfg = RegistrationConfig {
            sigma_reg: cfg.reg.sigma_reg.max(FINE_REGISTRATION_SIGMA),
            iterations: cfg.reg.iterations.min(FINE_REGISTRATION_ITERATIONS),
            ..cfg.reg.clone()
        };
        let reg = register(&moving_s, &target_s, &fine_cfg)?;
        let field = soft_shrink_field(&reg.total_field, FINE_FIELD_FLOOR);
        let deformed = warp_rgb(&hq, &field)?;
        let mae_after = rgb_mae(&deformed, &adjusted_input)?;
        (deformed, mae_after)
    };

    let mask = mask_for_region(brightened.width(), brightened.height(), bbox, supplied_mask)?;
    Ok(PreparedRegion {
        kind,
        bbox,
        patch: deformed.clone(),
        mask,
        report: RegionReport {
            kind,
            chosen_id: record.id.clone(),
            distance,
            registration_mae_before: mae_before,
            registration_mae_after: mae_after,
            flagged: mae_after > mae_before,
        },
        dump: RegionDump {
            kind,
            adjusted_input,
            deformed,
        },
    })
}

/// Step three: embed the planned regions into the input.
///
/// The input is first brightened by matching its value channel to the
/// background source. The head patch is then aligned rectangle-to-rectangle
/// onto the input's head bbox; each facial feature is illumination-matched,
/// Demon-registered (high-quality patch moving, input feature static), and
/// the deformed high-quality patches are multiresolution-blended into the
/// brightened input in a fixed order (head, left eye, right eye, mouth).
pub fn embed(
    input: &ColorImage,
    manifest: &RegionManifest,
    plan: &EmbedPlan,
    cfg: &AffinityConfig,
    blend_levels: usize,
) -> Result<EmbedOutput> {
    cfg.validate()?;
    manifest.validate_against(input.width(), input.height())?;
    if plan.background.dims() != input.dims() {
        return Err(Error::dims(input.dims(), plan.background.dims()));
    }

    // Stage: brighten.
    let input_hsv = rgb_to_hsv(input);
    let bg_v = rgb_to_hsv(&plan.background).v;
    let brightened = hsv_to_rgb(&HsvImage {
        h: input_hsv.h,
        s: input_hsv.s,
        v: histogram_match(&input_hsv.v, &bg_v),
    });

    let (w, h) = input.dims();
    let mut report = EnhanceReport::default();
    let mut dumps = Vec::new();
    let mut layers: Vec<PreparedRegion> = Vec::new();

    // Stage: head alignment (rectangle-to-rectangle resampling of the source
    // head region onto the input's head bbox).
    if let (Some(head), Some(region)) = (&plan.head, manifest.region(FeatureKind::Head)) {
        let bbox = region.bbox;
        let aligned = head.image.resize(bbox.width, bbox.height);
        let mask = mask_for_region(w, h, bbox, region.mask.as_ref())?;
        let input_patch = brightened.crop(bbox.x, bbox.y, bbox.width, bbox.height)?;
        report.regions.push(RegionReport {
            kind: FeatureKind::Head,
            chosen_id: head.id.clone(),
            distance: None,
            registration_mae_before: 0.0,
            registration_mae_after: 0.0,
            flagged: false,
        });
        dumps.push(RegionDump {
            kind: FeatureKind::Head,
            adjusted_input: input_patch,
            deformed: aligned.clone(),
        });
        layers.push(PreparedRegion {
            kind: FeatureKind::Head,
            bbox,
            patch: aligned,
            mask,
            report: report.regions.last().expect("just pushed").clone(),
            dump: dumps.last().expect("just pushed").clone(),
        });
    }

    // Stage: facial features. Resolve each feature's input bbox; a missing
    // right-eye bbox is inferred by mirroring the left eye horizontally.
    let mut feature_jobs: Vec<(Bbox, Option<ScalarImage>, &PatchRecord, Option<f64>)> = Vec::new();
    let left_region = manifest
        .region(FeatureKind::LeftEye)
        .ok_or(Error::MissingFeature {
            kind: FeatureKind::LeftEye,
            stage: "embed",
        })?;
    feature_jobs.push((
        left_region.bbox,
        left_region.mask.clone(),
        &plan.left_eye,
        Some(plan.left_eye_distance),
    ));
    if let Some(right) = &plan.right_eye {
        let (bbox, mask) = match manifest.region(FeatureKind::RightEye) {
            Some(region) => (region.bbox, region.mask.clone()),
            None => (left_region.bbox.mirrored_horizontally(w), None),
        };
        bbox.validate_within(w, h)?;
        feature_jobs.push((bbox, mask, right, None));
    }
    let mouth_region = manifest
        .region(FeatureKind::Mouth)
        .ok_or(Error::MissingFeature {
            kind: FeatureKind::Mouth,
            stage: "embed",
        })?;
    feature_jobs.push((
        mouth_region.bbox,
        mouth_region.mask.clone(),
        &plan.mouth,
        Some(plan.mouth_distance),
    ));

    let prepared: Vec<Result<PreparedRegion>> =
        par::map_ordered(&feature_jobs, |(bbox, mask, record, distance)| {
            prepare_feature(&brightened, *bbox, mask.as_ref(), record, *distance, cfg)
        });
    for p in prepared {
        let p = p?;
        report.regions.push(p.report.clone());
        dumps.push(p.dump.clone());
        layers.push(p);
    }

    // Stage: blend, in fixed kind order for determinism.
    layers.sort_by_key(|l| FeatureKind::ALL.iter().position(|k| *k == l.kind));
    let mut composite = brightened.clone();
    for layer in &layers {
        let insert = composite.paste(&layer.patch, layer.bbox.x, layer.bbox.y)?;
        composite = blend_multiresolution(&composite, &insert, &layer.mask, blend_levels)?;
    }

    Ok(EmbedOutput {
        composite,
        brightened,
        report,
        region_dumps: dumps,
    })
}

/// The full pipeline: select, infer, embed.
pub fn enhance(
    input: &ColorImage,
    manifest: &RegionManifest,
    catalog: &PriorCatalog,
    cfg: &AffinityConfig,
    blend_levels: usize,
) -> Result<(SelectionMap, EmbedOutput)> {
    catalog.validate()?;
    let selection = select_examples(input, manifest, catalog, cfg)?;
    let plan = infer_correlated(&selection, manifest, catalog)?;
    let output = embed(input, manifest, &plan, cfg, blend_levels)?;
    Ok((selection, output))
}
