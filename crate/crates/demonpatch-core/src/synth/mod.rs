//! Synthetic test-shape rendering and the breaking-point experiment runner.
//!
//! Targets are always re-rasterized from transformed shape parameters rather
//! than warped from the source, so rendering interpolation never contaminates
//! the registration behavior under test.

pub mod fixtures;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affinity::AffinityConfig;
use crate::demon::register;
use crate::image::{mean_absolute_error, ScalarImage};
use crate::math;
use crate::par;
use crate::{Error, Result};

/// Supersampling grid used for antialiased edge coverage.
const COVERAGE_SAMPLES: usize = 4;

/// Geometric primitive on a canvas. Coordinates are in pixels with integer
/// values at pixel centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
    },
    Bar {
        cx: f64,
        cy: f64,
        len: f64,
        thick: f64,
        angle_deg: f64,
    },
    /// Eye-like construct: an elliptic outline with a pupil disk offset
    /// horizontally by `pupil_dx` from the eye center.
    Eye {
        cx: f64,
        cy: f64,
        pupil_dx: f64,
    },
}

/// Proportions of the [`Shape::Eye`] construct relative to the canvas width:
/// outline semi-axes, outline thickness, and pupil radius. The outline is
/// kept thick and clear of the centered pupil so that moderate gaze shifts
/// deform only the pupil.
pub const EYE_RX_FRAC: f64 = 0.375;
pub const EYE_RY_FRAC: f64 = 0.28;
pub const EYE_RING_FRAC: f64 = 0.05;
pub const EYE_PUPIL_FRAC: f64 = 0.125;

/// Full rasterization request: shape, canvas, intensities, edge handling.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub canvas: (usize, usize),
    pub shape: Shape,
    pub fg: f64,
    pub bg: f64,
    pub antialias: bool,
}

impl ShapeSpec {
    /// The default experiment object: a dark disk on a light ground.
    pub fn default_disk() -> ShapeSpec {
        ShapeSpec {
            canvas: (64, 64),
            shape: Shape::Disk {
                cx: 32.0,
                cy: 32.0,
                r: 12.0,
            },
            fg: 0.2,
            bg: 0.9,
            antialias: true,
        }
    }

    /// The default scaling object: a larger disk, so that the extreme scale
    /// factors demand more edge travel than the iteration budget covers.
    pub fn default_scaling_disk() -> ShapeSpec {
        ShapeSpec {
            shape: Shape::Disk {
                cx: 32.0,
                cy: 32.0,
                r: 18.0,
            },
            ..ShapeSpec::default_disk()
        }
    }

    /// The default rotation object: a dark bar on a light ground.
    pub fn default_bar() -> ShapeSpec {
        ShapeSpec {
            canvas: (64, 64),
            shape: Shape::Bar {
                cx: 32.0,
                cy: 32.0,
                len: 32.0,
                thick: 8.0,
                angle_deg: 0.0,
            },
            fg: 0.2,
            bg: 0.9,
            antialias: true,
        }
    }

    /// The default gaze object: an eye outline with a centered pupil.
    pub fn default_eye() -> ShapeSpec {
        ShapeSpec {
            canvas: (64, 64),
            shape: Shape::Eye {
                cx: 32.0,
                cy: 32.0,
                pupil_dx: 0.0,
            },
            fg: 0.2,
            bg: 0.9,
            antialias: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let (w, h) = self.canvas;
        if w < 2 || h < 2 {
            return Err(Error::DimensionTooSmall {
                width: w,
                height: h,
            });
        }
        if self.fg == self.bg {
            return Err(Error::InvalidParameter(
                "fg and bg intensities must differ".into(),
            ));
        }
        for v in [self.fg, self.bg] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "intensity {v} outside [0,1]"
                )));
            }
        }
        let (wf, hf) = (w as f64, h as f64);
        let inside = |x: f64, y: f64| x >= -0.5 && y >= -0.5 && x <= wf - 0.5 && y <= hf - 0.5;
        let fits = match self.shape {
            Shape::Disk { cx, cy, r } => {
                r >= 0.0 && inside(cx - r, cy - r) && inside(cx + r, cy + r)
            }
            Shape::Rect { x, y, w, h } => {
                w >= 0.0 && h >= 0.0 && inside(x, y) && inside(x + w, y + h)
            }
            Shape::Bar {
                cx,
                cy,
                len,
                thick,
                ..
            } => {
                let half = 0.5 * math::sqrt(len * len + thick * thick);
                len >= 0.0
                    && thick >= 0.0
                    && inside(cx - half, cy - half)
                    && inside(cx + half, cy + half)
            }
            Shape::Eye { cx, cy, pupil_dx } => {
                let rx = EYE_RX_FRAC * wf;
                let ry = EYE_RY_FRAC * wf;
                let rp = EYE_PUPIL_FRAC * wf;
                inside(cx - rx, cy - ry)
                    && inside(cx + rx, cy + ry)
                    && inside(cx + pupil_dx - rp, cy - rp)
                    && inside(cx + pupil_dx + rp, cy + rp)
            }
        };
        if !fits {
            return Err(Error::ShapeOutOfCanvas(format!("{:?}", self.shape)));
        }
        Ok(())
    }

    fn covers(&self, px: f64, py: f64) -> bool {
        match self.shape {
            Shape::Disk { cx, cy, r } => {
                let dx = px - cx;
                let dy = py - cy;
                dx * dx + dy * dy <= r * r
            }
            Shape::Rect { x, y, w, h } => px >= x && px <= x + w && py >= y && py <= y + h,
            Shape::Bar {
                cx,
                cy,
                len,
                thick,
                angle_deg,
            } => {
                let theta = angle_deg * core::f64::consts::PI / 180.0;
                let (sin, cos) = (math::sin(theta), math::cos(theta));
                let dx = px - cx;
                let dy = py - cy;
                let u = dx * cos + dy * sin;
                let v = -dx * sin + dy * cos;
                u.abs() <= len * 0.5 && v.abs() <= thick * 0.5
            }
            Shape::Eye { cx, cy, pupil_dx } => {
                let w = self.canvas.0 as f64;
                let rx = EYE_RX_FRAC * w;
                let ry = EYE_RY_FRAC * w;
                let ring = EYE_RING_FRAC * w;
                let rp = EYE_PUPIL_FRAC * w;
                let nx = (px - cx) / rx;
                let ny = (py - cy) / ry;
                let e_outer = nx * nx + ny * ny;
                let inx = (px - cx) / (rx - ring);
                let iny = (py - cy) / (ry - ring);
                let e_inner = inx * inx + iny * iny;
                let on_ring = e_outer <= 1.0 && e_inner >= 1.0;
                let pdx = px - (cx + pupil_dx);
                let pdy = py - cy;
                let in_pupil = pdx * pdx + pdy * pdy <= rp * rp;
                on_ring || in_pupil
            }
        }
    }

    fn coverage(&self, x: usize, y: usize) -> f64 {
        if !self.antialias {
            return if self.covers(x as f64, y as f64) {
                1.0
            } else {
                0.0
            };
        }
        let n = COVERAGE_SAMPLES;
        let mut hits = 0usize;
        for j in 0..n {
            for i in 0..n {
                let px = x as f64 - 0.5 + (i as f64 + 0.5) / n as f64;
                let py = y as f64 - 0.5 + (j as f64 + 0.5) / n as f64;
                if self.covers(px, py) {
                    hits += 1;
                }
            }
        }
        hits as f64 / (n * n) as f64
    }
}

/// Rasterizes the shape onto its canvas.
pub fn render(spec: &ShapeSpec) -> Result<ScalarImage> {
    spec.validate()?;
    let (w, h) = spec.canvas;
    Ok(ScalarImage::from_fn(w, h, |x, y| {
        let c = spec.coverage(x, y);
        spec.bg + c * (spec.fg - spec.bg)
    }))
}

/// Which transformation family an experiment sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Translation,
    Rotation,
    Scaling,
    Gaze,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Translation => "translation",
            ExperimentKind::Rotation => "rotation",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Gaze => "gaze",
        }
    }

    pub fn parse(s: &str) -> Option<ExperimentKind> {
        match s {
            "translation" => Some(ExperimentKind::Translation),
            "rotation" => Some(ExperimentKind::Rotation),
            "scaling" => Some(ExperimentKind::Scaling),
            "gaze" => Some(ExperimentKind::Gaze),
            _ => None,
        }
    }
}

/// A sweep of one transformation over a sorted list of magnitudes.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub kind: ExperimentKind,
    pub values: Vec<f64>,
    pub base: ShapeSpec,
    pub cfg: AffinityConfig,
}

impl ExperimentGrid {
    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter(
                "experiment grid needs at least one value".into(),
            ));
        }
        for pair in self.values.windows(2) {
            if pair[0] > pair[1] {
                return Err(Error::InvalidParameter(
                    "experiment grid values must be sorted".into(),
                ));
            }
        }
        self.cfg.validate()
    }
}

/// Applies a transformation of the given kind and magnitude to a base shape.
pub fn transform_shape(base: &ShapeSpec, kind: ExperimentKind, value: f64) -> Result<ShapeSpec> {
    let mut out = base.clone();
    out.shape = match (kind, base.shape) {
        (ExperimentKind::Translation, Shape::Disk { cx, cy, r }) => Shape::Disk {
            cx: cx + value,
            cy,
            r,
        },
        (ExperimentKind::Translation, Shape::Rect { x, y, w, h }) => Shape::Rect {
            x: x + value,
            y,
            w,
            h,
        },
        (ExperimentKind::Translation, Shape::Bar { cx, cy, len, thick, angle_deg }) => Shape::Bar {
            cx: cx + value,
            cy,
            len,
            thick,
            angle_deg,
        },
        (ExperimentKind::Translation, Shape::Eye { cx, cy, pupil_dx }) => Shape::Eye {
            cx: cx + value,
            cy,
            pupil_dx,
        },
        (ExperimentKind::Scaling, Shape::Disk { cx, cy, r }) => Shape::Disk {
            cx,
            cy,
            r: r * value,
        },
        (ExperimentKind::Scaling, Shape::Rect { x, y, w, h }) => Shape::Rect {
            x: x + 0.5 * w * (1.0 - value),
            y: y + 0.5 * h * (1.0 - value),
            w: w * value,
            h: h * value,
        },
        (ExperimentKind::Scaling, Shape::Bar { cx, cy, len, thick, angle_deg }) => Shape::Bar {
            cx,
            cy,
            len: len * value,
            thick: thick * value,
            angle_deg,
        },
        (ExperimentKind::Rotation, Shape::Bar { cx, cy, len, thick, angle_deg }) => Shape::Bar {
            cx,
            cy,
            len,
            thick,
            angle_deg: angle_deg + value,
        },
        (ExperimentKind::Rotation, Shape::Rect { x, y, w, h }) => Shape::Bar {
            cx: x + 0.5 * w,
            cy: y + 0.5 * h,
            len: w,
            thick: h,
            angle_deg: value,
        },
        (ExperimentKind::Rotation, disk @ Shape::Disk { .. }) => disk,
        (ExperimentKind::Gaze, Shape::Eye { cx, cy, pupil_dx }) => Shape::Eye {
            cx,
            cy,
            pupil_dx: pupil_dx + value,
        },
        (kind, shape) => {
            return Err(Error::InvalidParameter(format!(
                "{} transform not defined for {shape:?}",
                kind.name()
            )))
        }
    };
    Ok(out)
}

/// One grid point's outcome.
#[derive(Debug, Clone)]
pub struct CurveRecord {
    pub kind: ExperimentKind,
    pub value: f64,
    /// Time-limited Demon distance: `c_scale` times the final residual MAE.
    pub d_t: f64,
    /// Raw MAE between source and target before any iteration.
    pub mae_initial: f64,
    pub mae_final: f64,
    /// `mae_final / mae_initial`; low values indicate a successful deformation.
    pub success_ratio: f64,
    /// Per-iteration residual history of this grid point's registration.
    pub mae_history: Vec<f64>,
    /// Deformed source at the time limit (for triptych dumps).
    pub deformed: ScalarImage,
    /// Rendered target (for triptych dumps).
    pub target: ScalarImage,
}

fn run_point(grid: &ExperimentGrid, source: &ScalarImage, value: f64) -> Result<CurveRecord> {
    let target_spec = transform_shape(&grid.base, grid.kind, value)?;
    let target = render(&target_spec)?;
    let mae_initial = mean_absolute_error(source, &target)?;
    let result = register(source, &target, &grid.cfg.reg)?;
    let mae_final = *result.mae_history.last().expect("at least one iteration");
    let success_ratio = if mae_initial > 0.0 {
        mae_final / mae_initial
    } else {
        0.0
    };
    Ok(CurveRecord {
        kind: grid.kind,
        value,
        d_t: grid.cfg.c_scale * mae_final,
        mae_initial,
        mae_final,
        success_ratio,
        mae_history: result.mae_history,
        deformed: result.deformed,
        target,
    })
}

/// Runs the sweep: renders each transformed target, registers the base image
/// toward it under the configured budget, and records the resulting curve
/// point. Grid points are independent and evaluated in grid order.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<CurveRecord>> {
    grid.validate()?;
    let source = render(&grid.base)?;
    par::map_ordered(&grid.values, |&v| run_point(grid, &source, v))
        .into_iter()
        .collect()
}

/// Gaze sweep with its companion baseline and two-regime slope analysis.
#[derive(Debug, Clone)]
pub struct GazeReport {
    pub records: Vec<CurveRecord>,
    /// Least-squares fit of raw source-to-target MAE against |gaze|.
    pub mae_fit: LineFit,
    /// Index of the detected breaking point among the grid points ordered by
    /// |gaze|.
    pub breaking_index: usize,
    /// Demon-distance slope against |gaze| before and after the breaking point.
    pub d_t_pre_slope: f64,
    pub d_t_post_slope: f64,
}

/// Runs a gaze grid and computes the piecewise-slope report comparing the
/// Demon distance to the raw source-to-target MAE baseline.
pub fn gaze_experiment(grid: &ExperimentGrid) -> Result<GazeReport> {
    if grid.kind != ExperimentKind::Gaze {
        return Err(Error::InvalidParameter(
            "gaze_experiment requires a gaze grid".into(),
        ));
    }
    let records = run_grid(grid)?;
    // Slope analysis runs over |gaze|, so order the points by magnitude.
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        math::abs(records[a].value)
            .partial_cmp(&math::abs(records[b].value))
            .expect("grid values are finite")
    });
    let xs: Vec<f64> = order.iter().map(|&i| math::abs(records[i].value)).collect();
    let mae: Vec<f64> = order.iter().map(|&i| records[i].mae_initial).collect();
    let d_t: Vec<f64> = order.iter().map(|&i| records[i].d_t).collect();
    let mae_fit = fit_line(&xs, &mae);
    let breaking_index = detect_breaking_point(&xs, &d_t);
    let (pre, post) = split_slopes(&xs, &d_t, breaking_index);
    Ok(GazeReport {
        records,
        mae_fit,
        breaking_index,
        d_t_pre_slope: pre,
        d_t_post_slope: post,
    })
}

/// Least-squares line fit with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ys` on `xs`. Degenerate inputs (fewer than two
/// points or zero variance) yield a flat fit with `r_squared` 1.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return LineFit {
            slope: 0.0,
            intercept: ys.first().copied().unwrap_or(0.0),
            r_squared: 1.0,
        };
    }
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return LineFit {
            slope: 0.0,
            intercept: mean_y,
            r_squared: 1.0,
        };
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    LineFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / syy,
    }
}

/// Picks the split index (at least two points on each side) that maximizes
/// the slope increase from the left segment to the right segment.
pub fn detect_breaking_point(xs: &[f64], ys: &[f64]) -> usize {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 4 {
        return n / 2;
    }
    let mut best = 1usize;
    let mut best_gain = f64::NEG_INFINITY;
    for split in 1..n - 2 {
        let (pre, post) = split_slopes(xs, ys, split);
        let gain = post - pre;
        if gain > best_gain {
            best_gain = gain;
            best = split;
        }
    }
    best
}

/// Least-squares slopes of the points up to and including `split` and of the
/// points from `split` onward.
pub fn split_slopes(xs: &[f64], ys: &[f64], split: usize) -> (f64, f64) {
    let split = split.min(xs.len().saturating_sub(1));
    let pre = fit_line(&xs[..=split], &ys[..=split]);
    let post = fit_line(&xs[split..], &ys[split..]);
    (pre.slope, post.slope)
}

/// Parameters of the synthetic face fixture: a disk head with two eye
/// constructs (bright sclera, dark pupil) and a colored bar mouth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceParams {
    /// Horizontal pupil offset shared by both eyes, pixels.
    pub gaze: f64,
    pub mouth_len: f64,
    pub mouth_thick: f64,
    /// Height of the dark opening between the lips; 0 is a closed mouth.
    pub mouth_gap: f64,
}

impl Default for FaceParams {
    fn default() -> Self {
        FaceParams {
            gaze: 0.0,
            mouth_len: 24.0,
            mouth_thick: 6.0,
            mouth_gap: 0.0,
        }
    }
}

/// Canvas size of the synthetic face.
pub const FACE_SIZE: usize = 96;

/// Fixed feature regions of the synthetic face, in render order.
pub fn face_layout() -> [(crate::affinity::FeatureKind, crate::image::Bbox); 4] {
    use crate::affinity::FeatureKind;
    use crate::image::Bbox;
    [
        (FeatureKind::Head, Bbox::new(16, 22, 64, 64)),
        (FeatureKind::LeftEye, Bbox::new(15, 30, 30, 20)),
        (FeatureKind::RightEye, Bbox::new(51, 30, 30, 20)),
        (FeatureKind::Mouth, Bbox::new(28, 60, 40, 20)),
    ]
}

/// Renders the synthetic face. Eyes are compared on the value channel and
/// the mouth carries a distinct hue against the skin.
pub fn render_face(params: &FaceParams) -> crate::image::ColorImage {
    use crate::image::ColorImage;

    const BG: [f64; 3] = [0.30, 0.32, 0.36];

    const PUPIL: [f64; 3] = [0.10, 0.12, 0.20];

    let n = FACE_SIZE;
    let color_at = |px: f64, py: f64| -> [f64; 3] {
        // Soft overhead key light; multiplicative, so hue is untouched and
        // every region carries a continuous intensity distribution.
        let lx = (px - 47.5) / n as f64;
        let ly = (py - 28.0) / n as f64;
        let light = 1.0 - 0.10 * (lx * lx + ly * ly).min(1.0) - 0.04 * ly;
        let lit = |c: [f64; 3]| [c[0] * light, c[1] * light, c[2] * light];
        // Gentle spatial tint so skin and mouth carry continuous hue
        // distributions rather than single spikes.
        let tint = 0.5 + 0.5 * (px * 1.55).sin() * (py * 1.45).cos();
        let skin = [0.80, 0.62 + 0.08 * tint, 0.50];
        // Two-tone red mouth: upper and lower lip carry distinct hues so
        // the hue channel sees structure. Lip hues sit near the skin hue,
        // so blurred lip/skin mixtures stay on a smooth hue path instead
        // of collapsing through gray.
        let mouth_upper = [0.62, 0.16 + 0.07 * tint, 0.12];
        let mouth_lower = [0.70, 0.32 + 0.07 * tint, 0.14];
        let mouth_inner = [0.35, 0.16, 0.10];
        let mouth_du = px - 47.5;
        let mouth_dv = py - 70.0;
        if mouth_du.abs() <= params.mouth_len * 0.5 && mouth_dv.abs() <= params.mouth_thick * 0.5 {
            return lit(if mouth_dv.abs() <= params.mouth_gap * 0.5 {
                mouth_inner
            } else if mouth_dv < 0.0 {
                mouth_upper
            } else {
                mouth_lower
            });
        }
        for ex in [29.5, 65.5] {
            let pdx = px - (ex + params.gaze);
            let pdy = py - 40.0;
            if pdx * pdx + pdy * pdy <= 3.5 * 3.5 {
                return lit(PUPIL);
            }
            let sx = (px - ex) / 11.0;
            let sy = (py - 40.0) / 7.0;
            if sx * sx + sy * sy <= 1.0 {
                return lit([0.95, 0.95, 0.92]);
            }
        }
        let hx = px - 47.5;
        let hy = py - 52.0;
        if hx * hx + hy * hy <= 36.0 * 36.0 {
            return lit(skin);
        }
        lit(BG)
    };

    let mut planes = [
        ScalarImage::filled(n, n, 0.0),
        ScalarImage::filled(n, n, 0.0),
        ScalarImage::filled(n, n, 0.0),
    ];
    let samples = COVERAGE_SAMPLES;
    for y in 0..n {
        for x in 0..n {
            let mut acc = [0.0f64; 3];
            for j in 0..samples {
                for i in 0..samples {
                    let px = x as f64 - 0.5 + (i as f64 + 0.5) / samples as f64;
                    let py = y as f64 - 0.5 + (j as f64 + 0.5) / samples as f64;
                    let c = color_at(px, py);
                    acc[0] += c[0];
                    acc[1] += c[1];
                    acc[2] += c[2];
                }
            }
            let k = (samples * samples) as f64;
            planes[0].set(x, y, acc[0] / k);
            planes[1].set(x, y, acc[1] / k);
            planes[2].set(x, y, acc[2] / k);
        }
    }
    let [r, g, b] = planes;
    ColorImage { r, g, b }
}

/// Renders a source/deformed/target strip for figure-style dumps.
pub fn triptych(source: &ScalarImage, deformed: &ScalarImage, target: &ScalarImage) -> ScalarImage {
    let (w, h) = source.dims();
    let gap = 2usize;
    let mut out = ScalarImage::filled(w * 3 + gap * 2, h, 1.0);
    for (slot, img) in [source, deformed, target].into_iter().enumerate() {
        let x0 = slot * (w + gap);
        for y in 0..h.min(img.height()) {
            for x in 0..w.min(img.width()) {
                out.set(x0 + x, y, img.get(x, y));
            }
        }
    }
    out
}

/// Identifier string used in CSV output for one grid point.
pub fn point_label(kind: ExperimentKind, value: f64) -> String {
    format!("{}_{:+.2}", kind.name(), value)
}
