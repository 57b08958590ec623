//! Demon force computation and the iterative time-limited registration loop.
//!
//! Each iteration computes a per-pixel gradient-based force from the current
//! residual, regularizes it with Gaussian smoothing, accumulates it into the
//! total displacement field, and deforms the moving image by the total field.
//! Running a *fixed* number of iterations (rather than to convergence) is
//! what gives the residual at the final iteration its meaning as an affinity
//! measure.

use alloc::format;
use alloc::vec::Vec;

use crate::field::DisplacementField;
use crate::filter::{gaussian_smooth, gradient};
use crate::image::{mean_absolute_error, ScalarImage};
use crate::warp::warp;
use crate::{Error, Result};

/// Any force term whose denominator falls below this contributes zero,
/// keeping flat-region behavior total instead of producing infinities.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

/// Which force formulation drives the diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceMode {
    /// Raw gradient force `(m-s) ∇s / |∇s|²`; unstable where `∇s` vanishes.
    Basic,
    /// Passive force with the stabilized denominator
    /// `(m-s) ∇s / (|∇s|² + α²(s-m)²)`.
    Stabilized,
    /// Stabilized passive force plus the active term driven by the moving
    /// image's own gradient.
    Dual,
}

impl ForceMode {
    pub fn name(self) -> &'static str {
        match self {
            ForceMode::Basic => "basic",
            ForceMode::Stabilized => "stabilized",
            ForceMode::Dual => "dual",
        }
    }
}

/// Parameters of the iterative registration loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationConfig {
    /// Normalization factor for adaptive force strength.
    pub alpha: f64,
    /// Width of the Gaussian regularization of each force increment, pixels.
    pub sigma_reg: f64,
    /// Fixed iteration budget (the time limit).
    pub iterations: usize,
    pub force_mode: ForceMode,
    /// Snapshot stride for the deformed image; 0 records none.
    pub record_every: usize,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            alpha: 2.5,
            sigma_reg: 1.0,
            iterations: 200,
            force_mode: ForceMode::Dual,
            record_every: 0,
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.sigma_reg > 0.0) || !self.sigma_reg.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_reg must be positive, got {}",
                self.sigma_reg
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Output of a completed registration run.
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    pub total_field: DisplacementField,
    /// The moving image warped by the final total field.
    pub deformed: ScalarImage,
    /// Mean absolute error against the static image after each iteration.
    pub mae_history: Vec<f64>,
    /// `(iteration, deformed image)` pairs at the configured stride.
    pub snapshots: Vec<(usize, ScalarImage)>,
}

/// One step of the Demon force for every pixel.
///
/// `grad_s` is the gradient of the static image and `grad_m_cur` the gradient
/// of the *currently warped* moving image; both terms share the residual
/// factor `m_cur - s`.
pub fn demon_force(
    m_cur: &ScalarImage,
    s: &ScalarImage,
    grad_s: &(ScalarImage, ScalarImage),
    grad_m_cur: &(ScalarImage, ScalarImage),
    alpha: f64,
    mode: ForceMode,
) -> Result<DisplacementField> {
    m_cur.check_same_dims(s)?;
    m_cur.check_same_dims(&grad_s.0)?;
    m_cur.check_same_dims(&grad_s.1)?;
    m_cur.check_same_dims(&grad_m_cur.0)?;
    m_cur.check_same_dims(&grad_m_cur.1)?;

    let (w, h) = m_cur.dims();
    let mut dx = ScalarImage::filled(w, h, 0.0);
    let mut dy = ScalarImage::filled(w, h, 0.0);
    let alpha2 = alpha * alpha;

    for y in 0..h {
        for x in 0..w {
            let diff = m_cur.get(x, y) - s.get(x, y);
            if diff == 0.0 {
                continue;
            }
            let sx = grad_s.0.get(x, y);
            let sy = grad_s.1.get(x, y);
            let (mut ux, mut uy) = (0.0, 0.0);

            match mode {
                ForceMode::Basic => {
                    let denom = sx * sx + sy * sy;
                    if denom >= DENOMINATOR_GUARD {
                        ux = diff * sx / denom;
                        uy = diff * sy / denom;
                    }
                }
                ForceMode::Stabilized | ForceMode::Dual => {
                    let diff2 = alpha2 * diff * diff;
                    let denom_s = sx * sx + sy * sy + diff2;
                    if denom_s >= DENOMINATOR_GUARD {
                        ux = diff * sx / denom_s;
                        uy = diff * sy / denom_s;
                    }
                    if mode == ForceMode::Dual {
                        let mx = grad_m_cur.0.get(x, y);
                        let my = grad_m_cur.1.get(x, y);
                        let denom_m = mx * mx + my * my + diff2;
                        if denom_m >= DENOMINATOR_GUARD {
                            ux += diff * mx / denom_m;
                            uy += diff * my / denom_m;
                        }
                    }
                }
            }
            dx.set(x, y, ux);
            dy.set(x, y, uy);
        }
    }
    DisplacementField::new(dx, dy)
}

/// In-flight registration of a moving image toward a static image.
///
/// Exposes the loop one iteration at a time so callers can harvest the total
/// field or deformed image at arbitrary points along the deformation path.
pub struct Registration<'a> {
    moving: &'a ScalarImage,
    stat: &'a ScalarImage,
    grad_s: (ScalarImage, ScalarImage),
    cfg: RegistrationConfig,
    total: DisplacementField,
    current: ScalarImage,
    iteration: usize,
}

impl<'a> Registration<'a> {
    pub fn new(
        moving: &'a ScalarImage,
        stat: &'a ScalarImage,
        cfg: &RegistrationConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        moving.check_same_dims(stat)?;
        let grad_s = gradient(stat)?;
        let (w, h) = moving.dims();
        Ok(Registration {
            moving,
            stat,
            grad_s,
            cfg: cfg.clone(),
            total: DisplacementField::zeros(w, h),
            current: moving.clone(),
            iteration: 0,
        })
    }

    /// Runs one iteration: force, regularization, accumulation, deformation.
    /// Returns the mean absolute error after the deformation.
    pub fn step(&mut self) -> Result<f64> {
        let grad_m = gradient(&self.current)?;
        let force = demon_force(
            &self.current,
            self.stat,
            &self.grad_s,
            &grad_m,
            self.cfg.alpha,
            self.cfg.force_mode,
        )?;
        let smoothed = DisplacementField::new(
            gaussian_smooth(&force.dx, self.cfg.sigma_reg)?,
            gaussian_smooth(&force.dy, self.cfg.sigma_reg)?,
        )?;
        self.total.accumulate(&smoothed)?;
        self.current = warp(self.moving, &self.total)?;
        self.iteration += 1;
        mean_absolute_error(&self.current, self.stat)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn current(&self) -> &ScalarImage {
        &self.current
    }

    pub fn total_field(&self) -> &DisplacementField {
        &self.total
    }

    pub fn into_parts(self) -> (DisplacementField, ScalarImage) {
        (self.total, self.current)
    }
}

/// Runs the full iterative registration for exactly `cfg.iterations` passes.
pub fn register(
    m: &ScalarImage,
    s: &ScalarImage,
    cfg: &RegistrationConfig,
) -> Result<RegistrationResult> {
    let mut reg = Registration::new(m, s, cfg)?;
    let mut mae_history = Vec::with_capacity(cfg.iterations);
    let mut snapshots = Vec::new();
    for it in 1..=cfg.iterations {
        mae_history.push(reg.step()?);
        if cfg.record_every > 0 && it % cfg.record_every == 0 {
            snapshots.push((it, reg.current().clone()));
        }
    }
    let (total_field, deformed) = reg.into_parts();
    Ok(RegistrationResult {
        total_field,
        deformed,
        mae_history,
        snapshots,
    })
}

/// Deformation-path sampling: the warped moving image after each requested
/// iteration count. Step 0 is the unmodified moving image.
pub fn interpolate_path(
    m: &ScalarImage,
    s: &ScalarImage,
    cfg: &RegistrationConfig,
    steps: &[usize],
) -> Result<Vec<ScalarImage>> {
    for pair in steps.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::InvalidParameter("steps must be sorted".into()));
        }
    }
    if let Some(&last) = steps.last() {
        if last > cfg.iterations {
            return Err(Error::StepBeyondBudget {
                step: last,
                iterations: cfg.iterations,
            });
        }
    }
    let mut reg = Registration::new(m, s, cfg)?;
    let mut out = Vec::with_capacity(steps.len());
    for &target in steps {
        while reg.iteration() < target {
            reg.step()?;
        }
        out.push(reg.current().clone());
    }
    Ok(out)
}

/// Like [`interpolate_path`] but harvests the accumulated displacement field
/// at each step instead of the deformed image.
pub fn field_path(
    m: &ScalarImage,
    s: &ScalarImage,
    cfg: &RegistrationConfig,
    steps: &[usize],
) -> Result<Vec<DisplacementField>> {
    for pair in steps.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::InvalidParameter("steps must be sorted".into()));
        }
    }
    if let Some(&last) = steps.last() {
        if last > cfg.iterations {
            return Err(Error::StepBeyondBudget {
                step: last,
                iterations: cfg.iterations,
            });
        }
    }
    let mut reg = Registration::new(m, s, cfg)?;
    let mut out = Vec::with_capacity(steps.len());
    for &target in steps {
        while reg.iteration() < target {
            reg.step()?;
        }
        out.push(reg.total_field().clone());
    }
    Ok(out)
}
