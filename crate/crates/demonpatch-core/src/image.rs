//! Image containers: scalar planes, RGB and HSV triples, and blend masks.
//!
//! Intensities are normalized reals in `[0,1]`, stored row-major. Images are
//! immutable values from the caller's point of view: every public operation
//! returns a new image and never mutates its arguments.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Pixel-space bounding box `(x, y, width, height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bbox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Bbox {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Bbox {
            x,
            y,
            width,
            height,
        }
    }

    pub fn validate_within(&self, width: usize, height: usize) -> Result<()> {
        if self.width == 0
            || self.height == 0
            || self.x + self.width > width
            || self.y + self.height > height
        {
            return Err(Error::BboxOutOfBounds {
                bbox: (self.x, self.y, self.width, self.height),
                width,
                height,
            });
        }
        Ok(())
    }

    /// Reflection about the vertical centerline of a `width`-pixel image.
    pub fn mirrored_horizontally(&self, width: usize) -> Bbox {
        Bbox {
            x: width - self.x - self.width,
            y: self.y,
            width: self.width,
            height: self.height,
        }
    }
}

/// A single-channel 2-D intensity field with values in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarImage {
    /// Creates an image filled with `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        ScalarImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps a row-major buffer; `data.len()` must equal `width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(String::from(
                "data length does not equal width * height",
            )));
        }
        Ok(ScalarImage {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ScalarImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Returns a copy with `f` applied to every pixel value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarImage {
        let mut out = self.clone();
        for v in out.data_mut() {
            *v = f(*v);
        }
        out
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    /// Mean intensity over all pixels.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Clamps every pixel into `[0,1]` in place.
    pub(crate) fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Bilinear sample at real coordinates; out-of-domain coordinates clamp
    /// to the nearest border pixel. Integer coordinates reproduce pixel
    /// values exactly.
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = math::floor(xc) as usize;
        let y0 = math::floor(yc) as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let p00 = self.get(x0, y0);
        let p10 = self.get(x1, y0);
        let p01 = self.get(x0, y1);
        let p11 = self.get(x1, y1);
        (1.0 - fy) * ((1.0 - fx) * p00 + fx * p10) + fy * ((1.0 - fx) * p01 + fx * p11)
    }

    /// Bilinear resize to `(new_w, new_h)` using the pixel-center convention.
    pub fn resize(&self, new_w: usize, new_h: usize) -> ScalarImage {
        assert!(new_w > 0 && new_h > 0);
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        ScalarImage::from_fn(new_w, new_h, |x, y| {
            let src_x = (x as f64 + 0.5) * sx - 0.5;
            let src_y = (y as f64 + 0.5) * sy - 0.5;
            self.sample_clamped(src_x, src_y)
        })
    }

    /// Extracts the rectangle at `(x, y)` with size `(w, h)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<ScalarImage> {
        if x + w > self.width || y + h > self.height || w == 0 || h == 0 {
            return Err(Error::BboxOutOfBounds {
                bbox: (x, y, w, h),
                width: self.width,
                height: self.height,
            });
        }
        Ok(ScalarImage::from_fn(w, h, |i, j| self.get(x + i, y + j)))
    }

    /// Returns a copy with `patch` written at `(x, y)`.
    pub fn paste(&self, patch: &ScalarImage, x: usize, y: usize) -> Result<ScalarImage> {
        if x + patch.width > self.width || y + patch.height > self.height {
            return Err(Error::BboxOutOfBounds {
                bbox: (x, y, patch.width, patch.height),
                width: self.width,
                height: self.height,
            });
        }
        let mut out = self.clone();
        for j in 0..patch.height {
            for i in 0..patch.width {
                out.set(x + i, y + j, patch.get(i, j));
            }
        }
        Ok(out)
    }

    /// Checks that `other` has the same dimensions.
    pub fn check_same_dims(&self, other: &ScalarImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// Mean absolute error between two equally-sized images.
pub fn mean_absolute_error(a: &ScalarImage, b: &ScalarImage) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| math::abs(x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// A three-plane RGB image; all planes share dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub r: ScalarImage,
    pub g: ScalarImage,
    pub b: ScalarImage,
}

impl ColorImage {
    pub fn new(r: ScalarImage, g: ScalarImage, b: ScalarImage) -> Result<Self> {
        r.check_same_dims(&g)?;
        r.check_same_dims(&b)?;
        Ok(ColorImage { r, g, b })
    }

    /// Replicates one plane into all three channels.
    pub fn from_gray(plane: &ScalarImage) -> Self {
        ColorImage {
            r: plane.clone(),
            g: plane.clone(),
            b: plane.clone(),
        }
    }

    pub fn filled(width: usize, height: usize, r: f64, g: f64, b: f64) -> Self {
        ColorImage {
            r: ScalarImage::filled(width, height, r),
            g: ScalarImage::filled(width, height, g),
            b: ScalarImage::filled(width, height, b),
        }
    }

    pub fn width(&self) -> usize {
        self.r.width()
    }

    pub fn height(&self) -> usize {
        self.r.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.r.dims()
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<ColorImage> {
        Ok(ColorImage {
            r: self.r.crop(x, y, w, h)?,
            g: self.g.crop(x, y, w, h)?,
            b: self.b.crop(x, y, w, h)?,
        })
    }

    pub fn paste(&self, patch: &ColorImage, x: usize, y: usize) -> Result<ColorImage> {
        Ok(ColorImage {
            r: self.r.paste(&patch.r, x, y)?,
            g: self.g.paste(&patch.g, x, y)?,
            b: self.b.paste(&patch.b, x, y)?,
        })
    }

    pub fn resize(&self, new_w: usize, new_h: usize) -> ColorImage {
        ColorImage {
            r: self.r.resize(new_w, new_h),
            g: self.g.resize(new_w, new_h),
            b: self.b.resize(new_w, new_h),
        }
    }

    pub fn check_same_dims(&self, other: &ColorImage) -> Result<()> {
        self.r.check_same_dims(&other.r)
    }

    /// Applies `f` to each plane.
    pub fn map_planes(&self, mut f: impl FnMut(&ScalarImage) -> ScalarImage) -> ColorImage {
        ColorImage {
            r: f(&self.r),
            g: f(&self.g),
            b: f(&self.b),
        }
    }
}

/// An HSV image with each channel normalized to `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    pub h: ScalarImage,
    pub s: ScalarImage,
    pub v: ScalarImage,
}

impl HsvImage {
    pub fn width(&self) -> usize {
        self.h.width()
    }

    pub fn height(&self) -> usize {
        self.h.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.h.dims()
    }
}

/// Per-pixel blend weights in `[0,1]`; 1 selects the inserted image.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendMask {
    weights: ScalarImage,
}

impl BlendMask {
    pub fn new(weights: ScalarImage) -> Result<Self> {
        if weights.data().iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidParameter(String::from(
                "blend weights must lie in [0,1]",
            )));
        }
        Ok(BlendMask { weights })
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        BlendMask::new(ScalarImage::filled(width, height, value))
    }

    pub fn weights(&self) -> &ScalarImage {
        &self.weights
    }

    pub fn width(&self) -> usize {
        self.weights.width()
    }

    pub fn height(&self) -> usize {
        self.weights.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.weights.dims()
    }
}
