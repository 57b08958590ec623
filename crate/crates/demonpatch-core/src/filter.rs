//! Image gradients and separable Gaussian smoothing.

use alloc::format;
use alloc::vec::Vec;

use crate::image::ScalarImage;
use crate::math;
use crate::{Error, Result};

/// Finite-difference image gradient: central differences in the interior,
/// one-sided at the borders. Returns `(d/dx, d/dy)`.
pub fn gradient(img: &ScalarImage) -> Result<(ScalarImage, ScalarImage)> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::DimensionTooSmall {
            width: w,
            height: h,
        });
    }
    let gx = ScalarImage::from_fn(w, h, |x, y| {
        if x == 0 {
            img.get(1, y) - img.get(0, y)
        } else if x == w - 1 {
            img.get(w - 1, y) - img.get(w - 2, y)
        } else {
            (img.get(x + 1, y) - img.get(x - 1, y)) * 0.5
        }
    });
    let gy = ScalarImage::from_fn(w, h, |x, y| {
        if y == 0 {
            img.get(x, 1) - img.get(x, 0)
        } else if y == h - 1 {
            img.get(x, h - 1) - img.get(x, h - 2)
        } else {
            (img.get(x, y + 1) - img.get(x, y - 1)) * 0.5
        }
    });
    Ok((gx, gy))
}

/// Sum of squared gradient magnitudes over the image; a crude sharpness
/// measure.
pub fn gradient_energy(img: &ScalarImage) -> Result<f64> {
    let (gx, gy) = gradient(img)?;
    Ok(gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| a * a + b * b)
        .sum())
}

/// Samples a Gaussian kernel truncated at radius `ceil(3 sigma)` and
/// renormalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let radius = math::ceil(3.0 * sigma) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in -(radius as i64)..=(radius as i64) {
        kernel.push(math::exp(-(i * i) as f64 * inv));
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    Ok(kernel)
}

/// Separable Gaussian convolution with edge replication at the borders.
pub fn gaussian_smooth(img: &ScalarImage, sigma: f64) -> Result<ScalarImage> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(convolve_separable(img, &kernel))
}

/// Convolves rows then columns with a symmetric 1-D kernel, replicating
/// edge pixels for out-of-range taps.
pub(crate) fn convolve_separable(img: &ScalarImage, kernel: &[f64]) -> ScalarImage {
    let (w, h) = img.dims();
    let radius = kernel.len() / 2;

    let horizontal = ScalarImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (k, &kv) in kernel.iter().enumerate() {
            let xi = x as i64 + k as i64 - radius as i64;
            let xi = xi.clamp(0, w as i64 - 1) as usize;
            acc += kv * img.get(xi, y);
        }
        acc
    });
    ScalarImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (k, &kv) in kernel.iter().enumerate() {
            let yi = y as i64 + k as i64 - radius as i64;
            let yi = yi.clamp(0, h as i64 - 1) as usize;
            acc += kv * horizontal.get(x, yi);
        }
        acc
    })
}
