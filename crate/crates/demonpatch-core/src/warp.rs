//! Backward warping of images by displacement fields.

use crate::color;
use crate::field::DisplacementField;
use crate::image::{ColorImage, ScalarImage};
use crate::{Error, Result};

/// Deforms `img` by `field`: each output pixel samples
/// `img(x - dx(x,y), y - dy(x,y))` with bilinear interpolation, clamping
/// out-of-domain samples to the nearest border pixel. Output values are
/// clamped to `[0,1]`. A zero field reproduces the input exactly.
pub fn warp(img: &ScalarImage, field: &DisplacementField) -> Result<ScalarImage> {
    if img.dims() != field.dims() {
        return Err(Error::dims(img.dims(), field.dims()));
    }
    let (w, h) = img.dims();
    let mut out = ScalarImage::from_fn(w, h, |x, y| {
        let sx = x as f64 - field.dx.get(x, y);
        let sy = y as f64 - field.dy.get(x, y);
        img.sample_clamped(sx, sy)
    });
    out.clamp_unit();
    Ok(out)
}

/// Warps every RGB plane of `img` by the same field.
pub fn warp_rgb(img: &ColorImage, field: &DisplacementField) -> Result<ColorImage> {
    Ok(ColorImage {
        r: warp(&img.r, field)?,
        g: warp(&img.g, field)?,
        b: warp(&img.b, field)?,
    })
}

/// Warps `img` in HSV space: each HSV plane is deformed by the field and the
/// result converted back to RGB.
pub fn warp_hsv(img: &ColorImage, field: &DisplacementField) -> Result<ColorImage> {
    let hsv = color::rgb_to_hsv(img);
    let warped = crate::image::HsvImage {
        h: warp(&hsv.h, field)?,
        s: warp(&hsv.s, field)?,
        v: warp(&hsv.v, field)?,
    };
    Ok(color::hsv_to_rgb(&warped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_identity() {
        let img = ScalarImage::from_fn(7, 5, |x, y| ((x * 3 + y * 5) % 7) as f64 / 7.0);
        let field = DisplacementField::zeros(7, 5);
        let out = warp(&img, &field).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn integer_translation_shifts_with_replication() {
        // Constant along y; dx = 3 moves content 3 px toward +x.
        let w = 8;
        let img = ScalarImage::from_fn(w, 4, |x, _| x as f64 / (w - 1) as f64);
        let field = DisplacementField::new(
            ScalarImage::filled(w, 4, 3.0),
            ScalarImage::filled(w, 4, 0.0),
        )
        .unwrap();
        let out = warp(&img, &field).unwrap();
        for y in 0..4 {
            for x in 0..w {
                let src = x.saturating_sub(3);
                assert!((out.get(x, y) - img.get(src, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let img = ScalarImage::filled(4, 4, 0.0);
        let field = DisplacementField::zeros(5, 4);
        assert!(warp(&img, &field).is_err());
    }
}
