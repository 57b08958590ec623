//! Gaussian and Laplacian pyramids and multiresolution (Burt–Adelson) blending.

use alloc::vec::Vec;

use crate::filter::gaussian_smooth;
use crate::image::{BlendMask, ColorImage, ScalarImage};
use crate::{Error, Result};

/// Smoothing width applied before each 2x decimation.
const PYRAMID_SIGMA: f64 = 1.0;

fn check_levels(width: usize, height: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::TooManyLevels {
            levels,
            width,
            height,
        });
    }
    let min_size = 1usize << (levels - 1);
    if width < min_size || height < min_size {
        return Err(Error::TooManyLevels {
            levels,
            width,
            height,
        });
    }
    Ok(())
}

/// Gaussian-smooths then keeps every second pixel; output size is
/// `ceil(n / 2)` along each axis.
fn downsample(img: &ScalarImage) -> ScalarImage {
    let smoothed = gaussian_smooth(img, PYRAMID_SIGMA).expect("fixed sigma is valid");
    let (w, h) = img.dims();
    let nw = w.div_ceil(2);
    let nh = h.div_ceil(2);
    ScalarImage::from_fn(nw, nh, |x, y| smoothed.get(x * 2, y * 2))
}

fn upsample(img: &ScalarImage, target_w: usize, target_h: usize) -> ScalarImage {
    img.resize(target_w, target_h)
}

/// Gaussian pyramid: level 0 is the input, each next level is smoothed and
/// 2x decimated.
pub fn build_gaussian_pyramid(img: &ScalarImage, levels: usize) -> Result<Vec<ScalarImage>> {
    check_levels(img.width(), img.height(), levels)?;
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    for _ in 1..levels {
        let next = downsample(out.last().expect("non-empty"));
        out.push(next);
    }
    Ok(out)
}

/// Laplacian pyramid: signed detail planes `G_i - up(G_{i+1})` for all but
/// the last level, which stores the coarsest Gaussian level. Detail planes
/// are coefficient fields and are not confined to `[0,1]`.
pub fn build_laplacian_pyramid(img: &ScalarImage, levels: usize) -> Result<Vec<ScalarImage>> {
    let gauss = build_gaussian_pyramid(img, levels)?;
    let mut out = Vec::with_capacity(levels);
    for i in 0..levels - 1 {
        let (w, h) = gauss[i].dims();
        let up = upsample(&gauss[i + 1], w, h);
        let detail = ScalarImage::from_fn(w, h, |x, y| gauss[i].get(x, y) - up.get(x, y));
        out.push(detail);
    }
    out.push(gauss[levels - 1].clone());
    Ok(out)
}

/// Inverse of [`build_laplacian_pyramid`]: reconstructs the full-resolution
/// plane by repeated upsample-and-add. Exact up to float rounding.
pub fn collapse_laplacian_pyramid(pyramid: &[ScalarImage]) -> Result<ScalarImage> {
    if pyramid.is_empty() {
        return Err(Error::TooManyLevels {
            levels: 0,
            width: 0,
            height: 0,
        });
    }
    let mut acc = pyramid[pyramid.len() - 1].clone();
    for detail in pyramid[..pyramid.len() - 1].iter().rev() {
        let (w, h) = detail.dims();
        let up = upsample(&acc, w, h);
        acc = ScalarImage::from_fn(w, h, |x, y| detail.get(x, y) + up.get(x, y));
    }
    Ok(acc)
}

fn blend_plane(
    base: &ScalarImage,
    insert: &ScalarImage,
    mask_pyramid: &[ScalarImage],
    levels: usize,
) -> Result<ScalarImage> {
    let lap_base = build_laplacian_pyramid(base, levels)?;
    let lap_insert = build_laplacian_pyramid(insert, levels)?;
    let mut combined = Vec::with_capacity(levels);
    for i in 0..levels {
        let (w, h) = lap_base[i].dims();
        let m = &mask_pyramid[i];
        combined.push(ScalarImage::from_fn(w, h, |x, y| {
            let t = m.get(x, y);
            lap_base[i].get(x, y) * (1.0 - t) + lap_insert[i].get(x, y) * t
        }));
    }
    let mut out = collapse_laplacian_pyramid(&combined)?;
    out.clamp_unit();
    Ok(out)
}

/// Burt–Adelson multiresolution blend of `insert` over `base` under `mask`
/// (weight 1 selects `insert`). Blends each RGB plane through Laplacian
/// pyramids combined per level with the mask's Gaussian pyramid.
pub fn blend_multiresolution(
    base: &ColorImage,
    insert: &ColorImage,
    mask: &BlendMask,
    levels: usize,
) -> Result<ColorImage> {
    base.check_same_dims(insert)?;
    if base.dims() != mask.dims() {
        return Err(Error::dims(base.dims(), mask.dims()));
    }
    check_levels(base.width(), base.height(), levels)?;
    let mask_pyramid = build_gaussian_pyramid(mask.weights(), levels)?;
    Ok(ColorImage {
        r: blend_plane(&base.r, &insert.r, &mask_pyramid, levels)?,
        g: blend_plane(&base.g, &insert.g, &mask_pyramid, levels)?,
        b: blend_plane(&base.b, &insert.b, &mask_pyramid, levels)?,
    })
}
