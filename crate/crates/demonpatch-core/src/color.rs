//! RGB ↔ HSV conversion (hexcone model, all channels normalized to `[0,1]`).
//!
//! Hue is undefined at zero saturation; it maps to 0 so the conversion is
//! total. The round trip reproduces RGB within 1e-6 wherever saturation is
//! non-degenerate.

use crate::image::{ColorImage, HsvImage, ScalarImage};
use crate::math;

/// Converts one RGB pixel to (h, s, v), hue in `[0,1)`.
pub fn rgb_pixel_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    if delta <= 0.0 {
        return (0.0, s, v);
    }
    let h6 = if max == r {
        (g - b) / delta
    } else if max == g {
        2.0 + (b - r) / delta
    } else {
        4.0 + (r - g) / delta
    };
    let mut h = h6 / 6.0;
    if h < 0.0 {
        h += 1.0;
    }
    // Wrap exact 1.0 (g - b == -delta for max == r) back to 0.
    if h >= 1.0 {
        h -= 1.0;
    }
    (h, s, v)
}

/// Converts one (h, s, v) pixel back to RGB.
pub fn hsv_pixel_to_rgb(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (v, v, v);
    }
    let h6 = (h - math::floor(h)) * 6.0;
    let sector = math::floor(h6) as usize % 6;
    let f = h6 - math::floor(h6);
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

/// Converts an RGB image to HSV plane-by-plane.
pub fn rgb_to_hsv(img: &ColorImage) -> HsvImage {
    let (w, h) = img.dims();
    let mut hp = ScalarImage::filled(w, h, 0.0);
    let mut sp = ScalarImage::filled(w, h, 0.0);
    let mut vp = ScalarImage::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (hh, ss, vv) = rgb_pixel_to_hsv(img.r.get(x, y), img.g.get(x, y), img.b.get(x, y));
            hp.set(x, y, hh);
            sp.set(x, y, ss);
            vp.set(x, y, vv);
        }
    }
    HsvImage {
        h: hp,
        s: sp,
        v: vp,
    }
}

/// Converts an HSV image back to RGB.
pub fn hsv_to_rgb(img: &HsvImage) -> ColorImage {
    let (w, h) = img.dims();
    let mut rp = ScalarImage::filled(w, h, 0.0);
    let mut gp = ScalarImage::filled(w, h, 0.0);
    let mut bp = ScalarImage::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let (r, g, b) = hsv_pixel_to_rgb(img.h.get(x, y), img.s.get(x, y), img.v.get(x, y));
            rp.set(x, y, r.clamp(0.0, 1.0));
            gp.set(x, y, g.clamp(0.0, 1.0));
            bp.set(x, y, b.clamp(0.0, 1.0));
        }
    }
    ColorImage {
        r: rp,
        g: gp,
        b: bp,
    }
}
