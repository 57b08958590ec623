//! 256-bin histogram equalization and matching.
//!
//! Both remaps are monotone non-decreasing in the input intensity. Quantile
//! positions use the mid-rank convention (half of a bin's own mass counts
//! toward its quantile), which keeps a single-bin image at the middle of the
//! range instead of collapsing it to an extreme.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::ScalarImage;

pub const BINS: usize = 256;

#[inline]
fn bin_of(v: f64) -> usize {
    ((v * BINS as f64) as usize).min(BINS - 1)
}

#[inline]
fn bin_center(i: usize) -> f64 {
    (i as f64 + 0.5) / BINS as f64
}

fn counts(img: &ScalarImage) -> Vec<u64> {
    let mut hist = vec![0u64; BINS];
    for &v in img.data() {
        hist[bin_of(v)] += 1;
    }
    hist
}

/// Mid-rank quantile of each bin: `(cum_before + count/2) / total`.
fn midrank_cdf(hist: &[u64], total: u64) -> Vec<f64> {
    let mut cdf = vec![0.0; BINS];
    let mut cum = 0u64;
    for i in 0..BINS {
        cdf[i] = (cum as f64 + hist[i] as f64 * 0.5) / total as f64;
        cum += hist[i];
    }
    cdf
}

/// Inclusive CDF of each bin: `cum_through_bin / total`.
fn inclusive_cdf(hist: &[u64], total: u64) -> Vec<f64> {
    let mut cdf = vec![0.0; BINS];
    let mut cum = 0u64;
    for i in 0..BINS {
        cum += hist[i];
        cdf[i] = cum as f64 / total as f64;
    }
    cdf
}

/// Histogram equalization: remaps intensities through the image's own
/// mid-rank CDF, spreading occupied bins uniformly over `[0,1]`.
pub fn histogram_equalize(img: &ScalarImage) -> ScalarImage {
    let hist = counts(img);
    let cdf = midrank_cdf(&hist, img.data().len() as u64);
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = cdf[bin_of(*v)];
    }
    out
}

/// Histogram matching: monotone mapping carrying `src`'s CDF onto `reference`'s.
/// Each source bin's quantile is looked up in the reference CDF and emitted
/// at the matching reference bin's center.
pub fn histogram_match(src: &ScalarImage, reference: &ScalarImage) -> ScalarImage {
    let src_hist = counts(src);
    let src_cdf = midrank_cdf(&src_hist, src.data().len() as u64);
    let ref_hist = counts(reference);
    let ref_cdf = inclusive_cdf(&ref_hist, reference.data().len() as u64);

    // Monotone lookup table: smallest reference bin whose inclusive CDF
    // reaches the source bin's quantile.
    let mut lut = [0.0f64; BINS];
    let mut j = 0usize;
    for i in 0..BINS {
        while j < BINS - 1 && ref_cdf[j] < src_cdf[i] {
            j += 1;
        }
        lut[i] = bin_center(j);
    }

    let mut out = src.clone();
    for v in out.data_mut() {
        *v = lut[bin_of(*v)];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equalize_constant_stays_constant() {
        let img = ScalarImage::filled(8, 8, 0.3);
        let out = histogram_equalize(&img);
        let first = out.get(0, 0);
        assert!(out.data().iter().all(|&v| v == first));
        assert!((first - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equalize_two_levels_preserves_order() {
        let img = ScalarImage::from_fn(8, 8, |x, _| if x < 4 { 0.2 } else { 0.8 });
        let out = histogram_equalize(&img);
        let lo = out.get(0, 0);
        let hi = out.get(7, 0);
        assert!(lo < hi);
        assert!((lo - 0.25).abs() < 1e-12);
        assert!((hi - 0.75).abs() < 1e-12);
    }

    #[test]
    fn equalize_ramp_is_uniform() {
        let n = 64;
        let img = ScalarImage::from_fn(n, n, |x, y| (y * n + x) as f64 / (n * n - 1) as f64);
        let out = histogram_equalize(&img);
        // Output quantiles should track the input rank within one bin width.
        let mut vals: Vec<f64> = out.data().to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (rank, &v) in vals.iter().enumerate() {
            let expected = (rank as f64 + 0.5) / vals.len() as f64;
            assert!(
                (v - expected).abs() <= 1.0 / BINS as f64,
                "rank {rank}: {v} vs {expected}"
            );
        }
    }

    #[test]
    fn match_to_self_is_near_identity() {
        let img = ScalarImage::from_fn(16, 16, |x, y| ((x * 13 + y * 7) % 256) as f64 / 255.0);
        let out = histogram_match(&img, &img);
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 1.0 / BINS as f64 + 1e-12);
        }
    }

    #[test]
    fn match_restores_reference_after_scaling() {
        let reference =
            ScalarImage::from_fn(32, 32, |x, y| ((x * 5 + y * 11) % 256) as f64 / 255.0);
        let src = reference.map(|v| v * 0.5);
        let out = histogram_match(&src, &reference);
        // Halving merges pairs of reference bins into one source bin, so the
        // restored histogram is resolved to one *source* quantization level,
        // i.e. two reference bins.
        let tol = 2.0 / BINS as f64 + 1e-12;
        let mut restored: Vec<f64> = out.data().to_vec();
        restored.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected: Vec<f64> = reference.data().to_vec();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in restored.iter().zip(&expected) {
            assert!((a - b).abs() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_src_maps_to_reference_median() {
        let reference = ScalarImage::from_fn(16, 16, |x, y| ((x + y * 16) % 256) as f64 / 255.0);
        let src = ScalarImage::filled(16, 16, 0.9);
        let out = histogram_match(&src, &reference);
        let first = out.get(0, 0);
        assert!(out.data().iter().all(|&v| v == first));
        // Median of the reference distribution, within a bin.
        let mut vals: Vec<f64> = reference.data().to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = vals[vals.len() / 2];
        assert!((first - median).abs() <= 2.0 / BINS as f64, "{first} vs {median}");
    }

    #[test]
    fn remaps_are_monotone() {
        let src = ScalarImage::from_fn(16, 16, |x, y| ((x * 31 + y * 17) % 97) as f64 / 96.0);
        let reference = ScalarImage::from_fn(16, 16, |x, y| ((x + y) % 13) as f64 / 12.0);
        for out in [histogram_equalize(&src), histogram_match(&src, &reference)] {
            let mut pairs: Vec<(f64, f64)> = src
                .data()
                .iter()
                .copied()
                .zip(out.data().iter().copied())
                .collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in pairs.windows(2) {
                assert!(w[0].1 <= w[1].1 + 1e-12);
            }
        }
    }
}
