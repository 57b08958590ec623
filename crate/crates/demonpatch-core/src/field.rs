//! Per-pixel 2-vector displacement fields.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::ScalarImage;
use crate::{Error, Result};

/// A displacement field from a moving image toward a static image: the warp
/// of `m` samples `m(x - dx, y - dy)`, so positive components move content in
/// the positive axis direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub dx: ScalarImage,
    pub dy: ScalarImage,
}

impl DisplacementField {
    pub fn zeros(width: usize, height: usize) -> Self {
        DisplacementField {
            dx: ScalarImage::filled(width, height, 0.0),
            dy: ScalarImage::filled(width, height, 0.0),
        }
    }

    pub fn new(dx: ScalarImage, dy: ScalarImage) -> Result<Self> {
        dx.check_same_dims(&dy)?;
        Ok(DisplacementField { dx, dy })
    }

    pub fn width(&self) -> usize {
        self.dx.width()
    }

    pub fn height(&self) -> usize {
        self.dx.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dx.dims()
    }

    /// Adds `other` into `self` componentwise.
    pub fn accumulate(&mut self, other: &DisplacementField) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        for (a, b) in self.dx.data_mut().iter_mut().zip(other.dx.data()) {
            *a += b;
        }
        for (a, b) in self.dy.data_mut().iter_mut().zip(other.dy.data()) {
            *a += b;
        }
        Ok(())
    }

    /// True when every component is finite.
    pub fn is_finite(&self) -> bool {
        self.dx.data().iter().all(|v| v.is_finite())
            && self.dy.data().iter().all(|v| v.is_finite())
    }

    /// Flattens to interleaved `(dx, dy)` pairs, row-major.
    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0); self.dx.data().len()];
        for (i, pair) in out.iter_mut().enumerate() {
            *pair = (self.dx.data()[i], self.dy.data()[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulate_adds_componentwise() {
        let mut total = DisplacementField::zeros(3, 2);
        let step = DisplacementField::new(
            ScalarImage::filled(3, 2, 0.5),
            ScalarImage::filled(3, 2, -0.25),
        )
        .unwrap();
        total.accumulate(&step).unwrap();
        total.accumulate(&step).unwrap();
        assert!(total.dx.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(total.dy.data().iter().all(|&v| (v + 0.5).abs() < 1e-12));
    }

    #[test]
    fn mismatched_components_rejected() {
        let dx = ScalarImage::filled(3, 3, 0.0);
        let dy = ScalarImage::filled(2, 3, 0.0);
        assert!(DisplacementField::new(dx, dy).is_err());
    }
}
