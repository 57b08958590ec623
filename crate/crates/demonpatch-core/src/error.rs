use alloc::string::String;
use core::fmt;

use crate::affinity::FeatureKind;

/// Errors produced by the core kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two images (or an image and a field) that must share dimensions do not.
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    /// An operation needs at least 2 pixels along each axis.
    DimensionTooSmall { width: usize, height: usize },
    /// A numeric parameter violates its contract (named in the message).
    InvalidParameter(String),
    /// Pyramid depth inadmissible for the image size.
    TooManyLevels {
        levels: usize,
        width: usize,
        height: usize,
    },
    /// A shape does not fit its canvas.
    ShapeOutOfCanvas(String),
    /// A bounding box extends beyond its image.
    BboxOutOfBounds {
        bbox: (usize, usize, usize, usize),
        width: usize,
        height: usize,
    },
    /// A patch space must be built from at least one record.
    EmptySpace,
    /// A record breaks the space's kind/identity/pose/size homogeneity.
    HeterogeneousSpace { record_id: String, detail: String },
    /// A record id was not found in the space.
    UnknownRecord { id: String },
    /// A requested deformation-path step exceeds the iteration budget.
    StepBeyondBudget { step: usize, iterations: usize },
    /// The enhancement pipeline is missing a required feature region or space.
    MissingFeature { kind: FeatureKind, stage: &'static str },
    /// A record's source image id does not resolve in the catalog.
    UnresolvedSource { id: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, actual } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, actual.0, actual.1
            ),
            Error::DimensionTooSmall { width, height } => {
                write!(f, "image too small: {width}x{height} (need at least 2x2)")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::TooManyLevels {
                levels,
                width,
                height,
            } => write!(
                f,
                "{levels} pyramid levels inadmissible for a {width}x{height} image"
            ),
            Error::ShapeOutOfCanvas(msg) => write!(f, "shape outside canvas: {msg}"),
            Error::BboxOutOfBounds {
                bbox,
                width,
                height,
            } => write!(
                f,
                "bbox ({},{},{},{}) outside {width}x{height} image",
                bbox.0, bbox.1, bbox.2, bbox.3
            ),
            Error::EmptySpace => write!(f, "patch space has no records"),
            Error::HeterogeneousSpace { record_id, detail } => {
                write!(f, "record '{record_id}' breaks space homogeneity: {detail}")
            }
            Error::UnknownRecord { id } => write!(f, "unknown record id '{id}'"),
            Error::StepBeyondBudget { step, iterations } => write!(
                f,
                "requested step {step} exceeds iteration budget {iterations}"
            ),
            Error::MissingFeature { kind, stage } => {
                write!(f, "stage '{stage}': missing required {} region", kind.name())
            }
            Error::UnresolvedSource { id } => {
                write!(f, "source image id '{id}' not present in catalog")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    pub(crate) fn dims(expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch { expected, actual }
    }
}
