//! The time-limited Demon affinity measure over semantic image patches.
//!
//! The measure registers a moving patch toward a static patch for a fixed
//! iteration budget and scores the mean absolute error that remains on a
//! feature-dependent HSV channel. It is not symmetric and satisfies no
//! triangle inequality; only identity (zero on equal inputs) and
//! non-negativity hold.

use alloc::string::String;
use alloc::vec::Vec;

use crate::color::rgb_to_hsv;
use crate::demon::{register, RegistrationConfig};
use crate::histogram::histogram_equalize;
use crate::image::{ColorImage, ScalarImage};
use crate::par;
use crate::{Error, Result};

/// Semantic patch categories and their HSV channel mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    LeftEye,
    RightEye,
    Mouth,
    Head,
}

/// The HSV channel a feature kind is compared on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Hue,
    Saturation,
    Value,
}

impl FeatureKind {
    /// Eyes and heads are compared on the value channel, mouths on hue.
    pub fn channel(self) -> Channel {
        match self {
            FeatureKind::Mouth => Channel::Hue,
            FeatureKind::LeftEye | FeatureKind::RightEye | FeatureKind::Head => Channel::Value,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::LeftEye => "left_eye",
            FeatureKind::RightEye => "right_eye",
            FeatureKind::Mouth => "mouth",
            FeatureKind::Head => "head",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        match s {
            "left_eye" => Some(FeatureKind::LeftEye),
            "right_eye" => Some(FeatureKind::RightEye),
            "mouth" => Some(FeatureKind::Mouth),
            "head" => Some(FeatureKind::Head),
            _ => None,
        }
    }

    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Head,
        FeatureKind::LeftEye,
        FeatureKind::RightEye,
        FeatureKind::Mouth,
    ];
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Hue => "hue",
            Channel::Saturation => "saturation",
            Channel::Value => "value",
        }
    }

    pub fn parse(s: &str) -> Option<Channel> {
        match s {
            "hue" => Some(Channel::Hue),
            "saturation" => Some(Channel::Saturation),
            "value" => Some(Channel::Value),
            _ => None,
        }
    }
}

/// Configuration of the affinity measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityConfig {
    /// Registration parameters; the iteration budget is the fixed time limit.
    pub reg: RegistrationConfig,
    /// Scale constant multiplying the residual mean absolute error.
    pub c_scale: f64,
    /// Histogram-equalize both channels before registration.
    pub pre_equalize: bool,
    /// Overrides the feature-dependent channel mapping when set.
    pub channel_override: Option<Channel>,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig {
            reg: RegistrationConfig::default(),
            c_scale: 1.0,
            pre_equalize: true,
            channel_override: None,
        }
    }
}

impl AffinityConfig {
    pub fn validate(&self) -> Result<()> {
        self.reg.validate()?;
        if !(self.c_scale > 0.0) || !self.c_scale.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!(
                "c_scale must be positive, got {}",
                self.c_scale
            )));
        }
        Ok(())
    }

    fn channel_for(&self, kind: FeatureKind) -> Channel {
        self.channel_override.unwrap_or_else(|| kind.channel())
    }
}

/// A scored moving/static pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityScore {
    pub distance: f64,
    pub moving_id: String,
    pub static_id: String,
    pub kind: FeatureKind,
}

/// Extracts the HSV plane mapped to `kind`.
pub fn select_channel(img: &ColorImage, kind: FeatureKind) -> ScalarImage {
    extract_channel(img, kind.channel())
}

/// Extracts an explicit HSV plane.
pub fn extract_channel(img: &ColorImage, channel: Channel) -> ScalarImage {
    let hsv = rgb_to_hsv(img);
    match channel {
        Channel::Hue => hsv.h,
        Channel::Saturation => hsv.s,
        Channel::Value => hsv.v,
    }
}

/// The time-limited Demon distance from `m` (moving) to `s` (static) on the
/// channel mapped to `kind`: the configured channel is extracted from both,
/// optionally illumination-adjusted, registered for exactly the configured
/// iteration budget, and the remaining mean absolute error is scaled by
/// `c_scale`.
pub fn demon_distance(
    m: &ColorImage,
    s: &ColorImage,
    kind: FeatureKind,
    cfg: &AffinityConfig,
) -> Result<f64> {
    cfg.validate()?;
    m.check_same_dims(s)?;
    let channel = cfg.channel_for(kind);
    let mut m_ch = extract_channel(m, channel);
    let mut s_ch = extract_channel(s, channel);
    if cfg.pre_equalize {
        m_ch = histogram_equalize(&m_ch);
        s_ch = histogram_equalize(&s_ch);
    }
    let result = register(&m_ch, &s_ch, &cfg.reg)?;
    let final_mae = *result
        .mae_history
        .last()
        .expect("iterations >= 1 guarantees a history entry");
    Ok(cfg.c_scale * final_mae)
}

/// Applies [`demon_distance`] from `source` to every target, in order.
pub fn distance_curve(
    source: &ColorImage,
    targets: &[ColorImage],
    kind: FeatureKind,
    cfg: &AffinityConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    for t in targets {
        source.check_same_dims(t)?;
    }
    par::map_ordered(targets, |t| demon_distance(source, t, kind, cfg))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray_patch(level: f64) -> ColorImage {
        ColorImage::filled(8, 8, level, level, level)
    }

    #[test]
    fn channel_mapping_is_total() {
        assert_eq!(FeatureKind::LeftEye.channel(), Channel::Value);
        assert_eq!(FeatureKind::RightEye.channel(), Channel::Value);
        assert_eq!(FeatureKind::Head.channel(), Channel::Value);
        assert_eq!(FeatureKind::Mouth.channel(), Channel::Hue);
    }

    #[test]
    fn select_channel_on_primaries() {
        let red = ColorImage::filled(4, 4, 1.0, 0.0, 0.0);
        let hue = select_channel(&red, FeatureKind::Mouth);
        assert!(hue.data().iter().all(|&v| v == 0.0));

        let gray = gray_patch(0.5);
        let value = select_channel(&gray, FeatureKind::LeftEye);
        assert!(value.data().iter().all(|&v| (v - 0.5).abs() < 1e-12));

        let arbitrary = ColorImage::filled(4, 4, 0.3, 0.8, 0.5);
        assert_eq!(
            select_channel(&arbitrary, FeatureKind::Head),
            select_channel(&arbitrary, FeatureKind::LeftEye)
        );
    }

    #[test]
    fn identical_images_have_zero_distance() {
        let img = ColorImage::from_gray(&ScalarImage::from_fn(12, 12, |x, y| {
            ((x * 3 + y * 5) % 9) as f64 / 9.0
        }));
        let cfg = AffinityConfig {
            reg: RegistrationConfig {
                iterations: 5,
                ..RegistrationConfig::default()
            },
            ..AffinityConfig::default()
        };
        let d = demon_distance(&img, &img, FeatureKind::LeftEye, &cfg).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn c_scale_doubles_distance() {
        let m = ColorImage::from_gray(&ScalarImage::from_fn(12, 12, |x, _| {
            if (3..6).contains(&x) {
                0.2
            } else {
                0.9
            }
        }));
        let s = ColorImage::from_gray(&ScalarImage::from_fn(12, 12, |x, _| {
            if (5..8).contains(&x) {
                0.2
            } else {
                0.9
            }
        }));
        let mut cfg = AffinityConfig {
            reg: RegistrationConfig {
                iterations: 10,
                ..RegistrationConfig::default()
            },
            pre_equalize: false,
            ..AffinityConfig::default()
        };
        let d1 = demon_distance(&m, &s, FeatureKind::LeftEye, &cfg).unwrap();
        cfg.c_scale = 2.0;
        let d2 = demon_distance(&m, &s, FeatureKind::LeftEye, &cfg).unwrap();
        assert!(d1 > 0.0);
        assert!((d2 - 2.0 * d1).abs() < 1e-12);
    }

    #[test]
    fn curve_of_self_is_zero() {
        let img = gray_patch(0.4);
        let cfg = AffinityConfig {
            reg: RegistrationConfig {
                iterations: 3,
                ..RegistrationConfig::default()
            },
            ..AffinityConfig::default()
        };
        let curve = distance_curve(&img, &[img.clone()], FeatureKind::LeftEye, &cfg).unwrap();
        assert_eq!(curve, [0.0]);
    }

    #[test]
    fn channel_override_changes_plane() {
        // A hue-varying, constant-value image: mouth (hue) sees structure,
        // the value override sees none.
        let m = ColorImage::new(
            ScalarImage::from_fn(8, 8, |x, _| if x < 4 { 0.9 } else { 0.1 }),
            ScalarImage::filled(8, 8, 0.5),
            ScalarImage::from_fn(8, 8, |x, _| if x < 4 { 0.1 } else { 0.9 }),
        )
        .unwrap();
        let s = ColorImage::new(
            ScalarImage::from_fn(8, 8, |x, _| if x < 6 { 0.9 } else { 0.1 }),
            ScalarImage::filled(8, 8, 0.5),
            ScalarImage::from_fn(8, 8, |x, _| if x < 6 { 0.1 } else { 0.9 }),
        )
        .unwrap();
        let cfg = AffinityConfig {
            reg: RegistrationConfig {
                iterations: 2,
                ..RegistrationConfig::default()
            },
            pre_equalize: false,
            ..AffinityConfig::default()
        };
        let on_hue = demon_distance(&m, &s, FeatureKind::Mouth, &cfg).unwrap();
        let overridden = AffinityConfig {
            channel_override: Some(Channel::Value),
            ..cfg
        };
        let on_value = demon_distance(&m, &s, FeatureKind::Mouth, &overridden).unwrap();
        assert!(on_hue > 0.0);
        // Max of RGB is 0.9 everywhere, so the value plane carries nothing.
        assert_eq!(on_value, 0.0);
    }
}
