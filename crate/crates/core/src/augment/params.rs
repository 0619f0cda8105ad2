use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Closed float interval `[lo, hi]`; draws are uniform on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::param(alloc::format!("{what} interval [{}, {}] is empty", self.lo, self.hi)))
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        rng.uniform_unchecked(self.lo, self.hi)
    }
}

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntInterval {
    pub lo: u32,
    pub hi: u32,
}

impl IntInterval {
    pub fn sample(&self, rng: &mut Rng) -> u32 {
        self.lo + rng.below((self.hi - self.lo) as u64 + 1) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterRanges {
    pub brightness: Interval,
    pub contrast: Interval,
    pub saturation: Interval,
    /// Hue rotation in turns.
    pub hue: Interval,
}

impl Default for JitterRanges {
    fn default() -> Self {
        Self {
            brightness: Interval::new(0.75, 1.25),
            contrast: Interval::new(0.75, 1.25),
            saturation: Interval::new(0.75, 1.25),
            hue: Interval::new(-0.05, 0.05),
        }
    }
}

impl JitterRanges {
    pub fn validate(&self) -> Result<()> {
        self.brightness.validate("brightness")?;
        self.contrast.validate("contrast")?;
        self.saturation.validate("saturation")?;
        self.hue.validate("hue")?;
        if self.brightness.lo < 0.0 || self.saturation.lo < 0.0 || self.contrast.lo <= 0.0 {
            return Err(Error::param("jitter brightness/saturation must be >= 0 and contrast > 0"));
        }
        Ok(())
    }
}

/// Parameter ranges for every pool operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorParams {
    pub jpeg_qf_range: IntInterval,
    pub blur_sigma_range: Interval,
    /// Noise standard deviation on the 0..255 scale.
    pub noise_sigma_range: Interval,
    pub sharpen_factor: f64,
    pub contrast_factor_range: Interval,
    pub jitter_ranges: JitterRanges,
    pub crop_size: usize,
    /// Crop offsets are multiples of this many pixels.
    pub crop_align: usize,
    pub resize_large: usize,
    pub resize_small: usize,
    pub apply_prob: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self {
            jpeg_qf_range: IntInterval { lo: 30, hi: 100 },
            blur_sigma_range: Interval::new(0.0, 3.0),
            noise_sigma_range: Interval::new(0.0, 2.0),
            sharpen_factor: 2.0,
            contrast_factor_range: Interval::new(0.5, 1.5),
            jitter_ranges: JitterRanges::default(),
            crop_size: 64,
            crop_align: 8,
            resize_large: 64,
            resize_small: 32,
            apply_prob: 0.5,
        }
    }
}

impl OperatorParams {
    pub fn validate(&self) -> Result<()> {
        let q = self.jpeg_qf_range;
        if q.lo < 1 || q.hi > 100 || q.lo > q.hi {
            return Err(Error::param(alloc::format!("JPEG quality range [{}, {}] not within [1, 100]", q.lo, q.hi)));
        }
        self.blur_sigma_range.validate("blur sigma")?;
        self.noise_sigma_range.validate("noise sigma")?;
        self.contrast_factor_range.validate("contrast factor")?;
        if self.blur_sigma_range.lo < 0.0 || self.noise_sigma_range.lo < 0.0 {
            return Err(Error::param("sigma ranges must be non-negative"));
        }
        if self.contrast_factor_range.lo <= 0.0 {
            return Err(Error::param("contrast factors must be positive"));
        }
        if !(self.sharpen_factor >= 0.0) {
            return Err(Error::param("sharpen factor must be >= 0"));
        }
        self.jitter_ranges.validate()?;
        if self.crop_size == 0 || self.crop_align == 0 {
            return Err(Error::param("crop size and alignment must be positive"));
        }
        if self.resize_large < 8 || self.resize_small < 8 {
            return Err(Error::param("resize targets must be >= 8"));
        }
        if !(0.0..=1.0).contains(&self.apply_prob) {
            return Err(Error::param(alloc::format!("apply_prob {} outside [0, 1]", self.apply_prob)));
        }
        Ok(())
    }
}
