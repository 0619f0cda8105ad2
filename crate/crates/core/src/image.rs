//! Owned raster images.
//!
//! Samples are `f32` in `[0, 1]`, stored row-major with channels interleaved
//! (`RGBRGB...` for three channels). Model and metric code promotes samples
//! to `f64`; buffers stay single precision to keep a full corpus in memory.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Rec. 601 luma weights, shared by grayscale, contrast and the model input.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f32>,
}

/// Clamp a sample into `[0, 1]`. Non-finite values map to 0.
#[inline]
pub fn clamp_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

impl Image {
    /// Build an image from raw samples; every sample must already be in range.
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<f32>) -> Result<Self> {
        check_dims(width, height, channels)?;
        if samples.len() != width * height * channels {
            return Err(Error::shape(alloc::format!(
                "expected {} samples for {width}x{height}x{channels}, got {}",
                width * height * channels,
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || **s < 0.0 || **s > 1.0) {
            return Err(Error::param(alloc::format!("sample {bad} outside [0, 1]")));
        }
        Ok(Self { width, height, channels, samples })
    }

    /// Like [`Image::new`] but clamps every sample into range instead of failing.
    pub fn from_unclamped(width: usize, height: usize, channels: usize, mut samples: Vec<f32>) -> Result<Self> {
        check_dims(width, height, channels)?;
        if samples.len() != width * height * channels {
            return Err(Error::shape("sample count does not match dimensions"));
        }
        samples.iter_mut().for_each(|s| *s = clamp_unit(*s));
        Ok(Self { width, height, channels, samples })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Build from a closure `f(x, y, channel)`; results are clamped.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(width, height, channels)?;
        let mut samples = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    samples.push(clamp_unit(f(x, y, c)));
                }
            }
        }
        Ok(Self { width, height, channels, samples })
    }

    /// Decode 8-bit samples by dividing by 255.
    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        let samples = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        Self::new(width, height, channels, samples)
    }

    /// Quantize to 8 bits with round-half-up.
    pub fn to_u8(&self) -> Vec<u8> {
        self.samples.iter().map(|&s| quantize_u8(s)).collect()
    }

    /// Snap every sample onto the 8-bit grid, as if written to and read back from disk.
    pub fn quantized(&self) -> Image {
        let samples = self.samples.iter().map(|&s| quantize_u8(s) as f32 / 255.0).collect();
        Image { width: self.width, height: self.height, channels: self.channels, samples }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    /// Same geometry and channel count.
    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Replace the samples, clamping them; the geometry is kept.
    pub(crate) fn with_samples(&self, mut samples: Vec<f32>) -> Image {
        debug_assert_eq!(samples.len(), self.samples.len());
        samples.iter_mut().for_each(|s| *s = clamp_unit(*s));
        Image { width: self.width, height: self.height, channels: self.channels, samples }
    }

    /// Apply `f` to every sample and clamp the result.
    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> Image {
        self.with_samples(self.samples.iter().map(|&s| f(s)).collect())
    }

    /// Luma plane in `f64`: Rec. 601 weights for RGB, the samples themselves for gray.
    pub fn luma(&self) -> Vec<f64> {
        match self.channels {
            1 => self.samples.iter().map(|&s| s as f64).collect(),
            _ => self
                .samples
                .chunks_exact(3)
                .map(|px| {
                    LUMA_WEIGHTS[0] * px[0] as f64 + LUMA_WEIGHTS[1] * px[1] as f64 + LUMA_WEIGHTS[2] * px[2] as f64
                })
                .collect(),
        }
    }

    /// Mean luma over all pixels.
    pub fn mean_luma(&self) -> f64 {
        let l = self.luma();
        l.iter().sum::<f64>() / l.len() as f64
    }

    /// Extract one channel as a `f64` plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.samples.iter().skip(c).step_by(self.channels).map(|&s| s as f64).collect()
    }

    /// Rebuild an image from per-channel `f64` planes (clamped).
    pub fn from_planes(width: usize, height: usize, planes: &[Vec<f64>]) -> Result<Image> {
        let channels = planes.len();
        check_dims(width, height, channels)?;
        if planes.iter().any(|p| p.len() != width * height) {
            return Err(Error::shape("plane length does not match dimensions"));
        }
        let mut samples = Vec::with_capacity(width * height * channels);
        for i in 0..width * height {
            for p in planes {
                samples.push(clamp_unit(p[i] as f32));
            }
        }
        Ok(Image { width, height, channels, samples })
    }

    /// Copy of the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::param(alloc::format!(
                "window {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width,
                self.height
            )));
        }
        let c = self.channels;
        let mut samples = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            samples.extend_from_slice(&self.samples[start..start + w * c]);
        }
        Ok(Image { width: w, height: h, channels: c, samples })
    }

    /// Peak signal-to-noise ratio in dB against `other` (peak 1.0).
    pub fn psnr(&self, other: &Image) -> Result<f64> {
        let mse = self.mse(other)?;
        if mse == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(10.0 * libm::log10(1.0 / mse))
    }

    /// Mean squared sample difference.
    pub fn mse(&self, other: &Image) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::shape("images differ in shape"));
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum();
        Ok(sum / self.samples.len() as f64)
    }

    /// Largest absolute sample difference.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f32> {
        if !self.same_shape(other) {
            return Err(Error::shape("images differ in shape"));
        }
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max))
    }
}

#[inline]
fn quantize_u8(s: f32) -> u8 {
    libm::floorf(clamp_unit(s) * 255.0 + 0.5) as u8
}

fn check_dims(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::shape("width and height must be positive"));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::shape(alloc::format!("{channels} channels; expected 1 or 3")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Image::new(0, 2, 1, vec![]).is_err());
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 1, vec![f32::NAN]).is_err());
    }

    #[test]
    fn u8_normalization() {
        let img = Image::from_u8(2, 2, 1, &[0, 85, 170, 255]).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (s, e) in img.samples().iter().zip(expect) {
            assert!((s - e).abs() < 1e-4);
        }
        assert_eq!(img.to_u8(), vec![0, 85, 170, 255]);
    }

    #[test]
    fn crop_and_planes_round_trip() {
        let img = Image::from_fn(5, 4, 3, |x, y, c| (x + 2 * y + c) as f32 / 20.0).unwrap();
        let planes: Vec<_> = (0..3).map(|c| img.plane(c)).collect();
        assert_eq!(Image::from_planes(5, 4, &planes).unwrap(), img);
        let win = img.crop(1, 1, 3, 2).unwrap();
        assert_eq!(win.get(0, 0, 2), img.get(1, 1, 2));
        assert!(img.crop(3, 0, 3, 1).is_err());
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(v in proptest::num::f32::ANY) {
            prop_assert_eq!(clamp_unit(clamp_unit(v)), clamp_unit(v));
        }

        #[test]
        fn quantization_error_is_bounded(v in 0.0f32..=1.0) {
            let img = Image::new(1, 1, 1, vec![v]).unwrap();
            let q = img.quantized();
            prop_assert!((q.samples()[0] - v).abs() <= 1.0 / 510.0 + 1e-7);
            prop_assert_eq!(q.quantized(), q);
        }
    }
}
