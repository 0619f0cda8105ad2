//! Augmentation operators and seeded pipelines.
//!
//! Every operator is a pure function of its inputs and, where it is random,
//! of the [`Rng`] it is handed. Pipelines always flip and (unless a large
//! resize is enabled) crop, then run each enabled pool operator in
//! [`OperatorKind`] order, each gated by its own Bernoulli draw.

mod color;
mod filter;
mod geometry;
mod jpeg;
mod params;

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use color::{adjust_contrast, color_invert, color_jitter, grayscale, hsv_to_rgb, rgb_to_hsv};
pub use filter::{convolve_separable, gaussian_blur, gaussian_kernel, gaussian_noise, reflect_index, sharpen};
pub use geometry::{horizontal_flip, mirror_columns, random_crop, resize, resize_plane};
pub use jpeg::{jpeg_compress, scaled_table, CHROMA_TABLE, LUMA_TABLE};
pub use params::{IntInterval, Interval, JitterRanges, OperatorParams};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;

/// All operators of the augmentation pool, in canonical pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    HorizontalFlip,
    RandomCrop,
    JpegCompress,
    GaussianBlur,
    GaussianNoise,
    Sharpen,
    Contrast,
    ColorJitter,
    Grayscale,
    ColorInvert,
    AutoPolicyStub,
    RandPolicyStub,
    ResizeLarge,
    ResizeSmall,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 14] = [
        OperatorKind::HorizontalFlip,
        OperatorKind::RandomCrop,
        OperatorKind::JpegCompress,
        OperatorKind::GaussianBlur,
        OperatorKind::GaussianNoise,
        OperatorKind::Sharpen,
        OperatorKind::Contrast,
        OperatorKind::ColorJitter,
        OperatorKind::Grayscale,
        OperatorKind::ColorInvert,
        OperatorKind::AutoPolicyStub,
        OperatorKind::RandPolicyStub,
        OperatorKind::ResizeLarge,
        OperatorKind::ResizeSmall,
    ];

    /// The optional operators, i.e. everything except flip and crop.
    pub const SEARCHABLE: [OperatorKind; 12] = [
        OperatorKind::JpegCompress,
        OperatorKind::GaussianBlur,
        OperatorKind::GaussianNoise,
        OperatorKind::Sharpen,
        OperatorKind::Contrast,
        OperatorKind::ColorJitter,
        OperatorKind::Grayscale,
        OperatorKind::ColorInvert,
        OperatorKind::AutoPolicyStub,
        OperatorKind::RandPolicyStub,
        OperatorKind::ResizeLarge,
        OperatorKind::ResizeSmall,
    ];

    /// Searchable operators that can actually run.
    pub const EXECUTABLE: [OperatorKind; 10] = [
        OperatorKind::JpegCompress,
        OperatorKind::GaussianBlur,
        OperatorKind::GaussianNoise,
        OperatorKind::Sharpen,
        OperatorKind::Contrast,
        OperatorKind::ColorJitter,
        OperatorKind::Grayscale,
        OperatorKind::ColorInvert,
        OperatorKind::ResizeLarge,
        OperatorKind::ResizeSmall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::HorizontalFlip => "HorizontalFlip",
            OperatorKind::RandomCrop => "RandomCrop",
            OperatorKind::JpegCompress => "JpegCompress",
            OperatorKind::GaussianBlur => "GaussianBlur",
            OperatorKind::GaussianNoise => "GaussianNoise",
            OperatorKind::Sharpen => "Sharpen",
            OperatorKind::Contrast => "Contrast",
            OperatorKind::ColorJitter => "ColorJitter",
            OperatorKind::Grayscale => "Grayscale",
            OperatorKind::ColorInvert => "ColorInvert",
            OperatorKind::AutoPolicyStub => "AutoPolicyStub",
            OperatorKind::RandPolicyStub => "RandPolicyStub",
            OperatorKind::ResizeLarge => "ResizeLarge",
            OperatorKind::ResizeSmall => "ResizeSmall",
        }
    }

    pub fn from_name(name: &str) -> Option<OperatorKind> {
        OperatorKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_stub(self) -> bool {
        matches!(self, OperatorKind::AutoPolicyStub | OperatorKind::RandPolicyStub)
    }

    /// Position in [`OperatorKind::SEARCHABLE`], if any.
    pub fn pool_index(self) -> Option<usize> {
        OperatorKind::SEARCHABLE.iter().position(|&k| k == self)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which pool operators a training run uses, plus their parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AugmentationSet {
    enabled: [bool; 12],
    pub params: OperatorParams,
}

impl AugmentationSet {
    /// Flip and crop only.
    pub fn baseline() -> Self {
        Self::default()
    }

    pub fn with(kinds: &[OperatorKind]) -> Result<Self> {
        let mut set = Self::default();
        for &k in kinds {
            set.set_enabled(k, true)?;
        }
        Ok(set)
    }

    /// Build from a bit vector over [`OperatorKind::SEARCHABLE`].
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() != 12 {
            return Err(Error::param(alloc::format!("expected 12 pool bits, got {}", bits.len())));
        }
        let mut set = Self::default();
        set.enabled.copy_from_slice(bits);
        Ok(set)
    }

    pub fn bits(&self) -> [bool; 12] {
        self.enabled
    }

    pub fn set_enabled(&mut self, kind: OperatorKind, on: bool) -> Result<()> {
        let i = kind
            .pool_index()
            .ok_or_else(|| Error::param(alloc::format!("{kind} is always applied and cannot be toggled")))?;
        self.enabled[i] = on;
        Ok(())
    }

    pub fn is_enabled(&self, kind: OperatorKind) -> bool {
        kind.pool_index().is_some_and(|i| self.enabled[i])
    }

    pub fn enabled_kinds(&self) -> Vec<OperatorKind> {
        OperatorKind::SEARCHABLE.iter().copied().filter(|&k| self.is_enabled(k)).collect()
    }

    /// Whether the unconditional random crop runs for this set.
    pub fn crops(&self) -> bool {
        !self.is_enabled(OperatorKind::ResizeLarge)
    }

    /// Fails on enabled stub operators and on invalid parameters.
    pub fn check_executable(&self) -> Result<()> {
        if let Some(stub) = self.enabled_kinds().into_iter().find(|k| k.is_stub()) {
            return Err(Error::NotImplemented(stub.name()));
        }
        self.params.validate()
    }

    /// Human-readable label such as `JpegCompress+GaussianBlur` or `baseline`.
    pub fn label(&self) -> alloc::string::String {
        let kinds = self.enabled_kinds();
        if kinds.is_empty() {
            return "baseline".into();
        }
        kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AugmentationSetRepr {
    #[serde(default)]
    enabled: Vec<OperatorKind>,
    #[serde(default)]
    params: OperatorParams,
}

impl Serialize for AugmentationSet {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        AugmentationSetRepr { enabled: self.enabled_kinds(), params: self.params }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AugmentationSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let repr = AugmentationSetRepr::deserialize(d)?;
        let mut set = AugmentationSet { params: repr.params, ..Default::default() };
        for k in repr.enabled {
            set.set_enabled(k, true).map_err(serde::de::Error::custom)?;
        }
        Ok(set)
    }
}

/// Run the training-time pipeline on one image.
///
/// Draw order on `rng`: flip (one Bernoulli), crop (two integers, when it
/// runs), then for each enabled operator in canonical order a Bernoulli
/// `apply_prob` gate followed, if it fires, by that operator's parameter
/// draws and its own randomness. Fired resizes are applied after everything
/// else, large before small.
pub fn apply_pipeline(set: &AugmentationSet, image: &Image, rng: &mut Rng) -> Result<Image> {
    set.check_executable()?;
    let p = &set.params;
    let mut img = horizontal_flip(image, rng);
    if set.crops() {
        img = random_crop(&img, p.crop_size, p.crop_align, rng)?;
    }
    let mut resizes = Vec::new();
    for kind in OperatorKind::SEARCHABLE {
        if !set.is_enabled(kind) || !rng.bernoulli(p.apply_prob) {
            continue;
        }
        img = match kind {
            OperatorKind::JpegCompress => jpeg_compress(&img, p.jpeg_qf_range.sample(rng) as u8)?,
            OperatorKind::GaussianBlur => gaussian_blur(&img, p.blur_sigma_range.sample(rng))?,
            OperatorKind::GaussianNoise => {
                let sigma = p.noise_sigma_range.sample(rng);
                gaussian_noise(&img, sigma, rng)?
            }
            OperatorKind::Sharpen => sharpen(&img, p.sharpen_factor)?,
            OperatorKind::Contrast => adjust_contrast(&img, p.contrast_factor_range.sample(rng))?,
            OperatorKind::ColorJitter => {
                if img.channels() == 3 {
                    color_jitter(&img, rng, &p.jitter_ranges)?
                } else {
                    img
                }
            }
            OperatorKind::Grayscale => grayscale(&img),
            OperatorKind::ColorInvert => color_invert(&img),
            OperatorKind::ResizeLarge => {
                resizes.push(p.resize_large);
                img
            }
            OperatorKind::ResizeSmall => {
                resizes.push(p.resize_small);
                img
            }
            OperatorKind::HorizontalFlip
            | OperatorKind::RandomCrop
            | OperatorKind::AutoPolicyStub
            | OperatorKind::RandPolicyStub => unreachable!("filtered above"),
        };
    }
    for target in resizes {
        img = resize(&img, target)?;
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn sample_image(seed: u64, size: usize) -> Image {
        let mut r = Rng::new(seed);
        Image::from_fn(size, size, 3, |_, _, _| r.unit() as f32).unwrap()
    }

    #[test]
    fn pool_layout() {
        assert_eq!(OperatorKind::ALL.len(), 14);
        assert_eq!(OperatorKind::SEARCHABLE.len(), 12);
        assert!(OperatorKind::SEARCHABLE.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(OperatorKind::HorizontalFlip.pool_index(), None);
        assert_eq!(OperatorKind::from_name("ColorInvert"), Some(OperatorKind::ColorInvert));
        assert!(AugmentationSet::with(&[OperatorKind::RandomCrop]).is_err());
    }

    #[test]
    fn identity_pipeline() {
        let img = sample_image(1, 16);
        let mut set = AugmentationSet::baseline();
        set.params.crop_size = 16;
        // find a seed whose flip draw says "no"
        let seed = (0..100).find(|&s| !Rng::new(s).bernoulli(0.5)).unwrap();
        assert_eq!(apply_pipeline(&set, &img, &mut Rng::new(seed)).unwrap(), img);
    }

    #[test]
    fn zero_probability_is_identity_after_flip_and_crop() {
        let img = sample_image(2, 96);
        let base = apply_pipeline(&AugmentationSet::baseline(), &img, &mut Rng::new(7)).unwrap();
        let mut all = AugmentationSet::from_bits(&[true; 12]).unwrap();
        all.set_enabled(OperatorKind::AutoPolicyStub, false).unwrap();
        all.set_enabled(OperatorKind::RandPolicyStub, false).unwrap();
        all.set_enabled(OperatorKind::ResizeLarge, false).unwrap();
        all.params.apply_prob = 0.0;
        assert_eq!(apply_pipeline(&all, &img, &mut Rng::new(7)).unwrap(), base);
    }

    #[test]
    fn jpeg_only_pipeline_composes() {
        let img = sample_image(3, 96);
        let mut set = AugmentationSet::with(&[OperatorKind::JpegCompress]).unwrap();
        set.params.apply_prob = 1.0;
        set.params.jpeg_qf_range = IntInterval { lo: 80, hi: 80 };
        let got = apply_pipeline(&set, &img, &mut Rng::new(11)).unwrap();
        let cropped = apply_pipeline(&AugmentationSet::baseline(), &img, &mut Rng::new(11)).unwrap();
        assert_eq!(got, jpeg_compress(&cropped, 80).unwrap());
    }

    #[test]
    fn stubs_refuse_to_run() {
        let img = sample_image(4, 96);
        for stub in [OperatorKind::AutoPolicyStub, OperatorKind::RandPolicyStub] {
            let set = AugmentationSet::with(&[OperatorKind::GaussianBlur, stub]).unwrap();
            let err = apply_pipeline(&set, &img, &mut Rng::new(0)).unwrap_err();
            assert_eq!(err, Error::NotImplemented(stub.name()));
        }
    }

    #[test]
    fn large_resize_skips_crop() {
        let img = sample_image(5, 96);
        let mut set = AugmentationSet::with(&[OperatorKind::ResizeLarge]).unwrap();
        set.params.apply_prob = 0.0;
        let out = apply_pipeline(&set, &img, &mut Rng::new(1)).unwrap();
        assert_eq!(out.width(), 96);
        set.params.apply_prob = 1.0;
        let out = apply_pipeline(&set, &img, &mut Rng::new(1)).unwrap();
        assert_eq!((out.width(), out.height()), (64, 64));
        let small = AugmentationSet {
            params: OperatorParams { apply_prob: 1.0, ..Default::default() },
            ..AugmentationSet::with(&[OperatorKind::ResizeSmall]).unwrap()
        };
        assert_eq!(apply_pipeline(&small, &img, &mut Rng::new(1)).unwrap().width(), 32);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let img = sample_image(6, 96);
        let mut all = AugmentationSet::from_bits(&[true; 12]).unwrap();
        all.set_enabled(OperatorKind::AutoPolicyStub, false).unwrap();
        all.set_enabled(OperatorKind::RandPolicyStub, false).unwrap();
        for seed in 0..5 {
            let a = apply_pipeline(&all, &img, &mut Rng::new(seed)).unwrap();
            let b = apply_pipeline(&all, &img, &mut Rng::new(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    fn arb_image() -> impl Strategy<Value = Image> {
        (8usize..24, 8usize..24, prop_oneof![Just(1usize), Just(3usize)], any::<u64>()).prop_map(|(w, h, c, seed)| {
            let mut r = Rng::new(seed);
            Image::from_fn(w, h, c, |_, _, _| r.unit() as f32).unwrap()
        })
    }

    fn valid(img: &Image) -> bool {
        img.samples().iter().all(|s| s.is_finite() && (0.0..=1.0).contains(s))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn operators_keep_images_valid(
            img in arb_image(),
            sigma in 0.0f64..3.0,
            noise in 0.0f64..5.0,
            qf in 1u8..=100,
            factor in 0.05f64..4.0,
            seed in any::<u64>(),
        ) {
            let mut rng = Rng::new(seed);
            prop_assert!(valid(&gaussian_blur(&img, sigma).unwrap()));
            prop_assert!(valid(&gaussian_noise(&img, noise, &mut rng).unwrap()));
            prop_assert!(valid(&jpeg_compress(&img, qf).unwrap()));
            prop_assert!(valid(&sharpen(&img, factor).unwrap()));
            prop_assert!(valid(&adjust_contrast(&img, factor).unwrap()));
            prop_assert!(valid(&grayscale(&img)));
            prop_assert!(valid(&color_invert(&img)));
            prop_assert!(valid(&resize(&img, 8 + (seed % 40) as usize).unwrap()));
            if img.channels() == 3 {
                prop_assert!(valid(&color_jitter(&img, &mut rng, &JitterRanges::default()).unwrap()));
            }
        }

        #[test]
        fn identity_parameters_are_exact(img in arb_image()) {
            prop_assert_eq!(&gaussian_blur(&img, 0.0).unwrap(), &img);
            prop_assert_eq!(&sharpen(&img, 1.0).unwrap(), &img);
            prop_assert_eq!(&adjust_contrast(&img, 1.0).unwrap(), &img);
        }
    }

    #[test]
    fn set_serializes_by_name() {
        let set = AugmentationSet::with(&[OperatorKind::JpegCompress, OperatorKind::ColorInvert]).unwrap();
        assert_eq!(set.label(), "JpegCompress+ColorInvert");
        assert_eq!(AugmentationSet::baseline().label(), "baseline");
    }
}
