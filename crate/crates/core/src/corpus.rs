//! Procedural real-vs-synthetic corpus with a planted generator fingerprint.
//!
//! A "real" image is a value-noise texture: bilinear lattice noise summed over
//! a few octaves, tinted with slowly varying chroma, plus per-pixel sensor
//! grain. Its "synthetic" partner is the same texture with a small periodic
//! grid added to every channel,
//!
//! ```text
//! A · (s(x + φx) · s(y + φy) + η · h(x + φx) · h(y + φy))
//! s(t) = √2 · cos(2πt/P − π/4),   h(t) = √2 · cos(πt/P − π/4)
//! ```
//!
//! which for period `P = 4` and zero phase is the ±1 pattern `1, 1, −1, −1`
//! per axis, i.e. a 2×2-block checkerboard like the ones transposed
//! convolutions leave behind. The weak second term at twice the period is
//! the echo an earlier upsampling stage leaves. It survives blur and JPEG far
//! better than the first, but a detector trained on clean images barely
//! needs it. The phases `φ` are drawn from `[−¼, ¼)` per image.
//!
//! Datasets store pairs interleaved (`real₀, synth₀, real₁, …`), so classes
//! are exactly balanced and an amplitude of zero makes both classes identical.
//! All images are 8-bit quantized so that they survive a file round trip.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_train_per_class: usize,
    pub n_eval_per_class: usize,
    pub image_size: usize,
    pub artifact_amplitude: f64,
    pub artifact_period: usize,
    /// Weight of the second checkerboard at twice the period, relative to
    /// the first.
    pub harmonic_weight: f64,
    pub n_eval_datasets: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_train_per_class: 2000,
            n_eval_per_class: 500,
            image_size: 96,
            artifact_amplitude: 0.08,
            artifact_period: 4,
            harmonic_weight: 0.1,
            n_eval_datasets: 4,
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train_per_class == 0 || self.n_eval_per_class == 0 || self.n_eval_datasets == 0 {
            return Err(Error::param("corpus counts must be positive"));
        }
        if self.n_eval_datasets > EVAL_FAMILIES.len() {
            return Err(Error::param(alloc::format!(
                "at most {} evaluation datasets are available",
                EVAL_FAMILIES.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.artifact_amplitude) {
            return Err(Error::param(alloc::format!("artifact amplitude {} outside [0, 1]", self.artifact_amplitude)));
        }
        if !(0.0..=1.0).contains(&self.harmonic_weight) {
            return Err(Error::param(alloc::format!("harmonic weight {} outside [0, 1]", self.harmonic_weight)));
        }
        if self.artifact_period < 2 {
            return Err(Error::param("artifact period must be at least 2"));
        }
        if self.image_size < 8 {
            return Err(Error::param("image size must be at least 8"));
        }
        Ok(())
    }
}

/// Statistics of one texture family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureFamily {
    pub name: &'static str,
    /// Lattice spacings of the value-noise octaves, coarsest first.
    pub spacings: &'static [usize],
    /// Amplitude ratio between successive octaves.
    pub persistence: f64,
    /// Approximate standard deviation of the luma texture.
    pub contrast: f64,
    pub mean_rgb: [f64; 3],
    /// Strength of the low-frequency chroma variation.
    pub chroma: f64,
    /// Per-pixel sensor grain, standard deviation in 8-bit units.
    pub grain: f64,
}

pub const TRAIN_FAMILY: TextureFamily = TextureFamily {
    name: "train",
    spacings: &[32, 16, 8, 4],
    persistence: 0.6,
    contrast: 0.12,
    mean_rgb: [0.45, 0.55, 0.35],
    chroma: 0.05,
    grain: 1.0,
};

/// Evaluation families, used in this order.
pub const EVAL_FAMILIES: [TextureFamily; 6] = [
    TextureFamily {
        name: "foliage",
        spacings: &[24, 12, 6],
        persistence: 0.55,
        contrast: 0.14,
        mean_rgb: [0.3, 0.5, 0.3],
        chroma: 0.06,
        grain: 1.5,
    },
    TextureFamily {
        name: "marble",
        spacings: &[48, 24, 12],
        persistence: 0.5,
        contrast: 0.1,
        mean_rgb: [0.75, 0.72, 0.7],
        chroma: 0.03,
        grain: 0.8,
    },
    TextureFamily {
        name: "sand",
        spacings: &[16, 8, 4],
        persistence: 0.7,
        contrast: 0.09,
        mean_rgb: [0.78, 0.68, 0.5],
        chroma: 0.04,
        grain: 2.0,
    },
    TextureFamily {
        name: "bark",
        spacings: &[32, 16, 8, 4, 2],
        persistence: 0.55,
        contrast: 0.13,
        mean_rgb: [0.4, 0.3, 0.22],
        chroma: 0.04,
        grain: 1.2,
    },
    TextureFamily {
        name: "sky",
        spacings: &[64, 32],
        persistence: 0.5,
        contrast: 0.06,
        mean_rgb: [0.5, 0.65, 0.85],
        chroma: 0.05,
        grain: 0.6,
    },
    TextureFamily {
        name: "concrete",
        spacings: &[16, 8, 4, 2],
        persistence: 0.65,
        contrast: 0.08,
        mean_rgb: [0.55, 0.55, 0.55],
        chroma: 0.01,
        grain: 2.5,
    },
];

/// Images with binary labels (0 = real, 1 = synthetic).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    images: Vec<Image>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, images: Vec<Image>, labels: Vec<u8>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::shape(alloc::format!("{} images but {} labels", images.len(), labels.len())));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::param("labels must be 0 or 1"));
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(Error::param("a dataset needs both classes"));
        }
        Ok(Self { name: name.into(), images, labels })
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Split off every `every`-th real/synthetic pair as a held-out set.
    /// Assumes the interleaved pair layout produced by [`generate_corpus`].
    pub fn holdout_pairs(&self, every: usize, held_name: &str) -> Result<(LabeledDataset, LabeledDataset)> {
        if every < 2 || self.len() < 2 * every {
            return Err(Error::param(alloc::format!("cannot hold out every {every}th pair of {}", self.len())));
        }
        let (mut keep, mut held) = ((vec![], vec![]), (vec![], vec![]));
        for (i, (img, &l)) in self.images.iter().zip(&self.labels).enumerate() {
            let dst = if (i / 2) % every == every - 1 { &mut held } else { &mut keep };
            dst.0.push(img.clone());
            dst.1.push(l);
        }
        Ok((LabeledDataset::new(self.name.clone(), keep.0, keep.1)?, LabeledDataset::new(held_name, held.0, held.1)?))
    }

    /// The first `pairs` real/synthetic pairs.
    pub fn first_pairs(&self, pairs: usize) -> Result<LabeledDataset> {
        let n = (2 * pairs).min(self.len());
        LabeledDataset::new(self.name.clone(), self.images[..n].to_vec(), self.labels[..n].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub train: LabeledDataset,
    pub eval_sets: Vec<LabeledDataset>,
}

impl Corpus {
    /// The training pairs with every tenth pair held out as `val`.
    pub fn train_val(&self) -> Result<(LabeledDataset, LabeledDataset)> {
        self.train.holdout_pairs(10, "val")
    }
}

/// Training set from [`TRAIN_FAMILY`] and one evaluation set per family in
/// [`EVAL_FAMILIES`], each from its own labelled split of `config.seed`.
pub fn generate_corpus(config: &CorpusConfig) -> Result<Corpus> {
    config.validate()?;
    let root = Rng::new(config.seed);
    let train = generate_dataset(config, &TRAIN_FAMILY, config.n_train_per_class, &root.split_str("train"))?;
    let eval_root = root.split_str("eval");
    let eval_sets = EVAL_FAMILIES[..config.n_eval_datasets]
        .iter()
        .enumerate()
        .map(|(d, fam)| generate_dataset(config, fam, config.n_eval_per_class, &eval_root.split(d as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { train, eval_sets })
}

pub fn generate_dataset(
    config: &CorpusConfig,
    family: &TextureFamily,
    pairs: usize,
    rng: &Rng,
) -> Result<LabeledDataset> {
    let mut images = Vec::with_capacity(2 * pairs);
    let mut labels = Vec::with_capacity(2 * pairs);
    for i in 0..pairs {
        let (real, synth) = generate_pair(config, family, &rng.split(i as u64))?;
        images.push(real);
        labels.push(0);
        images.push(synth);
        labels.push(1);
    }
    LabeledDataset::new(family.name, images, labels)
}

/// One real image and its fingerprinted partner.
pub fn generate_pair(config: &CorpusConfig, family: &TextureFamily, rng: &Rng) -> Result<(Image, Image)> {
    let n = config.image_size;
    let planes = render_texture(family, n, &mut rng.split_str("texture"));
    let mut art_rng = rng.split_str("artifact");
    let phase_x = art_rng.uniform(-0.25, 0.25)?;
    let phase_y = art_rng.uniform(-0.25, 0.25)?;
    let grid = artifact_pattern(
        n,
        config.artifact_period,
        config.artifact_amplitude,
        config.harmonic_weight,
        phase_x,
        phase_y,
    );
    let synth_planes: Vec<Vec<f64>> =
        planes.iter().map(|p| p.iter().zip(&grid).map(|(v, g)| v + g).collect()).collect();
    let real = Image::from_planes(n, n, &planes)?.quantized();
    let synth = Image::from_planes(n, n, &synth_planes)?.quantized();
    Ok((real, synth))
}

/// The planted pattern `A · (s(x)·s(y) + η·h(x)·h(y))` as a `size`×`size`
/// plane, where `s` has the given period and `h` twice that, both shifted
/// by the phases.
pub fn artifact_pattern(
    size: usize,
    period: usize,
    amplitude: f64,
    harmonic_weight: f64,
    phase_x: f64,
    phase_y: f64,
) -> Vec<f64> {
    let wave = |t: f64| core::f64::consts::SQRT_2 * libm::cos(2.0 * PI * t / period as f64 - PI / 4.0);
    let sx: Vec<f64> = (0..size).map(|x| wave(x as f64 + phase_x)).collect();
    let sy: Vec<f64> = (0..size).map(|y| wave(y as f64 + phase_y)).collect();
    let wave2 = |t: f64| core::f64::consts::SQRT_2 * libm::cos(PI * t / period as f64 - PI / 4.0);
    let hx: Vec<f64> = (0..size).map(|x| wave2(x as f64 + phase_x)).collect();
    let hy: Vec<f64> = (0..size).map(|y| wave2(y as f64 + phase_y)).collect();
    let mut out = Vec::with_capacity(size * size);
    for (&vy, &wy) in sy.iter().zip(&hy) {
        out.extend(sx.iter().zip(&hx).map(|(&vx, &wx)| amplitude * (vx * vy + harmonic_weight * wx * wy)));
    }
    out
}

/// Three 0..1-scale planes (not yet clamped).
fn render_texture(family: &TextureFamily, n: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let contrast = family.contrast * rng.uniform_unchecked(0.8, 1.2);
    let shift = rng.uniform_unchecked(-0.08, 0.08);
    let luma = octave_noise(n, family.spacings, family.persistence, rng);
    let coarse = &family.spacings[..1];
    let chroma_a = octave_noise(n, coarse, 1.0, rng);
    let chroma_b = octave_noise(n, coarse, 1.0, rng);
    // opponent colour directions: red-green and yellow-blue
    const RG: [f64; 3] = [0.7, -0.7, 0.0];
    const YB: [f64; 3] = [0.4, 0.4, -0.8];
    let grain = family.grain / 255.0;
    (0..3)
        .map(|c| {
            (0..n * n)
                .map(|i| {
                    family.mean_rgb[c]
                        + shift
                        + contrast * luma[i]
                        + family.chroma * (RG[c] * chroma_a[i] + YB[c] * chroma_b[i])
                        + grain * rng.normal()
                })
                .collect()
        })
        .collect()
}

/// Sum of bilinear value-noise octaves, scaled to roughly unit variance.
fn octave_noise(n: usize, spacings: &[usize], persistence: f64, rng: &mut Rng) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    let mut amp = 1.0;
    let mut norm = 0.0;
    for &s in spacings {
        let layer = value_noise(n, s, rng);
        for (o, v) in out.iter_mut().zip(&layer) {
            *o += amp * v;
        }
        norm += amp * amp;
        amp *= persistence;
    }
    // uniform lattice values on [-1, 1) have variance 1/3
    let scale = libm::sqrt(3.0 / norm);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Bilinear interpolation of a random lattice with the given spacing and a
/// random origin.
fn value_noise(n: usize, spacing: usize, rng: &mut Rng) -> Vec<f64> {
    let cells = n / spacing + 2;
    let lattice: Vec<f64> = (0..cells * cells).map(|_| rng.uniform_unchecked(-1.0, 1.0)).collect();
    let ox = rng.below_usize(spacing);
    let oy = rng.below_usize(spacing);
    let s = spacing as f64;
    let taps = |o: usize| -> Vec<(usize, f64)> {
        (0..n)
            .map(|p| {
                let t = (p + o) as f64 / s;
                let i = libm::floor(t);
                (i as usize, t - i)
            })
            .collect()
    };
    let (tx, ty) = (taps(ox), taps(oy));
    let mut out = Vec::with_capacity(n * n);
    for &(iy, fy) in &ty {
        for &(ix, fx) in &tx {
            let at = |x: usize, y: usize| lattice[y * cells + x];
            let top = at(ix, iy) * (1.0 - fx) + at(ix + 1, iy) * fx;
            let bot = at(ix, iy + 1) * (1.0 - fx) + at(ix + 1, iy + 1) * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

/// Power of the mean-removed luma at the fingerprint frequency
/// `(1/P, ±1/P)`, normalized by the pixel count squared.
pub fn artifact_bin_power(image: &Image, period: usize) -> f64 {
    let (w, h) = (image.width(), image.height());
    let luma = image.luma();
    let mean = luma.iter().sum::<f64>() / luma.len() as f64;
    let f = 2.0 * PI / period as f64;
    let mut power = 0.0;
    for sign in [1.0, -1.0] {
        let (mut re, mut im) = (0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let v = luma[y * w + x] - mean;
                let arg = f * (x as f64 + sign * y as f64);
                re += v * libm::cos(arg);
                im -= v * libm::sin(arg);
            }
        }
        power += re * re + im * im;
    }
    power / ((w * h) as f64 * (w * h) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::gaussian_blur;

    fn cfg(amplitude: f64, pairs: usize) -> CorpusConfig {
        CorpusConfig {
            n_train_per_class: pairs,
            n_eval_per_class: pairs,
            artifact_amplitude: amplitude,
            seed: 11,
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn zero_phase_pattern_is_block_checkerboard() {
        let p = artifact_pattern(8, 4, 1.0, 0.0, 0.0, 0.0);
        let row: Vec<i32> = p[..8].iter().map(|v| libm::round(*v) as i32).collect();
        assert_eq!(row, [1, 1, -1, -1, 1, 1, -1, -1]);
        assert_eq!(libm::round(p[2 * 8]) as i32, -1);
        assert_eq!(libm::round(p[2 * 8 + 2]) as i32, 1);
    }

    #[test]
    fn deterministic_and_balanced() {
        let c = cfg(0.08, 6);
        let a = generate_corpus(&c).unwrap();
        assert_eq!(a, generate_corpus(&c).unwrap());
        assert_eq!(a.eval_sets.len(), 4);
        for ds in core::iter::once(&a.train).chain(&a.eval_sets) {
            assert_eq!(ds.labels().iter().filter(|&&l| l == 1).count() * 2, ds.len());
            assert!(ds.images().iter().all(|im| (im.width(), im.height(), im.channels()) == (96, 96, 3)));
        }
        let other = generate_corpus(&CorpusConfig { seed: 12, ..c }).unwrap();
        assert_ne!(a.train.images()[0], other.train.images()[0]);
    }

    #[test]
    fn no_image_shared_between_datasets() {
        let a = generate_corpus(&cfg(0.08, 5)).unwrap();
        let all: Vec<&Image> = core::iter::once(&a.train).chain(&a.eval_sets).flat_map(|d| d.images()).collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn zero_amplitude_pairs_are_identical() {
        let a = generate_corpus(&cfg(0.0, 4)).unwrap();
        for pair in a.eval_sets[0].images().chunks(2) {
            assert_eq!(pair[0], pair[1]);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(cfg(1.5, 2).validate().is_err());
        assert!(CorpusConfig { n_train_per_class: 0, ..cfg(0.1, 2) }.validate().is_err());
        assert!(CorpusConfig { n_eval_datasets: 7, ..cfg(0.1, 2) }.validate().is_err());
        assert!(CorpusConfig { artifact_period: 1, ..cfg(0.1, 2) }.validate().is_err());
    }

    #[test]
    fn holdout_keeps_pairs_together() {
        let a = generate_corpus(&cfg(0.08, 20)).unwrap();
        let (rest, val) = a.train.holdout_pairs(10, "val").unwrap();
        assert_eq!((rest.len(), val.len()), (36, 4));
        assert_eq!(val.images()[0], a.train.images()[18]);
        assert_eq!(val.labels(), &[0, 1, 0, 1]);
    }

    /// Mean artifact-bin power of (real, synthetic) images after `f`.
    fn class_power(ds: &LabeledDataset, f: impl Fn(&Image) -> Image) -> (f64, f64) {
        let (mut real, mut synth) = (0.0, 0.0);
        for (img, &l) in ds.images().iter().zip(ds.labels()) {
            let p = artifact_bin_power(&f(img), 4);
            if l == 1 {
                synth += p;
            } else {
                real += p;
            }
        }
        let n = ds.len() as f64 / 2.0;
        (real / n, synth / n)
    }

    #[test]
    fn fingerprint_visible_and_attenuated() {
        let c = CorpusConfig { n_train_per_class: 100, n_eval_datasets: 1, ..cfg(0.08, 1) };
        let train = generate_corpus(&c).unwrap().train;
        let (real, synth) = class_power(&train, |im| im.clone());
        assert!(synth >= 3.0 * real, "{synth} vs {real}");
        // perturbed images are stored at 8 bits like the originals; blur
        // scales both classes alike, so it is the planted excess that shrinks
        let (br, bs) = class_power(&train, |im| gaussian_blur(im, 1.5).unwrap().quantized());
        assert!(bs - br <= 0.5 * (synth - real), "{} vs {}", bs - br, synth - real);
        let combined = crate::scenarios::Scenario::builtin("combined").unwrap();
        let (cr, cs) = class_power(&train, |im| crate::scenarios::apply_scenario(&combined, im, 0).unwrap());
        assert!(cs - cr <= 0.5 * (synth - real), "{} vs {}", cs - cr, synth - real);
    }

    #[test]
    fn harmonic_survives_blur() {
        let n = 64;
        let pattern = artifact_pattern(n, 4, 0.08, 0.5, 0.0, 0.0);
        let planes = [pattern.iter().map(|v| 0.5 + v).collect::<Vec<f64>>()];
        let img = Image::from_planes(n, n, &planes).unwrap();
        let blurred = gaussian_blur(&img, 1.0).unwrap();
        let kept = |p: usize| artifact_bin_power(&blurred, p) / artifact_bin_power(&img, p);
        // per-axis amplitude gain exp(-2π²σ²/P²), to the fourth for 2-D power
        let expected = |p: f64| libm::exp(-8.0 * PI * PI / (p * p));
        assert!(kept(8) > 10.0 * kept(4), "{} vs {}", kept(8), kept(4));
        assert!((kept(8) / expected(8.0) - 1.0).abs() < 0.15, "{} vs {}", kept(8), expected(8.0));
    }
}
