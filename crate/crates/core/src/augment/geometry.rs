//! Flip, crop and bilinear resize.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;

/// Mirror columns unconditionally.
pub fn mirror_columns(image: &Image) -> Image {
    let (w, c) = (image.width(), image.channels());
    let src = image.samples();
    let mut out = Vec::with_capacity(src.len());
    for y in 0..image.height() {
        for x in (0..w).rev() {
            let i = (y * w + x) * c;
            out.extend_from_slice(&src[i..i + c]);
        }
    }
    image.with_samples(out)
}

/// Mirror columns with probability 0.5 (one Bernoulli draw).
pub fn horizontal_flip(image: &Image, rng: &mut Rng) -> Image {
    if rng.bernoulli(0.5) {
        mirror_columns(image)
    } else {
        image.clone()
    }
}

/// `size`×`size` window at a uniformly drawn offset; offsets are multiples of
/// `align`. Draws the column offset first, then the row offset.
pub fn random_crop(image: &Image, size: usize, align: usize, rng: &mut Rng) -> Result<Image> {
    if size == 0 || size > image.width() || size > image.height() {
        return Err(Error::param(alloc::format!("crop {size} does not fit {}x{}", image.width(), image.height())));
    }
    let align = align.max(1);
    let x_slots = (image.width() - size) / align + 1;
    let y_slots = (image.height() - size) / align + 1;
    let x0 = rng.below_usize(x_slots) * align;
    let y0 = rng.below_usize(y_slots) * align;
    image.crop(x0, y0, size, size)
}

/// Bilinear resample to `target`×`target` using pixel-centre alignment
/// (`src = (dst + 0.5) * scale - 0.5`) and edge clamping.
pub fn resize(image: &Image, target: usize) -> Result<Image> {
    if target < 8 {
        return Err(Error::param(alloc::format!("resize target {target} below 8")));
    }
    resize_to(image, target, target)
}

pub(crate) fn resize_to(image: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == image.width() && out_h == image.height() {
        return Ok(image.clone());
    }
    let planes: Vec<Vec<f64>> = (0..image.channels())
        .map(|c| resize_plane(&image.plane(c), image.width(), image.height(), out_w, out_h))
        .collect();
    Image::from_planes(out_w, out_h, &planes)
}

/// Bilinear resample of a single `f64` plane.
pub fn resize_plane(plane: &[f64], w: usize, h: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    if out_w == w && out_h == h {
        return plane.to_vec();
    }
    let xs = axis_taps(w, out_w);
    let ys = axis_taps(h, out_h);
    let mut out = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p = |x: usize, y: usize| plane[y * w + x];
            let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
            let bot = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

/// For each output coordinate: the two source indices and the weight of the second.
fn axis_taps(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
            let i0 = libm::floor(s) as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize, c: usize) -> Image {
        Image::from_fn(w, h, c, |x, y, ch| ((x * 5 + y * 3 + ch) % 17) as f32 / 16.0).unwrap()
    }

    #[test]
    fn mirror_is_involution() {
        let img = ramp(7, 4, 3);
        assert_eq!(mirror_columns(&mirror_columns(&img)), img);
        assert_eq!(mirror_columns(&img).get(0, 2, 1), img.get(6, 2, 1));
    }

    #[test]
    fn full_crop_is_identity() {
        let img = ramp(9, 9, 1);
        assert_eq!(random_crop(&img, 9, 8, &mut Rng::new(4)).unwrap(), img);
        assert!(random_crop(&img, 10, 1, &mut Rng::new(4)).is_err());
    }

    #[test]
    fn crop_offsets_are_aligned() {
        let img = Image::from_fn(96, 96, 1, |x, y, _| (x + 96 * y) as f32 / 9216.0).unwrap();
        let mut rng = Rng::new(2);
        let mut seen = alloc::collections::BTreeSet::new();
        for _ in 0..200 {
            let c = random_crop(&img, 64, 8, &mut rng).unwrap();
            let idx = libm::roundf(c.get(0, 0, 0) * 9216.0) as usize;
            let (x0, y0) = (idx % 96, idx / 96);
            assert_eq!(x0 % 8, 0);
            assert_eq!(y0 % 8, 0);
            seen.insert((x0, y0));
        }
        assert_eq!(seen.len(), 25);
    }

    #[test]
    fn resize_preserves_constants() {
        let flat = Image::filled(96, 70, 3, 0.42).unwrap();
        for t in [8, 32, 64, 150] {
            let out = resize(&flat, t).unwrap();
            assert_eq!((out.width(), out.height()), (t, t));
            assert!(out.samples().iter().all(|&s| (s - 0.42).abs() < 1e-6));
        }
        assert!(resize(&flat, 7).is_err());
    }

    #[test]
    fn halving_averages_pairs() {
        let img = ramp(16, 16, 1);
        let out = resize(&img, 8).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let mean = (img.get(2 * x, 2 * y, 0)
                    + img.get(2 * x + 1, 2 * y, 0)
                    + img.get(2 * x, 2 * y + 1, 0)
                    + img.get(2 * x + 1, 2 * y + 1, 0))
                    / 4.0;
                assert!((out.get(x, y, 0) - mean).abs() < 1e-6);
            }
        }
    }
}
