//! Gaussian blur, unsharp masking and additive noise.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;

/// Index into `0..n` for a possibly out-of-range `i`, mirroring about the
/// edge samples without repeating them (`d c b | a b c d | c b a`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Sampled Gaussian taps for `sigma`, radius `ceil(3 sigma)`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(alloc::format!("blur sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(vec![1.0]);
    }
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut taps: Vec<f64> = (-radius..=radius).map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma))).collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Separable convolution of one plane with a symmetric odd-length kernel,
/// reflect-padded at the borders.
pub fn convolve_separable(plane: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[reflect_index(x as isize + k as isize - r, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * tmp[reflect_index(y as isize + k as isize - r, height) * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn blur_planes(image: &Image, kernel: &[f64]) -> Vec<Vec<f64>> {
    (0..image.channels()).map(|c| convolve_separable(&image.plane(c), image.width(), image.height(), kernel)).collect()
}

pub fn gaussian_blur(image: &Image, sigma: f64) -> Result<Image> {
    let kernel = gaussian_kernel(sigma)?;
    if kernel.len() == 1 {
        return Ok(image.clone());
    }
    Image::from_planes(image.width(), image.height(), &blur_planes(image, &kernel))
}

/// Unsharp mask: `in + (factor - 1) * (in - blur(in, 1.0))`, clamped.
pub fn sharpen(image: &Image, factor: f64) -> Result<Image> {
    if !(factor >= 0.0) || !factor.is_finite() {
        return Err(Error::param(alloc::format!("sharpen factor {factor} must be >= 0")));
    }
    if factor == 1.0 {
        return Ok(image.clone());
    }
    let blurred = blur_planes(image, &gaussian_kernel(1.0)?);
    let amount = factor - 1.0;
    let planes: Vec<Vec<f64>> = (0..image.channels())
        .map(|c| image.plane(c).iter().zip(&blurred[c]).map(|(&v, &b)| v + amount * (v - b)).collect())
        .collect();
    Image::from_planes(image.width(), image.height(), &planes)
}

/// Additive white Gaussian noise; `sigma_8bit` is on the 0..255 scale.
pub fn gaussian_noise(image: &Image, sigma_8bit: f64, rng: &mut Rng) -> Result<Image> {
    if !(sigma_8bit >= 0.0) || !sigma_8bit.is_finite() {
        return Err(Error::param(alloc::format!("noise sigma {sigma_8bit} must be >= 0")));
    }
    if sigma_8bit == 0.0 {
        return Ok(image.clone());
    }
    let sigma = sigma_8bit / 255.0;
    Ok(image.map(|s| (s as f64 + sigma * rng.normal()) as f32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize) -> Image {
        Image::from_fn(n, n, 1, |x, y, _| if x == n / 2 && y == n / 2 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn reflect_indexing() {
        let got: Vec<usize> = (-3..7).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-5, 1), 0);
    }

    #[test]
    fn kernel_sums_to_one() {
        for sigma in [0.3, 1.0, 1.7, 3.0] {
            let k = gaussian_kernel(sigma).unwrap();
            assert_eq!(k.len(), 2 * libm::ceil(3.0 * sigma) as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(gaussian_kernel(-0.1).is_err());
    }

    #[test]
    fn zero_sigma_and_constant_images_are_fixed() {
        let img = Image::from_fn(7, 5, 3, |x, y, c| ((x * 3 + y + c) % 5) as f32 / 4.0).unwrap();
        assert_eq!(gaussian_blur(&img, 0.0).unwrap(), img);
        let flat = Image::filled(9, 6, 3, 0.4).unwrap();
        assert!(gaussian_blur(&flat, 2.2).unwrap().max_abs_diff(&flat).unwrap() < 1e-6);
    }

    /// Dense 2-D convolution with the outer-product kernel; interior pixels only,
    /// so no padding rule is involved.
    #[test]
    fn impulse_matches_dense_oracle() {
        let n = 9;
        let out = gaussian_blur(&impulse(n), 1.0).unwrap();
        let g: Vec<f64> = (-3..=3).map(|i: i32| (-(i * i) as f64 / 2.0).exp()).collect();
        let s: f64 = g.iter().sum();
        let c = (n / 2) as isize;
        for y in 0..n as isize {
            for x in 0..n as isize {
                let mut acc = 0.0;
                for ky in -3..=3isize {
                    for kx in -3..=3isize {
                        if y - ky == c && x - kx == c {
                            acc += g[(ky + 3) as usize] * g[(kx + 3) as usize] / (s * s);
                        }
                    }
                }
                let got = out.get(x as usize, y as usize, 0) as f64;
                assert!((got - acc).abs() < 1e-6, "({x},{y}) {got} vs {acc}");
            }
        }
        // centre row is the normalized sampled Gaussian scaled by its centre tap
        for x in 1..8 {
            let expect = g[x - 1] / s * g[3] / s;
            assert!((out.get(x, 4, 0) as f64 - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn sharpen_identities_and_overshoot() {
        let flat = Image::filled(8, 8, 1, 0.3).unwrap();
        assert!(sharpen(&flat, 2.0).unwrap().max_abs_diff(&flat).unwrap() < 1e-6);
        let img = Image::from_fn(8, 8, 3, |x, _, _| x as f32 / 8.0).unwrap();
        assert_eq!(sharpen(&img, 1.0).unwrap(), img);
        assert!(sharpen(&img, -1.0).is_err());

        // step edge 0.2 | 0.6: unclamped unsharp result, checked against a dense oracle
        let step = Image::from_fn(12, 3, 1, |x, _, _| if x < 6 { 0.2 } else { 0.6 }).unwrap();
        let out = sharpen(&step, 2.0).unwrap();
        let k = gaussian_kernel(1.0).unwrap();
        let row: Vec<f64> = (0..12).map(|x| step.get(x, 1, 0) as f64).collect();
        for x in 0..12 {
            let blurred: f64 = (0..k.len()).map(|i| k[i] * row[reflect_index(x as isize + i as isize - 3, 12)]).sum();
            let expect = (row[x] + (row[x] - blurred)).clamp(0.0, 1.0);
            assert!((out.get(x, 1, 0) as f64 - expect).abs() < 1e-6);
        }
        assert!(out.get(6, 1, 0) > 0.6, "bright side overshoots");
        assert!(out.get(5, 1, 0) < 0.2, "dark side undershoots");
    }

    #[test]
    fn noise_statistics_and_clamping() {
        let gray = Image::filled(256, 256, 1, 0.5).unwrap();
        for sigma in [1.0, 2.0] {
            let out = gaussian_noise(&gray, sigma, &mut Rng::new(42)).unwrap();
            let d: Vec<f64> = out.samples().iter().map(|&s| (s as f64 - 0.5) * 255.0).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let sd = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d.len() as f64).sqrt();
            assert!((sd / sigma - 1.0).abs() < 0.03, "sd {sd}");
        }
        let ones = Image::filled(32, 32, 3, 1.0).unwrap();
        let out = gaussian_noise(&ones, 2.0, &mut Rng::new(1)).unwrap();
        assert!(out.samples().iter().all(|&s| s <= 1.0));
        assert_eq!(gaussian_noise(&ones, 0.0, &mut Rng::new(1)).unwrap(), ones);
        assert!(gaussian_noise(&ones, -1.0, &mut Rng::new(1)).is_err());
    }
}
