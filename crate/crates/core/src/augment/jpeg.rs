//! Lossy JPEG round trip without entropy coding.
//!
//! The pipeline is the baseline JPEG one up to and including quantization:
//! full-range BT.601 YCbCr, 4:4:4, level shift by 128, 8×8 DCT-II, divide by the
//! quality-scaled Annex K tables, round, multiply back, inverse DCT, back to RGB.
//! Partial edge blocks are reflect-padded to a multiple of 8 and cropped after.

use alloc::vec;
use alloc::vec::Vec;

use super::filter::reflect_index;
use crate::error::{Error, Result};
use crate::image::Image;

/// ITU-T T.81 Annex K.1 luminance table, row-major.
pub const LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// ITU-T T.81 Annex K.2 chrominance table, row-major.
pub const CHROMA_TABLE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Scale a base table for quality `qf` (libjpeg convention).
pub fn scaled_table(base: &[u16; 64], qf: u8) -> Result<[f64; 64]> {
    if !(1..=100).contains(&qf) {
        return Err(Error::param(alloc::format!("JPEG quality {qf} outside 1..=100")));
    }
    let qf = qf as u32;
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut out = [0.0; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        *o = ((b as u32 * scale + 50) / 100).clamp(1, 255) as f64;
    }
    Ok(out)
}

/// Orthonormal 8-point DCT-II basis, `basis[u][x]`.
fn dct_basis() -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let cu = if u == 0 { libm::sqrt(0.125) } else { 0.5 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = cu * libm::cos(((2 * x + 1) * u) as f64 * core::f64::consts::PI / 16.0);
        }
    }
    m
}

/// Quantize-dequantize one 8×8 block in place (values already level-shifted).
fn process_block(block: &mut [f64; 64], table: &[f64; 64], basis: &[[f64; 8]; 8]) {
    let mut tmp = [0.0; 64];
    // rows
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| basis[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut coef = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            coef[v * 8 + u] = (0..8).map(|y| basis[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    for (c, q) in coef.iter_mut().zip(table) {
        *c = libm::round(*c / q) * q;
    }
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|v| basis[v][y] * coef[v * 8 + u]).sum();
        }
    }
    for y in 0..8 {
        for x in 0..8 {
            block[y * 8 + x] = (0..8).map(|u| basis[u][x] * tmp[y * 8 + u]).sum();
        }
    }
}

/// Run one 0..255 plane through blockwise quantization.
fn process_plane(plane: &[f64], width: usize, height: usize, table: &[f64; 64]) -> Vec<f64> {
    let basis = dct_basis();
    let mut out = vec![0.0; plane.len()];
    let mut block = [0.0; 64];
    for by in (0..height).step_by(8) {
        for bx in (0..width).step_by(8) {
            for y in 0..8 {
                let sy = reflect_index((by + y) as isize, height);
                for x in 0..8 {
                    let sx = reflect_index((bx + x) as isize, width);
                    block[y * 8 + x] = plane[sy * width + sx] - 128.0;
                }
            }
            process_block(&mut block, table, &basis);
            for y in 0..8.min(height - by) {
                for x in 0..8.min(width - bx) {
                    out[(by + y) * width + bx + x] = block[y * 8 + x] + 128.0;
                }
            }
        }
    }
    out
}

/// Compress and decompress `image` at quality `qf`. Gray images use the luma table only.
pub fn jpeg_compress(image: &Image, qf: u8) -> Result<Image> {
    let luma_q = scaled_table(&LUMA_TABLE, qf)?;
    let chroma_q = scaled_table(&CHROMA_TABLE, qf)?;
    let (w, h) = (image.width(), image.height());
    if image.channels() == 1 {
        let plane: Vec<f64> = image.plane(0).iter().map(|v| v * 255.0).collect();
        let out = process_plane(&plane, w, h, &luma_q);
        let out: Vec<f64> = out.iter().map(|v| v / 255.0).collect();
        return Image::from_planes(w, h, &[out]);
    }
    let n = w * h;
    let (mut yp, mut cb, mut cr) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, px) in image.samples().chunks_exact(3).enumerate() {
        let (r, g, b) = (px[0] as f64 * 255.0, px[1] as f64 * 255.0, px[2] as f64 * 255.0);
        yp[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        cb[i] = 128.0 - 0.168_735_892 * r - 0.331_264_108 * g + 0.5 * b;
        cr[i] = 128.0 + 0.5 * r - 0.418_687_589 * g - 0.081_312_411 * b;
    }
    let yp = process_plane(&yp, w, h, &luma_q);
    let cb = process_plane(&cb, w, h, &chroma_q);
    let cr = process_plane(&cr, w, h, &chroma_q);
    let (mut rp, mut gp, mut bp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let (y, u, v) = (yp[i], cb[i] - 128.0, cr[i] - 128.0);
        rp[i] = (y + 1.402 * v) / 255.0;
        gp[i] = (y - 0.344_136_286 * u - 0.714_136_286 * v) / 255.0;
        bp[i] = (y + 1.772 * u) / 255.0;
    }
    Image::from_planes(w, h, &[rp, gp, bp])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn textured(seed: u64) -> Image {
        let mut r = Rng::new(seed);
        let base = Image::from_fn(40, 36, 3, |x, y, c| {
            0.5 + 0.3 * ((x as f32 * 0.7 + c as f32).sin() * (y as f32 * 0.4).cos())
        })
        .unwrap();
        base.map(|s| s + 0.1 * (r.unit() as f32 - 0.5))
    }

    #[test]
    fn table_scaling() {
        let t50 = scaled_table(&LUMA_TABLE, 50).unwrap();
        assert_eq!(t50[0], 16.0);
        let t100 = scaled_table(&LUMA_TABLE, 100).unwrap();
        assert!(t100.iter().all(|&q| q == 1.0));
        let t1 = scaled_table(&CHROMA_TABLE, 1).unwrap();
        assert!(t1.iter().all(|&q| q == 255.0));
        assert_eq!(scaled_table(&LUMA_TABLE, 25).unwrap()[0], 32.0);
        assert!(scaled_table(&LUMA_TABLE, 0).is_err());
        assert!(scaled_table(&LUMA_TABLE, 101).is_err());
    }

    #[test]
    fn dct_is_orthonormal() {
        let b = dct_basis();
        for u in 0..8 {
            for v in 0..8 {
                let dot: f64 = (0..8).map(|x| b[u][x] * b[v][x]).sum();
                assert!((dot - if u == v { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quality_100_is_near_lossless() {
        let img = textured(3);
        let out = jpeg_compress(&img, 100).unwrap();
        assert!(out.psnr(&img).unwrap() > 45.0);
    }

    /// A flat block only has a DC term; its reconstruction error is at most
    /// half the DC step over 8, i.e. one 8-bit level while the step is <= 16.
    #[test]
    fn constant_image_survives() {
        for c in [1, 3] {
            for level in [0.0, 0.37, 0.5, 0.93, 1.0] {
                let flat = Image::filled(20, 13, c, level).unwrap();
                for qf in [50, 75, 90, 100] {
                    let out = jpeg_compress(&flat, qf).unwrap();
                    assert!(out.max_abs_diff(&flat).unwrap() <= 1.0 / 255.0 + 1e-6);
                }
            }
        }
    }

    #[test]
    fn distortion_decreases_with_quality() {
        let img = textured(8);
        let errs: Vec<f64> =
            [30, 50, 70, 90].iter().map(|&q| jpeg_compress(&img, q).unwrap().mse(&img).unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    }
}
