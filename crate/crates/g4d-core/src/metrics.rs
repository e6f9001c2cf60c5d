//! Image quality metrics over rendered frames.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::mathx::{exp, log10};
use crate::raster::RenderFrame;
use crate::Result;

/// PSNR cap returned for identical frames.
pub const PSNR_CAP_DB: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_dims(a: &RenderFrame, b: &RenderFrame) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(CoreError::Alignment { reason: "frame dimensions differ" });
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over RGB in [0, 1], capped at 100.
pub fn psnr(a: &RenderFrame, b: &RenderFrame) -> Result<f64> {
    check_dims(a, b)?;
    let mut acc = 0.0f64;
    for (&x, &y) in a.rgb.iter().zip(b.rgb.iter()) {
        let d = x as f64 - y as f64;
        acc += d * d;
    }
    let mse = acc / a.rgb.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * log10(1.0 / mse)).min(PSNR_CAP_DB))
}

/// Structural similarity: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
/// C2 = 0.03^2, computed per channel on [0, 1] data with valid-mode windows
/// and averaged.
pub fn ssim(a: &RenderFrame, b: &RenderFrame) -> Result<f64> {
    check_dims(a, b)?;
    let w = a.width as usize;
    let h = a.height as usize;
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(CoreError::Parameter { reason: "ssim needs images at least 11x11" });
    }

    let kernel = gaussian_kernel();
    let mut total = 0.0f64;
    for channel in 0..3 {
        let x: Vec<f64> = a.rgb.iter().skip(channel).step_by(3).map(|&v| v as f64).collect();
        let y: Vec<f64> = b.rgb.iter().skip(channel).step_by(3).map(|&v| v as f64).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(y.iter()).map(|(u, v)| u * v).collect();

        let mu_x = filter_valid(&x, w, h, &kernel);
        let mu_y = filter_valid(&y, w, h, &kernel);
        let e_xx = filter_valid(&xx, w, h, &kernel);
        let e_yy = filter_valid(&yy, w, h, &kernel);
        let e_xy = filter_valid(&xy, w, h, &kernel);

        let mut acc = 0.0f64;
        for i in 0..mu_x.len() {
            let mx = mu_x[i];
            let my = mu_y[i];
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            let v = ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2));
            acc += v;
        }
        total += acc / mu_x.len() as f64;
    }
    Ok(total / 3.0)
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0f64; SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - center;
        *v = exp(-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable valid-mode filtering; output is (h-10) x (w-10) row-major.
fn filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let out_w = w - SSIM_WINDOW + 1;
    let out_h = h - SSIM_WINDOW + 1;
    // Horizontal pass.
    let mut tmp = vec![0.0f64; out_w * h];
    for row in 0..h {
        for col in 0..out_w {
            let mut acc = 0.0;
            for (k, &kw) in kernel.iter().enumerate() {
                acc += kw * plane[row * w + col + k];
            }
            tmp[row * out_w + col] = acc;
        }
    }
    // Vertical pass.
    let mut out = vec![0.0f64; out_w * out_h];
    for row in 0..out_h {
        for col in 0..out_w {
            let mut acc = 0.0;
            for (k, &kw) in kernel.iter().enumerate() {
                acc += kw * tmp[(row + k) * out_w + col];
            }
            out[row * out_w + col] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn const_frame(w: u32, h: u32, value: [f32; 3]) -> RenderFrame {
        let mut rgb = Vec::with_capacity((w * h * 3) as usize);
        for _ in 0..w * h {
            rgb.extend_from_slice(&value);
        }
        RenderFrame { width: w, height: h, rgb, transmittance: vec![1.0; (w * h) as usize] }
    }

    fn random_frame(rng: &mut impl Rng, w: u32, h: u32) -> RenderFrame {
        RenderFrame {
            width: w,
            height: h,
            rgb: (0..w * h * 3).map(|_| rng.random_range(0.0..1.0)).collect(),
            transmittance: vec![1.0; (w * h) as usize],
        }
    }

    #[test]
    fn identical_frames_hit_the_psnr_cap() {
        let a = const_frame(16, 16, [0.3, 0.5, 0.7]);
        assert_eq!(psnr(&a, &a).unwrap(), 100.0);
    }

    #[test]
    fn uniform_tenth_difference_is_twenty_db() {
        let a = const_frame(16, 16, [0.25, 0.25, 0.25]);
        let b = const_frame(16, 16, [0.35, 0.35, 0.35]);
        let v = psnr(&a, &b).unwrap();
        assert!((v - 20.0).abs() < 1e-6, "psnr {v}");
    }

    #[test]
    fn psnr_matches_two_pass_oracle() {
        // Independent accumulation order: per-pixel means first, then the
        // mean of means.
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let a = random_frame(&mut rng, 24, 18);
        let b = random_frame(&mut rng, 24, 18);
        let v = psnr(&a, &b).unwrap();
        let n_px = (24 * 18) as f64;
        let mut mse = 0.0;
        for px in 0..(24 * 18) as usize {
            let mut pixel_acc = 0.0;
            for c in 0..3 {
                let d = a.rgb[3 * px + c] as f64 - b.rgb[3 * px + c] as f64;
                pixel_acc += d * d;
            }
            mse += pixel_acc / 3.0;
        }
        mse /= n_px;
        let oracle = 10.0 * (1.0 / mse).log10();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let base = random_frame(&mut rng, 20, 20);
        let mut last = f64::INFINITY;
        for amplitude in [0.01f32, 0.05, 0.2] {
            let mut noisy = base.clone();
            let mut noise_rng = ChaCha8Rng::seed_from_u64(63);
            for v in noisy.rgb.iter_mut() {
                let sign: bool = noise_rng.random();
                *v = (*v + if sign { amplitude } else { -amplitude }).clamp(0.0, 1.0);
            }
            let p = psnr(&base, &noisy).unwrap();
            assert!(p < last, "psnr should fall as noise grows");
            last = p;
        }
    }

    #[test]
    fn ssim_is_one_for_identical_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let a = random_frame(&mut rng, 32, 32);
        let v = ssim(&a, &a).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "ssim {v}");
    }

    #[test]
    fn constant_offset_matches_the_closed_form() {
        // For constant images all variances vanish; only the luminance term
        // survives: (2 m1 m2 + C1) / (m1^2 + m2^2 + C1).
        let a = const_frame(16, 16, [0.25, 0.25, 0.25]);
        let b = const_frame(16, 16, [0.75, 0.75, 0.75]);
        let v = ssim(&a, &b).unwrap();
        let expected = (2.0 * 0.25 * 0.75 + SSIM_C1) / (0.25 * 0.25 + 0.75 * 0.75 + SSIM_C1);
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        assert!(v < 1.0);
    }

    #[test]
    fn ssim_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        for _ in 0..5 {
            let a = random_frame(&mut rng, 16, 20);
            let b = random_frame(&mut rng, 16, 20);
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn dimension_checks() {
        let a = const_frame(16, 16, [0.5; 3]);
        let b = const_frame(16, 8, [0.5; 3]);
        assert!(psnr(&a, &b).is_err());
        assert!(ssim(&a, &b).is_err());
        let tiny = const_frame(8, 8, [0.5; 3]);
        assert!(ssim(&tiny, &tiny).is_err());
    }
}
