//! Seeded synthetic equirectangular scenes and distortions, used by the test
//! suites and for smoke-testing the CLI without a subjective database.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{gaussian_blur, Raster};
use crate::scalar::Real;

/// Layered scene in `[0, 255]`: smooth periodic shading, flat-shaded
/// ellipses with hard edges, and lightly blurred fine grain.
pub fn textured_erp<T: Real>(width: usize, height: usize, seed: u64) -> Raster<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);

    let waves: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random_range(1..6) as f64,
                rng.random_range(1.0..5.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(8.0..20.0),
            )
        })
        .collect();
    let shapes: Vec<(f64, f64, f64, f64, f64)> = (0..14)
        .map(|_| {
            (
                rng.random_range(0.0..w),
                rng.random_range(0.0..h),
                rng.random_range(w / 40.0..w / 8.0),
                rng.random_range(h / 30.0..h / 5.0),
                rng.random_range(-60.0..60.0),
            )
        })
        .collect();
    let mut grain: Vec<f64> = (0..width * height).map(|_| rng.random_range(-1.0..1.0)).collect();
    let grain_img = gaussian_blur(&Raster::new(width, height, std::mem::take(&mut grain)).expect("sized"), 0.7);
    let grain_amp = rng.random_range(30.0..60.0);
    let base = rng.random_range(100.0..150.0);

    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / w, y as f64 / h);
            let mut val = base;
            for &(fu, fv, ph, amp) in &waves {
                // Integer horizontal frequency keeps the scene continuous across the seam.
                val += amp * (std::f64::consts::TAU * (fu * u) + fv * std::f64::consts::PI * v + ph).sin();
            }
            for &(cx, cy, rx, ry, dv) in &shapes {
                let mut dx = (x as f64 - cx).abs();
                dx = dx.min(w - dx);
                let dy = y as f64 - cy;
                if (dx / rx).powi(2) + (dy / ry).powi(2) <= 1.0 {
                    val += dv;
                }
            }
            val += grain_amp * grain_img.get(x, y);
            data.push(T::lit(val.clamp(0.0, 255.0)));
        }
    }
    Raster::from_luma(width, height, data, T::lit(255.0)).expect("synthetic scene within range")
}

/// Adds seeded Gaussian noise (Box-Muller) and clamps to `[0, source_range]`.
pub fn add_gaussian_noise<T: Real>(img: &Raster<T>, std: f64, seed: u64) -> Raster<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = img.source_range();
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let u1: f64 = rng.random_range(f64::EPSILON..1.0);
            let u2: f64 = rng.random();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            let v = img.get(x, y) + T::lit(std * z);
            out.set(x, y, v.max(T::zero()).min(top));
        }
    }
    out
}

/// Blur then noise, the distortion model of the synthetic learnability set.
/// Level 0 is the pristine scene; strength grows with the level.
pub fn distort<T: Real>(img: &Raster<T>, level: usize, seed: u64) -> Raster<T> {
    if level == 0 {
        return img.clone();
    }
    let blurred = gaussian_blur(img, T::lit(0.45 * level as f64));
    let noisy = add_gaussian_noise(&blurred, 1.5 * level as f64, seed);
    noisy.map(|v| v.round())
}

/// Rounds to 8-bit levels, as if the image had been stored.
pub fn quantize<T: Real>(img: &Raster<T>) -> Raster<T> {
    img.map(|v| v.round())
}
