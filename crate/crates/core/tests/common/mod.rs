#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mfilgn::synth::{distort, quantize, textured_erp};
use mfilgn::Raster64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Draws from the zero-mode AGGD density `f(x) ∝ exp(-(|x|/υ_side)^τ)`
/// by rejection from a two-sided Laplace proposal with the same side scales
/// `ul`, `ur`. Both sides carry mass proportional to their scale under target
/// and proposal alike, so one acceptance bound serves both. For `τ = 2`,
/// `υ = σ·√2`.
pub fn aggd_rejection_samples(n: usize, tau: f64, ul: f64, ur: f64, seed: u64) -> Vec<f64> {
    // max over t ≥ 0 of t - t^τ, attained at t* = (1/τ)^(1/(τ-1)) for τ > 1.
    let t_star = (1.0 / tau).powf(1.0 / (tau - 1.0));
    let bound = t_star - t_star.powf(tau);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let left = rng.random::<f64>() < ul / (ul + ur);
        let e: f64 = -(1.0 - rng.random::<f64>()).ln();
        let t = e; // |x| / υ_side
        let accept = (t - t.powf(tau) - bound).exp();
        if rng.random::<f64>() < accept {
            out.push(if left { -t * ul } else { t * ur });
        }
    }
    out
}

/// Rank of each value: 1 + number smaller + half the number of other equal values.
pub fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let less = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Textbook Pearson correlation in the single-pass "raw moments" form.
pub fn textbook_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|x| x * x).sum();
    (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
}

pub fn brute_srocc(a: &[f64], b: &[f64]) -> f64 {
    textbook_pearson(&brute_ranks(a), &brute_ranks(b))
}

pub fn brute_rmse(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    (s / a.len() as f64).sqrt()
}

/// Pseudo-MOS on a 1-10 scale, decreasing in distortion level.
pub fn pseudo_mos(level: usize) -> f64 {
    1.0 + 9.0 * (-0.3 * level as f64).exp()
}

/// Writes `scenes × levels` 8-bit PNG ERPs plus `manifest.csv` into `dir`.
/// Level `k` applies Gaussian blur σ = 0.45k and noise std 1.5k.
pub fn write_synthetic_dataset(dir: &Path, scenes: usize, levels: usize, width: usize, height: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut manifest = String::from("path,mos,distortion,reference\n");
    for s in 0..scenes {
        let clean: Raster64 = quantize(&textured_erp(width, height, 1000 + s as u64));
        for k in 0..levels {
            let img = distort(&clean, k, 77 * s as u64 + k as u64);
            let name = format!("scene{s}_level{k}.png");
            img.to_gray8().save(dir.join(&name)).unwrap();
            let _ = writeln!(manifest, "{name},{},blurnoise{k},scene{s}", pseudo_mos(k));
        }
    }
    let p = dir.join("manifest.csv");
    std::fs::write(&p, manifest).unwrap();
    p
}
