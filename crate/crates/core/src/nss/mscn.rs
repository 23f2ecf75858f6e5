//! Mean-subtracted contrast-normalized coefficients.

use crate::error::{Error, Result};
use crate::raster::{gaussian_kernel_1d, pad_reflect, Raster};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MscnConfig {
    /// Half-width of the square window (3 gives 7x7).
    pub window_radius: usize,
    pub gaussian_sigma: f64,
    /// Added to the local deviation; in intensity units of the input.
    pub stability_c: f64,
}

impl Default for MscnConfig {
    fn default() -> Self {
        Self {
            window_radius: 3,
            gaussian_sigma: 7.0 / 6.0,
            stability_c: 1.0,
        }
    }
}

impl MscnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_radius == 0 {
            return Err(Error::validation("MSCN window radius must be positive"));
        }
        if !(self.gaussian_sigma > 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(Error::validation("MSCN Gaussian sigma must be positive"));
        }
        if !(self.stability_c > 0.0) || !self.stability_c.is_finite() {
            return Err(Error::validation("MSCN stability constant must be positive"));
        }
        Ok(())
    }

    pub fn window_side(&self) -> usize {
        2 * self.window_radius + 1
    }

    /// Row-major `window_side²` weights: non-negative, circularly symmetric,
    /// summing to one.
    pub fn weights<T: Real>(&self) -> Vec<T> {
        let k = gaussian_kernel_1d(T::lit(self.gaussian_sigma), self.window_radius);
        let mut w: Vec<T> = k.iter().flat_map(|&a| k.iter().map(move |&b| a * b)).collect();
        let total: T = w.iter().copied().sum();
        for v in &mut w {
            *v /= total;
        }
        w
    }
}

/// `(I - μ) / (σ + C)` with Gaussian-weighted local mean and deviation.
///
/// Both moments are accumulated from differences to the center pixel, so a
/// constant field yields exact zeros and an additive shift of the input
/// leaves the output unchanged up to rounding of the differences.
pub fn mscn<T: Real>(img: &Raster<T>, cfg: &MscnConfig) -> Result<Raster<T>> {
    cfg.validate()?;
    let side = cfg.window_side();
    if img.width() < side || img.height() < side {
        return Err(Error::validation(format!(
            "{}x{} raster smaller than {side}x{side} normalization window",
            img.width(),
            img.height()
        )));
    }
    let weights: Vec<T> = cfg.weights();
    let c = T::lit(cfg.stability_c);
    let (w, h) = (img.width(), img.height());
    let r = cfg.window_radius;
    let (padded, stride) = pad_reflect(img, r);
    let mut diffs = vec![T::zero(); side * side];
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let center = padded[(y + r) * stride + x + r];
            let mut mean_diff = T::zero();
            for v in 0..side {
                let base = (y + v) * stride + x;
                for u in 0..side {
                    let d = padded[base + u] - center;
                    diffs[v * side + u] = d;
                    mean_diff += weights[v * side + u] * d;
                }
            }
            let mut var = T::zero();
            for (&wt, &d) in weights.iter().zip(&diffs) {
                let e = d - mean_diff;
                var += wt * e * e;
            }
            // center - μ = -mean_diff
            out.push(-mean_diff / (var.sqrt() + c));
        }
    }
    Ok(img.with_data(w, h, out))
}

/// Orientation of a neighbor product map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
    MainDiagonal,
    SecondaryDiagonal,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::Horizontal,
        Orientation::Vertical,
        Orientation::MainDiagonal,
        Orientation::SecondaryDiagonal,
    ];
}

/// Products of each coefficient with one neighbor:
/// horizontal `m(x,y)·m(x+1,y)`, vertical `m(x,y)·m(x,y+1)`,
/// main diagonal `m(x,y)·m(x+1,y+1)`, secondary `m(x+1,y)·m(x,y+1)`.
pub fn neighbor_products<T: Real>(m: &Raster<T>, orientation: Orientation) -> Vec<T> {
    let (w, h) = (m.width(), m.height());
    let mut out = Vec::new();
    match orientation {
        Orientation::Horizontal => {
            out.reserve(h * w.saturating_sub(1));
            for y in 0..h {
                let row = m.row(y);
                out.extend(row.windows(2).map(|p| p[0] * p[1]));
            }
        }
        Orientation::Vertical => {
            for y in 0..h.saturating_sub(1) {
                out.extend(m.row(y).iter().zip(m.row(y + 1)).map(|(&a, &b)| a * b));
            }
        }
        Orientation::MainDiagonal => {
            for y in 0..h.saturating_sub(1) {
                out.extend(m.row(y).iter().zip(&m.row(y + 1)[1..]).map(|(&a, &b)| a * b));
            }
        }
        Orientation::SecondaryDiagonal => {
            for y in 0..h.saturating_sub(1) {
                out.extend(m.row(y)[1..].iter().zip(m.row(y + 1)).map(|(&a, &b)| a * b));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise(w: usize, h: usize, std: f64, seed: u64) -> Raster<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(128.0, std).unwrap();
        Raster::from_fn(w, h, |_, _| n.sample(&mut rng)).unwrap()
    }

    fn kurtosis(v: &[f64]) -> f64 {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let m2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        m4 / (m2 * m2)
    }

    #[test]
    fn weights_properties() {
        let cfg = MscnConfig::default();
        let w: Vec<f64> = cfg.weights();
        assert_eq!(w.len(), 49);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(w.iter().all(|&v| v >= 0.0));
        // Circular symmetry: equal weight at equal radius.
        let at = |dx: i32, dy: i32| w[((dy + 3) * 7 + dx + 3) as usize];
        assert!((at(1, 2) - at(2, 1)).abs() < 1e-16);
        assert!((at(-2, 1) - at(1, 2)).abs() < 1e-16);
        assert!((at(0, 3) - at(-3, 0)).abs() < 1e-16);
    }

    #[test]
    fn constant_gives_zero_field() {
        let img = Raster::filled(16, 12, 143.7).unwrap();
        let m = mscn(&img, &MscnConfig::default()).unwrap();
        assert!(m.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_noise_kurtosis() {
        // Each pixel enters its own local deviation, which bounds |m| and
        // makes the field lighter-tailed than a Gaussian. A direct
        // floating-point reference of the same filter gives about 2.35.
        let img = noise(256, 256, 40.0, 17);
        let m = mscn(&img, &MscnConfig::default()).unwrap();
        let k = kurtosis(m.data());
        assert!((2.25..=2.45).contains(&k), "kurtosis {k}");
    }

    #[test]
    fn shift_invariant() {
        let img = noise(40, 30, 20.0, 3);
        let shifted = img.map(|v| v + 50.0);
        let a = mscn(&img, &MscnConfig::default()).unwrap();
        let b = mscn(&shifted, &MscnConfig::default()).unwrap();
        let err = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn scale_changes_only_through_c() {
        let img = noise(64, 64, 30.0, 8);
        let base = mscn(&img, &MscnConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let a: f64 = rng.random_range(0.5..2.0);
            let scaled = mscn(&img.map(|v| v * a), &MscnConfig::default()).unwrap();
            let err = base.data().iter().zip(scaled.data()).map(|(x, y)| (x - y).abs()).sum::<f64>()
                / base.len() as f64;
            assert!(err <= 0.02, "a={a} err={err}");
        }
    }

    #[test]
    fn rejects_small() {
        let img = Raster::filled(6, 20, 1.0).unwrap();
        assert!(mscn(&img, &MscnConfig::default()).is_err());
    }

    #[test]
    fn product_maps() {
        let m = Raster::from_fn(3, 2, |x, y| (1 + x + 3 * y) as f64).unwrap();
        // [1 2 3; 4 5 6]
        assert_eq!(neighbor_products(&m, Orientation::Horizontal), vec![2.0, 6.0, 20.0, 30.0]);
        assert_eq!(neighbor_products(&m, Orientation::Vertical), vec![4.0, 10.0, 18.0]);
        assert_eq!(neighbor_products(&m, Orientation::MainDiagonal), vec![5.0, 12.0]);
        assert_eq!(neighbor_products(&m, Orientation::SecondaryDiagonal), vec![8.0, 15.0]);
    }
}
