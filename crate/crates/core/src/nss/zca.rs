//! Zero-phase (ZCA) whitening estimated from the image's own patches.

use crate::error::{Error, Result};
use crate::raster::{pad_reflect, Raster};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZcaConfig {
    /// Odd patch side in pixels.
    pub patch_size: usize,
    /// Added to every covariance eigenvalue before the inverse square root.
    pub epsilon: f64,
}

impl Default for ZcaConfig {
    fn default() -> Self {
        Self {
            patch_size: 5,
            epsilon: 1e-4,
        }
    }
}

impl ZcaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.patch_size.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "ZCA patch size must be odd, got {}",
                self.patch_size
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::validation("ZCA epsilon must be positive"));
        }
        Ok(())
    }
}

/// A fitted whitening filter: the center row of `s · V (Λ + εI)^(-1/2) Vᵀ`
/// reshaped into a `patch_size x patch_size` kernel.
///
/// `s = sqrt(mean(Λ) + ε)` keeps the whitened signal at the input's average
/// pixel variance, so downstream constants tuned for 8-bit intensities keep
/// their meaning. For a constant image the kernel is exactly a unit impulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ZcaFilter<T> {
    patch_size: usize,
    kernel: Vec<T>,
}

impl<T: Real> ZcaFilter<T> {
    /// Estimates the patch covariance from all non-overlapping patches of the
    /// mean-removed image. Each patch also contributes its 180° rotation so
    /// the resulting kernel is point symmetric.
    pub fn fit(img: &Raster<T>, cfg: &ZcaConfig) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.patch_size;
        if img.width() < p || img.height() < p {
            return Err(Error::validation(format!(
                "{}x{} raster smaller than {p}x{p} whitening patch",
                img.width(),
                img.height()
            )));
        }
        let d = p * p;
        let mean = img.mean();
        let mut cov = vec![T::zero(); d * d];
        let mut patch = vec![T::zero(); d];
        let mut count = 0usize;
        for py in 0..img.height() / p {
            for px in 0..img.width() / p {
                for v in 0..p {
                    let row = img.row(py * p + v);
                    for u in 0..p {
                        patch[v * p + u] = row[px * p + u] - mean;
                    }
                }
                for a in 0..d {
                    let pa = patch[a];
                    for b in a..d {
                        cov[a * d + b] += pa * patch[b];
                    }
                }
                count += 1;
            }
        }
        for a in 0..d {
            for b in 0..a {
                cov[a * d + b] = cov[b * d + a];
            }
        }
        // Average with the point-reflected covariance (index k -> d-1-k).
        let mut sym = vec![T::zero(); d * d];
        let half = T::lit(0.5);
        let n = T::from_usize_lossy(count);
        for a in 0..d {
            for b in 0..d {
                sym[a * d + b] = (cov[a * d + b] + cov[(d - 1 - a) * d + (d - 1 - b)]) * half / n;
            }
        }

        let (eigvals, eigvecs) = symmetric_eigen(&sym, d)?;
        let eps = T::lit(cfg.epsilon);
        let mean_eig = eigvals.iter().copied().sum::<T>() / T::from_usize_lossy(d);
        let scale = (mean_eig.max(T::zero()) + eps).sqrt();
        let center = d / 2;
        let mut kernel = vec![T::zero(); d];
        for k in 0..d {
            let gain = scale / (eigvals[k].max(T::zero()) + eps).sqrt();
            let vc = eigvecs[center * d + k];
            for (j, out) in kernel.iter_mut().enumerate() {
                *out += vc * gain * eigvecs[j * d + k];
            }
        }
        for j in 0..d / 2 {
            let m = (kernel[j] + kernel[d - 1 - j]) * half;
            kernel[j] = m;
            kernel[d - 1 - j] = m;
        }
        Ok(Self { patch_size: p, kernel })
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    /// Row-major `patch_size x patch_size` taps.
    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }

    /// Applies the kernel with mirror padding; output dims equal input dims.
    pub fn apply(&self, img: &Raster<T>) -> Raster<T> {
        let p = self.patch_size;
        let (w, h) = (img.width(), img.height());
        let (padded, stride) = pad_reflect(img, p / 2);
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let mut acc = T::zero();
                for v in 0..p {
                    let src = &padded[(y + v) * stride + x..(y + v) * stride + x + p];
                    let taps = &self.kernel[v * p..(v + 1) * p];
                    for (&k, &s) in taps.iter().zip(src) {
                        acc += k * s;
                    }
                }
                out.push(acc);
            }
        }
        img.with_data(w, h, out)
    }
}

/// Fits and applies a [`ZcaFilter`] in one step.
pub fn zca_whiten<T: Real>(img: &Raster<T>, cfg: &ZcaConfig) -> Result<Raster<T>> {
    Ok(ZcaFilter::fit(img, cfg)?.apply(img))
}

/// Cyclic Jacobi eigendecomposition of a symmetric `n x n` row-major matrix.
/// Returns eigenvalues and eigenvectors (column `k` of the row-major `V`).
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let total: T = m.iter().map(|&x| x * x).sum();
    let tiny = T::epsilon() * T::epsilon() * total;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off <= tiny || off == T::zero() {
            let vals = (0..n).map(|i| m[i * n + i]).collect();
            return Ok((vals, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::Numerical("Jacobi eigensolver did not converge".into()))
}
