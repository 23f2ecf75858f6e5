//! Natural scene statistics: whitening, MSCN normalization and the two-scale
//! GGD/AGGD feature vector.
//!
//! Per scale the feature layout is
//! `[τ, σ²]` of a GGD fitted to the MSCN field, followed by
//! `[η, τ, σ_l², σ_r²]` of an AGGD fitted to each neighbor product map in
//! [`Orientation::ALL`] order. The second scale is the 2x2 block-mean
//! downsampled image.

pub mod fit;
pub mod gamma;
pub mod mscn;
pub mod zca;

pub use fit::{fit_aggd, fit_ggd, AggdParams, GgdParams};
pub use mscn::{mscn, neighbor_products, MscnConfig, Orientation};
pub use zca::{zca_whiten, ZcaConfig, ZcaFilter};

use crate::error::{Error, Result};
use crate::raster::{downsample_half, Raster};
use crate::scalar::Real;

pub const FEATURES_PER_SCALE: usize = 18;
pub const NSS_SCALES: usize = 2;
pub const NSS_FEATURE_LEN: usize = FEATURES_PER_SCALE * NSS_SCALES;

/// Settings shared by the global (ERP) and per-viewport extractors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NssConfig {
    /// `None` skips whitening and normalizes the raw luminance.
    pub zca: Option<ZcaConfig>,
    pub mscn: MscnConfig,
}

impl Default for NssConfig {
    fn default() -> Self {
        Self {
            zca: Some(ZcaConfig::default()),
            mscn: MscnConfig::default(),
        }
    }
}

/// 36 fitted distribution parameters over two scales.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalnessFeatures<T> {
    values: Vec<T>,
}

impl<T: Real> NaturalnessFeatures<T> {
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.len() != NSS_FEATURE_LEN {
            return Err(Error::validation(format!(
                "naturalness vector must have {NSS_FEATURE_LEN} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("naturalness vector has non-finite entries"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// The 18 parameters of one scale.
pub fn scale_features<T: Real>(img: &Raster<T>, cfg: &NssConfig) -> Result<Vec<T>> {
    let whitened;
    let src = match &cfg.zca {
        Some(z) => {
            whitened = zca_whiten(img, z)?;
            &whitened
        }
        None => img,
    };
    let m = mscn(src, &cfg.mscn)?;
    let ggd = fit_ggd(m.data())?;
    let mut out = Vec::with_capacity(FEATURES_PER_SCALE);
    out.push(ggd.shape_tau);
    out.push(ggd.variance_sigma2);
    for orientation in Orientation::ALL {
        let a = fit_aggd(&neighbor_products(&m, orientation))?;
        out.extend([a.mean_eta, a.shape_tau, a.left_sigma2, a.right_sigma2]);
    }
    Ok(out)
}

/// Two-scale naturalness features of a luminance raster.
pub fn extract_nss<T: Real>(img: &Raster<T>, cfg: &NssConfig) -> Result<NaturalnessFeatures<T>> {
    let mut values = scale_features(img, cfg)?;
    let reduced = downsample_half(img)?;
    values.extend(scale_features(&reduced, cfg)?);
    NaturalnessFeatures::from_values(values)
}
