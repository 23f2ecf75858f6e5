//! Full per-image feature vector: `[MFI | local NSS | global NSS]`.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::nss::{extract_nss, NssConfig, NSS_FEATURE_LEN};
use crate::raster::Raster;
use crate::scalar::Real;
use crate::viewport::{combine_local_global, extract_local_naturalness, ViewportSamplingConfig};
use crate::wavelet::{extract_mfi, HaarTransformSpec};

/// Every parameter that influences extracted features.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureConfig {
    pub haar: HaarTransformSpec,
    pub viewports: ViewportSamplingConfig,
    pub nss: NssConfig,
    /// Longest side after decoding; larger inputs are resized before extraction.
    pub max_side: Option<usize>,
}

impl FeatureConfig {
    /// `4·levels + 72`.
    pub fn feature_len(&self) -> usize {
        self.haar.feature_len() + 2 * NSS_FEATURE_LEN
    }

    pub fn validate(&self) -> Result<()> {
        self.viewports.validate()?;
        if let Some(z) = &self.nss.zca {
            z.validate()?;
        }
        self.nss.mscn.validate()
    }

    /// Sorted `key = value` lines; numbers use Rust's shortest round-trip form.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let z = self.nss.zca;
        let m = self.nss.mscn;
        let _ = writeln!(out, "fov = {:?}", self.viewports.fov);
        let _ = writeln!(out, "levels = {}", self.haar.levels());
        let _ = writeln!(out, "m0 = {}", self.viewports.equator_count);
        let _ = writeln!(
            out,
            "max_side = {}",
            self.max_side.map_or_else(|| "none".to_string(), |s| s.to_string())
        );
        let _ = writeln!(out, "mscn_c = {:?}", m.stability_c);
        let _ = writeln!(out, "mscn_radius = {}", m.window_radius);
        let _ = writeln!(out, "mscn_sigma = {:?}", m.gaussian_sigma);
        let _ = writeln!(out, "viewport_size = {}", self.viewports.viewport_size);
        let _ = writeln!(out, "zca = {}", z.is_some());
        if let Some(z) = z {
            let _ = writeln!(out, "zca_epsilon = {:?}", z.epsilon);
            let _ = writeln!(out, "zca_patch = {}", z.patch_size);
        }
        out
    }

    /// Hex SHA-256 of [`Self::canonical_text`].
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

/// Features of one ERP image in the documented order.
pub fn extract_features<T: Real>(erp: &Raster<T>, cfg: &FeatureConfig) -> Result<Vec<T>> {
    cfg.validate()?;
    let (mfi, nss) = rayon::join(
        || extract_mfi(erp, &cfg.haar),
        || -> Result<_> {
            let (local, global) = rayon::join(
                || extract_local_naturalness(erp, &cfg.viewports, &cfg.nss),
                || extract_nss(erp, &cfg.nss),
            );
            combine_local_global(&local?, &global?)
        },
    );
    let mut out = mfi?.entropies;
    out.extend(nss?);
    debug_assert_eq!(out.len(), cfg.feature_len());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nss::ZcaConfig;
    use crate::synth::textured_erp;

    fn small() -> FeatureConfig {
        FeatureConfig {
            viewports: ViewportSamplingConfig { viewport_size: 64, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn widths() {
        assert_eq!(FeatureConfig::default().feature_len(), 76);
        let c = FeatureConfig { haar: HaarTransformSpec::new(3).unwrap(), ..Default::default() };
        assert_eq!(c.feature_len(), 84);
    }

    #[test]
    fn layout_and_determinism() {
        let img: Raster<f64> = textured_erp(256, 128, 3);
        let cfg = small();
        let a = extract_features(&img, &cfg).unwrap();
        let b = extract_features(&img, &cfg).unwrap();
        assert_eq!(a.len(), 76);
        assert_eq!(a, b);
        let global = extract_nss(&img, &cfg.nss).unwrap();
        assert_eq!(&a[40..], global.values());
        let mfi = extract_mfi(&img, &cfg.haar).unwrap();
        assert_eq!(&a[..4], &mfi.entropies[..]);
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = FeatureConfig::default();
        let mut variants = vec![base];
        variants.push(FeatureConfig { haar: HaarTransformSpec::new(2).unwrap(), ..base });
        variants.push(FeatureConfig { viewports: ViewportSamplingConfig { equator_count: 4, ..base.viewports }, ..base });
        variants.push(FeatureConfig { viewports: ViewportSamplingConfig { fov: 80.0, ..base.viewports }, ..base });
        variants.push(FeatureConfig { viewports: ViewportSamplingConfig { viewport_size: 128, ..base.viewports }, ..base });
        variants.push(FeatureConfig { nss: NssConfig { zca: None, ..base.nss }, ..base });
        variants.push(FeatureConfig {
            nss: NssConfig { zca: Some(ZcaConfig { patch_size: 3, ..Default::default() }), ..base.nss },
            ..base
        });
        variants.push(FeatureConfig { max_side: Some(512), ..base });
        let mut prints: Vec<String> = variants.iter().map(|v| v.fingerprint()).collect();
        prints.sort();
        prints.dedup();
        assert_eq!(prints.len(), variants.len());
        assert_eq!(base.fingerprint(), FeatureConfig::default().fingerprint());
    }
}
