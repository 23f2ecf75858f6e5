//! Latitude-adaptive viewport sampling, gnomonic projection out of the
//! equirectangular map, and the averaged local naturalness vector.
//!
//! ERP convention: pixel column `u` sits at longitude `(u/W - 0.5)·360°`,
//! pixel row `v` at latitude `(0.5 - v/H)·180°`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nss::{extract_nss, NaturalnessFeatures, NssConfig, NSS_FEATURE_LEN};
use crate::raster::Raster;
use crate::scalar::Real;

/// Sampling plan parameters. The ring spacing is derived: `360° / M0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewportSamplingConfig {
    /// Viewports on the equator (`M0`).
    pub equator_count: usize,
    /// Field of view in degrees, both axes.
    pub fov: f64,
    /// Side of the square viewport raster in pixels.
    pub viewport_size: usize,
}

impl Default for ViewportSamplingConfig {
    fn default() -> Self {
        Self {
            equator_count: 8,
            fov: 90.0,
            viewport_size: 256,
        }
    }
}

impl ViewportSamplingConfig {
    pub fn ring_step_degrees(&self) -> f64 {
        360.0 / self.equator_count as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.equator_count < 4 {
            return Err(Error::validation(format!(
                "equator viewport count must be at least 4, got {}",
                self.equator_count
            )));
        }
        if !(self.fov > 0.0 && self.fov < 180.0) {
            return Err(Error::validation(format!("field of view must be in (0, 180), got {}", self.fov)));
        }
        if self.viewport_size < 2 {
            return Err(Error::validation("viewport size must be at least 2 pixels"));
        }
        Ok(())
    }
}

/// One viewing direction. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewportSpec {
    pub center_longitude: f64,
    pub center_latitude: f64,
    pub fov: f64,
    pub size: usize,
}

/// Wraps a longitude into `[-180, 180)`.
pub fn wrap_longitude(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w >= 180.0 {
        -180.0
    } else {
        w
    }
}

/// Number of viewports on each ring, equator first: `round(M0·cos(kθ))`
/// for `kθ ≤ 90°`, with `θ = 360°/M0`. Zero-count rings are kept so callers
/// can see where the plan ends.
pub fn ring_counts(equator_count: usize) -> Vec<(f64, usize)> {
    let step = 360.0 / equator_count as f64;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let lat = k as f64 * step;
        if lat > 90.0 + 1e-9 {
            break;
        }
        let count = (equator_count as f64 * lat.to_radians().cos()).round().max(0.0) as usize;
        out.push((lat, count));
        k += 1;
    }
    out
}

/// Equator ring, then each higher ring north then south. Each ring's
/// viewports are equally spaced in longitude starting at 0°.
pub fn plan_viewports(cfg: &ViewportSamplingConfig) -> Result<Vec<ViewportSpec>> {
    cfg.validate()?;
    let mut specs = Vec::new();
    let mut push_ring = |lat: f64, count: usize| {
        for i in 0..count {
            specs.push(ViewportSpec {
                center_longitude: wrap_longitude(360.0 * i as f64 / count as f64),
                center_latitude: lat,
                fov: cfg.fov,
                size: cfg.viewport_size,
            });
        }
    };
    for (k, (lat, count)) in ring_counts(cfg.equator_count).into_iter().enumerate() {
        if count == 0 {
            continue;
        }
        if k == 0 {
            push_ring(0.0, count);
        } else {
            push_ring(lat, count);
            push_ring(-lat, count);
        }
    }
    Ok(specs)
}

/// Bilinear ERP lookup at continuous pixel coordinates with horizontal
/// wraparound and vertical clamping.
fn sample_erp<T: Real>(erp: &Raster<T>, x: f64, y: f64) -> T {
    let w = erp.width();
    let h = erp.height();
    let y = y.clamp(0.0, (h - 1) as f64);
    let xf = x.floor();
    let yf = y.floor();
    let fx = T::lit(x - xf);
    let fy = T::lit(y - yf);
    let x0 = (xf as i64).rem_euclid(w as i64) as usize;
    let x1 = (x0 + 1) % w;
    let y0 = yf as usize;
    let y1 = (y0 + 1).min(h - 1);
    let one = T::one();
    let top = erp.get(x0, y0) * (one - fx) + erp.get(x1, y0) * fx;
    let bottom = erp.get(x0, y1) * (one - fx) + erp.get(x1, y1) * fx;
    top * (one - fy) + bottom * fy
}

/// Rectilinear (gnomonic) view of the sphere centered on `spec`.
pub fn project_viewport<T: Real>(erp: &Raster<T>, spec: &ViewportSpec) -> Result<Raster<T>> {
    if !(spec.fov > 0.0 && spec.fov < 180.0) {
        return Err(Error::validation(format!("field of view must be in (0, 180), got {}", spec.fov)));
    }
    if spec.size == 0 {
        return Err(Error::validation("viewport size must be positive"));
    }
    let n = spec.size;
    let (lam, phi) = (spec.center_longitude.to_radians(), spec.center_latitude.to_radians());
    let (sl, cl) = lam.sin_cos();
    let (sp, cp) = phi.sin_cos();
    // Camera frame in world coordinates (x east, y north pole, z at lon 0 on the equator).
    let forward = [cp * sl, sp, cp * cl];
    let right = [cl, 0.0, -sl];
    let up = [-sp * sl, cp, -sp * cl];
    let half = n as f64 / 2.0;
    let focal = half / (spec.fov.to_radians() / 2.0).tan();
    let (w, h) = (erp.width() as f64, erp.height() as f64);

    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        let v = half - (row as f64 + 0.5);
        for col in 0..n {
            let u = col as f64 + 0.5 - half;
            let d: [f64; 3] = std::array::from_fn(|i| focal * forward[i] + u * right[i] + v * up[i]);
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let lon = d[0].atan2(d[2]).to_degrees();
            let lat = (d[1] / norm).clamp(-1.0, 1.0).asin().to_degrees();
            let x = (lon / 360.0 + 0.5) * w;
            let y = (0.5 - lat / 180.0) * h;
            data.push(sample_erp(erp, x, y));
        }
    }
    let mut out = Raster::new(n, n, data)?;
    out.set_source_range(erp.source_range());
    Ok(out)
}

/// Viewport directions with their projected rasters.
#[derive(Debug, Clone)]
pub struct ViewportSet<T> {
    pub specs: Vec<ViewportSpec>,
    pub rasters: Vec<Raster<T>>,
}

impl<T> ViewportSet<T> {
    pub fn count(&self) -> usize {
        self.specs.len()
    }
}

pub fn extract_viewports<T: Real>(erp: &Raster<T>, cfg: &ViewportSamplingConfig) -> Result<ViewportSet<T>> {
    let specs = plan_viewports(cfg)?;
    let rasters = specs
        .par_iter()
        .map(|s| project_viewport(erp, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ViewportSet { specs, rasters })
}

/// Per-viewport features, `None` where the fit was degenerate.
pub fn viewport_features<T: Real>(
    erp: &Raster<T>,
    cfg: &ViewportSamplingConfig,
    nss: &NssConfig,
) -> Result<Vec<(ViewportSpec, Option<NaturalnessFeatures<T>>)>> {
    let specs = plan_viewports(cfg)?;
    specs
        .into_par_iter()
        .map(|spec| {
            let view = project_viewport(erp, &spec)?;
            match extract_nss(&view, nss) {
                Ok(f) => Ok((spec, Some(f))),
                Err(Error::Degenerate(_)) | Err(Error::Validation(_)) => Ok((spec, None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Arithmetic mean of feature vectors, summed in the given order.
pub fn average_features<T: Real>(features: &[NaturalnessFeatures<T>]) -> Result<NaturalnessFeatures<T>> {
    if features.is_empty() {
        return Err(Error::degenerate("no viewport produced usable naturalness features"));
    }
    let mut sum = vec![T::zero(); NSS_FEATURE_LEN];
    for f in features {
        for (s, &v) in sum.iter_mut().zip(f.values()) {
            *s += v;
        }
    }
    let m = T::from_usize_lossy(features.len());
    NaturalnessFeatures::from_values(sum.into_iter().map(|s| s / m).collect())
}

/// Mean naturalness vector over the sampled viewports. Viewports whose fit
/// is degenerate (e.g. featureless polar caps) are dropped from the mean.
pub fn extract_local_naturalness<T: Real>(
    erp: &Raster<T>,
    cfg: &ViewportSamplingConfig,
    nss: &NssConfig,
) -> Result<NaturalnessFeatures<T>> {
    let usable: Vec<_> = viewport_features(erp, cfg, nss)?
        .into_iter()
        .filter_map(|(_, f)| f)
        .collect();
    average_features(&usable)
}

/// `[local, global]`, local first.
pub fn combine_local_global<T: Real>(
    local: &NaturalnessFeatures<T>,
    global: &NaturalnessFeatures<T>,
) -> Result<Vec<T>> {
    combine_slices(local.values(), global.values())
}

pub fn combine_slices<T: Real>(local: &[T], global: &[T]) -> Result<Vec<T>> {
    if local.len() != NSS_FEATURE_LEN || global.len() != NSS_FEATURE_LEN {
        return Err(Error::validation(format!(
            "local/global vectors must both have {NSS_FEATURE_LEN} entries, got {} and {}",
            local.len(),
            global.len()
        )));
    }
    let mut out = Vec::with_capacity(2 * NSS_FEATURE_LEN);
    out.extend_from_slice(local);
    out.extend_from_slice(global);
    Ok(out)
}

/// Inverse of [`combine_local_global`].
pub fn split_local_global<T: Real>(combined: &[T]) -> Result<(NaturalnessFeatures<T>, NaturalnessFeatures<T>)> {
    if combined.len() != 2 * NSS_FEATURE_LEN {
        return Err(Error::validation(format!(
            "combined vector must have {} entries, got {}",
            2 * NSS_FEATURE_LEN,
            combined.len()
        )));
    }
    Ok((
        NaturalnessFeatures::from_values(combined[..NSS_FEATURE_LEN].to_vec())?,
        NaturalnessFeatures::from_values(combined[NSS_FEATURE_LEN..].to_vec())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::textured_erp;

    #[test]
    fn default_plan_has_twenty() {
        let specs = plan_viewports(&ViewportSamplingConfig::default()).unwrap();
        assert_eq!(specs.len(), 20);
        let at = |lat: f64| specs.iter().filter(|s| s.center_latitude == lat).count();
        assert_eq!((at(0.0), at(45.0), at(-45.0)), (8, 6, 6));
        assert_eq!(at(90.0) + at(-90.0), 0);
    }

    #[test]
    fn other_plans() {
        let cfg = |m0| ViewportSamplingConfig { equator_count: m0, ..Default::default() };
        assert_eq!(plan_viewports(&cfg(4)).unwrap().len(), 4);
        // 12 + 2·10 + 2·6 + 2·0
        assert_eq!(plan_viewports(&cfg(12)).unwrap().len(), 44);
        assert!(plan_viewports(&cfg(3)).is_err());
    }

    #[test]
    fn count_formula_exhaustive() {
        for m0 in 4..=24 {
            let rings = ring_counts(m0);
            assert_eq!(rings[0].1, m0);
            let total = m0 + rings[1..].iter().map(|&(_, c)| 2 * c).sum::<usize>();
            let specs = plan_viewports(&ViewportSamplingConfig { equator_count: m0, ..Default::default() }).unwrap();
            assert_eq!(specs.len(), total, "m0={m0}");
            for &(lat, c) in &rings[1..] {
                let north = specs.iter().filter(|s| (s.center_latitude - lat).abs() < 1e-9).count();
                let south = specs.iter().filter(|s| (s.center_latitude + lat).abs() < 1e-9).count();
                assert_eq!((north, south), (c, c));
            }
        }
    }

    #[test]
    fn longitudes_wrapped() {
        assert_eq!(wrap_longitude(180.0), -180.0);
        assert_eq!(wrap_longitude(270.0), -90.0);
        assert_eq!(wrap_longitude(-180.0), -180.0);
        for s in plan_viewports(&ViewportSamplingConfig::default()).unwrap() {
            assert!((-180.0..180.0).contains(&s.center_longitude));
        }
    }

    #[test]
    fn constant_erp_constant_view() {
        let erp = Raster::filled(64, 32, 93.0f64).unwrap();
        for (lon, lat) in [(0.0, 0.0), (120.0, 60.0), (-179.0, -90.0), (45.0, 90.0)] {
            let spec = ViewportSpec { center_longitude: lon, center_latitude: lat, fov: 90.0, size: 16 };
            let v = project_viewport(&erp, &spec).unwrap();
            assert!(v.data().iter().all(|&x| (x - 93.0).abs() < 1e-9));
        }
    }

    #[test]
    fn narrow_view_hits_center_pixel() {
        let erp: Raster<f64> = textured_erp(128, 64, 3);
        let spec = ViewportSpec { center_longitude: 0.0, center_latitude: 0.0, fov: 1.0, size: 9 };
        let v = project_viewport(&erp, &spec).unwrap();
        assert!((v.get(4, 4) - erp.get(64, 32)).abs() <= 1.0);
    }

    #[test]
    fn rotation_equivariance() {
        let erp: Raster<f64> = textured_erp(96, 48, 8);
        let spec = ViewportSpec { center_longitude: 30.0, center_latitude: 20.0, fov: 90.0, size: 24 };
        for k in [1isize, 7, 48, -13] {
            let rolled = erp.roll_columns(k);
            let moved = ViewportSpec {
                center_longitude: wrap_longitude(spec.center_longitude + k as f64 * 360.0 / 96.0),
                ..spec
            };
            let a = project_viewport(&erp, &spec).unwrap();
            let b = project_viewport(&rolled, &moved).unwrap();
            let err = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-6, "k={k} err={err}");
        }
    }

    #[test]
    fn combine_and_split() {
        let local = NaturalnessFeatures::from_values((0..36).map(|i| i as f64).collect()).unwrap();
        let global = NaturalnessFeatures::from_values((36..72).map(|i| i as f64).collect()).unwrap();
        let c = combine_local_global(&local, &global).unwrap();
        assert_eq!(c.len(), 72);
        assert_eq!(&c[..36], local.values());
        let (l, g) = split_local_global(&c).unwrap();
        assert_eq!((l, g), (local, global));
        assert_eq!(combine_slices(&[0.0; 36], &[0.0; 36]).unwrap(), vec![0.0; 72]);
        assert!(combine_slices(&[0.0; 35], &[0.0; 36]).is_err());
    }

    #[test]
    fn constant_erp_local_naturalness_fails() {
        let erp = Raster::filled(128, 64, 50.0).unwrap();
        let cfg = ViewportSamplingConfig { viewport_size: 32, ..Default::default() };
        assert!(matches!(
            extract_local_naturalness(&erp, &cfg, &NssConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
