//! Separable orthonormal Haar decomposition and subband entropy features.

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::scalar::Real;

/// Deepest pyramid the feature extractor accepts.
pub const MAX_LEVELS: usize = 3;

/// Number of histogram bins used by [`subband_entropy`].
pub const ENTROPY_BINS: usize = 256;

/// Decomposition depth. Each level applies the 2-tap filters `h = [1, 1]/sqrt(2)`
/// and `g = [1, -1]/sqrt(2)` along both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarTransformSpec {
    levels: usize,
}

impl HaarTransformSpec {
    pub fn new(levels: usize) -> Result<Self> {
        if !(1..=MAX_LEVELS).contains(&levels) {
            return Err(Error::validation(format!(
                "decomposition levels must be in 1..={MAX_LEVELS}, got {levels}"
            )));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Length of the entropy vector produced by [`extract_mfi`].
    pub fn feature_len(&self) -> usize {
        4 * self.levels
    }
}

impl Default for HaarTransformSpec {
    fn default() -> Self {
        Self { levels: 1 }
    }
}

/// The four half-resolution subbands of one level. `hl` is high-pass along
/// rows (horizontal detail), `lh` high-pass along columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet<T> {
    pub ll: Raster<T>,
    pub hl: Raster<T>,
    pub lh: Raster<T>,
    pub hh: Raster<T>,
    pub level: usize,
}

impl<T: Real> SubbandSet<T> {
    pub fn bands(&self) -> [&Raster<T>; 4] {
        [&self.ll, &self.hl, &self.lh, &self.hh]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.ll.width(), self.ll.height())
    }
}

/// One analysis step. For each 2x2 block `[a b; c d]`:
/// `ll = (a+b+c+d)/2`, `hl = (a-b+c-d)/2`, `lh = (a+b-c-d)/2`, `hh = (a-b-c+d)/2`.
fn analyze<T: Real>(img: &Raster<T>, level: usize) -> SubbandSet<T> {
    let (w, h) = (img.width() / 2, img.height() / 2);
    let half = T::lit(0.5);
    let n = w * h;
    let (mut ll, mut hl, mut lh, mut hh) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..h {
        let r0 = img.row(2 * y);
        let r1 = img.row(2 * y + 1);
        for x in 0..w {
            let (a, b) = (r0[2 * x], r0[2 * x + 1]);
            let (c, d) = (r1[2 * x], r1[2 * x + 1]);
            ll.push((a + b + c + d) * half);
            hl.push((a - b + c - d) * half);
            lh.push((a + b - c - d) * half);
            hh.push((a - b - c + d) * half);
        }
    }
    SubbandSet {
        ll: img.with_data(w, h, ll),
        hl: img.with_data(w, h, hl),
        lh: img.with_data(w, h, lh),
        hh: img.with_data(w, h, hh),
        level,
    }
}

/// Mallat pyramid: level `k + 1` decomposes level `k`'s LL band. A trailing
/// odd row or column is dropped before each level.
pub fn dhwt_decompose<T: Real>(img: &Raster<T>, spec: &HaarTransformSpec) -> Result<Vec<SubbandSet<T>>> {
    let min_side = 1usize << spec.levels();
    if img.width() < min_side || img.height() < min_side {
        return Err(Error::validation(format!(
            "{}x{} raster too small for {} decomposition level(s); need at least {min_side} per axis",
            img.width(),
            img.height(),
            spec.levels()
        )));
    }
    let mut out: Vec<SubbandSet<T>> = Vec::with_capacity(spec.levels());
    for level in 1..=spec.levels() {
        let set = match out.last() {
            None => analyze(img, level),
            Some(prev) => analyze(&prev.ll, level),
        };
        out.push(set);
    }
    Ok(out)
}

/// Exact synthesis inverse of one analysis level.
pub fn dhwt_reconstruct<T: Real>(bands: &SubbandSet<T>) -> Result<Raster<T>> {
    let (w, h) = bands.dims();
    if bands.bands().iter().any(|b| (b.width(), b.height()) != (w, h)) {
        return Err(Error::validation("subbands have mismatched dimensions"));
    }
    let half = T::lit(0.5);
    let (ow, oh) = (2 * w, 2 * h);
    let mut data = vec![T::zero(); ow * oh];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (s, p, q, r) = (
                bands.ll.data()[i],
                bands.hl.data()[i],
                bands.lh.data()[i],
                bands.hh.data()[i],
            );
            data[2 * y * ow + 2 * x] = (s + p + q + r) * half;
            data[2 * y * ow + 2 * x + 1] = (s - p + q - r) * half;
            data[(2 * y + 1) * ow + 2 * x] = (s + p - q - r) * half;
            data[(2 * y + 1) * ow + 2 * x + 1] = (s - p - q + r) * half;
        }
    }
    Ok(bands.ll.with_data(ow, oh, data))
}

/// Maps each coefficient to an integer bin in `0..=255` by min-max
/// stretching and rounding. A constant band maps entirely to bin 0.
pub fn quantize_band<T: Real>(band: &Raster<T>) -> Vec<u8> {
    let (lo, hi) = band.min_max();
    let span = hi - lo;
    if !(span > T::zero()) {
        return vec![0; band.len()];
    }
    let top = T::lit((ENTROPY_BINS - 1) as f64);
    band.data()
        .iter()
        .map(|&v| ((v - lo) / span * top).round().to_u8().unwrap_or(u8::MAX))
        .collect()
}

/// Shannon entropy (bits) of the 256-bin histogram of the min-max
/// quantized band.
pub fn subband_entropy<T: Real>(band: &Raster<T>) -> Result<T> {
    if band.is_empty() {
        return Err(Error::validation("empty subband"));
    }
    let mut hist = [0usize; ENTROPY_BINS];
    for b in quantize_band(band) {
        hist[b as usize] += 1;
    }
    let n = T::from_usize_lossy(band.len());
    let mut e = T::zero();
    for &count in hist.iter().filter(|&&c| c > 0) {
        let p = T::from_usize_lossy(count) / n;
        e -= p * p.log2();
    }
    // -0.0 for a single occupied bin
    Ok(e.max(T::zero()))
}

/// Multi-frequency entropy vector `[E_LL, E_HL, E_LH, E_HH]` per level,
/// level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MfiFeatures<T> {
    pub entropies: Vec<T>,
}

pub fn extract_mfi<T: Real>(img: &Raster<T>, spec: &HaarTransformSpec) -> Result<MfiFeatures<T>> {
    let levels = dhwt_decompose(img, spec)?;
    let mut entropies = Vec::with_capacity(spec.feature_len());
    for set in &levels {
        for band in set.bands() {
            entropies.push(subband_entropy(band)?);
        }
    }
    Ok(MfiFeatures { entropies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_raster(w: usize, h: usize, seed: u64) -> Raster<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_fn(w, h, |_, _| rng.random_range(0.0..255.0)).unwrap()
    }

    #[test]
    fn two_by_two_algebra() {
        let (a, b, c, d) = (3.0f64, 8.0, -1.0, 5.5);
        let img = Raster::new(2, 2, vec![a, b, c, d]).unwrap();
        let s = &dhwt_decompose(&img, &HaarTransformSpec::default()).unwrap()[0];
        assert!((s.ll.data()[0] - (a + b + c + d) / 2.0).abs() < 1e-15);
        assert!((s.hl.data()[0] - (a - b + c - d) / 2.0).abs() < 1e-15);
        assert!((s.lh.data()[0] - (a + b - c - d) / 2.0).abs() < 1e-15);
        assert!((s.hh.data()[0] - (a - b - c + d) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_input_has_no_detail() {
        let img = Raster::filled(4, 4, 100.0).unwrap();
        let s = &dhwt_decompose(&img, &HaarTransformSpec::default()).unwrap()[0];
        assert!(s.ll.data().iter().all(|&v| v == 200.0));
        for band in [&s.hl, &s.lh, &s.hh] {
            assert!(band.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn parseval_on_random_8x8() {
        let img = random_raster(8, 8, 11);
        let s = &dhwt_decompose(&img, &HaarTransformSpec::default()).unwrap()[0];
        let input: f64 = img.data().iter().map(|v| v * v).sum();
        let bands: f64 = s.bands().iter().flat_map(|b| b.data()).map(|v| v * v).sum();
        assert!((input - bands).abs() / input < 1e-9);
    }

    #[test]
    fn levels_validated_and_recurse_on_ll() {
        assert!(HaarTransformSpec::new(0).is_err());
        assert!(HaarTransformSpec::new(4).is_err());
        let img = random_raster(17, 12, 3);
        let spec = HaarTransformSpec::new(3).unwrap();
        let sets = dhwt_decompose(&img, &spec).unwrap();
        assert_eq!(sets.iter().map(|s| s.dims()).collect::<Vec<_>>(), vec![(8, 6), (4, 3), (2, 1)]);
        let again = dhwt_decompose(&sets[0].ll, &HaarTransformSpec::new(1).unwrap()).unwrap();
        assert_eq!(again[0].hh, sets[1].hh);
        assert!(dhwt_decompose(&random_raster(7, 64, 1), &spec).is_err());
    }

    #[test]
    fn reconstruct_cases() {
        let zero = Raster::filled(3, 2, 0.0).unwrap();
        let set = SubbandSet { ll: zero.clone(), hl: zero.clone(), lh: zero.clone(), hh: zero.clone(), level: 1 };
        assert!(dhwt_reconstruct(&set).unwrap().data().iter().all(|&v| v == 0.0));

        let c = Raster::filled(6, 4, 37.0f64).unwrap();
        let s = dhwt_decompose(&c, &HaarTransformSpec::default()).unwrap().remove(0);
        let back = dhwt_reconstruct(&s).unwrap();
        assert!(back.data().iter().all(|&v| (v - 37.0).abs() < 1e-12));

        let bad = SubbandSet { hh: Raster::filled(2, 2, 0.0).unwrap(), ..set };
        assert!(dhwt_reconstruct(&bad).is_err());
    }

    #[test]
    fn entropy_hand_cases() {
        let c = Raster::filled(5, 5, -3.25).unwrap();
        assert_eq!(subband_entropy(&c).unwrap(), 0.0);

        let uniform = Raster::from_fn(16, 16, |x, y| (y * 16 + x) as f64).unwrap();
        assert!((subband_entropy(&uniform).unwrap() - 8.0).abs() < 1e-12);

        let four = Raster::new(2, 2, vec![0.0, 0.0, 128.0, 255.0]).unwrap();
        assert_eq!(quantize_band(&four), vec![0, 0, 128, 255]);
        let oracle: f64 = -(0.5 * 0.5f64.log2() + 0.25 * 0.25f64.log2() + 0.25 * 0.25f64.log2());
        assert!((subband_entropy(&four).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 1.5).abs() < 1e-15);
    }

    #[test]
    fn mfi_shapes_and_constant() {
        let c = Raster::filled(16, 16, 90.0).unwrap();
        let f = extract_mfi(&c, &HaarTransformSpec::default()).unwrap();
        assert_eq!(f.entropies, vec![0.0; 4]);
        let img = random_raster(16, 16, 5);
        for levels in 1..=3 {
            let f = extract_mfi(&img, &HaarTransformSpec::new(levels).unwrap()).unwrap();
            assert_eq!(f.entropies.len(), 4 * levels);
        }
    }

    #[test]
    fn blurred_texture_has_less_hh_entropy() {
        // 8-bit quantization matters: entropy of a min-max rescaled band is
        // scale free, and it is the coarse integer grid that empties bins.
        let img = crate::synth::quantize(&crate::synth::textured_erp::<f64>(128, 64, 21));
        let blurred = crate::synth::quantize(&crate::raster::gaussian_blur(&img, 1.5));
        let spec = HaarTransformSpec::default();
        let e0 = extract_mfi(&img, &spec).unwrap().entropies[3];
        let e1 = extract_mfi(&blurred, &spec).unwrap().entropies[3];
        assert!(e1 < e0, "{e1} !< {e0}");
    }

    proptest! {
        #[test]
        fn round_trip_identity(w in 1usize..24, h in 1usize..24, seed in any::<u64>()) {
            let img = random_raster(2 * w, 2 * h, seed);
            let s = dhwt_decompose(&img, &HaarTransformSpec::default()).unwrap().remove(0);
            let back = dhwt_reconstruct(&s).unwrap();
            let err = img.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9);
        }

        #[test]
        fn entropy_bounded_and_affine_invariant(
            vals in prop::collection::vec(0i32..1000, 4..200),
            a_exp in -2i32..3,
            b in -500i32..500,
        ) {
            let n = vals.len();
            let band = Raster::new(n, 1, vals.iter().map(|&v| v as f64).collect()).unwrap();
            let e = subband_entropy(&band).unwrap();
            prop_assert!((0.0..=8.0).contains(&e));
            let a = 2f64.powi(a_exp);
            let moved = band.map(|v| a * v + b as f64);
            prop_assert_eq!(quantize_band(&band), quantize_band(&moved));
            prop_assert_eq!(e, subband_entropy(&moved).unwrap());
        }
    }
}
