//! Single-channel floating point rasters, image ingestion and the small set of
//! spatial filters the feature extractors share.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageError, ImageReader};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nominal peak value of 8-bit luminance.
pub const DEFAULT_SOURCE_RANGE: f64 = 255.0;

/// ITU-R BT.601 luma weights.
pub const BT601_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major single-channel grid.
///
/// Ingested images hold luminance in `[0, source_range]`. Rasters derived by
/// transforms (wavelet subbands, normalized coefficient fields) reuse the
/// same container and may hold signed values; for those `source_range` only
/// records the range of the image they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
    source_range: T,
}

impl<T: Real> Raster<T> {
    /// Builds a raster from row-major samples. Requires non-zero area,
    /// `data.len() == width * height` and finite values.
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!(
                "raster must have non-zero area, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::validation(format!(
                "raster data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            source_range: T::lit(DEFAULT_SOURCE_RANGE),
        })
    }

    /// Builds a luminance raster, additionally checking the ingestion
    /// invariants: both sides at least 2 and every value in `[0, source_range]`.
    pub fn from_luma(width: usize, height: usize, data: Vec<T>, source_range: T) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::validation(format!(
                "luminance raster must be at least 2x2, got {width}x{height}"
            )));
        }
        let mut r = Self::new(width, height, data)?;
        if !(source_range > T::zero()) {
            return Err(Error::validation("source range must be positive"));
        }
        if let Some(v) = r.data.iter().find(|v| **v < T::zero() || **v > source_range) {
            return Err(Error::validation(format!(
                "luminance value {v} outside [0, {source_range}]"
            )));
        }
        r.source_range = source_range;
        Ok(r)
    }

    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Evaluates `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Same shape and metadata, new samples. Internal constructor for
    /// derived rasters whose length is already known to match.
    pub(crate) fn with_data(&self, width: usize, height: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
            source_range: self.source_range,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn source_range(&self) -> T {
        self.source_range
    }

    pub fn set_source_range(&mut self, range: T) {
        self.source_range = range;
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Sample with mirror-reflected coordinates (`-1 -> 1`, `n -> n-2`).
    #[inline]
    pub fn get_reflect(&self, x: isize, y: isize) -> T {
        self.get(reflect_index(x, self.width), reflect_index(y, self.height))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        self.with_data(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::from_usize_lossy(self.data.len())
    }

    pub fn min_max(&self) -> (T, T) {
        self.data
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Circular shift of columns: output column `x` takes input column `x - shift`.
    pub fn roll_columns(&self, shift: isize) -> Self {
        let w = self.width as isize;
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            let row = self.row(y);
            for x in 0..w {
                data.push(row[(x - shift).rem_euclid(w) as usize]);
            }
        }
        self.with_data(self.width, self.height, data)
    }

    /// Rounds and clamps into an 8-bit image for debug output.
    pub fn to_gray8(&self) -> GrayImage {
        let top = T::lit(255.0);
        let buf = self
            .data
            .iter()
            .map(|&v| v.max(T::zero()).min(top).round().to_u8().unwrap_or(0))
            .collect();
        GrayImage::from_raw(self.width as u32, self.height as u32, buf)
            .expect("buffer sized to raster")
    }

    /// Min-max stretches signed data (e.g. wavelet coefficients) into 8 bits.
    pub fn to_gray8_stretched(&self) -> GrayImage {
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        if span > T::zero() {
            self.map(|v| (v - lo) / span * T::lit(255.0)).to_gray8()
        } else {
            self.map(|_| T::zero()).to_gray8()
        }
    }
}

/// Mirror-reflects an index into `0..n` without repeating the edge sample.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

/// Copies `img` into a buffer padded by `r` mirror-reflected samples on every
/// side. Returns the buffer and its row stride (`width + 2r`).
pub fn pad_reflect<T: Real>(img: &Raster<T>, r: usize) -> (Vec<T>, usize) {
    let (w, h) = (img.width(), img.height());
    let pw = w + 2 * r;
    let ri = r as isize;
    let cols: Vec<usize> = (0..pw as isize).map(|x| reflect_index(x - ri, w)).collect();
    let mut out = Vec::with_capacity(pw * (h + 2 * r));
    for y in 0..(h + 2 * r) as isize {
        let row = img.row(reflect_index(y - ri, h));
        out.extend(cols.iter().map(|&c| row[c]));
    }
    (out, pw)
}

/// Decoder settings for [`load_erp`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeOptions {
    /// When set, the decoded raster is halved with [`downsample_half`] until
    /// its longer side is at most this many pixels.
    pub max_side: Option<usize>,
}

/// Decodes an equirectangular image into a luminance raster.
///
/// RGB(A) inputs are converted with BT.601 weights; grayscale samples pass
/// through unchanged.
pub fn load_erp<T: Real>(path: impl AsRef<Path>, options: &DecodeOptions) -> Result<Raster<T>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_erp(&bytes, path, options)
}

/// [`load_erp`] on bytes already in memory; `path` is used in error messages.
pub fn decode_erp<T: Real>(bytes: &[u8], path: &Path, options: &DecodeOptions) -> Result<Raster<T>> {
    let reader = ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "unrecognized image signature".into(),
        });
    }
    let img = reader.decode().map_err(|e| map_image_error(path, e))?;
    let mut raster = luminance_raster(&img).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(max_side) = options.max_side {
        while raster.width().max(raster.height()) > max_side.max(2)
            && raster.width() >= 4
            && raster.height() >= 4
        {
            raster = downsample_half(&raster)?;
        }
    }
    Ok(raster)
}

fn map_image_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::Unsupported(u) => Error::Format {
            path: path.to_path_buf(),
            message: u.to_string(),
        },
        ImageError::IoError(io) => Error::io(path, io),
        other => Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, other.to_string()),
        ),
    }
}

/// Converts a decoded image to luminance.
pub fn luminance_raster<T: Real>(img: &DynamicImage) -> Result<Raster<T>> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::validation(format!("zero-area image {w}x{h}")));
    }
    let data: Vec<T> = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => img
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(|v| T::lit(f64::from(v)))
            .collect(),
        _ => luminance_from_rgb8(img.to_rgb8().as_raw()),
    };
    Raster::from_luma(w, h, data, T::lit(DEFAULT_SOURCE_RANGE))
}

/// BT.601 luma of interleaved RGB triples.
pub fn luminance_from_rgb8<T: Real>(rgb: &[u8]) -> Vec<T> {
    let [wr, wg, wb] = BT601_WEIGHTS.map(T::lit);
    rgb.chunks_exact(3)
        .map(|p| {
            if p[0] == p[1] && p[1] == p[2] {
                // Gray pixels (e.g. from paletted BMPs) pass through exactly.
                return T::lit(f64::from(p[0]));
            }
            let [r, g, b] = [p[0], p[1], p[2]].map(|c| T::lit(f64::from(c)));
            (wr * r + wg * g + wb * b).min(T::lit(DEFAULT_SOURCE_RANGE))
        })
        .collect()
}

/// Halves each axis by averaging 2x2 blocks. A trailing odd row or column is
/// dropped.
pub fn downsample_half<T: Real>(img: &Raster<T>) -> Result<Raster<T>> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::validation(format!(
            "cannot downsample {}x{} raster",
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (img.width() / 2, img.height() / 2);
    let quarter = T::lit(0.25);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let r0 = img.row(2 * y);
        let r1 = img.row(2 * y + 1);
        for x in 0..w {
            let s = r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
            data.push(s * quarter);
        }
    }
    Ok(img.with_data(w, h, data))
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel_1d<T: Real>(sigma: T, radius: usize) -> Vec<T> {
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let r = radius as isize;
    let taps: Vec<T> = (-r..=r)
        .map(|i| {
            let d = T::lit(i as f64);
            (-(d * d) / two_s2).exp()
        })
        .collect();
    let total: T = taps.iter().copied().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable correlation with a symmetric 1-D kernel on both axes, mirror
/// padded.
pub fn separable_filter<T: Real>(img: &Raster<T>, taps: &[T]) -> Raster<T> {
    let r = (taps.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let row = img.row(y);
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc += t * row[reflect_index(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for (k, &t) in taps.iter().enumerate() {
            let src = reflect_index(y as isize + k as isize - r, h);
            let src_row = &tmp[src * w..(src + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src_row) {
                *d += t * s;
            }
        }
    }
    img.with_data(w, h, out)
}

/// Gaussian blur with a kernel truncated at `ceil(3 sigma)`. `sigma <= 0`
/// returns a copy.
pub fn gaussian_blur<T: Real>(img: &Raster<T>, sigma: T) -> Raster<T> {
    if !(sigma > T::zero()) {
        return img.clone();
    }
    let radius = (T::lit(3.0) * sigma).ceil().to_usize().unwrap_or(1).max(1);
    separable_filter(img, &gaussian_kernel_1d(sigma, radius))
}
