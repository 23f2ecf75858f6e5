//! Manifest ingestion and cached per-image feature extraction.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{extract_features, FeatureConfig};
use crate::raster::{decode_erp, DecodeOptions, Raster};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// The path exactly as written in the manifest; used as the image id.
    pub id: String,
    /// `id` resolved against the manifest directory.
    pub path: PathBuf,
    pub mos: f64,
    pub distortion: Option<String>,
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub entries: Vec<ManifestEntry>,
    /// Inclusive MOS bounds.
    pub mos_scale: (f64, f64),
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.mos).collect()
    }

    /// Reference ids, or `None` unless every entry carries one.
    pub fn references(&self) -> Option<Vec<String>> {
        self.entries.iter().map(|e| e.reference.clone()).collect()
    }
}

fn line_err(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::validation(format!("manifest line {line}: {msg}"))
}

/// Reads a `path,mos[,distortion][,reference]` CSV. When `mos_scale` is
/// `None` the scale is taken from the observed scores.
pub fn load_manifest(path: impl AsRef<Path>, mos_scale: Option<(f64, f64)>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| line_err(1, e))?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>();
    if headers.len() < 2 || headers[0] != "path" || headers[1] != "mos" {
        return Err(line_err(1, "header must start with `path,mos`"));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (dist_col, ref_col) = (col("distortion"), col("reference"));
    if let Some(extra) = headers.iter().find(|h| !["path", "mos", "distortion", "reference"].contains(&h.as_str())) {
        return Err(line_err(1, format!("unknown column `{extra}`")));
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            line_err(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(line_err(line, format!("expected {} fields, found {}", headers.len(), rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(line_err(line, "empty path"));
        }
        let mos: f64 = rec[1]
            .parse()
            .map_err(|_| line_err(line, format!("mos `{}` is not a number", &rec[1])))?;
        if !mos.is_finite() {
            return Err(line_err(line, "mos is not finite"));
        }
        if let Some((lo, hi)) = mos_scale {
            if mos < lo || mos > hi {
                return Err(line_err(line, format!("mos {mos} outside scale [{lo}, {hi}]")));
            }
        }
        let resolved = base.join(&id);
        if !seen.insert(resolved.clone()) {
            return Err(line_err(line, format!("duplicate path `{id}`")));
        }
        let opt = |c: Option<usize>| c.map(|c| rec[c].to_string()).filter(|s| !s.is_empty());
        entries.push(ManifestEntry {
            id,
            path: resolved,
            mos,
            distortion: opt(dist_col),
            reference: opt(ref_col),
        });
    }
    if entries.is_empty() {
        return Err(Error::validation(format!("manifest {} has no entries", path.display())));
    }
    let scale = mos_scale.unwrap_or_else(|| {
        entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.mos), b.max(e.mos)))
    });
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(DatasetManifest { name, entries, mos_scale: scale })
}

/// Features for the images that could be processed, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// Manifest index of each row.
    pub indices: Vec<usize>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `(id, message)` for every image that failed.
    pub failures: Vec<(String, String)>,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

/// Hex SHA-256 of the image bytes followed by the config fingerprint.
pub fn cache_key(image_bytes: &[u8], fingerprint: &str) -> String {
    let mut h = Sha256::new();
    h.update(image_bytes);
    h.update(fingerprint.as_bytes());
    hex::encode(h.finalize())
}

fn read_cached(path: &Path, width: usize) -> Option<Vec<f64>> {
    let text = fs::read_to_string(path).ok()?;
    let row: Vec<f64> = text.trim().split(',').map(|v| v.parse().ok()).collect::<Option<_>>()?;
    (row.len() == width && row.iter().all(|v| v.is_finite())).then_some(row)
}

static TEMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Writes `row` next to its final name and renames it into place, so readers
/// never see a partial file.
fn write_cached(path: &Path, row: &[f64]) -> Result<()> {
    let line = row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n";
    let tmp = path.with_extension(format!(
        "tmp.{}.{}",
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    fs::write(&tmp, line).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Extracts (or reuses cached) features for every manifest entry. Failures
/// are collected; with `strict` any failure aborts with the first error.
pub fn extract_dataset_features(
    manifest: &DatasetManifest,
    cfg: &FeatureConfig,
    cache_dir: Option<&Path>,
    strict: bool,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    if let Some(dir) = cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let fingerprint = cfg.fingerprint();
    let width = cfg.feature_len();
    let hits = AtomicUsize::new(0);
    let misses = AtomicUsize::new(0);
    let decode = DecodeOptions { max_side: cfg.max_side };

    let results: Vec<Result<Vec<f64>>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let bytes = fs::read(&entry.path).map_err(|e| Error::io(&entry.path, e))?;
            let cache_file = cache_dir.map(|d| d.join(format!("{}.csv", cache_key(&bytes, &fingerprint))));
            if let Some(row) = cache_file.as_deref().and_then(|p| read_cached(p, width)) {
                hits.fetch_add(1, Ordering::Relaxed);
                return Ok(row);
            }
            misses.fetch_add(1, Ordering::Relaxed);
            let img: Raster<f64> = decode_erp(&bytes, &entry.path, &decode)?;
            let row = extract_features(&img, cfg)?;
            if let Some(p) = &cache_file {
                write_cached(p, &row)?;
            }
            Ok(row)
        })
        .collect();

    let mut out = FeatureMatrix {
        indices: Vec::new(),
        ids: Vec::new(),
        rows: Vec::new(),
        failures: Vec::new(),
        cache_hits: hits.into_inner(),
        cache_misses: misses.into_inner(),
    };
    for (i, (entry, r)) in manifest.entries.iter().zip(results).enumerate() {
        match r {
            Ok(row) => {
                out.indices.push(i);
                out.ids.push(entry.id.clone());
                out.rows.push(row);
            }
            Err(e) if strict => return Err(e),
            Err(e) => out.failures.push((entry.id.clone(), e.to_string())),
        }
    }
    Ok(out)
}

/// `id,f0,f1,...` with one row per image. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_feature_csv(ids: &[String], rows: &[Vec<f64>]) -> Result<String> {
    let width = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend((0..width).map(|i| format!("f{i}")));
    let csv_err = |e: csv::Error| Error::validation(format!("CSV write failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (id, row) in ids.iter().zip(rows) {
        if row.len() != width {
            return Err(Error::validation(format!("ragged feature rows: {} vs {width}", row.len())));
        }
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::validation(format!("CSV write failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Inverse of [`write_feature_csv`].
pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_slice());
    let headers = reader.headers().map_err(|e| line_err(1, e))?.clone();
    if headers.get(0) != Some("id") || headers.len() < 2 {
        return Err(Error::validation(format!(
            "{}: feature CSV header must be `id,f0,...`",
            path.display()
        )));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| line_err(e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(line_err(line, format!("expected {} fields, found {}", headers.len(), rec.len())));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| line_err(line, format!("`{v}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        ids.push(rec[0].to_string());
        rows.push(row);
    }
    Ok((ids, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::textured_erp;
    use crate::viewport::ViewportSamplingConfig;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn valid_manifest() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "m.csv", "path,mos,distortion\na.png,3.5,blur\nsub/b.png,7,\n\"c,d.png\",1,noise\n");
        let m = load_manifest(&p, Some((1.0, 10.0))).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries[1].path, d.path().join("sub/b.png"));
        assert_eq!(m.entries[1].distortion, None);
        assert_eq!(m.entries[2].id, "c,d.png");
        assert_eq!(m.name, "m");
        assert!(m.references().is_none());
    }

    #[test]
    fn out_of_scale_names_line() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "m.csv", "path,mos\na.png,3\nb.png,11\n");
        let e = load_manifest(&p, Some((1.0, 10.0))).unwrap_err();
        assert!(matches!(&e, Error::Validation(m) if m.contains("line 3")), "{e}");
    }

    #[test]
    fn duplicates_and_malformed() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "m.csv", "path,mos\na.png,3\na.png,4\n");
        assert!(matches!(load_manifest(&p, None), Err(Error::Validation(m)) if m.contains("duplicate")));
        let p = write(d.path(), "n.csv", "path,mos\na.png,x\n");
        assert!(matches!(load_manifest(&p, None), Err(Error::Validation(m)) if m.contains("line 2")));
        let p = write(d.path(), "o.csv", "file,score\na.png,1\n");
        assert!(load_manifest(&p, None).is_err());
        assert!(matches!(load_manifest(d.path().join("missing.csv"), None), Err(Error::Io { .. })));
    }

    #[test]
    fn feature_csv_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let ids = vec!["a.png".to_string(), "x,y.png".to_string()];
        let rows = vec![vec![0.1, 1.0 / 3.0, -2e-300], vec![5.0, 6.25, 7.0]];
        let text = write_feature_csv(&ids, &rows).unwrap();
        assert!(text.starts_with("id,f0,f1,f2\n"));
        let p = write(d.path(), "f.csv", &text);
        assert_eq!(read_feature_csv(&p).unwrap(), (ids, rows));
        let p = write(d.path(), "g.csv", "id,f0\na,nan\n");
        assert!(matches!(read_feature_csv(&p), Err(Error::Validation(m)) if m.contains("line 2")));
    }

    #[test]
    fn cache_round_trip_and_failures() {
        let d = tempfile::tempdir().unwrap();
        let img: Raster<f64> = textured_erp(128, 64, 1);
        img.to_gray8().save(d.path().join("a.png")).unwrap();
        textured_erp::<f64>(128, 64, 2).to_gray8().save(d.path().join("b.png")).unwrap();
        let p = write(d.path(), "m.csv", "path,mos\na.png,1\nb.png,2\nmissing.png,3\n");
        let m = load_manifest(&p, None).unwrap();
        let cfg = FeatureConfig {
            viewports: ViewportSamplingConfig { viewport_size: 32, ..Default::default() },
            ..Default::default()
        };
        let cache = d.path().join("cache");
        let cold = extract_dataset_features(&m, &cfg, Some(&cache), false).unwrap();
        assert_eq!(cold.rows.len(), 2);
        assert_eq!(cold.failures.len(), 1);
        assert_eq!(cold.indices, vec![0, 1]);
        assert_eq!((cold.cache_hits, cold.cache_misses), (0, 2));
        let warm = extract_dataset_features(&m, &cfg, Some(&cache), false).unwrap();
        assert_eq!((warm.cache_hits, warm.cache_misses), (2, 0));
        assert_eq!(warm.rows, cold.rows);
        assert!(matches!(extract_dataset_features(&m, &cfg, Some(&cache), true), Err(Error::Io { .. })));
        let other = FeatureConfig { haar: crate::HaarTransformSpec::new(2).unwrap(), ..cfg };
        let changed = extract_dataset_features(&m, &other, Some(&cache), false).unwrap();
        assert_eq!(changed.cache_misses, 2);
        assert_eq!(changed.rows[0].len(), 80);
    }
}
