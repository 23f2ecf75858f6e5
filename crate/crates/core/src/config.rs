//! Run configuration: every tunable with its default, a canonical
//! `key = value` text form and parsing of that form.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{SplitMode, TrialConfig};
use crate::nss::ZcaConfig;
use crate::pipeline::FeatureConfig;
use crate::regression::SvrParams;
use crate::wavelet::HaarTransformSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub features: FeatureConfig,
    pub svr: SvrParams<f64>,
    pub grid_search: bool,
    pub trials: usize,
    pub train_fraction: f64,
    pub split_mode: SplitMode,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrialConfig::<f64>::default();
        Self {
            features: FeatureConfig::default(),
            svr: SvrParams::default(),
            grid_search: false,
            trials: t.trials,
            train_fraction: t.train_fraction,
            split_mode: t.split_mode,
            seed: t.seed,
        }
    }
}

/// Every key accepted by [`RunConfig::set`], in canonical (sorted) order.
pub const KEYS: &[&str] = &[
    "fov",
    "grid_search",
    "levels",
    "m0",
    "max_side",
    "mscn_c",
    "mscn_radius",
    "mscn_sigma",
    "seed",
    "split",
    "split_mode",
    "svr_c",
    "svr_epsilon",
    "svr_gamma",
    "svr_max_iter",
    "svr_tol",
    "trials",
    "viewport_size",
    "zca",
    "zca_epsilon",
    "zca_patch",
];

fn parse_as<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::parse(key, format!("invalid value `{value}`")))
}

fn parse_optional<V: std::str::FromStr>(key: &str, value: &str) -> Result<Option<V>> {
    match value {
        "none" | "auto" => Ok(None),
        v => parse_as(key, v).map(Some),
    }
}

impl RunConfig {
    /// Value of `key` in canonical form.
    pub fn get(&self, key: &str) -> Result<String> {
        let f = &self.features;
        let zca = f.nss.zca.unwrap_or_default();
        Ok(match key {
            "fov" => format!("{:?}", f.viewports.fov),
            "grid_search" => self.grid_search.to_string(),
            "levels" => f.haar.levels().to_string(),
            "m0" => f.viewports.equator_count.to_string(),
            "max_side" => f.max_side.map_or_else(|| "none".into(), |v| v.to_string()),
            "mscn_c" => format!("{:?}", f.nss.mscn.stability_c),
            "mscn_radius" => f.nss.mscn.window_radius.to_string(),
            "mscn_sigma" => format!("{:?}", f.nss.mscn.gaussian_sigma),
            "seed" => self.seed.to_string(),
            "split" => format!("{:?}", self.train_fraction),
            "split_mode" => self.split_mode.as_str().into(),
            "svr_c" => format!("{:?}", self.svr.c),
            "svr_epsilon" => format!("{:?}", self.svr.epsilon),
            "svr_gamma" => self.svr.gamma.map_or_else(|| "auto".into(), |g| format!("{g:?}")),
            "svr_max_iter" => self.svr.max_iterations.to_string(),
            "svr_tol" => format!("{:?}", self.svr.tolerance),
            "trials" => self.trials.to_string(),
            "viewport_size" => f.viewports.viewport_size.to_string(),
            "zca" => f.nss.zca.is_some().to_string(),
            "zca_epsilon" => format!("{:?}", zca.epsilon),
            "zca_patch" => zca.patch_size.to_string(),
            other => return Err(Error::parse(other, "unknown configuration key")),
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let f = &mut self.features;
        match key {
            "fov" => f.viewports.fov = parse_as(key, value)?,
            "grid_search" => self.grid_search = parse_as(key, value)?,
            "levels" => {
                f.haar = HaarTransformSpec::new(parse_as(key, value)?)
                    .map_err(|e| Error::parse(key, e.to_string()))?
            }
            "m0" => f.viewports.equator_count = parse_as(key, value)?,
            "max_side" => f.max_side = parse_optional(key, value)?,
            "mscn_c" => f.nss.mscn.stability_c = parse_as(key, value)?,
            "mscn_radius" => f.nss.mscn.window_radius = parse_as(key, value)?,
            "mscn_sigma" => f.nss.mscn.gaussian_sigma = parse_as(key, value)?,
            "seed" => self.seed = parse_as(key, value)?,
            "split" => self.train_fraction = parse_as(key, value)?,
            "split_mode" => self.split_mode = value.parse().map_err(|e: Error| Error::parse(key, e.to_string()))?,
            "svr_c" => self.svr.c = parse_as(key, value)?,
            "svr_epsilon" => self.svr.epsilon = parse_as(key, value)?,
            "svr_gamma" => self.svr.gamma = parse_optional(key, value)?,
            "svr_max_iter" => self.svr.max_iterations = parse_as(key, value)?,
            "svr_tol" => self.svr.tolerance = parse_as(key, value)?,
            "trials" => self.trials = parse_as(key, value)?,
            "viewport_size" => f.viewports.viewport_size = parse_as(key, value)?,
            "zca" => {
                let on: bool = parse_as(key, value)?;
                f.nss.zca = match (on, f.nss.zca) {
                    (true, Some(z)) => Some(z),
                    (true, None) => Some(ZcaConfig::default()),
                    (false, _) => None,
                };
            }
            "zca_epsilon" | "zca_patch" => {
                // Stored even while whitening is off so the order of keys in a
                // file does not matter; `zca = false` discards it at the end.
                let mut z = f.nss.zca.unwrap_or_default();
                if key == "zca_epsilon" {
                    z.epsilon = parse_as(key, value)?;
                } else {
                    z.patch_size = parse_as(key, value)?;
                }
                f.nss.zca = Some(z);
            }
            other => return Err(Error::parse(other, "unknown configuration key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.trial_config().validate()
    }

    pub fn trial_config(&self) -> TrialConfig<f64> {
        TrialConfig {
            trials: self.trials,
            train_fraction: self.train_fraction,
            seed: self.seed,
            split_mode: self.split_mode,
            svr: self.svr,
            grid_search: self.grid_search,
        }
    }

    /// One `key = value` line per key in [`KEYS`] order.
    pub fn canonical_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    /// Hex SHA-256 of [`Self::canonical_text`].
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped; a later line overrides an earlier one.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut zca_enabled = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("line {}", i + 1), "expected `key = value`"))?;
            let k = k.trim();
            if k == "zca" {
                zca_enabled = Some(parse_as::<bool>(k, v.trim())?);
            }
            self.set(k, v)?;
        }
        if zca_enabled == Some(false) {
            self.features.nss.zca = None;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_text(&d.canonical_text()).unwrap(), d);
        let mut c = d;
        c.set("levels", "2").unwrap();
        c.set("svr_gamma", "0.25").unwrap();
        c.set("zca", "false").unwrap();
        c.set("max_side", "1024").unwrap();
        c.set("split_mode", "reference").unwrap();
        let back = RunConfig::from_text(&c.canonical_text()).unwrap();
        assert_eq!(back, c);
        assert_ne!(c.fingerprint(), d.fingerprint());
    }

    #[test]
    fn keys_are_sorted_and_complete() {
        let mut sorted = KEYS.to_vec();
        sorted.sort();
        assert_eq!(sorted, KEYS);
        let d = RunConfig::default();
        for k in KEYS {
            assert!(d.get(k).is_ok());
        }
    }

    #[test]
    fn bad_input_named() {
        assert!(matches!(RunConfig::from_text("levels = 4"), Err(Error::Parse { field, .. }) if field == "levels"));
        assert!(matches!(RunConfig::from_text("bogus = 1"), Err(Error::Parse { field, .. }) if field == "bogus"));
        assert!(matches!(RunConfig::from_text("m0 4"), Err(Error::Parse { .. })));
    }

    #[test]
    fn comments_and_overrides() {
        let c = RunConfig::from_text("# a comment\n\nm0 = 4\nm0 = 12\nzca_patch = 3\nzca = false\n").unwrap();
        assert_eq!(c.features.viewports.equator_count, 12);
        assert!(c.features.nss.zca.is_none());
    }
}
