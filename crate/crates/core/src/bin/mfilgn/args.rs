use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mfilgn::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "mfilgn", version, about = "Blind quality assessment for 360-degree (equirectangular) images")]
pub struct Cli {
    /// Worker threads for extraction and evaluation (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract feature vectors for every image in a manifest.
    Extract(ExtractArgs),
    /// Train a regressor on extracted features and manifest scores.
    Train(TrainArgs),
    /// Predict quality for one image or for a feature CSV.
    Predict(PredictArgs),
    /// Repeated random train/test evaluation.
    Evaluate(EvaluateArgs),
    /// Write the sampled viewports of one image as PNG files.
    Viewports(ViewportsArgs),
}

/// Tunables shared by every command. Unset flags fall back to `--config`,
/// then to the built-in default shown in brackets.
#[derive(Debug, Clone, Args, Default)]
pub struct FeatureFlags {
    /// Canonical `key = value` config file (e.g. a sidecar from an earlier run).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Haar decomposition levels, 1-3 [default: 1]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Viewports on the equator ring [default: 8]
    #[arg(long)]
    pub m0: Option<usize>,
    /// Viewport field of view in degrees [default: 90.0]
    #[arg(long)]
    pub fov: Option<f64>,
    /// Viewport side in pixels [default: 256]
    #[arg(long)]
    pub viewport_size: Option<usize>,
    /// MSCN window radius (3 gives 7x7) [default: 3]
    #[arg(long)]
    pub mscn_radius: Option<usize>,
    /// MSCN Gaussian window sigma [default: 1.1666666666666667]
    #[arg(long)]
    pub mscn_sigma: Option<f64>,
    /// MSCN stability constant C [default: 1.0]
    #[arg(long)]
    pub mscn_c: Option<f64>,
    /// Disable ZCA whitening before MSCN [default: whitening on]
    #[arg(long)]
    pub no_zca: bool,
    /// ZCA patch side, odd [default: 5]
    #[arg(long)]
    pub zca_patch: Option<usize>,
    /// ZCA eigenvalue regularizer [default: 0.0001]
    #[arg(long)]
    pub zca_epsilon: Option<f64>,
    /// Halve decoded images until the longer side is at most this [default: none]
    #[arg(long)]
    pub max_side: Option<usize>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct SvrFlags {
    /// SVR cost C [default: 1024.0]
    #[arg(long)]
    pub svr_c: Option<f64>,
    /// RBF gamma; `auto` means 1/feature_dim [default: auto]
    #[arg(long)]
    pub svr_gamma: Option<String>,
    /// Width of the epsilon-insensitive tube [default: 0.1]
    #[arg(long)]
    pub svr_epsilon: Option<f64>,
    /// Stop when the KKT violation is at most this [default: 0.001]
    #[arg(long)]
    pub svr_tol: Option<f64>,
    /// Solver iteration cap [default: 1000000]
    #[arg(long)]
    pub svr_max_iter: Option<usize>,
    /// Select (C, gamma) by 5-fold cross-validation on the training set [default: false]
    #[arg(long)]
    pub grid_search: bool,
    /// Seed for cross-validation folds and random splits [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// CSV manifest with header `path,mos[,distortion][,reference]`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output feature CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-image feature cache files.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Fail if any image cannot be processed.
    #[arg(long)]
    pub strict: bool,
    /// Allowed MOS range `lo,hi` [default: observed range]
    #[arg(long, value_parser = parse_scale)]
    pub mos_scale: Option<(f64, f64)>,
    #[command(flatten)]
    pub features: FeatureFlags,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature CSV from `extract`.
    #[arg(long)]
    pub features: PathBuf,
    /// Manifest supplying the scores.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Allowed MOS range `lo,hi` [default: observed range]
    #[arg(long, value_parser = parse_scale)]
    pub mos_scale: Option<(f64, f64)>,
    #[command(flatten)]
    pub svr: SvrFlags,
    #[command(flatten)]
    pub feature_flags: FeatureFlags,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["image", "features"]))]
pub struct PredictArgs {
    /// Model file from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// One ERP image; prints a single score.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Feature CSV; prints `id,score` rows.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Write scores here instead of stdout (a `.config` sidecar is written next to it).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub feature_flags: FeatureFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Manifest with scores (and reference ids for `--split-mode reference`).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Precomputed feature CSV; extracted from the manifest when omitted.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Directory receiving trials.csv, report.txt and run.config.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of random splits [default: 1000]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Training fraction of each split [default: 0.8]
    #[arg(long)]
    pub split: Option<f64>,
    /// Split granularity: `image` or `reference` [default: image]
    #[arg(long)]
    pub split_mode: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Fail if any image cannot be processed.
    #[arg(long)]
    pub strict: bool,
    /// Allowed MOS range `lo,hi` [default: observed range]
    #[arg(long, value_parser = parse_scale)]
    pub mos_scale: Option<(f64, f64)>,
    #[command(flatten)]
    pub svr: SvrFlags,
    #[command(flatten)]
    pub feature_flags: FeatureFlags,
}

#[derive(Debug, Args)]
pub struct ViewportsArgs {
    /// ERP image.
    #[arg(long)]
    pub image: PathBuf,
    /// Directory receiving viewport PNGs and viewports.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub feature_flags: FeatureFlags,
}

fn parse_scale(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad lower bound `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad upper bound `{b}`"))?;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err("lower bound must be below upper bound".into());
    }
    Ok((lo, hi))
}

fn load_base(config: &Option<PathBuf>) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = config {
        let text = std::fs::read_to_string(p).map_err(|e| mfilgn::Error::Io { path: p.clone(), source: e })?;
        cfg.apply_text(&text)?;
    }
    Ok(cfg)
}

fn set_opt<V: ToString>(cfg: &mut RunConfig, key: &str, v: &Option<V>) -> mfilgn::Result<()> {
    match v {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

impl FeatureFlags {
    /// Defaults, then `--config`, then explicit flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = load_base(&self.config)?;
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> mfilgn::Result<()> {
        set_opt(cfg, "levels", &self.levels)?;
        set_opt(cfg, "m0", &self.m0)?;
        set_opt(cfg, "fov", &self.fov)?;
        set_opt(cfg, "viewport_size", &self.viewport_size)?;
        set_opt(cfg, "mscn_radius", &self.mscn_radius)?;
        set_opt(cfg, "mscn_sigma", &self.mscn_sigma)?;
        set_opt(cfg, "mscn_c", &self.mscn_c)?;
        set_opt(cfg, "zca_patch", &self.zca_patch)?;
        set_opt(cfg, "zca_epsilon", &self.zca_epsilon)?;
        set_opt(cfg, "max_side", &self.max_side)?;
        if self.no_zca {
            cfg.set("zca", "false")?;
        }
        Ok(())
    }
}

impl SvrFlags {
    pub fn apply(&self, cfg: &mut RunConfig) -> mfilgn::Result<()> {
        set_opt(cfg, "svr_c", &self.svr_c)?;
        set_opt(cfg, "svr_gamma", &self.svr_gamma)?;
        set_opt(cfg, "svr_epsilon", &self.svr_epsilon)?;
        set_opt(cfg, "svr_tol", &self.svr_tol)?;
        set_opt(cfg, "svr_max_iter", &self.svr_max_iter)?;
        set_opt(cfg, "seed", &self.seed)?;
        if self.grid_search {
            cfg.set("grid_search", "true")?;
        }
        Ok(())
    }
}
