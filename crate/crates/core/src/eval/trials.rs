//! Repeated random train/test splits.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{evaluate_predictions, EvalReport};
use crate::regression::{grid_search, train, SvrParams};
use crate::scalar::Real;

pub const MIN_TRIAL_DATASET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    /// Every distorted image is assigned independently.
    #[default]
    ByImage,
    /// All images sharing a reference id land on the same side.
    ByReference,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::ByImage => "image",
            SplitMode::ByReference => "reference",
        }
    }
}

impl std::str::FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(SplitMode::ByImage),
            "reference" => Ok(SplitMode::ByReference),
            other => Err(Error::validation(format!("unknown split mode `{other}` (image|reference)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig<T> {
    pub trials: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub svr: SvrParams<T>,
    pub grid_search: bool,
}

impl<T: Real> Default for TrialConfig<T> {
    fn default() -> Self {
        Self {
            trials: 1000,
            train_fraction: 0.8,
            seed: 0,
            split_mode: SplitMode::ByImage,
            svr: SvrParams::default(),
            grid_search: false,
        }
    }
}

impl<T: Real> TrialConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::validation("trial count must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::validation(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        self.svr.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord<T> {
    pub index: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    /// `Err` carries the failure message.
    pub outcome: std::result::Result<EvalReport<T>, String>,
    /// Whether the SVR solver hit its iteration cap.
    pub svr_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary<T> {
    pub median: T,
    pub mean: T,
    /// Sample standard deviation (`n - 1` denominator); 0 for one trial.
    pub std: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary<T> {
    pub trials: Vec<TrialRecord<T>>,
    pub srocc: MetricSummary<T>,
    pub plcc: MetricSummary<T>,
    pub rmse: MetricSummary<T>,
    pub failures: usize,
}

pub fn median<T: Real>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::lit(0.5)
    }
}

fn summarize<T: Real>(values: &[T]) -> MetricSummary<T> {
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one())).sqrt()
    } else {
        T::zero()
    };
    MetricSummary { median: median(values), mean, std }
}

/// `(train, test)` index lists for one trial. Both are sorted.
pub fn split_indices(
    n: usize,
    fraction: f64,
    mode: SplitMode,
    references: Option<&[String]>,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; n];
    match mode {
        SplitMode::ByImage => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let k = (fraction * n as f64).round() as usize;
            for &i in &order[..k.min(n)] {
                in_train[i] = true;
            }
        }
        SplitMode::ByReference => {
            let refs = references.ok_or_else(|| Error::validation("reference split requires reference ids"))?;
            if refs.len() != n {
                return Err(Error::validation("reference id count differs from sample count"));
            }
            let mut groups: Vec<&str> = refs.iter().map(String::as_str).collect();
            groups.sort_unstable();
            groups.dedup();
            groups.shuffle(&mut rng);
            let k = (fraction * groups.len() as f64).round() as usize;
            let chosen: std::collections::HashSet<&str> = groups[..k.min(groups.len())].iter().copied().collect();
            for (i, r) in refs.iter().enumerate() {
                in_train[i] = chosen.contains(r.as_str());
            }
        }
    }
    let train = (0..n).filter(|&i| in_train[i]).collect();
    let test = (0..n).filter(|&i| !in_train[i]).collect();
    Ok((train, test))
}

/// Per-trial seeds drawn from a generator seeded with `master`.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..trials).map(|_| rng.random()).collect()
}

fn run_one<T: Real>(
    features: &[Vec<T>],
    mos: &[T],
    references: Option<&[String]>,
    config: &TrialConfig<T>,
    index: usize,
    seed: u64,
) -> TrialRecord<T> {
    let mut record = TrialRecord {
        index,
        seed,
        train_size: 0,
        test_size: 0,
        outcome: Err(String::new()),
        svr_converged: true,
    };
    let result = (|| -> Result<EvalReport<T>> {
        let (tr, te) = split_indices(features.len(), config.train_fraction, config.split_mode, references, seed)?;
        record.train_size = tr.len();
        record.test_size = te.len();
        let tx: Vec<Vec<T>> = tr.iter().map(|&i| features[i].clone()).collect();
        let ty: Vec<T> = tr.iter().map(|&i| mos[i]).collect();
        let model = if config.grid_search {
            grid_search(&tx, &ty, &config.svr, seed)?.model
        } else {
            train(&tx, &ty, &config.svr)?
        };
        record.svr_converged = model.training.is_none_or(|t| t.converged);
        let pred: Vec<T> = te.iter().map(|&i| model.predict(&features[i])).collect::<Result<_>>()?;
        let truth: Vec<T> = te.iter().map(|&i| mos[i]).collect();
        evaluate_predictions(&truth, &pred)
    })();
    record.outcome = result.map_err(|e| e.to_string());
    record
}

/// Runs `config.trials` independent splits in parallel and aggregates them
/// by trial index, so results do not depend on scheduling.
pub fn run_trials<T: Real>(
    features: &[Vec<T>],
    mos: &[T],
    references: Option<&[String]>,
    config: &TrialConfig<T>,
) -> Result<TrialSummary<T>> {
    config.validate()?;
    if features.len() != mos.len() {
        return Err(Error::validation(format!(
            "{} feature rows but {} scores",
            features.len(),
            mos.len()
        )));
    }
    if features.len() < MIN_TRIAL_DATASET {
        return Err(Error::validation(format!(
            "evaluation needs at least {MIN_TRIAL_DATASET} samples, got {}",
            features.len()
        )));
    }
    let seeds = trial_seeds(config.seed, config.trials);
    let trials: Vec<TrialRecord<T>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| run_one(features, mos, references, config, i, s))
        .collect();
    let ok: Vec<&EvalReport<T>> = trials.iter().filter_map(|t| t.outcome.as_ref().ok()).collect();
    let failures = trials.len() - ok.len();
    if ok.is_empty() {
        let first = trials[0].outcome.as_ref().err().cloned().unwrap_or_default();
        return Err(Error::Numerical(format!("all {} trials failed; first: {first}", trials.len())));
    }
    let pick = |f: fn(&EvalReport<T>) -> T| summarize(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    Ok(TrialSummary {
        srocc: pick(|r| r.srocc),
        plcc: pick(|r| r.plcc),
        rmse: pick(|r| r.rmse),
        failures,
        trials,
    })
}

fn fmt<T: Real>(v: T) -> String {
    format!("{:.6}", v.as_f64())
}

/// One row per trial; failed trials leave metric cells empty.
pub fn trials_csv<T: Real>(summary: &TrialSummary<T>) -> String {
    let mut out = String::from("trial,seed,train_size,test_size,srocc,plcc,rmse,status\n");
    for t in &summary.trials {
        let _ = match &t.outcome {
            Ok(r) => writeln!(
                out,
                "{},{},{},{},{},{},{},ok",
                t.index,
                t.seed,
                t.train_size,
                t.test_size,
                fmt(r.srocc),
                fmt(r.plcc),
                fmt(r.rmse)
            ),
            Err(_) => writeln!(out, "{},{},{},{},,,,failed", t.index, t.seed, t.train_size, t.test_size),
        };
    }
    out
}

/// Summary block: median/mean/std per metric, counts and failure reasons.
pub fn summary_text<T: Real>(summary: &TrialSummary<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trials = {}", summary.trials.len());
    let _ = writeln!(out, "failures = {}", summary.failures);
    let unconverged = summary.trials.iter().filter(|t| !t.svr_converged).count();
    let _ = writeln!(out, "svr_unconverged = {unconverged}");
    for (name, m) in [("srocc", &summary.srocc), ("plcc", &summary.plcc), ("rmse", &summary.rmse)] {
        let _ = writeln!(out, "{name}_median = {}", fmt(m.median));
        let _ = writeln!(out, "{name}_mean = {}", fmt(m.mean));
        let _ = writeln!(out, "{name}_std = {}", fmt(m.std));
    }
    for t in &summary.trials {
        if let Err(e) = &t.outcome {
            let _ = writeln!(out, "# trial {} failed: {e}", t.index);
        }
    }
    out
}
