//! Log₂ grid search over `(C, γ)` by k-fold cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regression::{train, RegressionModel, SvrParams};
use crate::scalar::Real;

pub const GRID_LOG2_C: std::ops::RangeInclusive<i32> = -1..=12;
pub const GRID_LOG2_GAMMA: std::ops::RangeInclusive<i32> = -10..=2;
pub const GRID_FOLDS: usize = 5;

#[derive(Debug, Clone)]
pub struct GridSearchResult<T> {
    pub c: T,
    pub gamma: T,
    /// Mean held-out RMSE of the selected pair.
    pub cv_rmse: T,
    /// Model refitted on all rows with the selected pair.
    pub model: RegressionModel<T>,
}

/// Fold index per row from a seeded shuffle; fold sizes differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % folds;
    }
    fold
}

fn cv_rmse<T: Real>(features: &[Vec<T>], scores: &[T], fold: &[usize], folds: usize, params: &SvrParams<T>) -> Option<T> {
    let mut sq = T::zero();
    for f in 0..folds {
        let mut tx = Vec::new();
        let mut ty = Vec::new();
        for (i, row) in features.iter().enumerate() {
            if fold[i] != f {
                tx.push(row.clone());
                ty.push(scores[i]);
            }
        }
        let model = train(&tx, &ty, params).ok()?;
        for (i, row) in features.iter().enumerate() {
            if fold[i] == f {
                let e = model.predict(row).ok()? - scores[i];
                sq += e * e;
            }
        }
    }
    let v = (sq / T::from_usize_lossy(features.len())).sqrt();
    v.is_finite().then_some(v)
}

/// Searches `C ∈ 2^{-1..12}`, `γ ∈ 2^{-10..2}` using only the given rows.
/// Ties in CV error keep the earlier pair (smaller `C`, then smaller `γ`).
pub fn grid_search<T: Real>(
    features: &[Vec<T>],
    scores: &[T],
    base: &SvrParams<T>,
    seed: u64,
) -> Result<GridSearchResult<T>> {
    let n = features.len();
    if n < 2 * GRID_FOLDS {
        return Err(Error::validation(format!(
            "grid search needs at least {} samples, got {n}",
            2 * GRID_FOLDS
        )));
    }
    let fold = fold_assignment(n, GRID_FOLDS, seed);
    let pairs: Vec<(i32, i32)> = GRID_LOG2_C
        .flat_map(|c| GRID_LOG2_GAMMA.map(move |g| (c, g)))
        .collect();
    let two = T::lit(2.0);
    let scored: Vec<Option<T>> = pairs
        .par_iter()
        .map(|&(lc, lg)| {
            let p = SvrParams {
                c: two.powi(lc),
                gamma: Some(two.powi(lg)),
                ..*base
            };
            cv_rmse(features, scores, &fold, GRID_FOLDS, &p)
        })
        .collect();
    let mut best: Option<(usize, T)> = None;
    for (k, s) in scored.iter().enumerate() {
        if let Some(v) = *s {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
    }
    let (k, cv) = best.ok_or_else(|| Error::Numerical("every grid point failed".into()))?;
    let (lc, lg) = pairs[k];
    let params = SvrParams {
        c: two.powi(lc),
        gamma: Some(two.powi(lg)),
        ..*base
    };
    let model = train(features, scores, &params)?;
    Ok(GridSearchResult {
        c: params.c,
        gamma: two.powi(lg),
        cv_rmse: cv,
        model,
    })
}
