//! Rank and linear correlation, and root-mean-square error.

use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_pair<T: Real>(a: &[T], b: &[T], min_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::validation(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.len() < min_len {
        return Err(Error::validation(format!("need at least {min_len} values, got {}", a.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite value in metric input"));
    }
    Ok(())
}

/// Ranks starting at 1; tied values share the mean of the ranks they span.
/// The flag reports whether any ties were found.
pub fn fractional_ranks<T: Real>(values: &[T]) -> (Vec<T>, bool) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut tied = false;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            tied = true;
        }
        // Ranks start+1 ..= end averaged.
        let r = T::from_usize_lossy(start + 1 + end) * T::lit(0.5);
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    (ranks, tied)
}

fn pearson_unchecked<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    let n = T::from_usize_lossy(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::degenerate("correlation undefined for a constant vector"));
    }
    let r = sab / (saa * sbb).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// Spearman rank correlation. Without ties this is `1 - 6Σd²/(N(N²-1))`;
/// with ties it is the Pearson correlation of fractional ranks.
pub fn srocc<T: Real>(subjective: &[T], objective: &[T]) -> Result<T> {
    check_pair(subjective, objective, 3)?;
    let (rs, ts) = fractional_ranks(subjective);
    let (ro, to) = fractional_ranks(objective);
    if ts || to {
        return pearson_unchecked(&rs, &ro);
    }
    let n = T::from_usize_lossy(subjective.len());
    let d2: T = rs.iter().zip(&ro).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(T::one() - T::lit(6.0) * d2 / (n * (n * n - T::one())))
}

/// Pearson linear correlation.
pub fn plcc<T: Real>(subjective: &[T], objective: &[T]) -> Result<T> {
    check_pair(subjective, objective, 3)?;
    pearson_unchecked(subjective, objective)
}

pub fn rmse<T: Real>(subjective: &[T], objective: &[T]) -> Result<T> {
    check_pair(subjective, objective, 1)?;
    let sq: T = subjective.iter().zip(objective).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sq / T::from_usize_lossy(subjective.len())).sqrt())
}
