use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-dimension min-max map onto `[-1, 1]`. Dimensions that are constant
/// over the training set map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler<T> {
    min: Vec<T>,
    max: Vec<T>,
}

impl<T: Real> FeatureScaler<T> {
    pub fn fit(rows: &[Vec<T>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::validation("cannot fit a scaler on zero rows"))?;
        let d = first.len();
        let mut min = first.clone();
        let mut max = first.clone();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::validation(format!(
                    "feature row {i} has {} values, expected {d}",
                    row.len()
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::validation(format!("feature row {i} column {k} is not finite")));
                }
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn from_bounds(min: Vec<T>, max: Vec<T>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::validation("scaler bounds have different lengths"));
        }
        if min.iter().zip(&max).any(|(a, b)| !(a <= b)) {
            return Err(Error::validation("scaler minimum exceeds maximum"));
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[T] {
        &self.min
    }

    pub fn max(&self) -> &[T] {
        &self.max
    }

    pub fn transform(&self, row: &[T]) -> Vec<T> {
        let two = T::lit(2.0);
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                let span = hi - lo;
                if span > T::zero() {
                    two * (v - lo) / span - T::one()
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}
