//! Feature scaling, ε-SVR training and prediction, and model files.

pub mod grid;
pub mod persist;
pub mod scaler;
pub mod svr;

pub use grid::{grid_search, GridSearchResult};
pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use scaler::FeatureScaler;
pub use svr::{train, SvrParams};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `exp(-γ‖a - b‖²)`
#[inline]
pub fn rbf<T: Real>(a: &[T], b: &[T], gamma: T) -> T {
    let mut d2 = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Solver outcome. Not persisted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingReport<T> {
    pub converged: bool,
    pub iterations: usize,
    /// Maximal KKT violation when the solver stopped.
    pub kkt_gap: T,
}

/// Trained regressor. Support vectors are stored in scaled feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel<T> {
    pub support_vectors: Vec<Vec<T>>,
    pub dual_coefficients: Vec<T>,
    pub bias: T,
    pub kernel_gamma: T,
    pub cost_c: T,
    pub epsilon_tube: T,
    pub scaler: FeatureScaler<T>,
    pub training: Option<TrainingReport<T>>,
}

impl<T: Real> RegressionModel<T> {
    pub fn feature_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn support_vector_count(&self) -> usize {
        self.support_vectors.len()
    }

    /// `Σ coef_i k(sv_i, scale(x)) + bias`
    pub fn predict(&self, features: &[T]) -> Result<T> {
        if features.len() != self.feature_dim() {
            return Err(Error::validation(format!(
                "model expects {} features, got {}",
                self.feature_dim(),
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("prediction input has non-finite features"));
        }
        let x = self.scaler.transform(features);
        let mut q = T::zero();
        for (sv, &coef) in self.support_vectors.iter().zip(&self.dual_coefficients) {
            q += coef * rbf(sv, &x, self.kernel_gamma);
        }
        Ok(q + self.bias)
    }

    pub fn predict_many(&self, rows: &[Vec<T>]) -> Result<Vec<T>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Largest violation of the ε-tube optimality conditions on a data set
    /// (normally the training set). Each coefficient is read as `α - α*`,
    /// which is exact at an optimum since `α·α* = 0` when `ε > 0`.
    pub fn kkt_residual(&self, features: &[Vec<T>], scores: &[T]) -> Result<T> {
        let mut worst = T::zero();
        let scaled_sv: Vec<(Vec<T>, T)> = self
            .support_vectors
            .iter()
            .cloned()
            .zip(self.dual_coefficients.iter().copied())
            .collect();
        for (row, &s) in features.iter().zip(scores) {
            let f = self.predict(row)?;
            let x = self.scaler.transform(row);
            let coef = scaled_sv
                .iter()
                .find(|(sv, _)| sv.as_slice() == x.as_slice())
                .map(|&(_, c)| c)
                .unwrap_or_else(T::zero);
            let above = s - f; // positive when the target sits above the fit
            let eps = self.epsilon_tube;
            let (alpha, alpha_star) = if coef > T::zero() { (coef, T::zero()) } else { (T::zero(), -coef) };
            let mut viol = T::zero();
            if alpha < self.cost_c {
                viol = viol.max(above - eps);
            }
            if alpha > T::zero() {
                viol = viol.max(eps - above);
            }
            if alpha_star < self.cost_c {
                viol = viol.max(-above - eps);
            }
            if alpha_star > T::zero() {
                viol = viol.max(eps + above);
            }
            worst = worst.max(viol);
        }
        Ok(worst)
    }

    /// Fraction of samples whose prediction lies within `ε + slack` of the target.
    pub fn tube_satisfaction(&self, features: &[Vec<T>], scores: &[T], slack: T) -> Result<f64> {
        let preds = self.predict_many(features)?;
        let inside = preds
            .iter()
            .zip(scores)
            .filter(|(&p, &s)| (p - s).abs() <= self.epsilon_tube + slack)
            .count();
        Ok(inside as f64 / scores.len().max(1) as f64)
    }
}
