//! ε-insensitive support vector regression with an RBF kernel, solved in the
//! dual by sequential minimal optimization.
//!
//! The dual is written over `2n` variables `β = [α; α*]` with labels
//! `y = [+1; -1]`:
//!
//! ```text
//! min ½ βᵀQβ + pᵀβ   s.t.  yᵀβ = 0,  0 ≤ β ≤ C
//! Q_tu = y_t y_u k(x_t, x_u),  p = [ε - s; ε + s]
//! ```
//!
//! Each step updates the maximal violating pair; ties resolve to the lowest
//! index so runs are reproducible.

use crate::error::{Error, Result};
use crate::regression::scaler::FeatureScaler;
use crate::regression::{rbf, RegressionModel, TrainingReport};
use crate::scalar::Real;

/// Curvature floor for non-positive pair curvature.
const MIN_CURVATURE: f64 = 1e-12;

/// Hyperparameters. `gamma: None` means `1 / feature_dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams<T> {
    pub c: T,
    pub gamma: Option<T>,
    pub epsilon: T,
    /// Stop when the maximal KKT violation is at most this.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for SvrParams<T> {
    fn default() -> Self {
        Self {
            c: T::lit(1024.0),
            gamma: None,
            epsilon: T::lit(0.1),
            tolerance: T::lit(1e-3),
            max_iterations: 1_000_000,
        }
    }
}

impl<T: Real> SvrParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero()) || !self.c.is_finite() {
            return Err(Error::validation(format!("SVR cost C must be positive, got {}", self.c)));
        }
        if let Some(g) = self.gamma {
            if !(g > T::zero()) || !g.is_finite() {
                return Err(Error::validation(format!("RBF gamma must be positive, got {g}")));
            }
        }
        if !(self.epsilon >= T::zero()) || !self.epsilon.is_finite() {
            return Err(Error::validation("SVR epsilon must be non-negative"));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::validation("SVR tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("SVR iteration cap must be positive"));
        }
        Ok(())
    }

    pub fn resolved_gamma(&self, feature_dim: usize) -> T {
        self.gamma
            .unwrap_or_else(|| T::one() / T::from_usize_lossy(feature_dim.max(1)))
    }
}

struct DualSolution<T> {
    beta: Vec<T>,
    rho: T,
    iterations: usize,
    gap: T,
    converged: bool,
}

fn solve_dual<T: Real>(kernel: &[T], n: usize, scores: &[T], params: &SvrParams<T>) -> DualSolution<T> {
    let l = 2 * n;
    let c = params.c;
    let zero = T::zero();
    let sign = |t: usize| if t < n { T::one() } else { -T::one() };
    let k_at = |t: usize, u: usize| kernel[(t % n) * n + (u % n)];
    let q_at = |t: usize, u: usize| sign(t) * sign(u) * k_at(t, u);

    let mut beta = vec![zero; l];
    let mut grad: Vec<T> = (0..l)
        .map(|t| if t < n { params.epsilon - scores[t] } else { params.epsilon + scores[t - n] })
        .collect();

    let in_up = |t: usize, b: T| if t < n { b < c } else { b > zero };
    let in_low = |t: usize, b: T| if t < n { b > zero } else { b < c };

    let mut iterations = 0usize;
    let mut gap;
    let converged;
    loop {
        let mut i = usize::MAX;
        let mut gmax = T::neg_infinity();
        let mut j = usize::MAX;
        let mut gmin = T::infinity();
        for t in 0..l {
            let v = -sign(t) * grad[t];
            if in_up(t, beta[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(t, beta[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        gap = if i == usize::MAX || j == usize::MAX { zero } else { gmax - gmin };
        if gap <= params.tolerance {
            converged = true;
            break;
        }
        if iterations >= params.max_iterations {
            converged = false;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let q_ii = q_at(i, i);
        let q_jj = q_at(j, j);
        let q_ij = q_at(i, j);
        let floor = T::lit(MIN_CURVATURE);
        if sign(i) != sign(j) {
            let mut quad = q_ii + q_jj + T::lit(2.0) * q_ij;
            if quad <= zero {
                quad = floor;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > zero {
                if beta[j] < zero {
                    beta[j] = zero;
                    beta[i] = diff;
                }
            } else if beta[i] < zero {
                beta[i] = zero;
                beta[j] = -diff;
            }
            if diff > zero {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let mut quad = q_ii + q_jj - T::lit(2.0) * q_ij;
            if quad <= zero {
                quad = floor;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < zero {
                beta[j] = zero;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < zero {
                beta[i] = zero;
                beta[j] = sum;
            }
        }

        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q_at(t, i) * di + q_at(t, j) * dj;
        }
    }

    // Offset: mean of y·G over free variables, else the midpoint of the
    // feasible interval implied by the bounded ones.
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut free_sum, mut free_n) = (zero, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        let at_upper = beta[t] >= c;
        let at_lower = beta[t] <= zero;
        if at_upper {
            if t >= n {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if t < n {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / T::from_usize_lossy(free_n)
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) * T::lit(0.5)
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    DualSolution {
        beta,
        rho,
        iterations,
        gap,
        converged,
    }
}

/// Fits the scaler, then solves the dual on the scaled features.
pub fn train<T: Real>(features: &[Vec<T>], scores: &[T], params: &SvrParams<T>) -> Result<RegressionModel<T>> {
    params.validate()?;
    let n = features.len();
    if n < 4 {
        return Err(Error::validation(format!("training needs at least 4 samples, got {n}")));
    }
    if scores.len() != n {
        return Err(Error::validation(format!(
            "{n} feature rows but {} scores",
            scores.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::validation(format!("score {i} is not finite")));
    }
    let scaler = FeatureScaler::fit(features)?;
    let d = scaler.dim();
    let gamma = params.resolved_gamma(d);
    let scaled: Vec<Vec<T>> = features.iter().map(|r| scaler.transform(r)).collect();

    let mut kernel = vec![T::zero(); n * n];
    for a in 0..n {
        kernel[a * n + a] = T::one();
        for b in a + 1..n {
            let k = rbf(&scaled[a], &scaled[b], gamma);
            kernel[a * n + b] = k;
            kernel[b * n + a] = k;
        }
    }

    let sol = solve_dual(&kernel, n, scores, params);
    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for (k, row) in scaled.into_iter().enumerate() {
        let coef = sol.beta[k] - sol.beta[k + n];
        if coef != T::zero() {
            support_vectors.push(row);
            dual_coefficients.push(coef);
        }
    }
    if !sol.rho.is_finite() {
        return Err(Error::Numerical("SVR offset is not finite".into()));
    }
    Ok(RegressionModel {
        support_vectors,
        dual_coefficients,
        bias: -sol.rho,
        kernel_gamma: gamma,
        cost_c: params.c,
        epsilon_tube: params.epsilon,
        scaler,
        training: Some(TrainingReport {
            converged: sol.converged,
            iterations: sol.iterations,
            kkt_gap: sol.gap,
        }),
    })
}
