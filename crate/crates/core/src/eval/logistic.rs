//! Five-parameter logistic remapping of objective scores onto the MOS scale:
//!
//! ```text
//! g(x) = β₁ (½ - 1 / (1 + exp(β₂ (x - β₃)))) + β₄ x + β₅
//! ```

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const LOGISTIC_MAX_ITERATIONS: usize = 500;
pub const LOGISTIC_MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams<T> {
    pub beta1: T,
    pub beta2: T,
    pub beta3: T,
    pub beta4: T,
    pub beta5: T,
}

impl<T: Real> LogisticParams<T> {
    fn from_array(b: [T; 5]) -> Self {
        Self { beta1: b[0], beta2: b[1], beta3: b[2], beta4: b[3], beta5: b[4] }
    }

    fn to_array(self) -> [T; 5] {
        [self.beta1, self.beta2, self.beta3, self.beta4, self.beta5]
    }

    pub fn eval(&self, x: T) -> T {
        let half = T::lit(0.5);
        let z = self.beta2 * (x - self.beta3);
        // 1 / (1 + e^z) written to avoid overflow for large |z|.
        let inv = if z > T::zero() {
            let e = (-z).exp();
            e / (T::one() + e)
        } else {
            T::one() / (T::one() + z.exp())
        };
        self.beta1 * (half - inv) + self.beta4 * x + self.beta5
    }

    pub fn map(&self, xs: &[T]) -> Vec<T> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn derivative(&self, x: T) -> T {
        let z = self.beta2 * (x - self.beta3);
        let s = if z > T::zero() {
            T::one() / (T::one() + (-z).exp())
        } else {
            let e = z.exp();
            e / (T::one() + e)
        };
        self.beta1 * self.beta2 * s * (T::one() - s) + self.beta4
    }

    /// Whether `g` is monotone (in either direction) on `[lo, hi]`, checked on
    /// a dense grid of derivative samples.
    pub fn is_monotone_on(&self, lo: T, hi: T) -> bool {
        let steps = 2000;
        let (mut pos, mut neg) = (false, false);
        for k in 0..=steps {
            let x = lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(steps);
            let d = self.derivative(x);
            pos |= d > T::zero();
            neg |= d < T::zero();
        }
        !(pos && neg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit<T> {
    pub params: LogisticParams<T>,
    /// False when the iteration cap was reached; `params` is then the best
    /// point seen.
    pub converged: bool,
    pub iterations: usize,
    /// True when the raw scores were constant and only a linear fit was made.
    pub linear_fallback: bool,
    pub residual_rmse: T,
}

fn sse<T: Real>(p: &LogisticParams<T>, x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| (p.eval(a) - b) * (p.eval(a) - b)).sum()
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len())
}

/// Least-squares line `y ≈ β₄ x + β₅` with the logistic term switched off.
fn linear_fit<T: Real>(x: &[T], y: &[T]) -> LogisticParams<T> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    LogisticParams {
        beta1: T::zero(),
        beta2: T::zero(),
        beta3: mx,
        beta4: slope,
        beta5: my - slope * mx,
    }
}

/// Solves `A δ = b` for a 5×5 system by Gaussian elimination with partial pivoting.
fn solve5<T: Real>(mut a: [[T; 5]; 5], mut b: [T; 5]) -> Option<[T; 5]> {
    for col in 0..5 {
        let piv = (col..5).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if !(a[piv][col].abs() > T::zero()) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..5 {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, src) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * *src;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [T::zero(); 5];
    for r in (0..5).rev() {
        let mut s = b[r];
        for c in r + 1..5 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Damped least-squares (Levenberg-Marquardt) with a central-difference
/// Jacobian. Starts from `β₁ = range(mos)`, `β₂ = 1/std(raw)`,
/// `β₃ = mean(raw)`, `β₄ = 0`, `β₅ = mean(mos)`; the ordinary least-squares
/// line is also evaluated and kept if it fits better.
pub fn fit_logistic<T: Real>(raw: &[T], mos: &[T]) -> Result<LogisticFit<T>> {
    if raw.len() != mos.len() {
        return Err(Error::validation(format!("length mismatch: {} vs {}", raw.len(), mos.len())));
    }
    let n = raw.len();
    if n < LOGISTIC_MIN_SAMPLES {
        return Err(Error::validation(format!(
            "logistic fit needs at least {LOGISTIC_MIN_SAMPLES} points, got {n}"
        )));
    }
    if raw.iter().chain(mos).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite value in logistic fit input"));
    }
    let nn = T::from_usize_lossy(n);
    let mx = mean(raw);
    let std = (raw.iter().map(|&x| (x - mx) * (x - mx)).sum::<T>() / nn).sqrt();
    let linear = linear_fit(raw, mos);
    let linear_sse = sse(&linear, raw, mos);
    let finish = |params: LogisticParams<T>, converged, iterations, linear_fallback, err: T| LogisticFit {
        params,
        converged,
        iterations,
        linear_fallback,
        residual_rmse: (err / nn).sqrt(),
    };
    if !(std > T::zero()) {
        return Ok(finish(linear, true, 0, true, linear_sse));
    }

    let (lo, hi) = mos
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
    let mut beta = [hi - lo, T::one() / std, mx, T::zero(), mean(mos)];
    let mut current = sse(&LogisticParams::from_array(beta), raw, mos);
    let mut lambda = T::lit(1e-3);
    let mut converged = false;
    let mut iterations = 0;
    let tiny = T::lit(1e-15);
    let residual = |b: &[T; 5]| -> Vec<T> {
        let p = LogisticParams::from_array(*b);
        raw.iter().zip(mos).map(|(&x, &y)| p.eval(x) - y).collect()
    };

    while iterations < LOGISTIC_MAX_ITERATIONS {
        iterations += 1;
        let r = residual(&beta);
        // Central-difference Jacobian, one column per parameter.
        let mut jac = vec![[T::zero(); 5]; n];
        for k in 0..5 {
            let h = T::lit(1e-6) * beta[k].abs().max(T::lit(1e-3));
            let mut up = beta;
            let mut dn = beta;
            up[k] += h;
            dn[k] -= h;
            let (ru, rd) = (residual(&up), residual(&dn));
            for i in 0..n {
                jac[i][k] = (ru[i] - rd[i]) / (h + h);
            }
        }
        let mut jtj = [[T::zero(); 5]; 5];
        let mut jtr = [T::zero(); 5];
        for i in 0..n {
            for a in 0..5 {
                jtr[a] -= jac[i][a] * r[i];
                for b in 0..5 {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        while lambda < T::lit(1e12) {
            let mut damped = jtj;
            for a in 0..5 {
                damped[a][a] += lambda * (jtj[a][a] + tiny);
            }
            if let Some(delta) = solve5(damped, jtr) {
                let mut trial = beta;
                for a in 0..5 {
                    trial[a] += delta[a];
                }
                let e = sse(&LogisticParams::from_array(trial), raw, mos);
                if e.is_finite() && e < current {
                    let rel = (current - e) / current.max(tiny);
                    let step: T = delta.iter().map(|d| d.abs()).fold(T::zero(), T::max);
                    beta = trial;
                    current = e;
                    lambda = (lambda * T::lit(0.1)).max(T::lit(1e-12));
                    improved = true;
                    if rel < T::lit(1e-12) || step < T::lit(1e-12) {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= T::lit(10.0);
        }
        if !improved || current <= tiny {
            // No descent direction left: a stationary point within precision.
            converged = true;
        }
        if converged {
            break;
        }
    }

    let fitted = LogisticParams::from_array(beta);
    if linear_sse <= current {
        return Ok(finish(linear, converged, iterations, false, linear_sse));
    }
    debug_assert!(fitted.to_array().iter().all(|v| v.is_finite()));
    Ok(finish(fitted, converged, iterations, false, current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::srocc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_exact_logistic() {
        let truth = LogisticParams { beta1: 40.0, beta2: 0.8, beta3: 5.0, beta4: 0.5, beta5: 50.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..10.0)).collect();
        let y = truth.map(&x);
        let fit = fit_logistic(&x, &y).unwrap();
        let range = y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min);
        assert!(fit.residual_rmse <= 1e-6 * range, "rmse {}", fit.residual_rmse);
    }

    #[test]
    fn linear_data_reproduced() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let fit = fit_logistic(&x, &y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((fit.params.eval(*a) - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn constant_raw_falls_back() {
        let fit = fit_logistic(&[3.0; 8], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        assert!(fit.linear_fallback);
        assert_eq!(fit.params.beta1, 0.0);
        assert_eq!(fit.params.beta2, 0.0);
        assert_eq!(fit.params.eval(3.0), 4.5);
    }

    #[test]
    fn monotone_fit_keeps_srocc() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 10.0 * v.tanh() + v + rng.random_range(-0.2..0.2)).collect();
        let fit = fit_logistic(&x, &y).unwrap();
        let (lo, hi) = x.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(fit.params.is_monotone_on(lo, hi));
        let mapped = fit.params.map(&x);
        let a = srocc(&y, &x).unwrap();
        let b = srocc(&y, &mapped).unwrap();
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn input_checks() {
        assert!(matches!(fit_logistic(&[1.0; 4], &[1.0; 4]), Err(Error::Validation(_))));
        assert!(matches!(fit_logistic(&[1.0; 6], &[1.0; 5]), Err(Error::Validation(_))));
    }

    #[test]
    fn extreme_slopes_stay_finite() {
        let p = LogisticParams { beta1: 1.0, beta2: 1e4, beta3: 0.0, beta4: 0.0, beta5: 0.0 };
        assert_eq!(p.eval(1.0), 0.5);
        assert_eq!(p.eval(-1.0), -0.5);
    }
}
