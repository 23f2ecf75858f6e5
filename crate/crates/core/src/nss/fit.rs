//! Moment-matching fits of generalized Gaussian (GGD) and asymmetric
//! generalized Gaussian (AGGD) densities.

use crate::error::{Error, Result};
use crate::nss::gamma::{ggd_moment_ratio, ln_gamma};
use crate::scalar::Real;

pub const MIN_FIT_SAMPLES: usize = 100;

/// Shape grid searched by both fits: `0.2, 0.201, ..., 10.0`.
pub const TAU_GRID_MIN: f64 = 0.2;
pub const TAU_GRID_MAX: f64 = 10.0;
pub const TAU_GRID_STEP: f64 = 0.001;
const TAU_GRID_LEN: usize = 9801;

/// Zero-mean GGD parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams<T> {
    pub shape_tau: T,
    pub variance_sigma2: T,
}

/// AGGD parameters. `mean_eta` is the mean of the fitted density, so it is
/// positive when the right side is wider.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdParams<T> {
    pub shape_tau: T,
    pub left_sigma2: T,
    pub right_sigma2: T,
    pub mean_eta: T,
}

#[inline]
pub fn tau_grid_point<T: Real>(i: usize) -> T {
    T::lit((200 + i) as f64 / 1000.0)
}

/// Grid shape whose moment ratio is closest to `target`; ties go to the
/// smaller shape. The ratio is increasing in τ, so a bisection for the first
/// grid point at or above `target` followed by a neighbor comparison finds
/// the same point as a full scan.
pub fn invert_moment_ratio<T: Real>(target: T) -> T {
    let (mut lo, mut hi) = (0usize, TAU_GRID_LEN);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ggd_moment_ratio(tau_grid_point::<T>(mid)) < target {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let best = if lo == 0 {
        0
    } else if lo == TAU_GRID_LEN {
        TAU_GRID_LEN - 1
    } else {
        let below = (target - ggd_moment_ratio(tau_grid_point::<T>(lo - 1))).abs();
        let above = (ggd_moment_ratio(tau_grid_point::<T>(lo)) - target).abs();
        if below <= above {
            lo - 1
        } else {
            lo
        }
    };
    tau_grid_point(best)
}

fn check_samples<T: Real>(samples: &[T]) -> Result<()> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::validation(format!(
            "distribution fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("distribution fit received non-finite samples"));
    }
    Ok(())
}

/// `ρ = E[|x|]² / E[x²]` inverted on the shape grid; `σ² = E[x²]`.
pub fn fit_ggd<T: Real>(samples: &[T]) -> Result<GgdParams<T>> {
    check_samples(samples)?;
    let n = T::from_usize_lossy(samples.len());
    let (mut abs_sum, mut sq_sum) = (T::zero(), T::zero());
    for &x in samples {
        abs_sum += x.abs();
        sq_sum += x * x;
    }
    if sq_sum == T::zero() {
        return Err(Error::degenerate("all samples are zero"));
    }
    let mean_abs = abs_sum / n;
    let second = sq_sum / n;
    let rho = mean_abs * mean_abs / second;
    Ok(GgdParams {
        shape_tau: invert_moment_ratio(rho),
        variance_sigma2: second,
    })
}

/// Side variances from the negative and positive samples, shape from the
/// asymmetry-corrected moment ratio, mean from the fitted density.
pub fn fit_aggd<T: Real>(samples: &[T]) -> Result<AggdParams<T>> {
    check_samples(samples)?;
    let (mut left_sq, mut left_n) = (T::zero(), 0usize);
    let (mut right_sq, mut right_n) = (T::zero(), 0usize);
    let (mut abs_sum, mut sq_sum) = (T::zero(), T::zero());
    for &x in samples {
        let x2 = x * x;
        if x < T::zero() {
            left_sq += x2;
            left_n += 1;
        } else if x > T::zero() {
            right_sq += x2;
            right_n += 1;
        }
        abs_sum += x.abs();
        sq_sum += x2;
    }
    if left_n == 0 || right_n == 0 {
        return Err(Error::validation(
            "asymmetric fit needs both negative and positive samples",
        ));
    }
    let n = T::from_usize_lossy(samples.len());
    let left_sigma2 = left_sq / T::from_usize_lossy(left_n);
    let right_sigma2 = right_sq / T::from_usize_lossy(right_n);
    let (left_sigma, right_sigma) = (left_sigma2.sqrt(), right_sigma2.sqrt());

    let gamma_hat = left_sigma / right_sigma;
    let mean_abs = abs_sum / n;
    let r_hat = mean_abs * mean_abs / (sq_sum / n);
    let one = T::one();
    let g2 = gamma_hat * gamma_hat;
    let big_r = r_hat * (g2 * gamma_hat + one) * (gamma_hat + one) / ((g2 + one) * (g2 + one));
    let tau = invert_moment_ratio(big_r);

    let inv = tau.recip();
    let lg1 = ln_gamma(inv);
    let lg2 = ln_gamma(T::lit(2.0) * inv);
    let lg3 = ln_gamma(T::lit(3.0) * inv);
    let spread = (T::lit(0.5) * (lg1 - lg3)).exp();
    let (left_scale, right_scale) = (left_sigma * spread, right_sigma * spread);
    let mean_eta = (right_scale - left_scale) * (lg2 - lg1).exp();
    if !mean_eta.is_finite() {
        return Err(Error::Numerical("AGGD mean is not finite".into()));
    }
    Ok(AggdParams {
        shape_tau: tau,
        left_sigma2,
        right_sigma2,
        mean_eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Full scan of the grid, the definition the bisection must reproduce.
    fn scan_argmin(target: f64) -> f64 {
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..TAU_GRID_LEN {
            let d = (target - ggd_moment_ratio(tau_grid_point::<f64>(i))).abs();
            if d < best.0 {
                best = (d, i);
            }
        }
        tau_grid_point(best.1)
    }

    #[test]
    fn bisection_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let t: f64 = rng.random_range(0.0..0.95);
            assert_eq!(invert_moment_ratio(t), scan_argmin(t), "target {t}");
        }
        assert_eq!(invert_moment_ratio(0.0f64), 0.2);
        assert_eq!(invert_moment_ratio(1.0f64), 10.0);
    }

    #[test]
    fn alternating_pair_variance() {
        let c = 2.5f64;
        let s: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { c } else { -c }).collect();
        assert_eq!(fit_ggd(&s).unwrap().variance_sigma2, c * c);
    }

    #[test]
    fn ggd_errors() {
        assert!(matches!(fit_ggd(&[0.0f64; 500]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_ggd(&[1.0f64; 50]), Err(Error::Validation(_))));
        let mut s = vec![1.0f64; 200];
        s[3] = f64::NAN;
        assert!(matches!(fit_ggd(&s), Err(Error::Validation(_))));
    }

    #[test]
    fn aggd_one_sided_rejected() {
        let s: Vec<f64> = (0..300).map(|i| i as f64).collect();
        assert!(matches!(fit_aggd(&s), Err(Error::Validation(_))));
        assert!(matches!(fit_aggd(&[0.0f64; 300]), Err(Error::Validation(_))));
    }

    #[test]
    fn aggd_symmetric_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = Normal::new(0.0, 1.3).unwrap();
        let mut s = Vec::new();
        for _ in 0..500 {
            let x: f64 = n.sample(&mut rng);
            s.push(x);
            s.push(-x);
        }
        let p = fit_aggd(&s).unwrap();
        assert!(p.mean_eta.abs() <= 1e-9);
        assert!((p.left_sigma2 - p.right_sigma2).abs() <= 1e-9);
    }

    #[test]
    fn aggd_on_gaussian_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = Normal::new(0.0, 1.0).unwrap();
        let s: Vec<f64> = (0..200_000).map(|_| n.sample(&mut rng)).collect();
        let p = fit_aggd(&s).unwrap();
        let (l, r) = (p.left_sigma2.sqrt(), p.right_sigma2.sqrt());
        assert!(((l - r) / r).abs() < 0.03);
        assert!((p.shape_tau - 2.0).abs() < 0.1);
    }

    #[test]
    fn eta_sign_follows_wider_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Normal::new(0.0, 1.0).unwrap();
        let s: Vec<f64> = (0..5000)
            .map(|_| {
                let x: f64 = n.sample(&mut rng);
                if x > 0.0 { 3.0 * x } else { x }
            })
            .collect();
        let p = fit_aggd(&s).unwrap();
        assert!(p.right_sigma2 > p.left_sigma2);
        assert!(p.mean_eta > 0.0);
    }

    proptest! {
        #[test]
        fn ggd_scale_covariance(seed in any::<u64>(), a in 0.1f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = Normal::new(0.0, 1.0).unwrap();
            let s: Vec<f64> = (0..400).map(|_| n.sample(&mut rng)).collect();
            let scaled: Vec<f64> = s.iter().map(|x| a * x).collect();
            let p = fit_ggd(&s).unwrap();
            let q = fit_ggd(&scaled).unwrap();
            prop_assert!((p.shape_tau - q.shape_tau).abs() <= TAU_GRID_STEP + 1e-12);
            prop_assert!((q.variance_sigma2 / p.variance_sigma2 - a * a).abs() <= 1e-9 * a * a);
        }

        #[test]
        fn aggd_mirror(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = Normal::new(0.2, 1.0).unwrap();
            let s: Vec<f64> = (0..400).map(|_| n.sample(&mut rng)).collect();
            let m: Vec<f64> = s.iter().map(|x| -x).collect();
            let p = fit_aggd(&s).unwrap();
            let q = fit_aggd(&m).unwrap();
            prop_assert!((p.mean_eta + q.mean_eta).abs() <= 1e-9);
            prop_assert!((p.left_sigma2 - q.right_sigma2).abs() <= 1e-9);
            prop_assert!((p.right_sigma2 - q.left_sigma2).abs() <= 1e-9);
            prop_assert!((p.shape_tau - q.shape_tau).abs() <= TAU_GRID_STEP + 1e-12);
        }
    }
}
