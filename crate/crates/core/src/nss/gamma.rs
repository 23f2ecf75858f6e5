//! Lanczos approximation of the gamma function (g = 7, 9 terms).

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        // Reflection: Γ(x) Γ(1 - x) = π / sin(πx); sin(πx) > 0 on (0, 0.5).
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += T::lit(c) / (x + T::lit(i as f64));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::TAU()).ln() + (x + T::lit(0.5)) * t.ln() - t + a.ln()
}

/// `Γ(x)` for `x > 0`.
pub fn gamma<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// `Γ(2/τ)² / (Γ(1/τ) Γ(3/τ))`, the ratio `E[|x|]² / E[x²]` of a
/// generalized Gaussian with shape `τ`. Strictly increasing in `τ`.
pub fn ggd_moment_ratio<T: Real>(tau: T) -> T {
    let inv = tau.recip();
    let two = T::lit(2.0);
    (two * ln_gamma(two * inv) - ln_gamma(inv) - ln_gamma(T::lit(3.0) * inv)).exp()
}
