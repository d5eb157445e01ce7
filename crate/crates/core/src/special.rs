//! Log-domain special functions shared by the Fock and amplifier code.

use std::f64::consts::PI;

pub use libm::{erf, erfc};
pub use statrs::function::factorial::ln_factorial;
pub use statrs::function::gamma::ln_gamma;

/// Stirling remainder μ(m) defined by ln m! = ½ln(2πm) + m ln m − m + μ(m).
///
/// Exact log-factorials below 20, asymptotic series above (next omitted term
/// is below 1e-17 at m = 20).
pub fn stirling_remainder(m: u64) -> f64 {
    assert!(m >= 1, "stirling remainder is defined for m >= 1");
    if m < 20 {
        let mf = m as f64;
        return ln_factorial(m) - (0.5 * (2.0 * PI * mf).ln() + mf * mf.ln() - mf);
    }
    let x = m as f64;
    let x2 = x * x;
    let inv = 1.0 / x;
    let inv2 = 1.0 / x2;
    inv * (1.0 / 12.0
        - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

/// m·(1 − r + ln r), evaluated without cancellation near r = 1.
pub fn log_kernel(m: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let x = r - 1.0;
    m * (x.ln_1p() - x)
}

/// ln of the Poisson weight e^{−μ} μⁿ / n!.
pub fn ln_poisson(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - ln_factorial(n)
}

/// Standard normal CDF differences Φ(b) − Φ(a) with b ≥ a, accurate in both tails.
pub fn normal_mass(a: f64, b: f64) -> f64 {
    const R2: f64 = std::f64::consts::SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a / R2) - erfc(b / R2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / R2) - erfc(-a / R2))
    } else {
        0.5 * (erf(b / R2) - erf(a / R2))
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}
