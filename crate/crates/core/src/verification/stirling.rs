//! Signed Stirling numbers of the first kind and the Stirling-inequality
//! bounds on the amplified number density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::amplifiers::ln_preamp_number_weight;
use crate::error::{Error, Result};
use crate::special::log_kernel;

/// Largest table size accepted.
pub const STIRLING_L_MAX: usize = 30;

/// Triangular table of s_l^{(k)}, 0 ≤ k ≤ l ≤ l_max.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StirlingTable {
    rows: Vec<Vec<i128>>,
}

impl StirlingTable {
    pub fn l_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// s_l^{(k)}, zero outside the triangle.
    pub fn get(&self, l: usize, k: usize) -> i128 {
        self.rows.get(l).and_then(|r| r.get(k)).copied().unwrap_or(0)
    }

    pub fn rows(&self) -> &[Vec<i128>] {
        &self.rows
    }
}

fn overflow() -> Error {
    Error::Domain("integer overflow in Stirling arithmetic".into())
}

/// Builds the table by s_{l+1}^{(k)} = s_l^{(k−1)} − l·s_l^{(k)}.
pub fn stirling_first_kind(l_max: usize) -> Result<StirlingTable> {
    if l_max > STIRLING_L_MAX {
        return Err(Error::InvalidArgument(format!(
            "Stirling tables are limited to l <= {STIRLING_L_MAX} for exact integer arithmetic, got {l_max}"
        )));
    }
    let mut rows: Vec<Vec<i128>> = vec![vec![1]];
    for l in 0..l_max {
        let prev = &rows[l];
        let mut next = vec![0i128; l + 2];
        for (k, slot) in next.iter_mut().enumerate() {
            let left = if k >= 1 { prev.get(k - 1).copied().unwrap_or(0) } else { 0 };
            let right = prev.get(k).copied().unwrap_or(0);
            let scaled = right.checked_mul(l as i128).ok_or_else(overflow)?;
            *slot = left.checked_sub(scaled).ok_or_else(overflow)?;
        }
        rows.push(next);
    }
    Ok(StirlingTable { rows })
}

/// Both sides of (N+l)!/N! = (−1)^l Σ_k s_{l+1}^{(k+1)} (−N)^k.
pub fn rising_factorial_identity(table: &StirlingTable, n: u64, l: usize) -> Result<(i128, i128)> {
    if l + 1 > table.l_max() {
        return Err(Error::InvalidArgument(format!("table too small for l = {l}")));
    }
    let mut lhs: i128 = 1;
    for i in 1..=l as i128 {
        lhs = lhs.checked_mul(n as i128 + i).ok_or_else(overflow)?;
    }
    let mut sum: i128 = 0;
    let mut pow: i128 = 1;
    for k in 0..=l {
        let term = table.get(l + 1, k + 1).checked_mul(pow).ok_or_else(overflow)?;
        sum = sum.checked_add(term).ok_or_else(overflow)?;
        pow = pow.checked_mul(-(n as i128)).ok_or_else(overflow)?;
    }
    let rhs = if l.is_multiple_of(2) { sum } else { sum.checked_neg().ok_or_else(overflow)? };
    Ok((lhs, rhs))
}

/// (ln lower, ln upper) with upper = γ = (2πn/g)^{−1/2} exp(gn(1 − h/n + ln(h/n)))
/// and lower = γ/(1 + 1/(12gn − 1)).
pub fn ln_stirling_density_bounds(n: u64, g: u64, h: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("Stirling bounds are derived for n >= 1".into()));
    }
    if g == 0 {
        return Err(Error::InvalidArgument("gain must be >= 1".into()));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("outcome h must be finite and nonnegative, got {h}")));
    }
    if h == 0.0 {
        return Ok((f64::NEG_INFINITY, f64::NEG_INFINITY));
    }
    let m = (g * n) as f64;
    let upper = -0.5 * (2.0 * PI * n as f64 / g as f64).ln() + log_kernel(m, h / n as f64);
    let lower = upper - (1.0 / (12.0 * m - 1.0)).ln_1p();
    Ok((lower, upper))
}

pub fn stirling_density_bounds(n: u64, g: u64, h: f64) -> Result<(f64, f64)> {
    let (lo, hi) = ln_stirling_density_bounds(n, g, h)?;
    Ok((lo.exp(), hi.exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BracketSummary {
    pub checked: u64,
    /// Points where p lies outside [lower, upper].
    pub violations: u64,
    /// Points where p coincides with a bound in floating point (h = 0 or
    /// far tails where the gap is below one ulp of the log).
    pub ties: u64,
}

/// Checks lower ≤ p ≤ upper in the log domain on the lattice
/// n ∈ 1..=n_max, g ∈ gains, and `points` values of h evenly covering [0, 2n].
pub fn check_stirling_bracket(n_max: u64, gains: &[u64], points: usize) -> Result<BracketSummary> {
    let mut s = BracketSummary::default();
    for n in 1..=n_max {
        for &g in gains {
            for i in 0..points {
                let h = 2.0 * n as f64 * i as f64 / (points - 1).max(1) as f64;
                let (lo, hi) = ln_stirling_density_bounds(n, g, h)?;
                let p = ln_preamp_number_weight(n, g, h);
                s.checked += 1;
                if p < lo || p > hi {
                    s.violations += 1;
                } else if p == lo || p == hi {
                    s.ties += 1;
                }
            }
        }
    }
    Ok(s)
}
