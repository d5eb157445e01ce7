//! Disentangling identity for su(1,1):
//! e^{A₋k₋} e^{2A₃k₃} e^{A₊k₊} = e^{2B₃k₃ + B₊k₊ + B₋k₋},
//! with k₊ = a†²/2, k₋ = a²/2, k₃ = (a†a + ½)/2.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

/// Γ below which Γ/sinh Γ is taken from its series.
const SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BchInput {
    pub a_plus: C,
    pub a_minus: C,
    pub a_3: C,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BchOutput {
    pub b_plus: C,
    pub b_minus: C,
    pub b_3: C,
    pub gamma: C,
}

impl BchInput {
    pub fn new(a_plus: C, a_minus: C, a_3: C) -> Self {
        Self { a_plus, a_minus, a_3 }
    }

    /// Coefficients of the K-observable characteristic function at gain g:
    /// A± = ∓λ/g, A₃ = −ln(1 − iλc/(2g)).
    pub fn asymptotic(lambda: f64, c: f64, g: f64) -> Self {
        let y = -lambda * c / (2.0 * g);
        // ln(1 − iλc/2g) = ½ ln(1 + y²) + i atan2(y, 1)
        let log = C::new(0.5 * (y * y).ln_1p(), y.atan2(1.0));
        Self { a_plus: C::new(-lambda / g, 0.0), a_minus: C::new(lambda / g, 0.0), a_3: -log }
    }
}

/// Γ/sinh Γ, finite at Γ = 0.
fn gamma_over_sinh(gamma: C) -> C {
    if gamma.norm() < SERIES_CUTOFF {
        let g2 = gamma * gamma;
        C::new(1.0, 0.0) - g2 / 6.0 + g2 * g2 * 7.0 / 360.0
    } else {
        gamma / gamma.sinh()
    }
}

/// Closed-form B±, B₃ and Γ for the given A's (principal branch of asinh).
pub fn bch_coefficients(input: BchInput) -> Result<BchOutput> {
    let BchInput { a_plus, a_minus, a_3 } = input;
    let e3 = a_3.exp();
    let pm = a_plus * a_minus;
    // cosh Γ − 1, and the diagonal difference (1 + A₊A₋)e^{A₃} − e^{−A₃},
    // both arranged to avoid cancellation near the identity.
    let half = (a_3 * 0.5).sinh();
    let u = half * half * 2.0 - pm * e3 * 0.5;
    let diag = a_3.sinh() * 2.0 + pm * e3;
    let gamma = (u * 0.5).sqrt().asinh() * 2.0;
    if !(gamma.re.is_finite() && gamma.im.is_finite()) {
        return Err(Error::Domain("BCH exponent is not finite".into()));
    }
    let gs = gamma_over_sinh(gamma);
    if !(gs.re.is_finite() && gs.im.is_finite()) {
        return Err(Error::Singular(format!("sinh Γ vanishes at Γ = {gamma}; the configuration has no disentangled form")));
    }
    Ok(BchOutput {
        b_plus: a_plus * e3 * gs,
        b_minus: a_minus * e3 * gs,
        b_3: diag * gs * 0.5,
        gamma,
    })
}

/// Max-entry difference between the two sides of the 2×2 representation
/// with iσ± = k±, σ₃ = 2k₃.
pub fn bch_matrix_check(input: BchInput, out: BchOutput) -> f64 {
    let i = C::new(0.0, 1.0);
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let lower = Matrix2::new(one, zero, i * input.a_minus, one);
    let diag = Matrix2::new(input.a_3.exp(), zero, zero, (-input.a_3).exp());
    let upper = Matrix2::new(one, i * input.a_plus, zero, one);
    let lhs = lower * diag * upper;
    let sinh_over = one / gamma_over_sinh(out.gamma);
    let rhs = Matrix2::identity() * out.gamma.cosh()
        + Matrix2::new(out.b_3, i * out.b_plus, i * out.b_minus, -out.b_3) * sinh_over;
    (lhs - rhs).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// |Γ² − (B₃² − B₊B₋)|.
pub fn gamma_consistency(out: &BchOutput) -> f64 {
    (out.gamma * out.gamma - (out.b_3 * out.b_3 - out.b_plus * out.b_minus)).norm()
}

/// Uniform draw from the complex disc of the given radius.
fn disc(rng: &mut ChaCha8Rng, radius: f64) -> C {
    let r = radius * rng.random::<f64>().sqrt();
    C::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BchTrialSummary {
    pub trials: usize,
    pub radius: f64,
    pub seed: u64,
    pub max_residual: f64,
    pub max_gamma_residual: f64,
    pub failures: usize,
}

/// Random-input sweep of the closed forms against the matrix identity.
pub fn bch_random_trials(trials: usize, radius: f64, seed: u64) -> BchTrialSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = BchTrialSummary { trials, radius, seed, max_residual: 0.0, max_gamma_residual: 0.0, failures: 0 };
    for _ in 0..trials {
        let input = BchInput::new(disc(&mut rng, radius), disc(&mut rng, radius), disc(&mut rng, radius));
        match bch_coefficients(input) {
            Ok(out) => {
                s.max_residual = s.max_residual.max(bch_matrix_check(input, out));
                s.max_gamma_residual = s.max_gamma_residual.max(gamma_consistency(&out));
            }
            Err(_) => s.failures += 1,
        }
    }
    s
}

/// Remainders of the leading-order forms B± ≈ ∓λ/g,
/// B₃ ≈ iλc/(2g) − (λ²/2g²)(1 + c²/4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub g: f64,
    pub residual: f64,
    pub plus_remainder: f64,
    pub minus_remainder: f64,
    pub b3_remainder: f64,
}

pub fn bch_asymptotic_row(lambda: f64, c: f64, g: f64) -> Result<AsymptoticRow> {
    let input = BchInput::asymptotic(lambda, c, g);
    let out = bch_coefficients(input)?;
    let b3 = C::new(-lambda * lambda / (2.0 * g * g) * (1.0 + c * c / 4.0), lambda * c / (2.0 * g));
    Ok(AsymptoticRow {
        g,
        residual: bch_matrix_check(input, out),
        plus_remainder: (out.b_plus - C::new(-lambda / g, 0.0)).norm(),
        minus_remainder: (out.b_minus - C::new(lambda / g, 0.0)).norm(),
        b3_remainder: (out.b_3 - b3).norm(),
    })
}

/// Least-squares slope of −ln|y| against ln x.
pub fn decay_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}
