//! Bivariate polynomials Σ c_mn α^m ᾱ^n with complex coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO_TOL: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseSpacePolynomial {
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl PhaseSpacePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, Complex64::new(c, 0.0))
    }

    pub fn monomial(m: u32, n: u32, c: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, n, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((u32, u32), Complex64)>) -> Self {
        let mut p = Self::zero();
        for ((m, n), c) in terms {
            p.add_term(m, n, c);
        }
        p
    }

    /// |α|²
    pub fn mod_squared() -> Self {
        Self::monomial(1, 1, Complex64::new(1.0, 0.0))
    }

    /// Re(α e^{−iφ}) = (α e^{−iφ} + ᾱ e^{iφ})/2
    pub fn re_alpha(phi: f64) -> Self {
        Self::from_terms([
            ((1, 0), 0.5 * Complex64::from_polar(1.0, -phi)),
            ((0, 1), 0.5 * Complex64::from_polar(1.0, phi)),
        ])
    }

    /// Im(α²) + (c/2)|α|², the real quadratic family whose anti-normal
    /// ordering at c = 0 is K.
    pub fn k_family(c: f64) -> Self {
        Self::from_terms([
            ((2, 0), Complex64::new(0.0, -0.5)),
            ((0, 2), Complex64::new(0.0, 0.5)),
            ((1, 1), Complex64::new(0.5 * c, 0.0)),
        ])
    }

    pub fn add_term(&mut self, m: u32, n: u32, c: Complex64) {
        let e = self.terms.entry((m, n)).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if e.norm() <= ZERO_TOL {
            self.terms.remove(&(m, n));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, Complex64)> + '_ {
        self.terms.iter().map(|(&(m, n), &c)| (m, n, c))
    }

    pub fn coefficient(&self, m: u32, n: u32) -> Complex64 {
        self.terms.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent of α or ᾱ across all terms.
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|&(m, n)| m.max(n)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|&(m, n)| m + n).max().unwrap_or(0)
    }

    /// c_nm = conj(c_mn) within `tol` (relative to the largest coefficient).
    pub fn is_real(&self, tol: f64) -> bool {
        let scale = self.terms.values().map(|c| c.norm()).fold(1.0, f64::max);
        self.terms
            .iter()
            .all(|(&(m, n), &c)| (self.coefficient(n, m).conj() - c).norm() <= tol * scale)
    }

    pub fn ensure_real(&self) -> Result<()> {
        if self.is_real(1e-12) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "polynomial {self} is not real-valued (c_nm != conj(c_mn))"
            )))
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.terms().map(|(m, n, c)| ((m, n), c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (m, n, c) in other.terms() {
            p.add_term(m, n, c);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero();
        for (m, n, c) in self.terms() {
            for (k, l, d) in other.terms() {
                p.add_term(m + k, n + l, c * d);
            }
        }
        p
    }

    pub fn pow(&self, l: u32) -> Self {
        let mut acc = Self::constant(1.0);
        let mut base = self.clone();
        let mut e = l;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// f(α e^{iφ}): c_mn → c_mn e^{i(m−n)φ}.
    pub fn rotate(&self, phi: f64) -> Self {
        Self::from_terms(
            self.terms()
                .map(|(m, n, c)| ((m, n), c * Complex64::from_polar(1.0, (m as f64 - n as f64) * phi))),
        )
    }

    /// Average of f(α + β) over a complex Gaussian β with E|β|² = `var`:
    /// α^m ᾱ^n → Σ_i C(m,i) C(n,i) i! var^i α^{m−i} ᾱ^{n−i}.
    pub fn gaussian_smear(&self, var: f64) -> Self {
        if var == 0.0 {
            return self.clone();
        }
        let mut p = Self::zero();
        for (m, n, c) in self.terms() {
            let mut coef = 1.0;
            for i in 0..=m.min(n) {
                if i > 0 {
                    coef *= (m - i + 1) as f64 * (n - i + 1) as f64 / i as f64 * var;
                }
                p.add_term(m - i, n - i, c * coef);
            }
        }
        p
    }

    pub fn eval(&self, alpha: Complex64) -> Complex64 {
        let conj = alpha.conj();
        self.terms()
            .map(|(m, n, c)| c * alpha.powu(m) * conj.powu(n))
            .sum()
    }

    /// Real part of `eval`, for real-valued polynomials.
    pub fn eval_real(&self, alpha: Complex64) -> f64 {
        self.eval(alpha).re
    }
}

impl fmt::Display for PhaseSpacePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|(m, n, c)| format!("({}{:+}i)·α^{m}ᾱ^{n}", c.re, c.im))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
