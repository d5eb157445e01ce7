//! Truncated Fock-space states and operators.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::PhaseSpacePolynomial;
use crate::special::{ln_factorial, ln_poisson};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default tail-mass threshold for state truncation.
pub const TAIL_THRESHOLD: f64 = 1e-10;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("Fock dimension must be >= 2, got {dim}")));
        }
        Ok(Self(dim))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
    tail_mass: f64,
}

impl StateVector {
    /// Normalizes `amplitudes`; `tail_mass` records probability lost to truncation.
    pub fn new(amplitudes: CVector, tail_mass: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidArgument("state needs at least two levels".into()));
        }
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("state vector has zero or non-finite norm".into()));
        }
        Ok(Self { amplitudes: amplitudes / Complex64::new(norm, 0.0), tail_mass })
    }

    pub fn from_slice(amps: &[Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps), 0.0)
    }

    pub fn number(n: usize, dim: FockDim) -> Result<Self> {
        if n >= dim.get() {
            return Err(Error::DimensionMismatch { expected: n + 1, found: dim.get() });
        }
        let mut v = CVector::zeros(dim.get());
        v[n] = C1;
        Self::new(v, 0.0)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator { matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }

    /// Zero-pads or rejects truncation to `dim` levels.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        let keep = dim.min(self.dim());
        let lost: f64 = self.amplitudes.iter().skip(keep).map(|c| c.norm_sqr()).sum();
        if lost > TAIL_THRESHOLD {
            return Err(Error::Truncation { tail_mass: lost, threshold: TAIL_THRESHOLD });
        }
        let mut v = CVector::zeros(dim);
        v.rows_mut(0, keep).copy_from(&self.amplitudes.rows(0, keep));
        Self::new(v, self.tail_mass + lost)
    }
}

fn truncation_check(tail_mass: f64) -> Result<()> {
    if tail_mass > TAIL_THRESHOLD {
        Err(Error::Truncation { tail_mass, threshold: TAIL_THRESHOLD })
    } else {
        Ok(())
    }
}

/// Poisson mass beyond index `dim`, summed directly so that tiny tails are
/// not lost to cancellation.
fn poisson_tail(mean: f64, dim: usize) -> f64 {
    let mut tail = 0.0;
    let mut n = dim as u64;
    loop {
        let t = ln_poisson(n, mean).exp();
        tail += t;
        if n as f64 > mean && (t == 0.0 || t < 1e-17 * tail) {
            break;
        }
        n += 1;
        if n > dim as u64 + 100_000 {
            break;
        }
    }
    tail
}

/// Coherent state |β⟩ truncated to `dim` levels and renormalized.
/// Fails when the discarded Poisson tail exceeds 1e−10.
pub fn coherent_state(beta: Complex64, dim: FockDim) -> Result<StateVector> {
    let d = dim.get();
    let mean = beta.norm_sqr();
    let tail = if mean == 0.0 { 0.0 } else { poisson_tail(mean, d) };
    truncation_check(tail)?;
    let (r, theta) = beta.to_polar();
    let amps = CVector::from_iterator(
        d,
        (0..d).map(|n| {
            if r == 0.0 {
                return if n == 0 { C1 } else { C0 };
            }
            let ln_mag = -0.5 * mean + n as f64 * r.ln() - 0.5 * ln_factorial(n as u64);
            Complex64::from_polar(ln_mag.exp(), n as f64 * theta)
        }),
    );
    StateVector::new(amps, tail)
}

/// Squeezed vacuum S(ξ)|0⟩ with ξ = r e^{iθ}, so that ⟨a²⟩ = −e^{iθ} sinh r cosh r.
pub fn squeezed_vacuum(r: f64, theta: f64, dim: FockDim) -> Result<StateVector> {
    let d = dim.get();
    let t = r.tanh();
    let ln_pref = -0.5 * r.cosh().ln();
    let mut amps = CVector::zeros(d);
    let mut mass = 0.0;
    for k in 0..d.div_ceil(2) {
        let n = 2 * k;
        if n >= d {
            break;
        }
        let ln_mag = if t == 0.0 {
            if k == 0 { ln_pref } else { f64::NEG_INFINITY }
        } else {
            ln_pref + k as f64 * t.ln() + 0.5 * ln_factorial(n as u64)
                - k as f64 * 2f64.ln()
                - ln_factorial(k as u64)
        };
        let phase = Complex64::from_polar(1.0, k as f64 * (theta + std::f64::consts::PI));
        amps[n] = phase * ln_mag.exp();
        mass += ln_mag.exp().powi(2);
    }
    let tail = (1.0 - mass).max(0.0);
    truncation_check(tail)?;
    StateVector::new(amps, tail)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e−12), unit trace (1e−10) and positivity (−1e−10).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.nrows() < 2 {
            return Err(Error::InvalidArgument("density operator needs dim >= 2".into()));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.2e})")));
        }
        let tr = matrix.trace();
        if (tr - C1).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let rho = Self { matrix };
        let min_eig = rho.eigen().0.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.2e}")));
        }
        Ok(rho)
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.density()
    }

    /// Diagonal state Σ p_n |n⟩⟨n|; `probs` is normalized.
    pub fn diagonal_state(probs: &[f64]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || total <= 0.0 {
            return Err(Error::InvalidState("diagonal weights must be nonnegative with positive sum".into()));
        }
        let d = CVector::from_iterator(probs.len(), probs.iter().map(|&p| Complex64::new(p / total, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Photon-number distribution ρ_nn.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.matrix[(n, n)].re.max(0.0)).collect()
    }

    /// Eigenvalues (ascending) and eigenvectors of the Hermitian matrix.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = CMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
        (vals, vecs)
    }

    /// Pure-state vector if ρ has rank one (largest eigenvalue ≥ 1 − tol).
    pub fn as_pure(&self, tol: f64) -> Option<StateVector> {
        let (vals, vecs) = self.eigen();
        let top = *vals.last()?;
        if top < 1.0 - tol {
            return None;
        }
        StateVector::new(vecs.column(self.dim() - 1).into_owned(), 0.0).ok()
    }

    /// Embeds into a larger space (zero padding) or truncates when the
    /// discarded block carries no more than the tail threshold.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        let keep = dim.min(self.dim());
        let lost: f64 = (keep..self.dim()).map(|n| self.matrix[(n, n)].re).sum();
        if lost > TAIL_THRESHOLD {
            return Err(Error::Truncation { tail_mass: lost, threshold: TAIL_THRESHOLD });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (keep, keep)).copy_from(&self.matrix.view((0, 0), (keep, keep)));
        let tr = m.trace();
        Ok(Self { matrix: m / tr })
    }

    /// Population of the highest retained level, a cheap truncation diagnostic.
    pub fn top_level_population(&self) -> f64 {
        let d = self.dim() - 1;
        self.matrix[(d, d)].re
    }

    /// U ρ U†, for a unitary supplied by the caller.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let m = u * &self.matrix * u.adjoint();
        Self { matrix: (&m + m.adjoint()) * Complex64::new(0.5, 0.0) }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OpLabel {
    A,
    ADag,
    N,
    X(f64),
    K,
    Custom(String),
}

impl fmt::Display for OpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpLabel::A => write!(f, "a"),
            OpLabel::ADag => write!(f, "a†"),
            OpLabel::N => write!(f, "N"),
            OpLabel::X(phi) => write!(f, "X_{phi}"),
            OpLabel::K => write!(f, "K"),
            OpLabel::Custom(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub matrix: CMatrix,
    pub label: OpLabel,
}

impl FockOperator {
    pub fn new(matrix: CMatrix, label: OpLabel) -> Self {
        Self { matrix, label }
    }

    pub fn identity(dim: FockDim) -> Self {
        Self::new(CMatrix::identity(dim.get(), dim.get()), OpLabel::Custom("1".into()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.matrix.adjoint(), OpLabel::Custom(format!("({})†", self.label)))
    }

    pub fn compose(&self, rhs: &FockOperator) -> Self {
        Self::new(&self.matrix * &rhs.matrix, OpLabel::Custom(format!("{}·{}", self.label, rhs.label)))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(&self.matrix * psi.amplitudes())
    }
}

/// Annihilation and creation operators, a|n⟩ = √n |n−1⟩.
pub fn ladder_operators(dim: FockDim) -> (FockOperator, FockOperator) {
    let d = dim.get();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    (FockOperator::new(a, OpLabel::A), FockOperator::new(adag, OpLabel::ADag))
}

/// N = a†a, diagonal with exact integer entries.
pub fn number_operator(dim: FockDim) -> FockOperator {
    let d = CVector::from_iterator(dim.get(), (0..dim.get()).map(|n| Complex64::new(n as f64, 0.0)));
    FockOperator::new(CMatrix::from_diagonal(&d), OpLabel::N)
}

/// X_φ = (a† e^{iφ} + a e^{−iφ})/2.
pub fn quadrature_operator(phi: f64, dim: FockDim) -> FockOperator {
    let (a, adag) = ladder_operators(dim);
    let m = (adag.matrix * Complex64::from_polar(0.5, phi)) + (a.matrix * Complex64::from_polar(0.5, -phi));
    FockOperator::new(m, OpLabel::X(phi))
}

/// K = −(i/2)(a² − a†²), built entrywise so it is Hermitian to rounding.
pub fn k_operator(dim: FockDim) -> FockOperator {
    let d = dim.get();
    let mut m = CMatrix::zeros(d, d);
    for n in 2..d {
        let v = 0.5 * ((n * (n - 1)) as f64).sqrt();
        // −(i/2)⟨n−2|a²|n⟩ and +(i/2)⟨n|a†²|n−2⟩
        m[(n - 2, n)] = Complex64::new(0.0, -v);
        m[(n, n - 2)] = Complex64::new(0.0, v);
    }
    FockOperator::new(m, OpLabel::K)
}

/// ⟨j+n−m| a^m a†^n |j⟩ computed exactly in the untruncated space.
pub(crate) fn antinormal_element(m: u32, n: u32, j: usize) -> f64 {
    // a†^n |j⟩ = sqrt((j+1)…(j+n)) |j+n⟩, then a^m lowers to j+n−m.
    let mut prod = 1.0f64;
    for i in 1..=n as usize {
        prod *= (j + i) as f64;
    }
    for i in 0..m as usize {
        prod *= (j + n as usize - i) as f64;
    }
    prod.sqrt()
}

/// Σ c_mn a^m a†^n, compressed exactly onto the retained levels.
pub fn anti_normal_operator(f: &PhaseSpacePolynomial, dim: FockDim) -> Result<FockOperator> {
    let d = dim.get();
    let needed = f.max_degree() as usize + 2;
    if d <= needed {
        let (m, n) = f.terms().map(|(m, n, _)| (m, n)).max_by_key(|&(m, n)| m.max(n)).unwrap_or((0, 0));
        return Err(Error::DegreeTooHigh { m, n, needed, dim: d });
    }
    let mut out = CMatrix::zeros(d, d);
    for (m, n, c) in f.terms() {
        for j in 0..d {
            let i = j as i64 + n as i64 - m as i64;
            if i < 0 || i >= d as i64 {
                continue;
            }
            out[(i as usize, j)] += c * antinormal_element(m, n, j);
        }
    }
    Ok(FockOperator::new(out, OpLabel::Custom(format!(":{f}:_A"))))
}

/// ⟨r| Σ c_mn a^m a†^n |s⟩ in the untruncated space.
pub fn anti_normal_element(f: &PhaseSpacePolynomial, r: usize, s: usize) -> Complex64 {
    f.terms()
        .filter(|&(m, n, _)| s as i64 + n as i64 - m as i64 == r as i64)
        .map(|(m, n, c)| c * antinormal_element(m, n, s))
        .sum()
}

/// Tr[ρ·op].
pub fn expectation(op: &FockOperator, rho: &DensityOperator) -> Result<Complex64> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    let (a, b) = (&rho.matrix, &op.matrix);
    let d = rho.dim();
    let mut acc = C0;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

/// ⟨ψ|op|ψ⟩ without forming the density matrix.
pub fn expectation_pure(op: &FockOperator, psi: &StateVector) -> Result<Complex64> {
    let v = op.apply(psi)?;
    Ok(psi.amplitudes().dotc(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn fock_dim_rejects_tiny() {
        assert!(FockDim::new(1).is_err());
        assert!(FockDim::new(2).is_ok());
    }

    #[test]
    fn vacuum_coherent_state_is_exact() {
        let psi = coherent_state(C0, dim(16)).unwrap();
        assert_eq!(psi.amplitudes()[0], C1);
        assert!(psi.amplitudes().iter().skip(1).all(|c| *c == C0));
    }

    #[test]
    fn coherent_populations_are_poisson() {
        let psi = coherent_state(Complex64::new(12f64.sqrt(), 0.0), dim(64)).unwrap();
        let p12 = psi.amplitudes()[12].norm_sqr();
        let oracle = (-12.0f64).exp() * 12f64.powi(12) / (1..=12).map(|k| k as f64).product::<f64>();
        assert_abs_diff_eq!(p12, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(p12, 0.11437, epsilon = 1e-5);
        let mean: f64 = psi.amplitudes().iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum();
        assert_abs_diff_eq!(mean, 12.0, epsilon = 1e-8);
        assert!(psi.tail_mass() < 1e-10);
    }

    #[test]
    fn coherent_truncation_is_reported() {
        let err = coherent_state(Complex64::new(5.0, 0.0), dim(20)).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn ladder_operators_basic() {
        let (a, adag) = ladder_operators(dim(2));
        assert_eq!(a.matrix[(0, 1)], C1);
        assert_eq!(a.matrix[(0, 0)], C0);
        assert_eq!(a.matrix[(1, 0)], C0);
        assert_eq!(adag.matrix, a.matrix.adjoint());

        let (a, adag) = ladder_operators(dim(32));
        let n = adag.compose(&a);
        assert_eq!(number_operator(dim(32)).matrix[(5, 5)], Complex64::new(5.0, 0.0));
        assert!((&n.matrix - &number_operator(dim(32)).matrix).iter().all(|c| c.norm() < 1e-13));
        let comm = &a.matrix * &adag.matrix - &adag.matrix * &a.matrix;
        for i in 0..31 {
            for j in 0..31 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm[(i, j)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(comm[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_expectations() {
        let d = dim(32);
        let x0 = quadrature_operator(0.0, d);
        assert!(x0.hermiticity_residual() < 1e-15);
        let vac = DensityOperator::pure(&StateVector::number(0, d).unwrap());
        assert_abs_diff_eq!(expectation(&x0.compose(&x0), &vac).unwrap().re, 0.25, epsilon = 1e-15);

        let coh2 = coherent_state(Complex64::new(2.0, 0.0), d).unwrap().density();
        let xp = quadrature_operator(std::f64::consts::FRAC_PI_2, d);
        assert_abs_diff_eq!(expectation(&xp, &coh2).unwrap().re, 0.0, epsilon = 1e-12);

        let coh = coherent_state(Complex64::new(1.0, 1.0), d).unwrap().density();
        assert_abs_diff_eq!(expectation(&x0, &coh).unwrap().re, 1.0, epsilon = 1e-12);

        // [X_0, X_{π/2}] = i/2 away from the top level
        let comm = &x0.matrix * &xp.matrix - &xp.matrix * &x0.matrix;
        for i in 0..31 {
            assert_abs_diff_eq!(comm[(i, i)].im, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn k_operator_properties() {
        let d = dim(24);
        let k = k_operator(d);
        assert!(k.hermiticity_residual() < 1e-14);
        for n in 0..24 {
            assert_eq!(k.matrix[(n, n)], C0);
        }
        let x = quadrature_operator(0.0, d);
        let y = quadrature_operator(std::f64::consts::FRAC_PI_2, d);
        let xy = &x.matrix * &y.matrix + &y.matrix * &x.matrix;
        for i in 0..22 {
            for j in 0..22 {
                assert!((xy[(i, j)] - k.matrix[(i, j)]).norm() < 1e-12);
            }
        }
        let beta = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let coh = coherent_state(beta, d).unwrap().density();
        assert_abs_diff_eq!(expectation(&k, &coh).unwrap().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn anti_normal_examples() {
        let d = dim(16);
        let vac = StateVector::number(0, d).unwrap().density();
        let f = PhaseSpacePolynomial::mod_squared();
        let op = anti_normal_operator(&f, d).unwrap();
        assert_abs_diff_eq!(expectation(&op, &vac).unwrap().re, 1.0, epsilon = 1e-15);
        for n in 0..14 {
            assert_abs_diff_eq!(op.matrix[(n, n)].re, (n + 1) as f64, epsilon = 1e-12);
        }
        let op2 = anti_normal_operator(&f.pow(2), d).unwrap();
        assert_abs_diff_eq!(expectation(&op2, &vac).unwrap().re, 2.0, epsilon = 1e-15);
        assert!(anti_normal_operator(&f.pow(20), d).is_err());
    }

    #[test]
    fn anti_normal_of_k_family_is_k_plus_number_term() {
        let d = dim(20);
        let k = k_operator(d);
        let op = anti_normal_operator(&PhaseSpacePolynomial::k_family(0.0), d).unwrap();
        assert!((&op.matrix - &k.matrix).iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::from_diagonal(&CVector::from_vec(vec![C1, C1]));
        assert!(DensityOperator::new(bad).is_err());
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![Complex64::new(1.5, 0.0), Complex64::new(-0.5, 0.0)]));
        assert!(DensityOperator::new(neg).is_err());
        let rho = DensityOperator::diagonal_state(&[0.25, 0.75, 0.0]).unwrap();
        assert_abs_diff_eq!(rho.trace().re, 1.0);
        assert!(rho.as_pure(1e-9).is_none());
    }

    #[test]
    fn squeezed_vacuum_moments() {
        let d = dim(80);
        let (r, th) = (0.5f64, 0.3f64);
        let psi = squeezed_vacuum(r, th, d).unwrap();
        let (a, _) = ladder_operators(d);
        let a2 = a.compose(&a);
        let m = expectation_pure(&a2, &psi).unwrap();
        let oracle = -Complex64::from_polar(1.0, th) * r.sinh() * r.cosh();
        assert!((m - oracle).norm() < 1e-12);
        let n = expectation_pure(&number_operator(d), &psi).unwrap().re;
        assert_abs_diff_eq!(n, r.sinh().powi(2), epsilon = 1e-12);
    }
}
