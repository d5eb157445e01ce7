//! Position-representation engine on a log-spaced symmetric grid.
//!
//! Nodes are uniform in t = ln|x| on ±[floor, half_width], joined through the
//! origin by a short uniform patch with matching spacing. Weights follow the
//! trapezoid rule in t, which is far more accurate than the x-trapezoid for
//! smooth integrands on a geometric mesh.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::{DensityMethod, OutcomeDensity};
use crate::error::{Error, Result};
use crate::fock::{CVector, StateVector};
use crate::poly::PhaseSpacePolynomial;
use crate::special::{normal_mass, normal_pdf};

pub const DEFAULT_HALF_WIDTH: f64 = 32.0;
pub const DEFAULT_POINTS_PER_SIDE: usize = 4000;
pub const DEFAULT_LOG_FLOOR: f64 = 1e-8;

/// Points in each first-derivative stencil.
pub const STENCIL: usize = 13;
/// Points in each Lagrange interpolation window.
pub const INTERP_ORDER: usize = 8;

const MAX_LOG_STEP: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct GridSpec {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    half_width: f64,
    points_per_side: usize,
    log_floor: f64,
    dt: f64,
    stencil_start: Vec<usize>,
    stencil: Vec<[f64; STENCIL]>,
}

/// Symmetric log-spaced grid over ±[log_floor, half_width] plus a linear
/// patch through the origin.
pub fn make_grid(half_width: f64, points_per_side: usize, log_floor: f64) -> Result<GridSpec> {
    if !(log_floor > 0.0 && half_width.is_finite() && log_floor < half_width) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < log_floor < half_width, got floor {log_floor}, half-width {half_width}"
        )));
    }
    if points_per_side < 2 * STENCIL {
        return Err(Error::GridResolution(format!("{points_per_side} points per side is below the minimum {}", 2 * STENCIL)));
    }
    let (t0, t1) = (log_floor.ln(), half_width.ln());
    let dt = (t1 - t0) / (points_per_side - 1) as f64;
    if dt > MAX_LOG_STEP {
        return Err(Error::GridResolution(format!(
            "log step {dt:.3} exceeds {MAX_LOG_STEP}; use more points for span [{log_floor:e}, {half_width}]"
        )));
    }
    let pos: Vec<f64> = (0..points_per_side)
        .map(|i| if i + 1 == points_per_side { half_width } else { (t0 + i as f64 * dt).exp() })
        .collect();
    let k = (1.0 / dt).ceil() as usize;
    let hp = log_floor / k as f64;

    let mut wpos: Vec<f64> = pos.iter().map(|x| x * dt).collect();
    wpos[0] = 0.5 * pos[0] * dt + 0.5 * hp;
    *wpos.last_mut().unwrap() *= 0.5;

    let n = 2 * points_per_side + 2 * k - 1;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in (0..points_per_side).rev() {
        nodes.push(-pos[i]);
        weights.push(wpos[i]);
    }
    for j in -(k as i64 - 1)..=(k as i64 - 1) {
        nodes.push(j as f64 * hp);
        weights.push(hp);
    }
    for i in 0..points_per_side {
        nodes.push(pos[i]);
        weights.push(wpos[i]);
    }
    debug_assert_eq!(nodes.len(), n);

    let (stencil_start, stencil): (Vec<usize>, Vec<[f64; STENCIL]>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = i.saturating_sub(STENCIL / 2).min(n - STENCIL);
            let c = fornberg_first_derivative(nodes[i], &nodes[lo..lo + STENCIL]);
            (lo, c)
        })
        .unzip();

    Ok(GridSpec { nodes, weights, half_width, points_per_side, log_floor, dt, stencil_start, stencil })
}

/// The shared default grid: |x| ∈ [1e−8, 32], 4000 points per side.
pub fn default_grid() -> Arc<GridSpec> {
    static GRID: OnceLock<Arc<GridSpec>> = OnceLock::new();
    GRID.get_or_init(|| {
        Arc::new(make_grid(DEFAULT_HALF_WIDTH, DEFAULT_POINTS_PER_SIDE, DEFAULT_LOG_FLOOR).expect("default grid is valid"))
    })
    .clone()
}

/// First-derivative weights at `z` for arbitrary distinct nodes (Fornberg 1988).
fn fornberg_first_derivative(z: f64, x: &[f64]) -> [f64; STENCIL] {
    let n = x.len();
    let mut c = [[0.0f64; 2]; STENCIL];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    let mut out = [0.0; STENCIL];
    for (o, ci) in out.iter_mut().zip(c.iter()) {
        *o = ci[1];
    }
    out
}

impl GridSpec {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn log_floor(&self) -> f64 {
        self.log_floor
    }

    /// Uniform step in ln|x|.
    pub fn log_step(&self) -> f64 {
        self.dt
    }

    /// max |x_i + x_{N−1−i}|
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| (self.nodes[i] + self.nodes[n - 1 - i]).abs()).fold(0.0, f64::max)
    }

    /// ∫ f(x) dx by the grid weights.
    pub fn integrate(&self, f: impl Fn(f64) -> f64 + Sync) -> f64 {
        self.nodes.par_iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// dv/dx at every node.
    pub fn derivative(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.len());
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let lo = self.stencil_start[i];
                self.stencil[i].iter().zip(&v[lo..lo + STENCIL]).map(|(c, y)| y * *c).sum()
            })
            .collect()
    }

    /// Lagrange interpolation of nodal values at `q`; zero outside the span.
    pub fn interpolate(&self, v: &[Complex64], q: f64) -> Complex64 {
        let n = self.len();
        if !(q >= self.nodes[0] && q <= self.nodes[n - 1]) {
            return Complex64::new(0.0, 0.0);
        }
        let idx = self.nodes.partition_point(|&x| x < q);
        if idx < n && self.nodes[idx] == q {
            return v[idx];
        }
        let lo = idx.saturating_sub(INTERP_ORDER / 2).min(n - INTERP_ORDER);
        let xs = &self.nodes[lo..lo + INTERP_ORDER];
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..INTERP_ORDER {
            let mut l = 1.0;
            for b in 0..INTERP_ORDER {
                if a != b {
                    l *= (q - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += v[lo + a] * l;
        }
        acc
    }
}

/// Fills `out[n]` with h_n(x), the orthonormal oscillator eigenfunctions in
/// the convention ⟨x|0⟩ = (2/π)^{1/4} e^{−x²}. Intermediate values are rescaled
/// so that large |x| underflows cleanly instead of producing NaN.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    const BIG: f64 = 1e150;
    let mut log_scale = -x * x + 0.25 * (2.0 / PI).ln();
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    if out.is_empty() {
        return;
    }
    out[0] = log_scale.exp();
    for n in 0..out.len() - 1 {
        let next = (2.0 * x * cur - (n as f64).sqrt() * prev) / ((n + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
        out[n + 1] = cur * log_scale.exp();
    }
}

/// Polynomial parts ĥ_n with h_n(x) = (2/π)^{1/4} e^{−x²} ĥ_n(x).
pub fn hermite_polynomial_parts(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 2.0 * x;
    }
    for n in 1..out.len().saturating_sub(1) {
        out[n + 1] = (2.0 * x * out[n] - (n as f64).sqrt() * out[n - 1]) / ((n + 1) as f64).sqrt();
    }
}

/// Sign-preserving power x|x|^{g−1}, evaluated in log domain; underflow
/// flushes to ±0.
pub fn x_star_power(x: f64, g: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let m = (g * x.abs().ln()).exp();
    m.copysign(x)
}

/// A pure state sampled on a grid. `phi` records the quadrature angle of the
/// representation: values are ⟨x|ψ⟩ with |x⟩ an eigenvector of X_φ.
#[derive(Debug, Clone)]
pub struct GridWavefunction {
    spec: Arc<GridSpec>,
    values: Vec<Complex64>,
    phi: f64,
    norm_drift: f64,
}

impl GridWavefunction {
    /// Normalizes the samples; the pre-normalization |‖ψ‖² − 1| is kept as drift.
    pub fn new(spec: Arc<GridSpec>, values: Vec<Complex64>, phi: f64) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), found: values.len() });
        }
        let norm_sq = norm_sq_on(&spec, &values);
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(Error::InvalidState("grid wavefunction has zero or non-finite norm".into()));
        }
        let s = 1.0 / norm_sq.sqrt();
        let values = values.into_iter().map(|v| v * s).collect();
        Ok(Self { spec, values, phi, norm_drift: (norm_sq - 1.0).abs() })
    }

    /// Keeps the samples as given, without normalizing.
    pub fn raw(spec: Arc<GridSpec>, values: Vec<Complex64>, phi: f64) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch { expected: spec.len(), found: values.len() });
        }
        let drift = (norm_sq_on(&spec, &values) - 1.0).abs();
        Ok(Self { spec, values, phi, norm_drift: drift })
    }

    pub fn from_fn(spec: Arc<GridSpec>, phi: f64, f: impl Fn(f64) -> Complex64 + Sync) -> Result<Self> {
        let values = spec.nodes().par_iter().map(|&x| f(x)).collect();
        Self::new(spec, values, phi)
    }

    pub fn spec(&self) -> &Arc<GridSpec> {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq_on(&self.spec, &self.values)
    }

    pub fn inner(&self, other: &GridWavefunction) -> Complex64 {
        inner_on(&self.spec, &self.values, &other.values)
    }

    /// L² distance ‖ψ − χ‖ under the grid weights.
    pub fn distance(&self, other: &GridWavefunction) -> f64 {
        self.spec
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Probability mass with |x| > r.
    pub fn mass_outside(&self, r: f64) -> f64 {
        self.spec
            .nodes()
            .iter()
            .zip(self.spec.weights())
            .zip(&self.values)
            .filter(|((x, _), _)| x.abs() > r)
            .map(|((_, w), v)| w * v.norm_sqr())
            .sum()
    }

    /// ∫ |ψ(x)|² f(x) dx.
    pub fn expectation_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.spec
            .nodes()
            .iter()
            .zip(self.spec.weights())
            .zip(&self.values)
            .map(|((&x, w), v)| w * v.norm_sqr() * f(x))
            .sum()
    }

    pub fn value_at(&self, x: f64) -> Complex64 {
        self.spec.interpolate(&self.values, x)
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self { spec: self.spec.clone(), values, phi: self.phi, norm_drift: self.norm_drift }
    }
}

fn norm_sq_on(spec: &GridSpec, v: &[Complex64]) -> f64 {
    spec.weights().iter().zip(v).map(|(w, c)| w * c.norm_sqr()).sum()
}

fn inner_on(spec: &GridSpec, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    spec.weights().iter().zip(a.iter().zip(b)).map(|(w, (x, y))| x.conj() * y * *w).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Letter {
    A,
    ADag,
}

impl Letter {
    fn dagger(self) -> Self {
        match self {
            Letter::A => Letter::ADag,
            Letter::ADag => Letter::A,
        }
    }
}

/// Ladder and quadrature operators acting on nodal values, in the frame of
/// the representation: a = x + ½∂ₓ, a† = x − ½∂ₓ.
pub mod ops {
    use super::*;

    pub fn x(spec: &GridSpec, v: &[Complex64]) -> Vec<Complex64> {
        spec.nodes().iter().zip(v).map(|(x, c)| c * *x).collect()
    }

    pub fn a(spec: &GridSpec, v: &[Complex64]) -> Vec<Complex64> {
        let d = spec.derivative(v);
        spec.nodes().iter().zip(v.iter().zip(d)).map(|(x, (c, dc))| c * *x + dc * 0.5).collect()
    }

    pub fn adag(spec: &GridSpec, v: &[Complex64]) -> Vec<Complex64> {
        let d = spec.derivative(v);
        spec.nodes().iter().zip(v.iter().zip(d)).map(|(x, (c, dc))| c * *x - dc * 0.5).collect()
    }

    /// Y = −(i/2)∂ₓ
    pub fn y(spec: &GridSpec, v: &[Complex64]) -> Vec<Complex64> {
        spec.derivative(v).into_iter().map(|d| d * Complex64::new(0.0, -0.5)).collect()
    }

    /// K = XY + YX = −i(x∂ₓ + ½)
    pub fn k(spec: &GridSpec, v: &[Complex64]) -> Vec<Complex64> {
        let d = spec.derivative(v);
        spec.nodes()
            .iter()
            .zip(v.iter().zip(d))
            .map(|(x, (c, dc))| (dc * *x + c * 0.5) * Complex64::new(0.0, -1.0))
            .collect()
    }
}

fn apply_word(spec: &GridSpec, v: &[Complex64], word: &[Letter]) -> Vec<Complex64> {
    let mut cur = v.to_vec();
    for l in word.iter().rev() {
        cur = match l {
            Letter::A => ops::a(spec, &cur),
            Letter::ADag => ops::adag(spec, &cur),
        };
    }
    cur
}

impl GridWavefunction {
    /// ⟨ψ| a^m a†^n |ψ⟩ in the representation frame. The word is split in
    /// half so that each side is differentiated at most ⌈(m+n)/2⌉ times.
    pub fn ladder_moment(&self, m: u32, n: u32) -> Complex64 {
        let word: Vec<Letter> = std::iter::repeat_n(Letter::A, m as usize)
            .chain(std::iter::repeat_n(Letter::ADag, n as usize))
            .collect();
        let split = word.len() / 2;
        let (left, right) = word.split_at(split);
        let left_dag: Vec<Letter> = left.iter().rev().map(|l| l.dagger()).collect();
        let lv = apply_word(&self.spec, &self.values, &left_dag);
        let rv = apply_word(&self.spec, &self.values, right);
        inner_on(&self.spec, &lv, &rv)
    }

    /// ⟨ψ| Σ c_mn a^m a†^n |ψ⟩ with the polynomial expressed in the
    /// representation frame.
    pub fn antinormal_expectation(&self, f: &PhaseSpacePolynomial) -> Complex64 {
        f.terms()
            .map(|(m, n, c)| if m + n == 0 { c * self.norm_sq() } else { c * self.ladder_moment(m, n) })
            .sum()
    }

    /// ⟨K^k⟩ by balanced application of the stencil operator.
    pub fn k_power_expectation(&self, k: u32) -> f64 {
        let mut left = self.values.clone();
        let mut right = self.values.clone();
        let half = k / 2;
        for _ in 0..half {
            left = ops::k(&self.spec, &left);
        }
        for _ in 0..k - half {
            right = ops::k(&self.spec, &right);
        }
        inner_on(&self.spec, &left, &right).re
    }
}

/// ψ(x) = Σ c_n h_n(x) on the grid. Fails if the sampled norm drifts from 1
/// by more than 1e−6; otherwise renormalizes.
pub fn fock_to_grid(psi: &StateVector, spec: &Arc<GridSpec>) -> Result<GridWavefunction> {
    fock_to_grid_rotated(psi, 0.0, spec)
}

/// The X_φ representation: coefficients c_n e^{−inφ}.
pub fn fock_to_grid_rotated(psi: &StateVector, phi: f64, spec: &Arc<GridSpec>) -> Result<GridWavefunction> {
    let coeffs: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * phi))
        .collect();
    let dim = coeffs.len();
    let values: Vec<Complex64> = spec
        .nodes()
        .par_iter()
        .map_init(
            || vec![0.0; dim],
            |buf, &x| {
                hermite_functions(x, buf);
                buf.iter().zip(&coeffs).map(|(h, c)| c * *h).sum()
            },
        )
        .collect();
    let drift = (norm_sq_on(spec, &values) - 1.0).abs();
    if drift > 1e-6 {
        return Err(Error::GridResolution(format!("Fock-to-grid norm drift {drift:.2e} exceeds 1e-6")));
    }
    GridWavefunction::new(spec.clone(), values, phi)
}

/// Projection c_n = ∫ h_n(x) ψ(x) dx onto the first `dim` levels, in the
/// frame of the wavefunction's own representation angle.
pub fn grid_to_fock(psi: &GridWavefunction, dim: usize) -> Result<StateVector> {
    let spec = psi.spec();
    let coeffs = spec
        .nodes()
        .par_iter()
        .zip(spec.weights())
        .zip(psi.values())
        .fold(
            || (vec![0.0; dim], vec![Complex64::new(0.0, 0.0); dim]),
            |(mut buf, mut acc), ((&x, &w), v)| {
                hermite_functions(x, &mut buf);
                for (a, h) in acc.iter_mut().zip(&buf) {
                    *a += v * (w * h);
                }
                (buf, acc)
            },
        )
        .map(|(_, acc)| acc)
        .reduce(
            || vec![Complex64::new(0.0, 0.0); dim],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let tail = (psi.norm_sq() - captured).max(0.0);
    StateVector::new(CVector::from_vec(coeffs), tail)
}

/// p(x) = |ψ(x)|² on the grid nodes.
pub fn quadrature_density(psi: &GridWavefunction) -> OutcomeDensity {
    let spec = psi.spec();
    OutcomeDensity {
        support: spec.nodes().to_vec(),
        density: psi.values().iter().map(|v| v.norm_sqr()).collect(),
        weights: spec.weights().to_vec(),
        method: DensityMethod::Analytic,
        samples: None,
        seed: None,
    }
}

/// Convolution with a centred normal kernel of variance `var`.
///
/// Each output node is computed by weighted summation when the kernel is
/// well resolved by the local node spacing, and otherwise by exact
/// integration of the piecewise-linear interpolant against the kernel.
pub fn gaussian_convolve(p: &OutcomeDensity, var: f64) -> Result<OutcomeDensity> {
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel variance must be positive, got {var}")));
    }
    let n = p.len();
    if n < 2 {
        return Err(Error::InvalidArgument("density needs at least two nodes".into()));
    }
    let sigma = var.sqrt();
    let (lo, hi) = (p.support[0], p.support[n - 1]);
    if 8.0 * sigma > 0.5 * (hi - lo) {
        return Err(Error::Domain(format!("kernel width {sigma:.3e} is too wide for support [{lo}, {hi}]")));
    }
    let pmax = p.density.iter().copied().fold(0.0, f64::max);
    let significant = 1e-16 * pmax;
    let x = &p.support;
    let y = &p.density;
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x[i];
            let a = x.partition_point(|&u| u < xi - 12.0 * sigma);
            let b = x.partition_point(|&u| u <= xi + 12.0 * sigma).min(n);
            let mut max_gap: f64 = 0.0;
            for j in a.max(1)..b.min(n) {
                if y[j] > significant || y[j - 1] > significant {
                    max_gap = max_gap.max(x[j] - x[j - 1]);
                }
            }
            if sigma >= 3.0 * max_gap {
                (a..b).map(|j| p.weights[j] * y[j] * normal_pdf((xi - x[j]) / sigma) / sigma).sum()
            } else {
                let mut acc = 0.0;
                for j in a.saturating_sub(1)..b.min(n - 1) {
                    let (x0, x1) = (x[j], x[j + 1]);
                    let slope = (y[j + 1] - y[j]) / (x1 - x0);
                    let (za, zb) = ((x0 - xi) / sigma, (x1 - xi) / sigma);
                    let mass = normal_mass(za, zb);
                    // ∫ (y0 + s(u − x0)) N(u; xi, σ²) du
                    let base = y[j] + slope * (xi - x0);
                    acc += base * mass + slope * sigma * (normal_pdf(za) - normal_pdf(zb));
                }
                acc
            }
        })
        .collect();
    Ok(OutcomeDensity {
        support: p.support.clone(),
        density: out,
        weights: p.weights.clone(),
        method: p.method,
        samples: p.samples,
        seed: p.seed,
    })
}
