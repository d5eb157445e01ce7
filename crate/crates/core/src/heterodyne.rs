//! Heterodyne detection: Q-function, outcome sampling and marginal densities
//! of real phase-space functions, with quantum-efficiency smearing.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplifiers::preamp_number_weight;
use crate::density::{trapezoid_weights, DensityMethod, OutcomeDensity};
use crate::error::{Error, Result};
use crate::fock::{anti_normal_operator, expectation, CMatrix, DensityOperator, FockDim};
use crate::gauss::gauss_hermite;
use crate::grid::{hermite_functions, hermite_polynomial_parts};
use crate::poly::PhaseSpacePolynomial;

/// Samples drawn per independently seeded block.
pub const SAMPLE_BLOCK: usize = 4096;
/// Minimum acceptance rate tolerated for the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 0.05;
/// Weight of the uniform level mixture inside the proposal.
const ENVELOPE_FLOOR: f64 = 1e-6;
const ENVELOPE_SAFETY: f64 = 1.2;

/// Detector quantum efficiency η ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency(f64);

impl Efficiency {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidArgument(format!("efficiency must lie in (0, 1], got {eta}")));
        }
        Ok(Self(eta))
    }

    pub fn unit() -> Self {
        Self(1.0)
    }

    pub fn eta(self) -> f64 {
        self.0
    }

    /// Δ² = (1−η)/η, the extra outcome-plane variance E|β|².
    pub fn delta_sq(self) -> f64 {
        (1.0 - self.0) / self.0
    }

    /// Variance of the Gaussian kernel acting on a quadrature outcome,
    /// (2−η)/(4η).
    pub fn quadrature_kernel_variance(self) -> f64 {
        (2.0 - self.0) / (4.0 * self.0)
    }

    pub fn is_unit(self) -> bool {
        self.0 == 1.0
    }
}

/// Precomputed eigen-decomposition for fast evaluation of Q(α) = ⟨α|ρ|α⟩/π.
#[derive(Debug, Clone)]
pub struct QFunction {
    dim: usize,
    components: Vec<(f64, Vec<Complex64>)>,
}

impl QFunction {
    pub fn new(rho: &DensityOperator) -> Self {
        let (vals, vecs) = rho.eigen();
        let components = vals
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-15)
            .map(|(k, &l)| (l, vecs.column(k).iter().copied().collect()))
            .collect();
        Self { dim: rho.dim(), components }
    }

    pub fn eval(&self, alpha: Complex64) -> f64 {
        let r2 = alpha.norm_sqr();
        if !r2.is_finite() {
            return 0.0;
        }
        // ⟨n|α⟩ by upward recurrence, rescaled to stay in range.
        let mut coh = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut log_scale = -0.5 * r2;
        let mut cur = Complex64::new(1.0, 0.0);
        for (n, c) in coh.iter_mut().enumerate() {
            if n > 0 {
                cur *= alpha / (n as f64).sqrt();
                let m = cur.norm();
                if m > 1e100 {
                    cur /= m;
                    log_scale += m.ln();
                }
            }
            *c = cur * log_scale.exp();
        }
        let q: f64 = self
            .components
            .iter()
            .map(|(l, u)| {
                let overlap: Complex64 = u.iter().zip(&coh).map(|(un, cn)| cn.conj() * un).sum();
                l * overlap.norm_sqr()
            })
            .sum();
        q / PI
    }
}

/// Q(α) = ⟨α|ρ|α⟩/π, exact for the truncated state.
pub fn q_function(rho: &DensityOperator, alpha: Complex64) -> Result<f64> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::Domain("Q-function argument must be finite".into()));
    }
    Ok(QFunction::new(rho).eval(alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexOutcomeSample {
    pub values: Vec<Complex64>,
    pub eta: f64,
    pub seed: u64,
    pub acceptance_rate: f64,
}

/// Gaussian-mixture rejection envelope around the displaced state.
struct Envelope {
    center: Complex64,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    bound: f64,
}

impl Envelope {
    fn density(&self, z: Complex64) -> f64 {
        let r2 = z.norm_sqr();
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(n, &w)| {
                let v = (n + 1) as f64;
                w * (-r2 / v).exp() / (PI * v)
            })
            .sum()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let u: f64 = rng.random();
        let n = self.cumulative.partition_point(|&c| c < u).min(self.weights.len() - 1);
        let s = ((n + 1) as f64 / 2.0).sqrt();
        let (x, y): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
        Complex64::new(s * x, s * y)
    }
}

fn displacement(beta: Complex64, dim: usize) -> CMatrix {
    let mut gen = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = beta * s; // β a†
        gen[(n - 1, n)] = -beta.conj() * s; // −β̄ a
    }
    gen.exp()
}

fn build_envelope(rho: &DensityOperator, q: &QFunction) -> Result<Envelope> {
    let d = rho.dim();
    let mut mean_a = Complex64::new(0.0, 0.0);
    for n in 1..d {
        mean_a += rho.matrix()[(n, n - 1)] * (n as f64).sqrt();
    }
    let big = 2 * d + (4.0 * mean_a.norm_sqr()).ceil() as usize + 32;
    let padded = rho.resized(big)?;
    let dm = displacement(-mean_a, big);
    let shifted = &dm * padded.matrix() * dm.adjoint();
    let mut weights: Vec<f64> = (0..big).map(|n| shifted[(n, n)].re.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Envelope("displaced state has no population".into()));
    }
    // A small uniform component keeps the mixture above Q in the far field,
    // where the truncation tail of ρ is invisible in the shifted populations.
    let floor = ENVELOPE_FLOOR / big as f64;
    weights.iter_mut().for_each(|w| *w = (1.0 - ENVELOPE_FLOOR) * *w / total + floor);
    let mut acc = 0.0;
    let cumulative: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();

    let mut env = Envelope { center: mean_a, weights, cumulative, bound: 1.0 };
    let n_hi = env.weights.len();
    let radius = 8.0 * ((n_hi as f64 + 1.0) / 2.0).sqrt() + 2.0;
    let (nr, na) = (400usize, 128usize);
    let max_ratio = (0..=nr)
        .into_par_iter()
        .map(|i| {
            let r = radius * i as f64 / nr as f64;
            (0..na)
                .map(|j| {
                    let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / na as f64);
                    let e = env.density(z);
                    if e > 1e-300 { q.eval(env.center + z) / e } else { 0.0 }
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    env.bound = ENVELOPE_SAFETY * max_ratio;
    if !(env.bound.is_finite() && env.bound > 0.0) {
        return Err(Error::Envelope(format!("envelope bound {} is not usable", env.bound)));
    }
    if 1.0 / env.bound < MIN_ACCEPTANCE {
        return Err(Error::Envelope(format!(
            "expected acceptance {:.3} is below the floor {MIN_ACCEPTANCE}",
            1.0 / env.bound
        )));
    }
    Ok(env)
}

/// Drops top levels whose combined population is below 1e−15, which changes
/// Q by less than that amount.
fn compact(rho: &DensityOperator) -> Result<DensityOperator> {
    let pops = rho.populations();
    let mut tail = 0.0;
    let mut keep = pops.len();
    while keep > 2 && tail + pops[keep - 1] < 1e-15 {
        tail += pops[keep - 1];
        keep -= 1;
    }
    if keep == pops.len() { Ok(rho.clone()) } else { rho.resized(keep) }
}

/// I.i.d. heterodyne outcomes from Q ⊛ Gaussian(Δ²_η), by rejection sampling
/// from a Gaussian mixture centred at Tr[ρa].
///
/// Blocks of [`SAMPLE_BLOCK`] samples each get their own ChaCha8 stream, so
/// the output depends only on `seed` and `count`, not on thread scheduling.
pub fn heterodyne_sample(rho: &DensityOperator, count: usize, eta: Efficiency, seed: u64) -> Result<ComplexOutcomeSample> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let rho = &compact(rho)?;
    let q = QFunction::new(rho);
    let env = build_envelope(rho, &q)?;
    let noise_sd = (eta.delta_sq() / 2.0).sqrt();
    let blocks = count.div_ceil(SAMPLE_BLOCK);
    let results: Vec<(Vec<Complex64>, u64, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let want = SAMPLE_BLOCK.min(count - b * SAMPLE_BLOCK);
            let mut out = Vec::with_capacity(want);
            let (mut proposed, mut violations) = (0u64, 0u64);
            while out.len() < want {
                proposed += 1;
                let z = env.draw(&mut rng);
                let e = env.density(z);
                let qz = q.eval(env.center + z);
                if qz > env.bound * e {
                    violations += 1;
                }
                let u: f64 = rng.random();
                if u * env.bound * e <= qz {
                    let mut alpha = env.center + z;
                    if noise_sd > 0.0 {
                        let (x, y): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                        alpha += Complex64::new(noise_sd * x, noise_sd * y);
                    }
                    out.push(alpha);
                }
            }
            (out, proposed, violations)
        })
        .collect();
    let violations: u64 = results.iter().map(|r| r.2).sum();
    if violations > 0 {
        return Err(Error::Envelope(format!("{violations} proposals exceeded the envelope bound")));
    }
    let proposed: u64 = results.iter().map(|r| r.1).sum();
    let values: Vec<Complex64> = results.into_iter().flat_map(|r| r.0).collect();
    let acceptance_rate = values.len() as f64 / proposed as f64;
    Ok(ComplexOutcomeSample { values, eta: eta.eta(), seed, acceptance_rate })
}

/// p(h) = Σ ρ_nn e^{−h} hⁿ/n! for the outcome h = |α|² at unit efficiency.
pub fn number_marginal_density(rho: &DensityOperator, eta: Efficiency, h_grid: &[f64]) -> Result<OutcomeDensity> {
    if !eta.is_unit() {
        return Err(Error::Unsupported(
            "the closed-form number density needs eta = 1; use the Monte Carlo preamplified density for eta < 1".into(),
        ));
    }
    if h_grid.iter().any(|&h| h < 0.0 || !h.is_finite()) {
        return Err(Error::Domain("number outcomes h must be finite and nonnegative".into()));
    }
    let pops = rho.populations();
    let density = h_grid
        .par_iter()
        .map(|&h| pops.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(n, &p)| p * preamp_number_weight(n as u64, 1, h)).sum())
        .collect();
    OutcomeDensity::new(h_grid.to_vec(), density, trapezoid_weights(h_grid), DensityMethod::Analytic)
}

/// Rotated-frame quadrature density of ρ convolved with a normal kernel of
/// variance `kernel_var`, by Gauss–Hermite quadrature that is exact for the
/// truncated state.
pub fn smeared_quadrature_density(
    rho: &DensityOperator,
    phi: f64,
    kernel_var: f64,
    x_grid: &[f64],
) -> Result<OutcomeDensity> {
    if !(kernel_var >= 0.0 && kernel_var.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel variance must be >= 0, got {kernel_var}")));
    }
    if x_grid.len() < 2 {
        return Err(Error::InvalidArgument("outcome grid needs at least two points".into()));
    }
    let d = rho.dim();
    let dim = FockDim::new(d)?;
    let x_op = crate::fock::quadrature_operator(phi, dim);
    let padded = rho.resized(d + 2)?;
    let x_pad = crate::fock::quadrature_operator(phi, FockDim::new(d + 2)?);
    let mean = expectation(&x_op, rho)?.re;
    let second = expectation(&x_pad.compose(&x_pad), &padded)?.re;
    let sd = (second - mean * mean + kernel_var).max(0.0).sqrt();
    let (lo, hi) = (x_grid[0], x_grid[x_grid.len() - 1]);
    if lo > mean - 8.0 * sd || hi < mean + 8.0 * sd {
        return Err(Error::GridResolution(format!(
            "outcome grid [{lo}, {hi}] does not cover mean {mean:.4} ± 8·{sd:.4}"
        )));
    }

    let (vals, vecs) = rho.eigen();
    let comps: Vec<(f64, Vec<Complex64>)> = vals
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-15)
        .map(|(k, &l)| {
            let v = (0..d).map(|n| vecs[(n, k)] * Complex64::from_polar(1.0, -(n as f64) * phi)).collect();
            (l, v)
        })
        .collect();

    let density: Vec<f64> = if kernel_var == 0.0 {
        x_grid
            .par_iter()
            .map_init(
                || vec![0.0; d],
                |buf, &x| {
                    hermite_functions(x, buf);
                    comps
                        .iter()
                        .map(|(l, v)| l * v.iter().zip(buf.iter()).map(|(c, h)| c * *h).sum::<Complex64>().norm_sqr())
                        .sum()
                },
            )
            .collect()
    } else {
        let (z, w) = gauss_hermite(d + 2);
        let s2 = kernel_var;
        let p = 2.0 + 1.0 / (2.0 * s2);
        let sqrt_p = p.sqrt();
        let pref = (2.0 / PI).sqrt() / (2.0 * PI * s2).sqrt() / sqrt_p;
        x_grid
            .par_iter()
            .map_init(
                || vec![0.0; d],
                |buf, &x| {
                    let mu = x / (2.0 * s2 * p);
                    let c = -x * x / (2.0 * s2) + p * mu * mu;
                    let mut acc = 0.0;
                    for (zk, wk) in z.iter().zip(&w) {
                        hermite_polynomial_parts(mu + zk / sqrt_p, buf);
                        let inner: f64 = comps
                            .iter()
                            .map(|(l, v)| l * v.iter().zip(buf.iter()).map(|(cn, h)| cn * *h).sum::<Complex64>().norm_sqr())
                            .sum();
                        acc += wk * inner;
                    }
                    pref * c.exp() * acc
                },
            )
            .collect()
    };
    OutcomeDensity::new(x_grid.to_vec(), density, trapezoid_weights(x_grid), DensityMethod::Analytic)
}

/// Density of Re(α e^{−iφ}) under heterodyne detection with efficiency η:
/// the quadrature density at angle φ convolved with variance (2−η)/(4η).
pub fn quadrature_marginal_density(rho: &DensityOperator, phi: f64, eta: Efficiency, x_grid: &[f64]) -> Result<OutcomeDensity> {
    smeared_quadrature_density(rho, phi, eta.quadrature_kernel_variance(), x_grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalMethod {
    MonteCarlo,
    Quadrature2d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalOptions {
    pub method: MarginalMethod,
    /// Fixed bin count; Freedman–Diaconis (capped at 4096) when absent.
    pub bins: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Cells per side of the phase-space grid for the quadrature route.
    pub cells: usize,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self { method: MarginalMethod::MonteCarlo, bins: None, samples: 1_000_000, seed: 0, cells: 512 }
    }
}

pub const MAX_BINS: usize = 4096;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Normalized histogram of weighted values on bin centres.
pub fn histogram_density(values: &[f64], weights: Option<&[f64]>, bins: Option<usize>, range: (f64, f64)) -> Result<OutcomeDensity> {
    let (lo, hi) = range;
    if !(hi > lo) {
        return Err(Error::Domain(format!("degenerate histogram range [{lo}, {hi}]")));
    }
    let nb = bins.unwrap_or(200).clamp(1, MAX_BINS);
    let width = (hi - lo) / nb as f64;
    let mut mass = vec![0.0; nb];
    let mut total = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        total += w;
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(nb - 1);
        mass[b] += w;
    }
    let support = (0..nb).map(|b| lo + (b as f64 + 0.5) * width).collect();
    let density = mass.iter().map(|m| m / (total * width)).collect();
    OutcomeDensity::new(support, density, vec![width; nb], DensityMethod::MonteCarlo)
}

/// Freedman–Diaconis bin count for `sorted` on `range`, capped at [`MAX_BINS`].
pub fn freedman_diaconis_bins(sorted: &[f64], range: (f64, f64)) -> usize {
    let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    let n = sorted.len() as f64;
    let width = 2.0 * iqr / n.cbrt();
    if !(width > 0.0) {
        return 1;
    }
    (((range.1 - range.0) / width).ceil() as usize).clamp(1, MAX_BINS)
}

/// Marginal density of w = f(α) under heterodyne detection with efficiency η.
pub fn generic_marginal_density(
    rho: &DensityOperator,
    f: &PhaseSpacePolynomial,
    eta: Efficiency,
    opts: &MarginalOptions,
) -> Result<OutcomeDensity> {
    f.ensure_real()?;
    match opts.method {
        MarginalMethod::MonteCarlo => {
            let sample = heterodyne_sample(rho, opts.samples, eta, opts.seed)?;
            let vals: Vec<f64> = sample.values.iter().map(|a| f.eval_real(*a)).collect();
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("f overflowed on a sampled outcome".into()));
            }
            let mut sorted = vals.clone();
            sorted.sort_by(f64::total_cmp);
            // Trim at most 1e−5 of the mass so that bins stay usable for heavy tails.
            let range = (quantile(&sorted, 0.5e-5), quantile(&sorted, 1.0 - 0.5e-5));
            let range = if range.1 > range.0 { range } else { (range.0 - 0.5, range.1 + 0.5) };
            let bins = opts.bins.or_else(|| Some(freedman_diaconis_bins(&sorted, range)));
            let mut d = histogram_density(&vals, None, bins, range)?;
            d.samples = Some(opts.samples as u64);
            d.seed = Some(opts.seed);
            Ok(d)
        }
        MarginalMethod::Quadrature2d => {
            let (cells, weights) = smeared_q_on_plane(rho, eta, opts.cells)?;
            let vals: Vec<f64> = cells.iter().map(|a| f.eval_real(*a)).collect();
            let wmax = weights.iter().copied().fold(0.0, f64::max);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (v, w) in vals.iter().zip(&weights) {
                if *w > 1e-14 * wmax {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
            }
            let mut d = histogram_density(&vals, Some(&weights), opts.bins, (lo, hi))?;
            d.method = DensityMethod::Quadrature2d;
            Ok(d)
        }
    }
}

/// Cell centres and cell masses of the (smeared) Q-function on a square grid
/// sized from the state's second moments.
pub fn smeared_q_on_plane(rho: &DensityOperator, eta: Efficiency, cells: usize) -> Result<(Vec<Complex64>, Vec<f64>)> {
    if cells < 16 {
        return Err(Error::InvalidArgument("need at least 16 cells per side".into()));
    }
    let d = rho.dim();
    let mut mean_a = Complex64::new(0.0, 0.0);
    let mut n_mean = 0.0;
    for n in 0..d {
        n_mean += n as f64 * rho.matrix()[(n, n)].re;
        if n > 0 {
            mean_a += rho.matrix()[(n, n - 1)] * (n as f64).sqrt();
        }
    }
    let spread = (n_mean - mean_a.norm_sqr() + 1.0 + eta.delta_sq()).max(1.0).sqrt();
    let half = 8.0 * spread + 2.0;
    let h = 2.0 * half / cells as f64;
    let q = QFunction::new(rho);
    let coord = |i: usize| -half + (i as f64 + 0.5) * h;
    let mut grid: Vec<f64> = (0..cells * cells)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / cells, k % cells);
            q.eval(mean_a + Complex64::new(coord(i), coord(j))) * h * h
        })
        .collect();
    let dsq = eta.delta_sq();
    if dsq > 0.0 {
        let sd = (dsq / 2.0).sqrt();
        let reach = ((8.0 * sd / h).ceil() as usize).min(cells);
        let kernel: Vec<f64> = (0..=reach).map(|j| (-0.5 * (j as f64 * h / sd).powi(2)).exp()).collect();
        let norm = kernel[0] + 2.0 * kernel[1..].iter().sum::<f64>();
        let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();
        let conv = |src: &[f64], stride_major: bool| -> Vec<f64> {
            (0..cells * cells)
                .into_par_iter()
                .map(|k| {
                    let (i, j) = (k / cells, k % cells);
                    let at = |t: usize| if stride_major { src[t * cells + j] } else { src[i * cells + t] };
                    let c = if stride_major { i } else { j };
                    let mut acc = kernel[0] * at(c);
                    for (o, kv) in kernel.iter().enumerate().skip(1) {
                        if c >= o {
                            acc += kv * at(c - o);
                        }
                        if c + o < cells {
                            acc += kv * at(c + o);
                        }
                    }
                    acc
                })
                .collect()
        };
        grid = conv(&grid, true);
        grid = conv(&grid, false);
    }
    let centres = (0..cells * cells)
        .map(|k| mean_a + Complex64::new(coord(k / cells), coord(k % cells)))
        .collect();
    Ok((centres, grid))
}

/// ∫ p(w) w^l dw = Tr[ρ Γ_{Δ²}[:f^l:_A]], evaluated operator-analytically.
pub fn heterodyne_moment(f: &PhaseSpacePolynomial, l: u32, rho: &DensityOperator, eta: Efficiency) -> Result<f64> {
    let poly = f.pow(l).gaussian_smear(eta.delta_sq());
    let op = anti_normal_operator(&poly, FockDim::new(rho.dim())?)?;
    Ok(expectation(&op, rho)?.re)
}
