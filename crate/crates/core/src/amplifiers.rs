//! Ideal coherence-preserving amplifiers and preamplified outcome densities.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{trapezoid_weights, DensityMethod, OutcomeDensity};
use crate::error::{Error, Result};
use crate::fock::{anti_normal_element, ladder_operators, CMatrix, DensityOperator, FockDim, StateVector};
use crate::grid::{fock_to_grid, fock_to_grid_rotated, grid_to_fock, GridSpec, GridWavefunction};
use crate::heterodyne::{smeared_quadrature_density, Efficiency, SAMPLE_BLOCK};
use crate::poly::PhaseSpacePolynomial;
use crate::special::{log_kernel, stirling_remainder};

/// Norm drift above which a K-amplified state is rejected.
pub const K_DRIFT_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AmplifierSpec {
    Number { gain: u32 },
    Quadrature { phi: f64, gain: f64 },
    K { gain: f64 },
}

impl AmplifierSpec {
    /// Number amplifier; the gain must be a positive integer so that gn stays
    /// in the spectrum ℕ.
    pub fn number(gain: f64) -> Result<Self> {
        if !(gain >= 1.0 && gain.fract() == 0.0 && gain <= u32::MAX as f64) {
            return Err(Error::InvalidArgument(format!(
                "number amplifier gain must be a positive integer (g·n must stay a photon number), got {gain}"
            )));
        }
        Ok(AmplifierSpec::Number { gain: gain as u32 })
    }

    pub fn quadrature(phi: f64, gain: f64) -> Result<Self> {
        Self::check_continuous(gain)?;
        Ok(AmplifierSpec::Quadrature { phi, gain })
    }

    pub fn k(gain: f64) -> Result<Self> {
        Self::check_continuous(gain)?;
        Ok(AmplifierSpec::K { gain })
    }

    fn check_continuous(gain: f64) -> Result<()> {
        if !(gain > 1.0 && gain.is_finite()) {
            return Err(Error::InvalidArgument(format!("amplifier gain must exceed 1, got {gain}")));
        }
        Ok(())
    }

    pub fn gain(&self) -> f64 {
        match *self {
            AmplifierSpec::Number { gain } => gain as f64,
            AmplifierSpec::Quadrature { gain, .. } | AmplifierSpec::K { gain } => gain,
        }
    }

    /// Same observable with a different gain.
    pub fn with_gain(&self, gain: f64) -> Result<Self> {
        match *self {
            AmplifierSpec::Number { .. } => Self::number(gain),
            AmplifierSpec::Quadrature { phi, .. } => Self::quadrature(phi, gain),
            AmplifierSpec::K { .. } => Self::k(gain),
        }
    }

    pub fn observable(&self) -> &'static str {
        match self {
            AmplifierSpec::Number { .. } => "number",
            AmplifierSpec::Quadrature { .. } => "quadrature",
            AmplifierSpec::K { .. } => "k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreampDensity {
    pub density: OutcomeDensity,
    pub gain: f64,
    pub observable: String,
    pub eta: f64,
    pub rescaled: bool,
}

/// V ρ V† with V = Σ |gn⟩⟨n|, into an output space of `dim_out` levels.
pub fn number_amplify_into(rho: &DensityOperator, g: u32, dim_out: usize) -> Result<DensityOperator> {
    if g == 0 {
        return Err(Error::InvalidArgument("number amplifier gain must be >= 1".into()));
    }
    let d = rho.dim();
    let needed = g as usize * (d - 1) + 1;
    if needed > dim_out {
        return Err(Error::OutputDimOverflow { needed, available: dim_out });
    }
    let mut out = CMatrix::zeros(dim_out, dim_out);
    for i in 0..d {
        for j in 0..d {
            out[(g as usize * i, g as usize * j)] = rho.matrix()[(i, j)];
        }
    }
    DensityOperator::new(out)
}

/// V ρ V† into the smallest space that holds it.
pub fn number_amplify(rho: &DensityOperator, g: u32) -> Result<DensityOperator> {
    number_amplify_into(rho, g.max(1), g.max(1) as usize * (rho.dim() - 1) + 1)
}

/// ln p_n^{(g)}(h) for p = g e^{−gh}(gh)^{gn}/(gn)!.
///
/// Uses ln p = −½ ln(2πn/g) + gn(1 − r + ln r) − μ(gn) with r = h/n and μ the
/// Stirling remainder, which is free of the catastrophic cancellation of the
/// direct log-gamma form at large gn.
pub fn ln_preamp_number_weight(n: u64, g: u64, h: f64) -> f64 {
    assert!(g >= 1, "gain must be >= 1");
    if !(h >= 0.0) {
        return f64::NEG_INFINITY;
    }
    let gf = g as f64;
    if n == 0 {
        return gf.ln() - gf * h;
    }
    if h == 0.0 {
        return f64::NEG_INFINITY;
    }
    let m = g * n;
    let nf = n as f64;
    -0.5 * (2.0 * PI * nf / gf).ln() + log_kernel(m as f64, h / nf) - stirling_remainder(m)
}

/// p_n^{(g)}(h) = g e^{−gh}(gh)^{gn}/(gn)!, zero for h < 0.
pub fn preamp_number_weight(n: u64, g: u64, h: f64) -> f64 {
    ln_preamp_number_weight(n, g, h).exp()
}

/// Smallest populated level n ≥ 1 (population above 1e−6).
fn smallest_populated_level(pops: &[f64]) -> Option<usize> {
    pops.iter().enumerate().skip(1).find(|(_, &p)| p > 1e-6).map(|(n, _)| n)
}

/// Checks that the h-grid resolves the narrowest populated comb tooth.
pub fn check_comb_resolution(pops: &[f64], g: u32, h_grid: &[f64]) -> Result<()> {
    let Some(n_min) = smallest_populated_level(pops) else { return Ok(()) };
    let width = (n_min as f64 / g as f64).sqrt();
    let spacing = h_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if spacing >= 0.2 * width {
        return Err(Error::GridResolution(format!(
            "h spacing {spacing:.3e} does not resolve comb peaks of width {width:.3e} (need < {:.3e}); add points",
            0.2 * width
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self { samples: 1_000_000, seed: 0 }
    }
}

fn validate_h_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.len() < 2 {
        return Err(Error::InvalidArgument("h grid needs at least two points".into()));
    }
    if h_grid.iter().any(|&h| !(h >= 0.0 && h.is_finite())) {
        return Err(Error::Domain("number outcomes h must be finite and nonnegative".into()));
    }
    if h_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("h grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Density of h = |α|²/g after ideal number amplification with gain g.
///
/// Closed form at η = 1. For η < 1 the density is estimated by Monte Carlo
/// using the radial law of the amplified state: given n, g|α|² is
/// Gamma(gn+1, 1) distributed with uniform phase, and the efficiency noise is
/// added in the outcome plane. Only the photon-number populations matter
/// because both the observable and the noise are phase-invariant.
pub fn preamp_number_density(
    rho: &DensityOperator,
    g: u32,
    eta: Efficiency,
    h_grid: &[f64],
    mc: MonteCarloOptions,
) -> Result<PreampDensity> {
    if g == 0 {
        return Err(Error::InvalidArgument("number amplifier gain must be >= 1".into()));
    }
    validate_h_grid(h_grid)?;
    let pops = rho.populations();
    check_comb_resolution(&pops, g, h_grid)?;
    let density = if eta.is_unit() {
        let dens = h_grid
            .par_iter()
            .map(|&h| {
                pops.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(n, &p)| p * preamp_number_weight(n as u64, g as u64, h))
                    .sum()
            })
            .collect();
        OutcomeDensity::new(h_grid.to_vec(), dens, trapezoid_weights(h_grid), DensityMethod::Analytic)?
    } else {
        number_density_monte_carlo(&pops, g, eta, h_grid, mc)?
    };
    Ok(PreampDensity { density, gain: g as f64, observable: "number".into(), eta: eta.eta(), rescaled: true })
}

fn number_density_monte_carlo(pops: &[f64], g: u32, eta: Efficiency, h_grid: &[f64], mc: MonteCarloOptions) -> Result<OutcomeDensity> {
    if mc.samples == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
    }
    let total: f64 = pops.iter().sum();
    let mut acc = 0.0;
    let cdf: Vec<f64> = pops
        .iter()
        .map(|p| {
            acc += p / total;
            acc
        })
        .collect();
    let gammas: Vec<Gamma<f64>> = (0..pops.len())
        .map(|n| Gamma::new((g as usize * n + 1) as f64, 1.0).expect("shape is positive"))
        .collect();
    let noise_sd = (eta.delta_sq() / 2.0).sqrt();
    let gf = g as f64;

    // Bins centred on the grid points.
    let k = h_grid.len();
    let mut edges = Vec::with_capacity(k + 1);
    edges.push(h_grid[0] - 0.5 * (h_grid[1] - h_grid[0]));
    for w in h_grid.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(h_grid[k - 1] + 0.5 * (h_grid[k - 1] - h_grid[k - 2]));

    let blocks = mc.samples.div_ceil(SAMPLE_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(b as u64);
            let mut counts = vec![0u64; k];
            for _ in 0..SAMPLE_BLOCK.min(mc.samples - b * SAMPLE_BLOCK) {
                let u: f64 = rng.random();
                let n = cdf.partition_point(|&c| c < u).min(pops.len() - 1);
                let r = gammas[n].sample(&mut rng).sqrt();
                let theta: f64 = rng.random::<f64>() * 2.0 * PI;
                let (x, y): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                let alpha = Complex64::from_polar(r, theta) + Complex64::new(noise_sd * x, noise_sd * y);
                let h = alpha.norm_sqr() / gf;
                let idx = edges.partition_point(|&e| e <= h);
                if idx >= 1 && idx <= k {
                    counts[idx - 1] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let n = mc.samples as f64;
    let dens = counts.iter().zip(&widths).map(|(c, w)| *c as f64 / (n * w)).collect();
    let mut d = OutcomeDensity::new(h_grid.to_vec(), dens, widths, DensityMethod::MonteCarlo)?;
    d.samples = Some(mc.samples as u64);
    d.seed = Some(mc.seed);
    Ok(d)
}

/// Re-expresses ψ in the X_φ representation through its Fock expansion.
pub fn represent_at(psi: &GridWavefunction, phi: f64) -> Result<GridWavefunction> {
    if psi.phi() == phi {
        return Ok(psi.clone());
    }
    let mut last_tail = f64::NAN;
    for dim in [64usize, 128] {
        let c = grid_to_fock(psi, dim)?;
        last_tail = c.tail_mass();
        if last_tail < 1e-10 {
            let phi0 = psi.phi();
            let lab: Vec<Complex64> = c
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(n, a)| a * Complex64::from_polar(1.0, n as f64 * phi0))
                .collect();
            return fock_to_grid_rotated(&StateVector::from_slice(&lab)?, phi, psi.spec());
        }
    }
    Err(Error::Truncation { tail_mass: last_tail, threshold: 1e-10 })
}

/// Phase-sensitive amplification U†X_φU = gX_φ, realized as the dilation
/// (Uψ)(x) = g^{−1/2} ψ(x/g) in the X_φ representation. The result is
/// returned in that representation.
pub fn quadrature_amplifier_apply(psi: &GridWavefunction, phi: f64, g: f64) -> Result<GridWavefunction> {
    if !(g >= 1.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("quadrature gain must be >= 1, got {g}")));
    }
    let rotated = represent_at(psi, phi)?;
    if g == 1.0 {
        return Ok(rotated);
    }
    let spec = rotated.spec().clone();
    let outside = rotated.mass_outside(spec.half_width() / g);
    if outside > 1e-10 {
        return Err(Error::GridResolution(format!(
            "mass {outside:.2e} lies beyond half-width/g; widen the grid for gain {g}"
        )));
    }
    let s = g.powf(-0.5);
    let values: Vec<Complex64> = spec.nodes().par_iter().map(|&x| rotated.value_at(x / g) * s).collect();
    let out = GridWavefunction::new(spec, values, phi)?;
    if out.norm_drift() > 1e-6 {
        return Err(Error::GridResolution(format!("dilation norm drift {:.2e}", out.norm_drift())));
    }
    Ok(out)
}

/// Density of the rescaled outcome after quadrature preamplification: the
/// quadrature density at angle φ convolved with variance (2−η)/(4ηg²).
pub fn preamp_quadrature_density(
    rho: &DensityOperator,
    phi: f64,
    g: f64,
    eta: Efficiency,
    x_grid: &[f64],
) -> Result<PreampDensity> {
    if !(g >= 1.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("quadrature gain must be >= 1, got {g}")));
    }
    let var = eta.quadrature_kernel_variance() / (g * g);
    let density = smeared_quadrature_density(rho, phi, var, x_grid)?;
    Ok(PreampDensity { density, gain: g, observable: "quadrature".into(), eta: eta.eta(), rescaled: true })
}

/// Ideal K amplifier (U_g ψ)(x) = g^{1/2} |x|^{(g−1)/2} ψ(x^{*g}).
///
/// ψ must be in the X_0 representation. The samples are not renormalized;
/// the norm drift is recorded and drifts above [`K_DRIFT_LIMIT`] are rejected.
pub fn k_amplifier_apply(psi: &GridWavefunction, g: f64) -> Result<GridWavefunction> {
    if psi.phi() != 0.0 {
        return Err(Error::InvalidArgument("the K amplifier acts in the X_0 representation".into()));
    }
    if !(g >= 1.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("K gain must be >= 1, got {g}")));
    }
    if g == 1.0 {
        return Ok(psi.clone());
    }
    let spec = psi.spec().clone();
    let pref = g.sqrt();
    let expo = 0.5 * (g - 1.0);
    let values: Vec<Complex64> = spec
        .nodes()
        .par_iter()
        .map(|&x| {
            if x == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let ax = x.abs();
            let scale = pref * (expo * ax.ln()).exp();
            let src = crate::grid::x_star_power(x, g);
            psi.value_at(src) * scale
        })
        .collect();
    let out = GridWavefunction::raw(spec, values, 0.0)?;
    if out.norm_drift() > K_DRIFT_LIMIT {
        return Err(Error::GridResolution(format!(
            "K amplifier norm drift {:.2e} at gain {g} exceeds {K_DRIFT_LIMIT:e}",
            out.norm_drift()
        )));
    }
    Ok(out)
}

/// Recognizes Im(α²) + (c/2)|α|² and returns c.
pub fn k_family_parameter(f: &PhaseSpacePolynomial) -> Option<f64> {
    let base = PhaseSpacePolynomial::k_family(0.0);
    let c = 2.0 * f.coefficient(1, 1).re;
    let diff = f.add(&base.scale(Complex64::new(-1.0, 0.0))).add(&PhaseSpacePolynomial::mod_squared().scale(Complex64::new(-0.5 * c, 0.0)));
    let ok = diff.terms().all(|(_, _, v)| v.norm() < 1e-12);
    ok.then_some(c)
}

/// Pure components λ_k, ψ_k of ρ with λ_k above `floor`.
fn pure_components(rho: &DensityOperator, floor: f64) -> Result<Vec<(f64, StateVector)>> {
    let (vals, vecs) = rho.eigen();
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > floor)
        .map(|(k, &l)| Ok((l, StateVector::new(vecs.column(k).into_owned(), 0.0)?)))
        .collect()
}

/// ∫ u^l A_g[dĤ_f(gu)] on the state: g^{−l} ⟨Γ_{Δ²}[:f^l:_A]⟩ on the amplified state.
///
/// Number: exact, through the isometry acting on matrix elements.
/// Quadrature: exact, by substituting the Heisenberg-evolved ladder operator
/// U†aU = e^{iφ}(gX_φ + iY_φ/g) in a padded Fock space.
/// K: on the grid, for f = Im(α²) + (c/2)|α|² with l ≤ 2 (c = 0 when l = 2).
pub fn preamp_moment(
    spec: &AmplifierSpec,
    f: &PhaseSpacePolynomial,
    l: u32,
    rho: &DensityOperator,
    eta: Efficiency,
    grid: &Arc<GridSpec>,
) -> Result<f64> {
    let poly = f.pow(l).gaussian_smear(eta.delta_sq());
    let g = spec.gain();
    match *spec {
        AmplifierSpec::Number { gain } => {
            let d = rho.dim();
            let gs = gain as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    let r = rho.matrix()[(i, j)];
                    if r.norm() == 0.0 {
                        continue;
                    }
                    acc += r * anti_normal_element(&poly, gs * j, gs * i);
                }
            }
            Ok(acc.re / g.powi(l as i32))
        }
        AmplifierSpec::Quadrature { phi, gain } => {
            Ok(heisenberg_quadrature_moment(&poly, rho, phi, gain)? / g.powi(l as i32))
        }
        AmplifierSpec::K { gain } => {
            let c = k_family_parameter(f).ok_or_else(|| {
                Error::Unsupported("the K amplifier supports only f = Im(α²) + (c/2)|α|²".into())
            })?;
            if l > 2 {
                return Err(Error::Unsupported("K-amplified moments are implemented for l <= 2".into()));
            }
            if l == 2 && c != 0.0 {
                return Err(Error::Unsupported("the K second moment is implemented for c = 0 only".into()));
            }
            let mut acc = 0.0;
            for (lambda, psi) in pure_components(rho, 1e-12)? {
                let grid_psi = fock_to_grid(&psi, grid)?;
                if l == 2 && gain <= 2.0 {
                    let mid = grid.nodes().partition_point(|&x| x < 0.0);
                    let peak = grid_psi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
                    if grid_psi.values()[mid].norm() > 1e-8 * peak {
                        return Err(Error::Singular(format!(
                            "second moment diverges at gain {gain} <= 2 for states with psi(0) != 0"
                        )));
                    }
                }
                let out = k_amplifier_apply(&grid_psi, gain)?;
                acc += lambda * out.antinormal_expectation(&poly).re;
            }
            Ok(acc / g.powi(l as i32))
        }
    }
}

fn heisenberg_quadrature_moment(poly: &PhaseSpacePolynomial, rho: &DensityOperator, phi: f64, g: f64) -> Result<f64> {
    let deg = poly.total_degree() as usize;
    let d = rho.dim() + deg + 1;
    let dim = FockDim::new(d)?;
    let padded = rho.resized(d)?;
    let (a, adag) = ladder_operators(dim);
    let rot = Complex64::from_polar(1.0, -phi);
    let a_phi = &a.matrix * rot;
    let a_phi_dag = &adag.matrix * rot.conj();
    let x = (&a_phi + &a_phi_dag) * Complex64::new(0.5, 0.0);
    let y = (&a_phi - &a_phi_dag) * Complex64::new(0.0, -0.5);
    let b = (x * Complex64::new(g, 0.0) + y * Complex64::new(0.0, 1.0 / g)) * Complex64::from_polar(1.0, phi);
    let bd = b.adjoint();
    let max_m = poly.terms().map(|(m, _, _)| m as usize).max().unwrap_or(0);
    let max_n = poly.terms().map(|(_, n, _)| n as usize).max().unwrap_or(0);
    let powers = |m: &CMatrix, k: usize| {
        let mut out = vec![CMatrix::identity(d, d)];
        for i in 1..=k {
            out.push(&out[i - 1] * m);
        }
        out
    };
    let bp = powers(&b, max_m);
    let bdp = powers(&bd, max_n);
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, n, c) in poly.terms() {
        let op = &bp[m as usize] * &bdp[n as usize];
        acc += c * (padded.matrix() * op).trace();
    }
    Ok(acc.re)
}

/// Grid-route quadrature moment: dilate each pure component and evaluate the
/// rotated polynomial with stencil ladder operators.
pub fn preamp_quadrature_moment_grid(
    f: &PhaseSpacePolynomial,
    l: u32,
    rho: &DensityOperator,
    phi: f64,
    g: f64,
    eta: Efficiency,
    grid: &Arc<GridSpec>,
) -> Result<f64> {
    let poly = f.pow(l).gaussian_smear(eta.delta_sq()).rotate(phi);
    let mut acc = 0.0;
    for (lambda, psi) in pure_components(rho, 1e-12)? {
        let rotated = fock_to_grid_rotated(&psi, phi, grid)?;
        let out = quadrature_amplifier_apply(&rotated, phi, g)?;
        acc += lambda * out.antinormal_expectation(&poly).re;
    }
    Ok(acc / g.powi(l as i32))
}
