//! Moment-condition criterion: the preamplified moments must approach the
//! moments of the target observable as the gain grows.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplifiers::{k_family_parameter, preamp_moment, AmplifierSpec};
use crate::error::{Error, Result};
use crate::fock::{k_operator, quadrature_operator, DensityOperator, FockDim, FockOperator};
use crate::grid::GridSpec;
use crate::heterodyne::Efficiency;
use crate::poly::PhaseSpacePolynomial;
use crate::verification::bch::decay_exponent;

/// Fitted exponent needed for a "converges" verdict.
pub const CONVERGENCE_EXPONENT: f64 = 0.8;
/// Errors at or below this (relative to max(1, |target|)) count as exact.
pub const EXACT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converges,
    DivergesFromTarget,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converges => "converges",
            Verdict::DivergesFromTarget => "diverges-from-target",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub state: String,
    pub g: f64,
    pub l: u32,
    pub value: f64,
    pub target: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub state: String,
    pub l: u32,
    /// Decay exponent p of |error| ∝ g^{−p} over the last three gains;
    /// absent when the errors are exact.
    pub exponent: Option<f64>,
    pub exact: bool,
    pub converges: bool,
    /// value/target at the largest gain.
    pub ratio_at_max_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub observable: String,
    pub f: String,
    pub eta: f64,
    pub gains: Vec<f64>,
    pub states: Vec<String>,
    pub rows: Vec<MomentRow>,
    pub fit: Vec<FitRow>,
    pub verdict: Verdict,
    /// Smallest second-moment ratio value/target at the largest gain, for
    /// the K observable.
    pub limiting_ratio: Option<f64>,
}

/// Tr[ρ W^l] for the observable amplified by `spec`, in a space padded so
/// that the truncation does not touch the result.
pub fn observable_moment(spec: &AmplifierSpec, l: u32, rho: &DensityOperator) -> Result<f64> {
    match *spec {
        AmplifierSpec::Number { .. } => {
            Ok(rho.populations().iter().enumerate().map(|(n, p)| p * (n as f64).powi(l as i32)).sum())
        }
        AmplifierSpec::Quadrature { phi, .. } => {
            let d = rho.dim() + l as usize + 1;
            power_trace(&quadrature_operator(phi, FockDim::new(d)?), l, &rho.resized(d)?)
        }
        AmplifierSpec::K { .. } => {
            let d = rho.dim() + 2 * l as usize + 1;
            power_trace(&k_operator(FockDim::new(d)?), l, &rho.resized(d)?)
        }
    }
}

fn power_trace(op: &FockOperator, l: u32, rho: &DensityOperator) -> Result<f64> {
    let mut m = rho.matrix().clone();
    for _ in 0..l {
        m = &m * &op.matrix;
    }
    Ok(m.trace().re)
}

/// Checks that f is the phase-space function paired with the amplified observable.
fn check_pair(spec: &AmplifierSpec, f: &PhaseSpacePolynomial) -> Result<()> {
    let ok = match *spec {
        AmplifierSpec::Number { .. } => close(f, &PhaseSpacePolynomial::mod_squared()),
        AmplifierSpec::Quadrature { phi, .. } => close(f, &PhaseSpacePolynomial::re_alpha(phi)),
        AmplifierSpec::K { .. } => k_family_parameter(f) == Some(0.0),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "f = {f} is not the {} phase-space function of this amplifier",
            spec.observable()
        )))
    }
}

fn close(a: &PhaseSpacePolynomial, b: &PhaseSpacePolynomial) -> bool {
    a.add(&b.scale(num_complex::Complex64::new(-1.0, 0.0))).terms().all(|(_, _, c)| c.norm() < 1e-12)
}

/// Tabulates preamplified moments against target moments on a gain ladder
/// and fits the decay of the error.
#[allow(clippy::too_many_arguments)]
pub fn moment_condition_report(
    spec: &AmplifierSpec,
    gains: &[f64],
    f: &PhaseSpacePolynomial,
    states: &[(String, DensityOperator)],
    eta: Efficiency,
    l_max: u32,
    grid: &Arc<GridSpec>,
) -> Result<MomentReport> {
    if gains.len() < 3 {
        return Err(Error::InvalidArgument("the gain ladder needs at least three gains".into()));
    }
    if gains.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("gains must be strictly ascending".into()));
    }
    check_pair(spec, f)?;
    let specs = gains.iter().map(|&g| spec.with_gain(g)).collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, u32, usize)> = (0..states.len())
        .flat_map(|s| (0..=l_max).flat_map(move |l| (0..gains.len()).map(move |gi| (s, l, gi))))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(s, l, gi)| {
            let (label, rho) = &states[s];
            let value = preamp_moment(&specs[gi], f, l, rho, eta, grid)?;
            let target = observable_moment(spec, l, rho)?;
            Ok(MomentRow { state: label.clone(), g: gains[gi], l, value, target, error: value - target })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fit = Vec::new();
    for (s, (label, _)) in states.iter().enumerate() {
        for l in 0..=l_max {
            let base = (s * (l_max as usize + 1) + l as usize) * gains.len();
            fit.push(fit_row(label, l, &rows[base..base + gains.len()]));
        }
    }

    let converges = fit.iter().all(|r| r.converges);
    let limiting_ratio = match spec {
        AmplifierSpec::K { .. } => fit
            .iter()
            .filter(|r| r.l == 2)
            .filter_map(|r| r.ratio_at_max_gain)
            .min_by(|a, b| a.total_cmp(b)),
        _ => None,
    };
    Ok(MomentReport {
        observable: spec.observable().into(),
        f: f.to_string(),
        eta: eta.eta(),
        gains: gains.to_vec(),
        states: states.iter().map(|s| s.0.clone()).collect(),
        rows,
        fit,
        verdict: if converges { Verdict::Converges } else { Verdict::DivergesFromTarget },
        limiting_ratio,
    })
}

fn fit_row(label: &str, l: u32, rows: &[MomentRow]) -> FitRow {
    let last = rows.last().expect("non-empty ladder");
    let ratio_at_max_gain = (last.target.abs() > 1e-12).then(|| last.value / last.target);
    let exact = rows.iter().all(|r| r.error.abs() <= EXACT_TOL * r.target.abs().max(1.0));
    if exact {
        return FitRow { state: label.into(), l, exponent: None, exact, converges: true, ratio_at_max_gain };
    }
    let tail = &rows[rows.len() - 3..];
    let gs: Vec<f64> = tail.iter().map(|r| r.g).collect();
    let es: Vec<f64> = tail.iter().map(|r| r.error.abs().max(f64::MIN_POSITIVE)).collect();
    let p = decay_exponent(&gs, &es);
    FitRow {
        state: label.into(),
        l,
        exponent: Some(p),
        exact,
        converges: p >= CONVERGENCE_EXPONENT,
        ratio_at_max_gain,
    }
}
