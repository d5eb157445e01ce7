//! Tabulated outcome densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMethod {
    Analytic,
    Quadrature2d,
    MonteCarlo,
}

impl DensityMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityMethod::Analytic => "analytic",
            DensityMethod::Quadrature2d => "quadrature2d",
            DensityMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDensity {
    pub support: Vec<f64>,
    pub density: Vec<f64>,
    pub weights: Vec<f64>,
    pub method: DensityMethod,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

impl OutcomeDensity {
    pub fn new(support: Vec<f64>, density: Vec<f64>, weights: Vec<f64>, method: DensityMethod) -> Result<Self> {
        if support.len() != density.len() || support.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), found: density.len().min(weights.len()) });
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("density support must be strictly increasing".into()));
        }
        Ok(Self { support, density, weights, method, samples: None, seed: None })
    }

    /// Density on `support` with trapezoid weights.
    pub fn with_trapezoid(support: Vec<f64>, density: Vec<f64>, method: DensityMethod) -> Result<Self> {
        let w = trapezoid_weights(&support);
        Self::new(support, density, w, method)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.raw_moment(0)
    }

    pub fn raw_moment(&self, l: u32) -> f64 {
        self.support
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((u, p), w)| w * p * u.powi(l as i32))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let mass = self.mass();
        self.support
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((u, p), w)| w * p * (u - m).powi(2))
            .sum::<f64>()
            / mass
    }

    /// Mass on [lo, hi] by the quadrature weights, with half weight on
    /// nodes that coincide with an endpoint.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.density)
            .zip(&self.weights)
            .filter(|((u, _), _)| **u >= lo && **u <= hi)
            .map(|((u, p), w)| {
                let edge = (*u - lo).abs() < 1e-12 || (*u - hi).abs() < 1e-12;
                if edge { 0.5 * w * p } else { w * p }
            })
            .sum()
    }

    /// Exact integral of the piecewise-linear interpolant over [lo, hi].
    pub fn linear_mass_between(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.support.len().saturating_sub(1) {
            let (x0, x1) = (self.support[i], self.support[i + 1]);
            let (a, b) = (x0.max(lo), x1.min(hi));
            if b <= a {
                continue;
            }
            let slope = (self.density[i + 1] - self.density[i]) / (x1 - x0);
            let pa = self.density[i] + slope * (a - x0);
            let pb = self.density[i] + slope * (b - x0);
            acc += 0.5 * (pa + pb) * (b - a);
        }
        acc
    }

    /// Indices of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        let p = &self.density;
        (1..p.len().saturating_sub(1))
            .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1])
            .collect()
    }

    /// Sub-node location of the maximum at index `i` by parabolic fit.
    pub fn refine_peak(&self, i: usize) -> f64 {
        if i == 0 || i + 1 >= self.len() {
            return self.support[i];
        }
        let (x0, x1, x2) = (self.support[i - 1], self.support[i], self.support[i + 1]);
        let (y0, y1, y2) = (self.density[i - 1], self.density[i], self.density[i + 1]);
        let d0 = (y1 - y0) / (x1 - x0);
        let d1 = (y2 - y1) / (x2 - x1);
        let curv = (d1 - d0) / (0.5 * (x2 - x0));
        if curv >= 0.0 {
            return x1;
        }
        let mid0 = 0.5 * (x0 + x1);
        mid0 - d0 / curv
    }
}

pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// `n` evenly spaced points on [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_moments_of_exponential() {
        let x = linspace(0.0, 40.0, 40001);
        let p: Vec<f64> = x.iter().map(|h| (-h).exp()).collect();
        let d = OutcomeDensity::with_trapezoid(x, p, DensityMethod::Analytic).unwrap();
        // trapezoid error h²/12 · [f'] ≈ 8.3e-8
        assert!((d.mass() - 1.0).abs() < 1e-7);
        assert!((d.mean() - 1.0).abs() < 1e-6);
        assert!((d.variance() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn peak_refinement_finds_parabola_vertex() {
        let x = linspace(0.0, 1.0, 11);
        let p: Vec<f64> = x.iter().map(|u| 1.0 - (u - 0.437).powi(2)).collect();
        let d = OutcomeDensity::with_trapezoid(x, p, DensityMethod::Analytic).unwrap();
        let peaks = d.local_maxima();
        assert_eq!(peaks.len(), 1);
        assert!((d.refine_peak(peaks[0]) - 0.437).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsorted_support() {
        assert!(OutcomeDensity::with_trapezoid(vec![0.0, 0.0], vec![1.0, 1.0], DensityMethod::Analytic).is_err());
    }
}
