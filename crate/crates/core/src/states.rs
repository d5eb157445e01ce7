//! Textual state descriptors shared by the library reports and the CLI.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_state, squeezed_vacuum, DensityOperator, FockDim, StateVector};
use crate::grid::{fock_to_grid, GridSpec, GridWavefunction};

/// `vacuum`, `fock:n`, `coherent:re[,im]`, `mean:N` (real coherent amplitude
/// √N) or `squeezed:r[,theta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StateSpec {
    Vacuum,
    Fock(usize),
    Coherent(Complex64),
    MeanPhotons(f64),
    Squeezed { r: f64, theta: f64 },
}

impl StateSpec {
    pub fn to_fock(&self, dim: FockDim) -> Result<StateVector> {
        match *self {
            StateSpec::Vacuum => StateVector::number(0, dim),
            StateSpec::Fock(n) => StateVector::number(n, dim),
            StateSpec::Coherent(b) => coherent_state(b, dim),
            StateSpec::MeanPhotons(n) => coherent_state(Complex64::new(n.sqrt(), 0.0), dim),
            StateSpec::Squeezed { r, theta } => squeezed_vacuum(r, theta, dim),
        }
    }

    pub fn to_density(&self, dim: FockDim) -> Result<DensityOperator> {
        Ok(self.to_fock(dim)?.density())
    }

    pub fn to_grid(&self, dim: FockDim, spec: &Arc<GridSpec>) -> Result<GridWavefunction> {
        fock_to_grid(&self.to_fock(dim)?, spec)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Vacuum => write!(f, "vacuum"),
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Coherent(b) if b.im == 0.0 => write!(f, "coherent:{}", b.re),
            StateSpec::Coherent(b) => write!(f, "coherent:{},{}", b.re, b.im),
            StateSpec::MeanPhotons(n) => write!(f, "mean:{n}"),
            StateSpec::Squeezed { r, theta } if *theta == 0.0 => write!(f, "squeezed:{r}"),
            StateSpec::Squeezed { r, theta } => write!(f, "squeezed:{r},{theta}"),
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse {what} from '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} must be finite")));
    }
    Ok(v)
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let parts: Vec<&str> = args.map(|a| a.split(',').collect()).unwrap_or_default();
        let spec = match (kind, parts.as_slice()) {
            ("vacuum", []) => StateSpec::Vacuum,
            ("fock", [n]) => StateSpec::Fock(
                n.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad photon number '{n}'")))?,
            ),
            ("coherent", [re]) => StateSpec::Coherent(Complex64::new(parse_f64(re, "real part")?, 0.0)),
            ("coherent", [re, im]) => {
                StateSpec::Coherent(Complex64::new(parse_f64(re, "real part")?, parse_f64(im, "imaginary part")?))
            }
            ("mean", [n]) => {
                let n = parse_f64(n, "mean photon number")?;
                if n < 0.0 {
                    return Err(Error::InvalidArgument("mean photon number must be >= 0".into()));
                }
                StateSpec::MeanPhotons(n)
            }
            ("squeezed", [r]) => StateSpec::Squeezed { r: parse_f64(r, "squeezing")?, theta: 0.0 },
            ("squeezed", [r, t]) => StateSpec::Squeezed { r: parse_f64(r, "squeezing")?, theta: parse_f64(t, "angle")? },
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown state '{s}'; expected vacuum, fock:n, coherent:re[,im], mean:N or squeezed:r[,theta]"
                )))
            }
        };
        Ok(spec)
    }
}

impl From<StateSpec> for String {
    fn from(s: StateSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for StateSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        for s in ["vacuum", "fock:3", "coherent:1.5", "coherent:0.5,-2", "mean:12", "squeezed:0.5", "squeezed:0.5,0.785"] {
            let spec: StateSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<StateSpec>().unwrap(), spec);
        }
        for bad in ["", "fock", "fock:x", "coherent:1,2,3", "mean:-1", "thermal:2", "coherent:nan"] {
            assert!(bad.parse::<StateSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn mean_photon_shortcut() {
        let d = FockDim::new(64).unwrap();
        let psi = StateSpec::MeanPhotons(12.0).to_fock(d).unwrap();
        let mean: f64 = psi.amplitudes().iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum();
        assert!((mean - 12.0).abs() < 1e-8);
    }
}
