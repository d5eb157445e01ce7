//! Subcommand implementations.

use std::fmt;
use std::sync::Arc;

use preamp_core::amplifiers::preamp_quadrature_density;
use preamp_core::density::linspace;
use preamp_core::grid::{DEFAULT_HALF_WIDTH, DEFAULT_LOG_FLOOR, DEFAULT_POINTS_PER_SIDE};
use preamp_core::heterodyne::{generic_marginal_density, number_marginal_density, quadrature_marginal_density};
use preamp_core::verification::bch::{bch_asymptotic_row, decay_exponent, AsymptoticRow, BchTrialSummary};
use preamp_core::verification::moments::observable_moment;
use preamp_core::verification::stirling::{check_stirling_bracket, rising_factorial_identity, BracketSummary};
use preamp_core::verification::{
    bch_random_trials, k_counterexample_report, moment_condition_report, stirling_first_kind, Verdict,
};
use preamp_core::{
    default_grid, heterodyne_moment, heterodyne_sample, make_grid, preamp_number_density, AmplifierSpec,
    DensityOperator, Efficiency, Error, FockDim, GridSpec, MarginalMethod, MarginalOptions, MonteCarloOptions,
    OutcomeDensity, PhaseSpacePolynomial, StateSpec,
};
use serde::Serialize;

use crate::output::{emit, fmt_float, json, Artifact, Table};
use crate::{Common, Format, FunctionKind, Method, Observable};

const DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Verdict(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_resolution() => 3,
            CliError::Core(_) => 2,
            CliError::Verdict(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Verdict(m) => write!(f, "check failed: {m}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = Result<(), CliError>;

fn efficiency(c: &Common) -> Result<Efficiency, CliError> {
    Ok(Efficiency::new(c.eta)?)
}

fn grid(c: &Common) -> Result<Arc<GridSpec>, CliError> {
    if c.grid_points == DEFAULT_POINTS_PER_SIDE && c.grid_max == DEFAULT_HALF_WIDTH {
        Ok(default_grid())
    } else {
        Ok(Arc::new(make_grid(c.grid_max, c.grid_points, DEFAULT_LOG_FLOOR)?))
    }
}

fn density_of(state: &StateSpec, c: &Common) -> Result<DensityOperator, CliError> {
    Ok(state.to_density(FockDim::new(c.dim)?)?)
}

fn format(c: &Common, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
    let f = c.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(CliError::Config(format!("this command does not support --format {f:?}").to_lowercase()));
    }
    Ok(f)
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(",")
}

fn check_points(points: usize) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Config("--points must be at least 2".into()));
    }
    Ok(())
}

fn density_meta(t: &mut Table, d: &OutcomeDensity) {
    t.meta("method", d.method.as_str());
    if let Some(s) = d.samples {
        t.meta("samples", s);
    }
    if let Some(s) = d.seed {
        t.meta("seed", s);
    }
    t.meta("mass", d.mass());
}

fn density_artifact(d: &OutcomeDensity, fmt: Format, meta: Vec<(&str, String)>) -> Artifact {
    match fmt {
        Format::Json => json(d),
        Format::Csv => {
            let mut t = Table::new(&["u", "p"]);
            for (k, v) in meta {
                t.meta(k, v);
            }
            density_meta(&mut t, d);
            for (u, p) in d.support.iter().zip(&d.density) {
                t.push_floats(&[*u, *p]);
            }
            Artifact::Csv(t)
        }
    }
}

pub fn fig1(state: &StateSpec, h_max: f64, points: usize, c: &Common) -> CliResult {
    check_points(points)?;
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(CliError::Config("--h-max must be positive".into()));
    }
    let fmt = format(c, Format::Csv, &[Format::Csv, Format::Json])?;
    let gains = c.gains.clone().unwrap_or_else(|| vec![1.0, 100.0, 1000.0]);
    let rho = density_of(state, c)?;
    let eta = efficiency(c)?;
    let h = linspace(0.0, h_max, points);
    let mc = MonteCarloOptions { samples: c.samples.unwrap_or(DEFAULT_SAMPLES), seed: c.seed };
    let mut columns = Vec::new();
    for &g in &gains {
        let AmplifierSpec::Number { gain } = AmplifierSpec::number(g)? else { unreachable!() };
        columns.push((format!("p_g{gain}"), preamp_number_density(&rho, gain, eta, &h, mc)?.density));
    }
    let artifact = match fmt {
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("h".into(), serde_json::to_value(&h).expect("floats"));
            for (name, d) in &columns {
                obj.insert(name.clone(), serde_json::to_value(&d.density).expect("floats"));
            }
            json(&obj)
        }
        Format::Csv => {
            let mut header = vec!["h".to_string()];
            header.extend(columns.iter().map(|(n, _)| n.clone()));
            let mut t = Table { meta: Vec::new(), header, rows: Vec::new() };
            t.meta("command", "fig1").meta("state", state).meta("eta", c.eta).meta("dim", c.dim);
            t.meta("gains", join_f64(&gains));
            for (name, d) in &columns {
                t.meta(&format!("mass {name}"), d.mass());
                t.meta(&format!("method {name}"), d.method.as_str());
            }
            if !eta.is_unit() {
                t.meta("samples", mc.samples).meta("seed", mc.seed);
            }
            for (i, hv) in h.iter().enumerate() {
                let mut row = vec![*hv];
                row.extend(columns.iter().map(|(_, d)| d.density[i]));
                t.push_floats(&row);
            }
            Artifact::Csv(t)
        }
    };
    emit(&artifact, c.out.as_deref())?;
    Ok(())
}

fn function_of(kind: FunctionKind, c: &Common) -> PhaseSpacePolynomial {
    match kind {
        FunctionKind::Abs2 => PhaseSpacePolynomial::mod_squared(),
        FunctionKind::ReAlpha => PhaseSpacePolynomial::re_alpha(c.phi),
        FunctionKind::ImAlpha2 => PhaseSpacePolynomial::k_family(c.c),
    }
}

pub fn density(kind: FunctionKind, state: &StateSpec, method: Method, points: usize, c: &Common) -> CliResult {
    check_points(points)?;
    let fmt = format(c, Format::Csv, &[Format::Csv, Format::Json])?;
    let rho = density_of(state, c)?;
    let eta = efficiency(c)?;
    let f = function_of(kind, c);
    let method = match method {
        Method::Auto => match kind {
            FunctionKind::Abs2 if eta.is_unit() => Method::Analytic,
            FunctionKind::ReAlpha => Method::Analytic,
            _ => Method::Mc,
        },
        m => m,
    };
    let d = match method {
        Method::Analytic => {
            let mean = heterodyne_moment(&f, 1, &rho, eta)?;
            let sd = (heterodyne_moment(&f, 2, &rho, eta)? - mean * mean).max(0.0).sqrt();
            match kind {
                FunctionKind::Abs2 => number_marginal_density(&rho, eta, &linspace(0.0, mean + 20.0 * sd + 5.0, points))?,
                FunctionKind::ReAlpha => {
                    quadrature_marginal_density(&rho, c.phi, eta, &linspace(mean - 12.0 * sd, mean + 12.0 * sd, points))?
                }
                FunctionKind::ImAlpha2 => {
                    return Err(CliError::Config("no closed-form density for im-alpha2; use --method mc or quad2d".into()))
                }
            }
        }
        Method::Mc | Method::Quad2d => {
            let opts = MarginalOptions {
                method: if method == Method::Mc { MarginalMethod::MonteCarlo } else { MarginalMethod::Quadrature2d },
                bins: c.bins,
                samples: c.samples.unwrap_or(DEFAULT_SAMPLES),
                seed: c.seed,
                ..MarginalOptions::default()
            };
            generic_marginal_density(&rho, &f, eta, &opts)?
        }
        Method::Auto => unreachable!(),
    };
    let meta = vec![
        ("command", "density".to_string()),
        ("f", f.to_string()),
        ("state", state.to_string()),
        ("eta", c.eta.to_string()),
        ("dim", c.dim.to_string()),
    ];
    emit(&density_artifact(&d, fmt, meta), c.out.as_deref())?;
    Ok(())
}

pub fn sample(state: &StateSpec, n: usize, c: &Common) -> CliResult {
    let fmt = format(c, Format::Csv, &[Format::Csv, Format::Json])?;
    let rho = density_of(state, c)?;
    let s = heterodyne_sample(&rho, n, efficiency(c)?, c.seed)?;
    let artifact = match fmt {
        Format::Json => json(&s),
        Format::Csv => {
            let mut t = Table::new(&["re", "im"]);
            t.meta("command", "sample").meta("state", state).meta("eta", c.eta).meta("dim", c.dim);
            t.meta("seed", c.seed).meta("n", n).meta("acceptance_rate", s.acceptance_rate);
            for a in &s.values {
                t.push_floats(&[a.re, a.im]);
            }
            Artifact::Csv(t)
        }
    };
    emit(&artifact, c.out.as_deref())?;
    Ok(())
}

fn single_gain(c: &Common, default: f64) -> Result<f64, CliError> {
    match c.gains.as_deref() {
        None => Ok(default),
        Some([g]) => Ok(*g),
        Some(_) => Err(CliError::Config("this command takes a single --gain".into())),
    }
}

pub fn preamp(observable: Observable, state: &StateSpec, points: usize, u_max: Option<f64>, c: &Common) -> CliResult {
    check_points(points)?;
    let fmt = format(c, Format::Csv, &[Format::Csv, Format::Json])?;
    let rho = density_of(state, c)?;
    let eta = efficiency(c)?;
    let pd = match observable {
        Observable::Number => {
            let AmplifierSpec::Number { gain } = AmplifierSpec::number(single_gain(c, 100.0)?)? else { unreachable!() };
            let spec = AmplifierSpec::Number { gain };
            let n1 = observable_moment(&spec, 1, &rho)?;
            let var = observable_moment(&spec, 2, &rho)? - n1 * n1;
            let top = u_max.unwrap_or(n1 + 12.0 * (var.max(0.0) + n1 + 1.0).sqrt() + 2.0);
            let mc = MonteCarloOptions { samples: c.samples.unwrap_or(DEFAULT_SAMPLES), seed: c.seed };
            preamp_number_density(&rho, gain, eta, &linspace(0.0, top, points), mc)?
        }
        Observable::Quadrature => {
            let spec = AmplifierSpec::quadrature(c.phi, single_gain(c, 10.0)?)?;
            let g = spec.gain();
            let x1 = observable_moment(&spec, 1, &rho)?;
            let var = observable_moment(&spec, 2, &rho)? - x1 * x1 + eta.quadrature_kernel_variance() / (g * g);
            let (lo, hi) = match u_max {
                Some(u) => (-u, u),
                None => (x1 - 12.0 * var.sqrt(), x1 + 12.0 * var.sqrt()),
            };
            preamp_quadrature_density(&rho, c.phi, g, eta, &linspace(lo, hi, points))?
        }
        Observable::K => {
            return Err(CliError::Config(
                "K-preamplified densities are not available; use `moments --observable k` or `counterexample`".into(),
            ))
        }
    };
    let meta = vec![
        ("command", "preamp".to_string()),
        ("observable", pd.observable.clone()),
        ("state", state.to_string()),
        ("gain", pd.gain.to_string()),
        ("phi", c.phi.to_string()),
        ("eta", c.eta.to_string()),
        ("dim", c.dim.to_string()),
    ];
    let artifact = match fmt {
        Format::Json => json(&pd),
        Format::Csv => density_artifact(&pd.density, fmt, meta),
    };
    emit(&artifact, c.out.as_deref())?;
    Ok(())
}

fn default_states(observable: Observable) -> Vec<StateSpec> {
    match observable {
        Observable::Number => vec![StateSpec::MeanPhotons(4.0)],
        Observable::Quadrature => vec![StateSpec::Vacuum],
        Observable::K => vec![StateSpec::Squeezed { r: 0.5, theta: std::f64::consts::FRAC_PI_2 }],
    }
}

fn labelled(states: &[StateSpec], c: &Common) -> Result<Vec<(String, DensityOperator)>, CliError> {
    states.iter().map(|s| Ok((s.to_string(), density_of(s, c)?))).collect()
}

fn check_verdict(verdict: Verdict, want: Verdict) -> CliResult {
    if verdict != want {
        return Err(CliError::Verdict(format!("verdict is {}, expected {}", verdict.as_str(), want.as_str())));
    }
    Ok(())
}

pub fn moments(
    observable: Observable,
    states: &[StateSpec],
    l_max: u32,
    assert_converges: bool,
    assert_diverges: bool,
    c: &Common,
) -> CliResult {
    if assert_converges && assert_diverges {
        return Err(CliError::Config("--assert-converges and --assert-diverges are exclusive".into()));
    }
    let fmt = format(c, Format::Json, &[Format::Csv, Format::Json])?;
    let gains = c.gains.clone().unwrap_or_else(|| match observable {
        Observable::K => vec![4.0, 8.0, 16.0],
        _ => vec![2.0, 4.0, 8.0, 16.0],
    });
    let states = if states.is_empty() { default_states(observable) } else { states.to_vec() };
    let first = *gains.first().ok_or_else(|| CliError::Config("empty gain ladder".into()))?;
    let (spec, f) = match observable {
        Observable::Number => (AmplifierSpec::number(first)?, PhaseSpacePolynomial::mod_squared()),
        Observable::Quadrature => (AmplifierSpec::quadrature(c.phi, first)?, PhaseSpacePolynomial::re_alpha(c.phi)),
        Observable::K => (AmplifierSpec::k(first)?, PhaseSpacePolynomial::k_family(c.c)),
    };
    let report =
        moment_condition_report(&spec, &gains, &f, &labelled(&states, c)?, efficiency(c)?, l_max, &grid(c)?)?;
    let artifact = match fmt {
        Format::Json => json(&report),
        Format::Csv => {
            let mut t = Table::new(&["state", "g", "l", "value", "target", "error"]);
            t.meta("command", "moments").meta("observable", &report.observable).meta("f", &report.f);
            t.meta("eta", report.eta).meta("verdict", report.verdict.as_str());
            if let Some(r) = report.limiting_ratio {
                t.meta("limiting_ratio", r);
            }
            for fr in &report.fit {
                let p = fr.exponent.map_or("exact".to_string(), |p| p.to_string());
                t.meta(&format!("exponent {} l={}", fr.state, fr.l), p);
            }
            for r in &report.rows {
                t.rows.push(vec![
                    r.state.clone(),
                    fmt_float(r.g),
                    r.l.to_string(),
                    fmt_float(r.value),
                    fmt_float(r.target),
                    fmt_float(r.error),
                ]);
            }
            Artifact::Csv(t)
        }
    };
    emit(&artifact, c.out.as_deref())?;
    if assert_converges {
        check_verdict(report.verdict, Verdict::Converges)?;
    }
    if assert_diverges {
        check_verdict(report.verdict, Verdict::DivergesFromTarget)?;
    }
    Ok(())
}

pub fn counterexample(states: &[StateSpec], assert_diverges: bool, c: &Common) -> CliResult {
    format(c, Format::Json, &[Format::Json])?;
    let gains = c.gains.clone().unwrap_or_else(|| vec![4.0, 8.0, 16.0]);
    let states = if states.is_empty() {
        vec![
            StateSpec::Fock(1),
            StateSpec::Coherent(num_complex::Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
            StateSpec::Squeezed { r: 0.5, theta: std::f64::consts::FRAC_PI_4 },
        ]
    } else {
        states.to_vec()
    };
    let report = k_counterexample_report(c.c, &labelled(&states, c)?, &gains, &grid(c)?)?;
    emit(&json(&report), c.out.as_deref())?;
    if assert_diverges {
        check_verdict(report.verdict, Verdict::DivergesFromTarget)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BchExponents {
    b_plus: f64,
    b_minus: f64,
    b_3: f64,
}

#[derive(Serialize)]
struct BchSummary {
    random: BchTrialSummary,
    lambda: f64,
    c: f64,
    asymptotic: Vec<AsymptoticRow>,
    remainder_exponents: BchExponents,
}

pub fn bch(trials: usize, radius: f64, lambda: f64, max_residual: f64, assert: bool, c: &Common) -> CliResult {
    format(c, Format::Json, &[Format::Json])?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(CliError::Config("--radius must be positive".into()));
    }
    let gains = c.gains.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    if gains.len() < 2 {
        return Err(CliError::Config("the asymptotic ladder needs at least two gains".into()));
    }
    let random = bch_random_trials(trials, radius, c.seed);
    let asymptotic = gains.iter().map(|&g| bch_asymptotic_row(lambda, c.c, g)).collect::<Result<Vec<_>, _>>()?;
    let exp = |sel: fn(&AsymptoticRow) -> f64| decay_exponent(&gains, &asymptotic.iter().map(sel).collect::<Vec<_>>());
    let summary = BchSummary {
        random,
        lambda,
        c: c.c,
        remainder_exponents: BchExponents {
            b_plus: exp(|r| r.plus_remainder),
            b_minus: exp(|r| r.minus_remainder),
            b_3: exp(|r| r.b3_remainder),
        },
        asymptotic,
    };
    emit(&json(&summary), c.out.as_deref())?;
    if assert {
        let worst = summary.asymptotic.iter().map(|r| r.residual).fold(random.max_residual, f64::max);
        if random.failures > 0 || !(worst < max_residual) {
            return Err(CliError::Verdict(format!(
                "max residual {worst:e} (limit {max_residual:e}), {} singular inputs",
                random.failures
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundsReport {
    n_max: u64,
    gains: Vec<u64>,
    points: usize,
    summary: BracketSummary,
}

pub fn stirling(l_max: usize, bounds: bool, n_max: u64, points: usize, assert: bool, c: &Common) -> CliResult {
    let fmt = format(c, if bounds { Format::Json } else { Format::Csv }, &[Format::Csv, Format::Json])?;
    if bounds {
        check_points(points)?;
        let gains = c.gains.clone().unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
        let gains: Vec<u64> = gains
            .iter()
            .map(|&g| match AmplifierSpec::number(g)? {
                AmplifierSpec::Number { gain } => Ok(gain as u64),
                _ => unreachable!(),
            })
            .collect::<Result<_, CliError>>()?;
        let summary = check_stirling_bracket(n_max, &gains, points)?;
        let report = BoundsReport { n_max, gains, points, summary };
        let artifact = match fmt {
            Format::Json => json(&report),
            Format::Csv => {
                let mut t = Table::new(&["checked", "violations", "ties"]);
                t.meta("command", "stirling --bounds").meta("n_max", n_max).meta("points", points);
                t.rows.push(vec![summary.checked.to_string(), summary.violations.to_string(), summary.ties.to_string()]);
                Artifact::Csv(t)
            }
        };
        emit(&artifact, c.out.as_deref())?;
        if assert && summary.violations > 0 {
            return Err(CliError::Verdict(format!("{} bound violations", summary.violations)));
        }
        return Ok(());
    }
    let table = stirling_first_kind(l_max)?;
    // Identity (N+l)!/N! against the table for every l the table supports.
    let mut mismatches = 0;
    let l_id = l_max.saturating_sub(1).min(8);
    for n in 0..=20 {
        for l in 0..=l_id {
            let (a, b) = rising_factorial_identity(&table, n, l)?;
            if a != b {
                mismatches += 1;
            }
        }
    }
    let artifact = match fmt {
        Format::Json => json(&table),
        Format::Csv => {
            let mut t = Table::new(&["l", "k", "s"]);
            t.meta("command", "stirling").meta("l_max", l_max);
            t.meta("identity", format!("N<=20 l<={l_id} mismatches={mismatches}"));
            for (l, row) in table.rows().iter().enumerate() {
                for (k, s) in row.iter().enumerate() {
                    t.rows.push(vec![l.to_string(), k.to_string(), s.to_string()]);
                }
            }
            Artifact::Csv(t)
        }
    };
    emit(&artifact, c.out.as_deref())?;
    if assert && mismatches > 0 {
        return Err(CliError::Verdict(format!("{mismatches} identity mismatches")));
    }
    Ok(())
}
