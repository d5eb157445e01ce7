//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use preamp_core::density::linspace;
use preamp_core::grid::{fock_to_grid, make_grid};
use preamp_core::heterodyne::quadrature_marginal_density;
use preamp_core::special::ln_poisson;
use preamp_core::verification::bch::{bch_asymptotic_row, decay_exponent};
use preamp_core::verification::stirling::{check_stirling_bracket, rising_factorial_identity};
use preamp_core::verification::{
    bch_random_trials, k_counterexample_report, moment_condition_report, stirling_first_kind, Verdict,
};
use preamp_core::{
    coherent_state, default_grid, heterodyne_moment, heterodyne_sample, k_amplifier_apply, preamp_number_density,
    AmplifierSpec, DensityOperator, Efficiency, FockDim, MonteCarloOptions, PhaseSpacePolynomial, StateSpec,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dim(d: usize) -> FockDim {
    FockDim::new(d).unwrap()
}

fn states(list: &[StateSpec], d: usize) -> Vec<(String, DensityOperator)> {
    list.iter().map(|s| (s.to_string(), s.to_density(dim(d)).unwrap())).collect()
}

fn comb_reproduction() -> Outcome {
    let start = Instant::now();
    let rho = StateSpec::MeanPhotons(12.0).to_density(dim(64)).map_err(|e| e.to_string())?;
    let h = linspace(0.0, 30.0, 6001);
    let mc = MonteCarloOptions::default();
    let big = preamp_number_density(&rho, 1000, Efficiency::unit(), &h, mc).map_err(|e| e.to_string())?.density;
    let small = preamp_number_density(&rho, 1, Efficiency::unit(), &h, mc).map_err(|e| e.to_string())?.density;
    let elapsed = start.elapsed().as_secs_f64();

    let peaks: Vec<f64> = big.local_maxima().into_iter().map(|i| big.refine_peak(i)).collect();
    let mut worst_offset = 0.0f64;
    for &p in peaks.iter().filter(|p| (3.5..=20.5).contains(*p)) {
        worst_offset = worst_offset.max((p - p.round()).abs());
    }
    ensure(worst_offset < 0.02, || format!("peak offset {worst_offset:.4} from an integer"))?;
    for n in 4..=20 {
        ensure(peaks.iter().any(|p| (p - n as f64).abs() < 0.02), || format!("no peak at n = {n}"))?;
    }
    let mut worst_mass = 0.0f64;
    for n in 4..=20u64 {
        let poisson = ln_poisson(n, 12.0).exp();
        let mass = big.mass_between(n as f64 - 0.5, n as f64 + 0.5);
        worst_mass = worst_mass.max((mass / poisson - 1.0).abs());
    }
    ensure(worst_mass < 0.02, || format!("tooth mass off by {:.3}%", 100.0 * worst_mass))?;
    let maxima = small.local_maxima().len();
    ensure(maxima == 1, || format!("g = 1 density has {maxima} local maxima"))?;
    // Smooth: second differences stay small relative to the peak.
    let peak = small.density.iter().copied().fold(0.0, f64::max);
    let curv = small.density.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max);
    ensure(curv < 1e-4 * peak, || format!("g = 1 density is not smooth (second difference {curv:e})"))?;
    ensure(elapsed < 10.0, || format!("runtime {elapsed:.2} s"))?;
    Ok(format!(
        "peak offset {worst_offset:.1e}, tooth mass error {:.3}%, g=1 unimodal, {elapsed:.2} s",
        100.0 * worst_mass
    ))
}

fn excess_noise() -> Outcome {
    let vac = StateSpec::Vacuum.to_density(dim(8)).unwrap();
    let x = linspace(-8.0, 8.0, 8001);
    let d = quadrature_marginal_density(&vac, 0.0, Efficiency::unit(), &x).map_err(|e| e.to_string())?;
    let var_grid = d.variance();
    let f = PhaseSpacePolynomial::re_alpha(0.0);
    let var_op = heterodyne_moment(&f, 2, &vac, Efficiency::unit()).unwrap()
        - heterodyne_moment(&f, 1, &vac, Efficiency::unit()).unwrap().powi(2);
    ensure((var_grid - 0.5).abs() < 1e-8, || format!("analytic variance {var_grid}"))?;
    ensure((var_op - 0.5).abs() < 1e-8, || format!("operator variance {var_op}"))?;

    let n = 1_000_000;
    let s = heterodyne_sample(&vac, n, Efficiency::unit(), 2024).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = s.values.iter().map(|a| a.re).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = 0.5 * (2.0 / (n as f64 - 1.0)).sqrt();
    ensure((var - 0.5).abs() < 3.0 * se, || format!("sampled variance {var} (3 SE = {:.2e})", 3.0 * se))?;

    let coh = coherent_state(Complex64::new(2.0, 0.0), dim(48)).unwrap().density();
    let mut worst = 0.0f64;
    for eta in [1.0, 0.8, 0.5] {
        let e = Efficiency::new(eta).unwrap();
        let m = heterodyne_moment(&PhaseSpacePolynomial::mod_squared(), 1, &coh, e).unwrap();
        worst = worst.max((m - (5.0 + e.delta_sq())).abs());
    }
    ensure(worst < 1e-8, || format!("number mean error {worst:e}"))?;
    Ok(format!(
        "variance analytic {:.1e} off, sampled {var:.5} (|dev| {:.1} SE), number means within {worst:.0e}",
        (var_grid - 0.5).abs(),
        (var - 0.5).abs() / se
    ))
}

fn convergence_rates() -> Outcome {
    let grid = default_grid();
    let gains = [2.0, 4.0, 8.0, 16.0];
    let coh = states(&[StateSpec::MeanPhotons(4.0)], 48);
    let vac = states(&[StateSpec::Vacuum], 8);
    let mut worst_number = 0.0f64;
    let mut worst_quad = 0.0f64;
    let mut min_pn = f64::INFINITY;
    let mut min_pq = f64::INFINITY;
    for eta in [1.0, 0.9, 0.8] {
        let e = Efficiency::new(eta).unwrap();
        let num = moment_condition_report(
            &AmplifierSpec::number(2.0).unwrap(),
            &gains,
            &PhaseSpacePolynomial::mod_squared(),
            &coh,
            e,
            2,
            &grid,
        )
        .map_err(|e| e.to_string())?;
        ensure(num.verdict == Verdict::Converges, || format!("number verdict at eta {eta}"))?;
        if eta == 1.0 {
            for r in num.rows.iter().filter(|r| r.l == 1) {
                worst_number = worst_number.max((r.error - 1.0 / r.g).abs());
            }
            min_pn = num.fit.iter().find(|f| f.l == 1).and_then(|f| f.exponent).unwrap_or(0.0);
        }
        let quad = moment_condition_report(
            &AmplifierSpec::quadrature(0.0, 2.0).unwrap(),
            &gains,
            &PhaseSpacePolynomial::re_alpha(0.0),
            &vac,
            e,
            2,
            &grid,
        )
        .map_err(|e| e.to_string())?;
        ensure(quad.verdict == Verdict::Converges, || format!("quadrature verdict at eta {eta}"))?;
        if eta != 0.9 {
            for r in quad.rows.iter().filter(|r| r.l == 2) {
                worst_quad = worst_quad.max((r.error - (2.0 - eta) / (4.0 * eta * r.g * r.g)).abs());
            }
            let p = quad.fit.iter().find(|f| f.l == 2).and_then(|f| f.exponent).unwrap_or(0.0);
            min_pq = min_pq.min(p);
        }
    }
    ensure(worst_number < 1e-10, || format!("number error deviates from 1/g by {worst_number:e}"))?;
    ensure(worst_quad < 1e-8, || format!("quadrature error deviates by {worst_quad:e}"))?;
    ensure(min_pn >= 0.8, || format!("number exponent {min_pn}"))?;
    ensure(min_pq >= 1.6, || format!("quadrature exponent {min_pq}"))?;
    Ok(format!(
        "1/g law to {worst_number:.0e}, kernel law to {worst_quad:.0e}, exponents {min_pn:.3} and {min_pq:.3}"
    ))
}

fn k_states() -> Vec<StateSpec> {
    vec![
        StateSpec::Fock(1),
        StateSpec::Coherent(Complex64::from_polar(1.0, FRAC_PI_4)),
        StateSpec::Squeezed { r: 0.5, theta: FRAC_PI_4 },
        StateSpec::Squeezed { r: 0.5, theta: FRAC_PI_2 },
    ]
}

fn counterexample() -> Outcome {
    let grid = default_grid();
    let r = k_counterexample_report(0.0, &states(&k_states(), 48), &[4.0, 8.0, 16.0], &grid)
        .map_err(|e| e.to_string())?;
    let mut within = 0;
    let mut ratios = Vec::new();
    for s in &r.states {
        let k2 = s.k_moments.fock[2];
        for a in &s.asymptotic {
            ensure((a.second - 1.25 * k2).abs() <= 1e-14 * k2.abs().max(1.0), || {
                format!("{}: asymptotic second moment {} vs 1.25<K^2> = {}", s.state, a.second, 1.25 * k2)
            })?;
        }
        ensure(s.k_moments.max_gap < 1e-6, || format!("{}: Fock/grid <K^k> gap {:e}", s.state, s.k_moments.max_gap))?;
        ensure(s.exactness.pass, || {
            format!("{}: l=0,1 errors {:e}, {:e}", s.state, s.exactness.l0_max_error, s.exactness.l1_max_error)
        })?;
        if k2 > 0.0 {
            let ratio = s.grid_ratio(8.0).ok_or_else(|| format!("{}: no grid value at g = 8", s.state))?;
            ratios.push(format!("{:.4}", ratio));
            if (ratio - 1.25).abs() <= 0.03 * 1.25 {
                within += 1;
            }
        }
    }
    ensure(within >= 2, || format!("only {within} states within 3% of 1.25 at g = 8"))?;
    ensure(r.verdict == Verdict::DivergesFromTarget, || format!("verdict {}", r.verdict.as_str()))?;
    let min = r.min_grid_ratio.unwrap_or(0.0);
    ensure(min >= 1.2, || format!("minimum ratio {min}"))?;
    Ok(format!("g=8 ratios [{}], {within} within 3%, verdict diverges-from-target", ratios.join(", ")))
}

fn k_integrity() -> Outcome {
    let grid = default_grid();
    let mut worst_drift = 0.0f64;
    let mut worst_scale = 0.0f64;
    let mut worst_comp = 0.0f64;
    for s in k_states() {
        let psi = s.to_grid(dim(48), &grid).map_err(|e| e.to_string())?;
        let k_in = psi.k_power_expectation(1);
        for g in [1.5, 2.0, 3.0, 4.0, 6.0, 8.0] {
            let out = k_amplifier_apply(&psi, g).map_err(|e| e.to_string())?;
            worst_drift = worst_drift.max(out.norm_drift());
            let err = (out.k_power_expectation(1) - g * k_in).abs() / (g * k_in.abs()).max(1.0);
            worst_scale = worst_scale.max(err);
        }
        for (g1, g2) in [(2.0, 4.0), (2.0, 3.0), (1.5, 4.0)] {
            let two = k_amplifier_apply(&k_amplifier_apply(&psi, g1).unwrap(), g2).unwrap();
            let one = k_amplifier_apply(&psi, g1 * g2).unwrap();
            worst_comp = worst_comp.max(two.distance(&one));
        }
    }
    ensure(worst_drift < 1e-6, || format!("norm drift {worst_drift:e}"))?;
    ensure(worst_scale < 1e-6, || format!("<K> scaling error {worst_scale:e}"))?;
    ensure(worst_comp < 1e-6, || format!("composition distance {worst_comp:e}"))?;

    let psi = StateSpec::Coherent(Complex64::from_polar(1.0, FRAC_PI_4)).to_fock(dim(48)).unwrap();
    let mut vals = Vec::new();
    for floor in [1e-10, 1e-9, 1e-8, 1e-7, 1e-6] {
        let spec = Arc::new(make_grid(32.0, 4000, floor).map_err(|e| e.to_string())?);
        let gpsi = fock_to_grid(&psi, &spec).map_err(|e| e.to_string())?;
        let out = k_amplifier_apply(&gpsi, 8.0).map_err(|e| e.to_string())?;
        vals.push((out.k_power_expectation(1), out.norm_sq()));
    }
    let spread_k = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let spread_n = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max)
        - vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    ensure(spread_k < 1e-6 && spread_n < 1e-6, || format!("center-patch sensitivity {spread_k:e} / {spread_n:e}"))?;
    Ok(format!(
        "drift {worst_drift:.0e}, scaling {worst_scale:.0e}, composition {worst_comp:.0e}, patch spread {:.0e}",
        spread_k.max(spread_n)
    ))
}

fn bch_suite() -> Outcome {
    let s = bch_random_trials(1000, 0.5, 1);
    ensure(s.failures == 0, || format!("{} singular inputs", s.failures))?;
    ensure(s.max_residual < 1e-10, || format!("matrix residual {:e}", s.max_residual))?;
    let gains = [1e2, 1e3, 1e4];
    let rows0: Vec<_> = gains.iter().map(|&g| bch_asymptotic_row(1.0, 0.0, g).unwrap()).collect();
    let rows1: Vec<_> = gains.iter().map(|&g| bch_asymptotic_row(1.0, 1.0, g).unwrap()).collect();
    let fit = |rows: &[preamp_core::verification::bch::AsymptoticRow], sel: fn(&preamp_core::verification::bch::AsymptoticRow) -> f64| {
        decay_exponent(&gains, &rows.iter().map(sel).collect::<Vec<_>>())
    };
    let gated = [
        ("B+ (c=0)", fit(&rows0, |r| r.plus_remainder)),
        ("B- (c=0)", fit(&rows0, |r| r.minus_remainder)),
        ("B3 (c=0)", fit(&rows0, |r| r.b3_remainder)),
        ("B3 (c=1)", fit(&rows1, |r| r.b3_remainder)),
    ];
    for (name, p) in gated {
        ensure(p >= 2.7, || format!("{name} remainder exponent {p:.3}"))?;
    }
    let worst = rows0.iter().chain(&rows1).map(|r| r.residual).fold(0.0, f64::max);
    ensure(worst < 1e-10, || format!("asymptotic residual {worst:e}"))?;
    let info = fit(&rows1, |r| r.plus_remainder);
    Ok(format!(
        "max residual {:.1e}, exponents {}, B± at c=1 (leading order only) {info:.2}",
        s.max_residual.max(worst),
        gated.iter().map(|(n, p)| format!("{n} {p:.2}")).collect::<Vec<_>>().join(", ")
    ))
}

fn stirling_suite() -> Outcome {
    let t = stirling_first_kind(9).map_err(|e| e.to_string())?;
    for n in 0..=20u64 {
        for l in 0..=8 {
            let (a, b) = rising_factorial_identity(&t, n, l).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("identity fails at N={n}, l={l}: {a} vs {b}"))?;
        }
    }
    let s = check_stirling_bracket(20, &[10, 100, 1000], 200).map_err(|e| e.to_string())?;
    ensure(s.violations == 0, || format!("{} bound violations", s.violations))?;
    Ok(format!("identity exact on 189 cases, {} lattice points, 0 violations", s.checked))
}

fn run_cli(args: &[&str], out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_preamp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("`preamp {}` exited with {status}", args.join(" ")))?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases: &[&[&str]] = &[
        &["fig1"],
        &["fig1", "--eta", "0.8", "--gains", "1,10", "--samples", "100000", "--seed", "5"],
        &["density", "--f", "im-alpha2", "--state", "vacuum", "--samples", "200000", "--seed", "3"],
        &["density", "--f", "abs2", "--state", "coherent:1,0.5", "--eta", "0.7", "--method", "quad2d"],
        &["density", "--f", "re-alpha", "--state", "squeezed:0.3", "--phi", "0.4", "--eta", "0.8"],
        &["sample", "--state", "vacuum", "--n", "1000", "--seed", "7"],
        &["sample", "--state", "fock:2", "--n", "5000", "--eta", "0.9", "--seed", "11", "--format", "json"],
        &["preamp", "--observable", "number", "--gains", "20", "--eta", "0.8", "--samples", "100000", "--seed", "9"],
        &["preamp", "--observable", "quadrature", "--gains", "10", "--phi", "0.3"],
        &["moments", "--observable", "number", "--eta", "0.8", "--gains", "2,4,8,16"],
        &["moments", "--observable", "quadrature", "--phi", "0", "--format", "csv"],
        &["moments", "--observable", "k"],
        &["counterexample"],
        &["bch", "--trials", "1000", "--radius", "0.5", "--seed", "1"],
        &["stirling"],
        &["stirling", "--bounds"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let a = run_cli(args, &dir.path().join(format!("{i}a")))?;
        let b = run_cli(args, &dir.path().join(format!("{i}b")))?;
        ensure(!a.is_empty() && a == b, || format!("`preamp {}` differs between runs", args.join(" ")))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", cases.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("comb reproduction at g = 1000, smooth density at g = 1", comb_reproduction),
        ("heterodyne excess noise and efficiency shift", excess_noise),
        ("convergence rates of number and quadrature moments", convergence_rates),
        ("K second moment counterexample", counterexample),
        ("K amplifier integrity", k_integrity),
        ("su(1,1) disentangling suite", bch_suite),
        ("Stirling identity and density bounds", stirling_suite),
        ("CLI artifact determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
