use aosi_core::fmt::sig;
use aosi_core::optimizer::DEFAULT_N_MAX;
use aosi_core::solver::check_switching_signs;
use aosi_core::{
    average_aosi, brute_force_stationary, check_monotone, extract_thresholds, objective_f, optimize, rvi_solve,
    simulate, stationary, transmit_fractions, FMode, ModelParams, RawParams, SimConfig, SimEstimate, ThresholdPolicy,
};
use serde::Serialize;

use crate::commands::{to_json, write_output};
use crate::{CliResult, VerifyArgs, EXIT_FAILURE};

const EXACT_TOL: f64 = 1e-10;
const GAIN_TOL: f64 = 1e-6;
const SIM_SE: f64 = 3.0;
const BRUTE_FORCE_MAX_CAP: usize = 200_000;

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    pass: bool,
    measured: Option<f64>,
    limit: Option<f64>,
    detail: String,
}

#[derive(Debug, Serialize)]
struct Report {
    params: RawParams,
    policy: Option<ThresholdPolicy>,
    pass: bool,
    checks: Vec<Check>,
}

/// Rounds to the printed precision so the JSON carries 12 significant digits.
fn round(x: f64) -> Option<f64> {
    x.is_finite().then(|| sig(x).parse().expect("formatted number"))
}

fn check(name: &str, measured: f64, limit: f64, detail: String) -> Check {
    Check { name: name.into(), pass: measured <= limit, measured: round(measured), limit: Some(limit), detail }
}

fn flag(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, measured: None, limit: None, detail }
}

fn z_score(reference: f64, estimate: f64, se: f64) -> f64 {
    let dev = (reference - estimate).abs();
    if dev == 0.0 {
        0.0
    } else {
        dev / se
    }
}

/// Truncation where the geometric tail of the stationary law drops below
/// 1e-16.
fn brute_force_cap(params: &ModelParams, n: ThresholdPolicy) -> usize {
    let k = params.constants();
    let ratio = k.a.max(k.b).max(k.c);
    let start = [n.n1(), n.n2()].iter().filter_map(|t| t.finite()).max().unwrap_or(0);
    let tail = if ratio <= 0.0 { 1 } else { (-16.0 * std::f64::consts::LN_10 / ratio.ln()).ceil() as usize };
    (start + tail + 10).min(BRUTE_FORCE_MAX_CAP)
}

fn exactness(params: &ModelParams, n: ThresholdPolicy, checks: &mut Vec<Check>) {
    let cap = brute_force_cap(params, n);
    match brute_force_stationary(params, n, cap) {
        Ok(brute) => {
            let closed = stationary(params, n).to_vec(cap);
            let linf = closed.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            checks.push(check(
                &format!("closed_form_vs_brute_force {n}"),
                linf,
                EXACT_TOL,
                format!("L-inf over states 0..={cap}"),
            ));
        }
        Err(e) => checks.push(flag(&format!("closed_form_vs_brute_force {n}"), false, e.to_string())),
    }
    let (fc, fu) = transmit_fractions(params, n);
    let parts = average_aosi(params, n) + params.lambda1() * fc + params.lambda2() * fu;
    checks.push(check(
        &format!("objective_composition {n}"),
        (objective_f(params, n) - parts).abs(),
        EXACT_TOL,
        "table objective vs average AoSI plus weighted transmit fractions".into(),
    ));
}

fn sim_deviation(params: &ModelParams, n: ThresholdPolicy, est: &SimEstimate) -> f64 {
    let (fc, fu) = transmit_fractions(params, n);
    [
        z_score(average_aosi(params, n), est.avg_aosi, est.avg_aosi_se),
        z_score(fc, est.frac_compressed, est.frac_compressed_se),
        z_score(fu, est.frac_uncompressed, est.frac_uncompressed_se),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Deviation of the always-transmit closed form (state-0 occupancy and
/// average AoSI) from simulation, in standard errors.
fn always_transmit_deviation(params: &ModelParams, est: &SimEstimate) -> f64 {
    let n = ThresholdPolicy::finite(0, 0);
    z_score(stationary(params, n).prob(0), est.frac_zero, est.frac_zero_se).max(z_score(
        average_aosi(params, n),
        est.avg_aosi,
        est.avg_aosi_se,
    ))
}

pub(crate) fn run(args: &VerifyArgs) -> CliResult<u8> {
    let params = args.params.load()?;
    let requested = args.policy.optional()?;
    let mut checks = Vec::new();

    let optimum = optimize(&params, DEFAULT_N_MAX);
    let policy = match (&optimum, requested) {
        (_, Some(n)) => Some(n),
        (Ok(opt), None) => Some(opt.best),
        (Err(e), None) => {
            checks.push(flag("optimize", false, e.to_string()));
            None
        }
    };

    let always = ThresholdPolicy::finite(0, 0);
    if let Some(n) = policy {
        exactness(&params, n, &mut checks);
    }
    if policy != Some(always) {
        exactness(&params, always, &mut checks);
    }

    match rvi_solve(&params, &args.solver.config()) {
        Ok(res) => {
            let mono = check_monotone(&res);
            checks.push(flag(
                "value_monotone",
                mono.monotone,
                mono.first_violation.map_or("V non-decreasing".into(), |s| format!("V decreases after s = {s}")),
            ));
            match extract_thresholds(&res) {
                Ok(n) => {
                    checks.push(flag("threshold_structure", true, format!("value iteration policy {n}")));
                    let signs = check_switching_signs(&params, &res, n);
                    checks.push(flag(
                        "switching_point_orderings",
                        signs.is_empty(),
                        if signs.is_empty() {
                            "all hold".into()
                        } else {
                            serde_json::to_string(&signs).unwrap_or_default()
                        },
                    ));
                    if let Ok(opt) = &optimum {
                        checks.push(check(
                            "gain_vs_closed_form_minimum",
                            (res.theta - opt.f_value).abs(),
                            GAIN_TOL,
                            format!("theta {} vs F* {}", sig(res.theta), sig(opt.f_value)),
                        ));
                        checks.push(flag(
                            "thresholds_match_optimum",
                            n == opt.best,
                            format!("value iteration {n}, exhaustive {}", opt.best),
                        ));
                    }
                }
                Err(e) => checks.push(flag("threshold_structure", false, e.to_string())),
            }
        }
        Err(e) => checks.push(flag("value_iteration", false, e.to_string())),
    }

    let cfg = SimConfig::new(args.sim.horizon, args.sim.seed);
    if let Some(n) = policy {
        match simulate(&params, n, &cfg) {
            Ok(est) => checks.push(check(
                &format!("simulation_vs_closed_form {n}"),
                sim_deviation(&params, n, &est),
                SIM_SE,
                "worst of average AoSI and transmit fractions, in batch-means standard errors".into(),
            )),
            Err(e) => checks.push(flag("simulation", false, e.to_string())),
        }
    }
    match simulate(&params, always, &SimConfig { seed: cfg.seed.wrapping_add(1), ..cfg }) {
        Ok(est) => {
            let kernel = always_transmit_deviation(&params.with_f_mode(FMode::Kernel), &est);
            let literal = always_transmit_deviation(&params.with_f_mode(FMode::PaperLiteral), &est);
            let (configured, mode) = match params.f_mode() {
                FMode::Kernel => (kernel, "kernel"),
                FMode::PaperLiteral => (literal, "paper_literal"),
            };
            checks.push(check(
                "f_arbitration",
                configured,
                SIM_SE,
                format!(
                    "configured f_mode {mode}; always-transmit closed form vs simulation: kernel {} SE, paper_literal {} SE",
                    sig(kernel),
                    sig(literal)
                ),
            ));
        }
        Err(e) => checks.push(flag("f_arbitration", false, e.to_string())),
    }

    let pass = checks.iter().all(|c| c.pass);
    let report = Report { params: params.raw(), policy, pass, checks };
    let json = to_json(&report);
    print!("{json}");
    if let Some(dir) = &args.out {
        write_output(dir, "report.json", &json)?;
    }
    Ok(if pass { 0 } else { EXIT_FAILURE })
}
