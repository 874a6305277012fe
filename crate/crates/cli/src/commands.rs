use std::path::Path;

use aosi_core::fmt::sig;
use aosi_core::optimizer::grid_csv;
use aosi_core::solver::SolveSummary;
use aosi_core::{
    check_monotone, extract_thresholds, optimize_descent, rvi_solve, steady_state, SimConfig, SteadyStateReport,
    ThresholdPolicy,
};
use serde::Serialize;

use crate::{CliError, CliResult, EvaluateArgs, OptimizeArgs, PolicyArgs, SearchMethod, SimulateArgs, SolveArgs};

pub(crate) fn write_output(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

impl PolicyArgs {
    pub(crate) fn required(&self) -> CliResult<ThresholdPolicy> {
        match (self.n1, self.n2) {
            (Some(n1), Some(n2)) => self.checked(n1, n2),
            _ => Err(CliError::invalid("both --n1 and --n2 are required")),
        }
    }

    pub(crate) fn optional(&self) -> CliResult<Option<ThresholdPolicy>> {
        match (self.n1, self.n2) {
            (None, None) => Ok(None),
            _ => self.required().map(Some),
        }
    }

    fn checked(&self, n1: aosi_core::Threshold, n2: aosi_core::Threshold) -> CliResult<ThresholdPolicy> {
        ThresholdPolicy::new(n1, n2).map_err(|e| CliError::invalid(e.to_string()))
    }
}

pub(crate) fn solve(args: &SolveArgs) -> CliResult<u8> {
    let params = args.params.load()?;
    let result = rvi_solve(&params, &args.solver.config())?;
    if let Some(dir) = &args.out {
        write_output(dir, "value.csv", &result.value_csv())?;
    }
    let n = extract_thresholds(&result)?;
    let mono = check_monotone(&result);

    println!("theta: {}", sig(result.theta));
    println!("thresholds: {n}");
    match mono.first_violation {
        None => println!("monotone: true"),
        Some(s) => println!("monotone: false (V decreases after s = {s})"),
    }
    println!("iterations: {}", result.iterations);
    println!("span_residual: {}", sig(result.span_residual));
    if let Some(dir) = &args.out {
        write_output(dir, "solve.json", &to_json(&SolveSummary::new(&result, n)))?;
    }
    Ok(0)
}

pub(crate) fn evaluate(args: &EvaluateArgs) -> CliResult<u8> {
    let params = args.params.load()?;
    let n = args.policy.required()?;
    println!("{}", SteadyStateReport::CSV_HEADER);
    println!("{}", steady_state(&params, n).csv_row());
    Ok(0)
}

pub(crate) fn optimize(args: &OptimizeArgs) -> CliResult<u8> {
    let params = args.params.load()?;
    let result = match args.method {
        SearchMethod::Exhaustive => aosi_core::optimize(&params, args.n_max)?,
        SearchMethod::Descent => {
            let init = args.init.optional()?.unwrap_or(ThresholdPolicy::finite(0, 0));
            optimize_descent(&params, init, args.n_max)?
        }
    };
    println!("best: {}", result.best);
    println!("F: {}", sig(result.f_value));
    println!("evaluations: {}", result.evaluations);
    println!("method: {}", result.method);
    if let Some(dir) = &args.out {
        write_output(dir, "grid.csv", &grid_csv(&params, args.n_max))?;
    }
    Ok(0)
}

pub(crate) fn simulate(args: &SimulateArgs) -> CliResult<u8> {
    let params = args.params.load()?;
    let n = args.policy.required()?;
    let est = aosi_core::simulate(&params, n, &SimConfig::new(args.sim.horizon, args.sim.seed))?;
    println!("policy: {n}");
    println!("samples: {}", est.samples);
    for (name, value, se) in [
        ("avg_cost", est.avg_cost, est.avg_cost_se),
        ("avg_aosi", est.avg_aosi, est.avg_aosi_se),
        ("frac_compressed", est.frac_compressed, est.frac_compressed_se),
        ("frac_uncompressed", est.frac_uncompressed, est.frac_uncompressed_se),
        ("frac_zero", est.frac_zero, est.frac_zero_se),
    ] {
        println!("{name}: {} (se {})", sig(value), sig(se));
    }
    if let Some(dir) = &args.out {
        write_output(dir, "estimate.json", &to_json(&est))?;
    }
    Ok(0)
}
