use std::fmt::Write;

use aosi_core::fmt::sig;
use aosi_core::{
    extract_thresholds, optimize, rvi_solve, simulate, transmit_fractions, ModelParams, OptimizeResult, SimConfig,
    ThresholdPolicy,
};
use rayon::prelude::*;

use crate::commands::write_output;
use crate::svg::{HeatGrid, LineChart, Series};
use crate::{CliError, CliResult, SweepArgs, SweepOutput};

struct SolverCheck {
    theta: f64,
    thresholds: ThresholdPolicy,
    iterations: usize,
}

struct SimCheck {
    avg_cost: f64,
    avg_cost_se: f64,
}

struct Cell {
    lambda1: f64,
    lambda2: f64,
    optimum: Result<(OptimizeResult, f64, f64), String>,
    solver: Option<Result<SolverCheck, String>>,
    sim: Option<Result<SimCheck, String>>,
}

fn check_grid(name: &str, grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::invalid(format!("{name} is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(CliError::invalid(format!("{name} contains {v}; energies must be finite and non-negative")));
    }
    Ok(())
}

fn evaluate_cell(base: &ModelParams, args: &SweepArgs, index: usize, lambda1: f64, lambda2: f64) -> Cell {
    let params = base.with_energies(lambda1, lambda2).expect("grid values were validated");
    let optimum = optimize(&params, args.n_max).map_err(|e| e.to_string()).map(|opt| {
        let (fc, fu) = transmit_fractions(&params, opt.best);
        (opt, fc, fu)
    });
    let solver = args.check_solver.then(|| {
        let res = rvi_solve(&params, &args.solver.config()).map_err(|e| e.to_string())?;
        let thresholds = extract_thresholds(&res).map_err(|e| e.to_string())?;
        Ok(SolverCheck { theta: res.theta, thresholds, iterations: res.iterations })
    });
    let sim = match (&optimum, args.check_sim) {
        (Ok((opt, ..)), true) => {
            let cfg = SimConfig::new(args.sim.horizon, args.sim.seed.wrapping_add(index as u64));
            Some(
                simulate(&params, opt.best, &cfg)
                    .map(|e| SimCheck { avg_cost: e.avg_cost, avg_cost_se: e.avg_cost_se })
                    .map_err(|e| e.to_string()),
            )
        }
        _ => None,
    };
    Cell { lambda1, lambda2, optimum, solver, sim }
}

pub(crate) fn run(args: &SweepArgs) -> CliResult<u8> {
    let base = args.params.load()?;
    check_grid("lambda1 grid", &args.lambda1_grid)?;
    check_grid("lambda2 grid", &args.lambda2_grid)?;

    let pairs: Vec<(f64, f64)> =
        args.lambda1_grid.iter().flat_map(|&l1| args.lambda2_grid.iter().map(move |&l2| (l1, l2))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::new(crate::EXIT_FAILURE, format!("thread pool: {e}")))?;
    let cells: Vec<Cell> = pool
        .install(|| pairs.par_iter().enumerate().map(|(k, &(l1, l2))| evaluate_cell(&base, args, k, l1, l2)).collect());

    let dir = &args.out;
    let mut failures = String::new();
    for c in &cells {
        let stages = [
            ("optimize", c.optimum.as_ref().err()),
            ("solve", c.solver.as_ref().and_then(|r| r.as_ref().err())),
            ("simulate", c.sim.as_ref().and_then(|r| r.as_ref().err())),
        ];
        for (stage, err) in stages {
            if let Some(e) = err {
                let _ = writeln!(failures, "lambda1={},lambda2={}: {stage}: {e}", sig(c.lambda1), sig(c.lambda2));
            }
        }
    }
    write_output(dir, "failures.log", &failures)?;

    let outputs = &args.outputs;
    if outputs.contains(&SweepOutput::CostGrid) {
        let mut csv = String::from("lambda1,lambda2,n1,n2,F_star\n");
        for c in &cells {
            if let Ok((opt, ..)) = &c.optimum {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    sig(c.lambda1),
                    sig(c.lambda2),
                    opt.best.n1(),
                    opt.best.n2(),
                    sig(opt.f_value)
                );
            }
        }
        write_output(dir, "cost_grid.csv", &csv)?;
        write_output(dir, "cost_vs_lambda2.svg", &cost_chart(args, &cells, true).render())?;
        write_output(dir, "cost_vs_lambda1.svg", &cost_chart(args, &cells, false).render())?;
    }
    if outputs.contains(&SweepOutput::FractionsVsLambda2) {
        let mut csv = String::from("lambda1,lambda2,frac_c,frac_u\n");
        for c in &cells {
            if let Ok((_, fc, fu)) = &c.optimum {
                let _ = writeln!(csv, "{},{},{},{}", sig(c.lambda1), sig(c.lambda2), sig(*fc), sig(*fu));
            }
        }
        write_output(dir, "fractions.csv", &csv)?;
        write_output(dir, "fractions_vs_lambda2.svg", &fractions_chart(args, &cells).render())?;
    }
    if outputs.contains(&SweepOutput::PolicyGrid) {
        write_output(dir, "policy_grid.svg", &policy_grid(args, &cells).render())?;
    }
    if args.check_solver {
        let mut csv = String::from("lambda1,lambda2,theta,n1,n2,F_star,abs_gap,thresholds_agree,iterations\n");
        for c in &cells {
            if let (Some(Ok(s)), Ok((opt, ..))) = (&c.solver, &c.optimum) {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    sig(c.lambda1),
                    sig(c.lambda2),
                    sig(s.theta),
                    s.thresholds.n1(),
                    s.thresholds.n2(),
                    sig(opt.f_value),
                    sig((s.theta - opt.f_value).abs()),
                    s.thresholds == opt.best,
                    s.iterations
                );
            }
        }
        write_output(dir, "solver_check.csv", &csv)?;
    }
    if args.check_sim {
        let mut csv = String::from("lambda1,lambda2,n1,n2,F_star,avg_cost,avg_cost_se,z\n");
        for c in &cells {
            if let (Some(Ok(s)), Ok((opt, ..))) = (&c.sim, &c.optimum) {
                let z = if s.avg_cost == opt.f_value { 0.0 } else { (s.avg_cost - opt.f_value).abs() / s.avg_cost_se };
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    sig(c.lambda1),
                    sig(c.lambda2),
                    opt.best.n1(),
                    opt.best.n2(),
                    sig(opt.f_value),
                    sig(s.avg_cost),
                    sig(s.avg_cost_se),
                    sig(z)
                );
            }
        }
        write_output(dir, "sim_check.csv", &csv)?;
    }

    let failed = failures.lines().count();
    println!("sweep: {} cells, {failed} failures, output in {}", cells.len(), dir.display());
    if failed > 0 {
        eprintln!("warning: {failed} cell stages failed; see {}", dir.join("failures.log").display());
    }
    Ok(0)
}

fn optimum_f(cells: &[Cell], l1: f64, l2: f64) -> f64 {
    cells
        .iter()
        .find(|c| c.lambda1 == l1 && c.lambda2 == l2)
        .and_then(|c| c.optimum.as_ref().ok())
        .map_or(f64::NAN, |(opt, ..)| opt.f_value)
}

/// Optimal cost against one energy, one line per value of the other.
fn cost_chart(args: &SweepArgs, cells: &[Cell], along_lambda2: bool) -> LineChart {
    let (outer, inner, outer_name, inner_name) = if along_lambda2 {
        (&args.lambda1_grid, &args.lambda2_grid, "lambda1", "lambda2")
    } else {
        (&args.lambda2_grid, &args.lambda1_grid, "lambda2", "lambda1")
    };
    let series = outer
        .iter()
        .map(|&o| Series {
            label: format!("{outer_name} = {}", sig(o)),
            points: inner
                .iter()
                .map(|&i| {
                    let f = if along_lambda2 { optimum_f(cells, o, i) } else { optimum_f(cells, i, o) };
                    (i, f)
                })
                .collect(),
            dashed: false,
        })
        .collect();
    LineChart {
        title: format!("Optimal average cost vs {inner_name}"),
        x_label: inner_name.into(),
        y_label: "F*".into(),
        series,
    }
}

/// Transmit fractions against lambda2 for lambda1 in {1, 6} (or the first
/// grid value when neither is present).
fn fractions_chart(args: &SweepArgs, cells: &[Cell]) -> LineChart {
    let mut chosen: Vec<f64> = args.lambda1_grid.iter().copied().filter(|&l| l == 1.0 || l == 6.0).collect();
    chosen.dedup();
    if chosen.is_empty() {
        chosen.push(args.lambda1_grid[0]);
    }
    let mut series = Vec::new();
    for &l1 in &chosen {
        for (name, compressed) in [("compressed", true), ("uncompressed", false)] {
            let points = args
                .lambda2_grid
                .iter()
                .map(|&l2| {
                    let frac = cells
                        .iter()
                        .find(|c| c.lambda1 == l1 && c.lambda2 == l2)
                        .and_then(|c| c.optimum.as_ref().ok())
                        .map_or(f64::NAN, |&(_, fc, fu)| if compressed { fc } else { fu });
                    (l2, frac)
                })
                .collect();
            series.push(Series { label: format!("{name}, lambda1 = {}", sig(l1)), points, dashed: compressed });
        }
    }
    LineChart {
        title: "Fraction of time transmitting at the optimum".into(),
        x_label: "lambda2".into(),
        y_label: "fraction of time".into(),
        series,
    }
}

fn policy_grid(args: &SweepArgs, cells: &[Cell]) -> HeatGrid {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for &l1 in &args.lambda1_grid {
        let (mut vrow, mut lrow) = (Vec::new(), Vec::new());
        for &l2 in &args.lambda2_grid {
            match cells.iter().find(|c| c.lambda1 == l1 && c.lambda2 == l2).map(|c| c.optimum.as_ref()) {
                Some(Ok((opt, ..))) => {
                    vrow.push(Some(opt.f_value));
                    lrow.push(format!("{},{}", opt.best.n1(), opt.best.n2()));
                }
                _ => {
                    vrow.push(None);
                    lrow.push("failed".into());
                }
            }
        }
        values.push(vrow);
        labels.push(lrow);
    }
    HeatGrid {
        title: "Optimal thresholds n1,n2 (shaded by F*)".into(),
        row_label: "lambda1".into(),
        col_label: "lambda2".into(),
        rows: args.lambda1_grid.iter().map(|&v| sig(v)).collect(),
        cols: args.lambda2_grid.iter().map(|&v| sig(v)).collect(),
        values,
        labels,
    }
}
