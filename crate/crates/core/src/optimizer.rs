//! Minimisation of the closed-form objective `F(n1, n2)` over threshold pairs.
//!
//! [`optimize_exhaustive`] is the reference: it scores every pair on the
//! grid together with the infinite-threshold families. [`optimize_descent`]
//! is a cheap coordinate descent on the integer lattice that only promises a
//! local minimum.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_form::objective_f;
use crate::fmt::sig;
use crate::model::ModelParams;
use crate::policy::{Threshold, ThresholdPolicy};

pub const DEFAULT_N_MAX: usize = 200;
/// How many times [`optimize`] doubles `n_max` after a boundary optimum.
pub const MAX_DOUBLINGS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    CoordinateDescent,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exhaustive => "exhaustive",
            Method::CoordinateDescent => "coordinate_descent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: ThresholdPolicy,
    pub f_value: f64,
    pub evaluations: usize,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("optimum {best} touches the grid edge n_max = {n_max}; enlarge the grid")]
    BoundaryOptimum { n_max: usize, best: ThresholdPolicy },
    #[error("invalid search grid: {0}")]
    InvalidGrid(String),
}

/// Orders candidates by objective, then lexicographically by `(n1, n2)`.
fn better(x: &(f64, ThresholdPolicy), y: &(f64, ThresholdPolicy)) -> Ordering {
    x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1))
}

fn touches_edge(n: ThresholdPolicy, n_max: usize) -> bool {
    n.n1() == Threshold::Finite(n_max) || n.n2() == Threshold::Finite(n_max)
}

/// Every candidate policy of the exhaustive search, row by row in `n1`.
fn candidates_in_row(n1: usize, n_max: usize) -> impl Iterator<Item = ThresholdPolicy> {
    (n1..=n_max)
        .map(move |n2| ThresholdPolicy::finite(n1, n2))
        .chain(std::iter::once(ThresholdPolicy::never_uncompressed(n1)))
}

type Scored = (f64, ThresholdPolicy);

struct Scan {
    result: OptimizeResult,
    /// Best pair with both thresholds finite.
    finite_best: ThresholdPolicy,
}

fn scan(params: &ModelParams, n_max: usize) -> Result<Scan, OptimizeError> {
    if n_max < 1 {
        return Err(OptimizeError::InvalidGrid("n_max must be at least 1".into()));
    }
    let rows: Vec<(Scored, Scored, usize)> = (0..=n_max)
        .into_par_iter()
        .map(|n1| {
            let scored: Vec<Scored> = candidates_in_row(n1, n_max).map(|pol| (objective_f(params, pol), pol)).collect();
            let best = *scored.iter().min_by(|x, y| better(x, y)).expect("row is non-empty");
            let finite =
                *scored.iter().filter(|c| c.1.is_finite()).min_by(|x, y| better(x, y)).expect("row has a finite pair");
            (best, finite, scored.len())
        })
        .collect();
    let never = ThresholdPolicy::never_transmit();
    let mut best = (objective_f(params, never), never);
    let mut finite_best = (f64::INFINITY, ThresholdPolicy::finite(0, 0));
    let mut evaluations = 1;
    for (row_best, row_finite, count) in rows {
        evaluations += count;
        if better(&row_best, &best) == Ordering::Less {
            best = row_best;
        }
        if better(&row_finite, &finite_best) == Ordering::Less {
            finite_best = row_finite;
        }
    }
    let (f_value, best) = best;
    Ok(Scan {
        result: OptimizeResult { best, f_value, evaluations, method: Method::Exhaustive },
        finite_best: finite_best.1,
    })
}

/// Global minimum of `F` over `0 <= n1 <= n2 <= n_max`, the never-uncompressed
/// family `(n1, inf)` and the never-transmit policy. Ties go to the
/// lexicographically smallest pair.
pub fn optimize_exhaustive(params: &ModelParams, n_max: usize) -> Result<OptimizeResult, OptimizeError> {
    let Scan { result, .. } = scan(params, n_max)?;
    if touches_edge(result.best, n_max) {
        return Err(OptimizeError::BoundaryOptimum { n_max, best: result.best });
    }
    Ok(result)
}

/// [`optimize_exhaustive`] starting at `n_max`, doubling the grid up to
/// [`MAX_DOUBLINGS`] times while the optimum sits on its edge.
///
/// An infinite threshold also triggers doubling while the best finite pair
/// is on the edge, since larger finite thresholds may still beat the limit;
/// it is accepted once the doublings are used up.
pub fn optimize(params: &ModelParams, n_max: usize) -> Result<OptimizeResult, OptimizeError> {
    let mut n = n_max;
    for attempt in 0..=MAX_DOUBLINGS {
        let last = attempt == MAX_DOUBLINGS;
        let Scan { result, finite_best } = scan(params, n)?;
        if touches_edge(result.best, n) {
            if last {
                return Err(OptimizeError::BoundaryOptimum { n_max: n, best: result.best });
            }
        } else if last || result.best.is_finite() || !touches_edge(finite_best, n) {
            return Ok(result);
        }
        n *= 2;
    }
    unreachable!("the final attempt always returns")
}

/// Coordinate descent on the finite lattice `0 <= n1 <= n2 <= n_max`: keep
/// stepping `n1`, then `n2`, by `-1`/`+1` while `F` strictly decreases, until
/// a full pass makes no move.
pub fn optimize_descent(
    params: &ModelParams,
    init: ThresholdPolicy,
    n_max: usize,
) -> Result<OptimizeResult, OptimizeError> {
    let (mut n1, mut n2) = match (init.n1().finite(), init.n2().finite()) {
        (Some(a), Some(b)) if b <= n_max => (a, b),
        _ => return Err(OptimizeError::InvalidGrid(format!("initial point {init} is outside the grid"))),
    };
    let f = |n1: usize, n2: usize| objective_f(params, ThresholdPolicy::finite(n1, n2));
    let mut value = f(n1, n2);
    let mut evaluations = 1;

    loop {
        let mut moved = false;
        for coord in 0..2 {
            for dir in [-1i64, 1] {
                loop {
                    let (c1, c2) = if coord == 0 { (n1 as i64 + dir, n2 as i64) } else { (n1 as i64, n2 as i64 + dir) };
                    if c1 < 0 || c1 > c2 || c2 > n_max as i64 {
                        break;
                    }
                    let cand = f(c1 as usize, c2 as usize);
                    evaluations += 1;
                    if cand < value {
                        (n1, n2, value) = (c1 as usize, c2 as usize, cand);
                        moved = true;
                    } else {
                        break;
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
    let best = ThresholdPolicy::finite(n1, n2);
    if touches_edge(best, n_max) {
        return Err(OptimizeError::BoundaryOptimum { n_max, best });
    }
    Ok(OptimizeResult { best, f_value: value, evaluations, method: Method::CoordinateDescent })
}

/// `n1,n2,F` over the finite grid, for heat maps.
pub fn grid_csv(params: &ModelParams, n_max: usize) -> String {
    let mut out = String::from("n1,n2,F\n");
    for n1 in 0..=n_max {
        for n2 in n1..=n_max {
            let value = objective_f(params, ThresholdPolicy::finite(n1, n2));
            out.push_str(&format!("{n1},{n2},{}\n", sig(value)));
        }
    }
    out
}
