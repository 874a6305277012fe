//! Monte Carlo oracle for the AoSI chain plus a brute-force stationary solver.
//!
//! Both work from the one-step kernel ([`increment_prob`]) only and share no
//! code with the closed-form module, which they are used to check.
//!
//! Random numbers come from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Each step consumes exactly one
//! uniform `[0, 1)` draw, compared against the increment probability.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{increment_prob, Action, ModelParams};
use crate::policy::ThresholdPolicy;

/// States above this share one overflow bucket in the visit histogram.
pub const VISIT_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error("balance equations could not be solved: {0}")]
    SingularSystem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Number of equal batches for the batch-means error bars.
    pub batches: usize,
}

impl SimConfig {
    /// Horizon `T` with burn-in `T / 100` and 100 batches.
    pub fn new(horizon: u64, seed: u64) -> Self {
        SimConfig { horizon, burn_in: horizon / 100, seed, batches: 100 }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 || self.burn_in >= self.horizon {
            return Err(SimError::InvalidConfig(format!(
                "burn_in ({}) must be smaller than horizon ({})",
                self.burn_in, self.horizon
            )));
        }
        if self.batches < 30 {
            return Err(SimError::InvalidConfig(format!("need at least 30 batches, got {}", self.batches)));
        }
        if self.horizon - self.burn_in < self.batches as u64 {
            return Err(SimError::InvalidConfig("fewer post-burn-in steps than batches".into()));
        }
        Ok(())
    }
}

/// Time-average estimates with batch-means standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub policy: ThresholdPolicy,
    /// Steps that entered the averages.
    pub samples: u64,
    pub avg_cost: f64,
    pub avg_cost_se: f64,
    pub avg_aosi: f64,
    pub avg_aosi_se: f64,
    pub frac_compressed: f64,
    pub frac_compressed_se: f64,
    pub frac_uncompressed: f64,
    pub frac_uncompressed_se: f64,
    /// Fraction of steps spent at AoSI 0.
    pub frac_zero: f64,
    pub frac_zero_se: f64,
    /// Visits per state `0..`, trailing zeros dropped, capped at [`VISIT_CAP`].
    pub visit_counts: Vec<u64>,
    /// Visits to states above [`VISIT_CAP`].
    pub tail_visits: u64,
}

impl SimEstimate {
    /// Empirical occupancy of states `0..=cap`.
    pub fn visit_frequencies(&self, cap: usize) -> Vec<f64> {
        let n = self.samples as f64;
        (0..=cap).map(|i| self.visit_counts.get(i).map_or(0.0, |&c| c as f64 / n)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BatchSums {
    aosi: u64,
    compressed: u64,
    uncompressed: u64,
    zero: u64,
}

/// Mean and batch-means standard error of per-batch averages.
fn batch_mean_se(values: &[f64]) -> (f64, f64) {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (b * (b - 1.0))).sqrt())
}

/// Simulates the AoSI chain from `s(0) = 0` under threshold policy `n`.
pub fn simulate(params: &ModelParams, n: ThresholdPolicy, cfg: &SimConfig) -> Result<SimEstimate, SimError> {
    cfg.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);

    let inc_zero = increment_prob(params, 0, n.action_at(0));
    let inc_pos = Action::ALL.map(|a| increment_prob(params, 1, a));
    let step = |s: usize, rng: &mut Xoshiro256PlusPlus| -> (Action, usize) {
        let action = n.action_at(s);
        let p = if s == 0 { inc_zero } else { inc_pos[action.index()] };
        let u: f64 = rng.gen();
        (action, if u < p { s + 1 } else { 0 })
    };

    let batch_len = (cfg.horizon - cfg.burn_in) / cfg.batches as u64;
    let warmup = cfg.horizon - batch_len * cfg.batches as u64;

    let mut s = 0usize;
    for _ in 0..warmup {
        s = step(s, &mut rng).1;
    }

    let mut visits = vec![0u64; VISIT_CAP + 2];
    let mut batches = Vec::with_capacity(cfg.batches);
    for _ in 0..cfg.batches {
        let mut acc = BatchSums::default();
        for _ in 0..batch_len {
            visits[s.min(VISIT_CAP + 1)] += 1;
            acc.aosi += s as u64;
            acc.zero += (s == 0) as u64;
            let (action, next) = step(s, &mut rng);
            match action {
                Action::Compressed => acc.compressed += 1,
                Action::Uncompressed => acc.uncompressed += 1,
                Action::Idle => {}
            }
            s = next;
        }
        batches.push(acc);
    }

    let per = |f: &dyn Fn(&BatchSums) -> f64| -> (f64, f64) {
        let means: Vec<f64> = batches.iter().map(|b| f(b) / batch_len as f64).collect();
        batch_mean_se(&means)
    };
    let (l1, l2) = (params.lambda1(), params.lambda2());
    let (avg_aosi, avg_aosi_se) = per(&|b| b.aosi as f64);
    let (frac_compressed, frac_compressed_se) = per(&|b| b.compressed as f64);
    let (frac_uncompressed, frac_uncompressed_se) = per(&|b| b.uncompressed as f64);
    let (frac_zero, frac_zero_se) = per(&|b| b.zero as f64);
    let (_, avg_cost_se) = per(&|b| b.aosi as f64 + l1 * b.compressed as f64 + l2 * b.uncompressed as f64);

    let samples = batch_len * cfg.batches as u64;
    let total = |f: fn(&BatchSums) -> u64| batches.iter().map(f).sum::<u64>() as f64;
    let avg_cost = (total(|b| b.aosi) + l1 * total(|b| b.compressed) + l2 * total(|b| b.uncompressed)) / samples as f64;

    let tail_visits = visits[VISIT_CAP + 1];
    visits.truncate(VISIT_CAP + 1);
    while visits.last() == Some(&0) {
        visits.pop();
    }

    Ok(SimEstimate {
        policy: n,
        samples,
        avg_cost,
        avg_cost_se,
        avg_aosi,
        avg_aosi_se,
        frac_compressed,
        frac_compressed_se,
        frac_uncompressed,
        frac_uncompressed_se,
        frac_zero,
        frac_zero_se,
        visit_counts: visits,
        tail_visits,
    })
}

/// Independent replications with seeds `cfg.seed + k`, run in parallel.
pub fn simulate_replications(
    params: &ModelParams,
    n: ThresholdPolicy,
    cfg: &SimConfig,
    replications: usize,
) -> Result<Vec<SimEstimate>, SimError> {
    (0..replications as u64)
        .into_par_iter()
        .map(|k| simulate(params, n, &SimConfig { seed: cfg.seed.wrapping_add(k), ..*cfg }))
        .collect()
}

/// L1 residual target for [`brute_force_stationary`].
pub const BALANCE_RESIDUAL: f64 = 1e-13;
const MAX_POWER_ITERATIONS: usize = 2_000_000;

/// Stationary vector of the policy-induced chain truncated to `0..=s_cap`,
/// found by power iteration on the sparse transition matrix.
///
/// Row `i` holds the reset `i -> 0` and the increment `i -> i + 1`, with the
/// increment of the top state folded back onto itself.
pub fn brute_force_stationary(params: &ModelParams, n: ThresholdPolicy, s_cap: usize) -> Result<Vec<f64>, SimError> {
    if s_cap < 1 {
        return Err(SimError::InvalidConfig("s_cap must be positive".into()));
    }
    let rows: Vec<[(usize, f64); 2]> = (0..=s_cap)
        .map(|i| {
            let p = increment_prob(params, i, n.action_at(i));
            [(0, 1.0 - p), ((i + 1).min(s_cap), p)]
        })
        .collect();

    let mut u = vec![0.0; s_cap + 1];
    u[0] = 1.0;
    let mut next = vec![0.0; s_cap + 1];
    for _ in 0..MAX_POWER_ITERATIONS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in rows.iter().enumerate() {
            for &(j, w) in row {
                next[j] += u[i] * w;
            }
        }
        let total: f64 = next.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(SimError::SingularSystem(format!("mass became {total}")));
        }
        let mut residual = 0.0;
        for (x, y) in next.iter_mut().zip(&u) {
            *x /= total;
            residual += (*x - y).abs();
        }
        std::mem::swap(&mut u, &mut next);
        if residual <= BALANCE_RESIDUAL {
            return Ok(u);
        }
    }
    Err(SimError::SingularSystem(format!("power iteration did not reach residual {BALANCE_RESIDUAL:e}")))
}
