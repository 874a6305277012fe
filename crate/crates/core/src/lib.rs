//! Optimal transmission scheduling for the Age of System Instability (AoSI).
//!
//! A sensor watching a two-mode (stable/unstable) source chooses each step
//! to stay idle, send a cheap compressed update or an expensive uncompressed
//! one over a lossy channel. The AoSI counts how long the source has been
//! unstable. The crate provides:
//!
//! - [`model`]: parameters, actions, stage cost and the AoSI kernel;
//! - [`solver`]: truncated relative value iteration for the average-cost MDP
//!   and structural checks on its output;
//! - [`closed_form`]: exact stationary law and long-run averages under a
//!   threshold policy `(n1, n2)`;
//! - [`optimizer`]: minimisation of the closed-form objective over threshold
//!   pairs;
//! - [`simulator`]: a Monte Carlo oracle and a brute-force stationary solver.

pub mod closed_form;
pub mod fmt;
pub mod model;
pub mod optimizer;
pub mod policy;
pub mod simulator;
pub mod solver;

pub use closed_form::{
    average_aosi, objective_f, stationary, steady_state, transmit_fractions, StationaryDistribution, SteadyStateReport,
};
pub use model::{
    chain_constants, increment_prob, stage_cost, validate_params, validate_params_relaxed, Action, ChainConstants,
    FMode, ModelError, ModelParams, RawParams,
};
pub use optimizer::{optimize, optimize_descent, optimize_exhaustive, OptimizeError, OptimizeResult};
pub use policy::{Threshold, ThresholdPolicy};
pub use simulator::{brute_force_stationary, simulate, SimConfig, SimError, SimEstimate};
pub use solver::{check_monotone, extract_thresholds, rvi_solve, SolveError, SolveResult, SolverConfig};

#[cfg(test)]
pub(crate) mod test_support {
    use proptest::prelude::*;

    use crate::model::{increment_prob, Action, FMode, ModelParams, RawParams};
    use crate::policy::ThresholdPolicy;

    /// Valid parameter sets with `a = r1 < 0.98`.
    pub fn valid_raw() -> impl Strategy<Value = RawParams> {
        (0.0..0.98f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..10.0f64, 0.0..10.0f64).prop_map(
            |(r1, t0, rho, x, y, l1, dl)| {
                let r0 = (1.0 - r1) + t0 * r1;
                let (p, q) = if x <= y { (x, y) } else { (y, x) };
                RawParams { r0, r1, rho, p, q, lambda1: l1, lambda2: l1 + dl, f_mode: FMode::Kernel }
            },
        )
    }

    /// Walks the balance recursion `u(i+1) = u(i) * Pr(increment at i)`
    /// straight from the kernel, normalises over `0..=cap`, and returns
    /// `(mean AoSI, compressed fraction, uncompressed fraction)`.
    pub fn summation_oracle(params: &ModelParams, pol: ThresholdPolicy, cap: usize) -> (f64, f64, f64) {
        let mut w = Vec::with_capacity(cap + 1);
        let mut x = 1.0;
        for i in 0..=cap {
            w.push(x);
            x *= increment_prob(params, i, pol.action_at(i));
        }
        let total: f64 = w.iter().sum();
        let (mut mean, mut fc, mut fu) = (0.0, 0.0, 0.0);
        for (i, wi) in w.iter().enumerate() {
            let u = wi / total;
            mean += i as f64 * u;
            match pol.action_at(i) {
                Action::Compressed => fc += u,
                Action::Uncompressed => fu += u,
                Action::Idle => {}
            }
        }
        (mean, fc, fu)
    }
}
