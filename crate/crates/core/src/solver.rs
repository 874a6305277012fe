//! Average-cost MDP over the AoSI, solved by relative value iteration on the
//! truncated state space `0..=s_max`.
//!
//! At `s_max` the successor `s + 1` is clamped back onto `s_max`. The chain
//! resets with probability at least `1 - a` from every state, so the mass the
//! truncation touches is `O(a^s_max)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::sig;
use crate::model::{Action, ModelParams};
use crate::policy::{Threshold, ThresholdPolicy};

/// Slack used by the monotonicity and switching-sign checks.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub s_max: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { s_max: 2000, tol: 1e-10, max_iter: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "relative value iteration did not converge after {iterations} iterations (span residual {span_residual:e})"
    )]
    NoConvergence { iterations: usize, span_residual: f64 },
    #[error("policy is not multi-threshold: action order breaks at state {state}")]
    NotThreshold { state: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Optimal long-run average cost.
    pub theta: f64,
    /// Differential value function, `v[0] = 0`.
    pub v: Vec<f64>,
    /// Greedy action per state, ties going to the cheaper action.
    pub policy: Vec<Action>,
    pub iterations: usize,
    pub span_residual: f64,
}

impl SolveResult {
    pub fn s_max(&self) -> usize {
        self.v.len() - 1
    }

    /// `s,V,action` rows for every truncated state.
    pub fn value_csv(&self) -> String {
        let mut out = String::from("s,V,action\n");
        for (s, (v, a)) in self.v.iter().zip(&self.policy).enumerate() {
            out.push_str(&format!("{s},{},{}\n", sig(*v), a.index()));
        }
        out
    }
}

/// JSON summary of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub theta: f64,
    pub n1: Threshold,
    pub n2: Threshold,
    pub iterations: usize,
    pub span_residual: f64,
}

impl SolveSummary {
    pub fn new(result: &SolveResult, thresholds: ThresholdPolicy) -> Self {
        SolveSummary {
            theta: result.theta,
            n1: thresholds.n1(),
            n2: thresholds.n2(),
            iterations: result.iterations,
            span_residual: result.span_residual,
        }
    }
}

/// One-step lookahead values `[v0, v1, v2]` of the three actions at `s`.
pub fn action_values(params: &ModelParams, v: &[f64], s: usize) -> [f64; 3] {
    let top = v.len() - 1;
    let next = v[(s + 1).min(top)];
    let reset = v[0];
    let r = if s == 0 { 1.0 - params.r0() } else { params.r1() };
    let sf = s as f64;
    let keep_p = 1.0 - params.rho() * params.p();
    let keep_q = 1.0 - params.rho() * params.q();
    [
        sf + r * next + (1.0 - r) * reset,
        sf + params.lambda1() + keep_p * r * next + (keep_p * (1.0 - r) + params.rho() * params.p()) * reset,
        sf + params.lambda2() + keep_q * r * next + (keep_q * (1.0 - r) + params.rho() * params.q()) * reset,
    ]
}

/// Index of the smallest entry; the first one wins on exact ties.
fn argmin(values: &[f64; 3]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &x) in values.iter().enumerate().skip(1) {
        if x < best.1 {
            best = (i, x);
        }
    }
    best
}

/// Relative value iteration with the span-seminorm stopping rule.
///
/// `theta` is the midpoint of the largest and smallest one-step increments
/// at the final sweep.
pub fn rvi_solve(params: &ModelParams, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    if cfg.s_max < 10 {
        return Err(SolveError::InvalidConfig(format!("s_max = {} must be at least 10", cfg.s_max)));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(SolveError::InvalidConfig(format!("tol = {} must be positive", cfg.tol)));
    }
    let n = cfg.s_max + 1;
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut span = f64::INFINITY;

    for iter in 1..=cfg.max_iter {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            let (_, best) = argmin(&action_values(params, &v, s));
            let delta = best - v[s];
            lo = lo.min(delta);
            hi = hi.max(delta);
            next[s] = best;
        }
        span = hi - lo;
        let offset = next[0];
        for (dst, src) in v.iter_mut().zip(&next) {
            *dst = src - offset;
        }
        if span < cfg.tol {
            let policy = (0..n).map(|s| Action::ALL[argmin(&action_values(params, &v, s)).0]).collect();
            return Ok(SolveResult { theta: 0.5 * (lo + hi), v, policy, iterations: iter, span_residual: span });
        }
    }
    Err(SolveError::NoConvergence { iterations: cfg.max_iter, span_residual: span })
}

/// Reads `(n1, n2)` off a policy vector of the form idle, then compressed,
/// then uncompressed. A segment that never starts within the truncation
/// gives an infinite threshold.
pub fn extract_thresholds(result: &SolveResult) -> Result<ThresholdPolicy, SolveError> {
    thresholds_of(&result.policy)
}

pub fn thresholds_of(policy: &[Action]) -> Result<ThresholdPolicy, SolveError> {
    let mut n1 = Threshold::Infinite;
    let mut n2 = Threshold::Infinite;
    let mut prev = Action::Idle;
    for (s, &a) in policy.iter().enumerate() {
        if a < prev {
            return Err(SolveError::NotThreshold { state: s });
        }
        if a >= Action::Compressed && !n1.is_finite() {
            n1 = Threshold::Finite(s);
        }
        if a == Action::Uncompressed && !n2.is_finite() {
            n2 = Threshold::Finite(s);
        }
        prev = a;
    }
    Ok(ThresholdPolicy::new(n1, n2).expect("n1 is set no later than n2"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub monotone: bool,
    /// First `s` with `v[s + 1] < v[s] - CHECK_TOL`.
    pub first_violation: Option<usize>,
}

pub fn check_monotone(result: &SolveResult) -> MonotoneCheck {
    check_monotone_values(&result.v)
}

pub fn check_monotone_values(v: &[f64]) -> MonotoneCheck {
    let first_violation = v.windows(2).position(|w| w[1] < w[0] - CHECK_TOL);
    MonotoneCheck { monotone: first_violation.is_none(), first_violation }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignViolation {
    pub state: usize,
    pub rule: &'static str,
    pub excess: f64,
}

/// Checks the action-value orderings that hold at the switching points of an
/// optimal threshold policy:
///
/// - just below `n1`, idling is no worse than either transmission;
/// - at `n1`, the chosen transmission is no worse than idling (and, when the
///   compressed segment is non-empty, compressed beats uncompressed);
/// - at `n2`, uncompressed is no worse than compressed.
pub fn check_switching_signs(params: &ModelParams, result: &SolveResult, n: ThresholdPolicy) -> Vec<SignViolation> {
    let top = result.s_max();
    let mut out = Vec::new();
    let mut require = |state: usize, rule: &'static str, lhs: f64, rhs: f64| {
        if lhs > rhs + CHECK_TOL {
            out.push(SignViolation { state, rule, excess: lhs - rhs });
        }
    };
    let q = |s: usize| action_values(params, &result.v, s);

    if let Some(n1) = n.n1().finite().filter(|&n1| n1 <= top) {
        let [v0, v1, v2] = q(n1);
        if n.n2() > Threshold::Finite(n1) {
            require(n1, "v1 <= v0 at n1", v1, v0);
            require(n1, "v1 <= v2 at n1", v1, v2);
        } else {
            require(n1, "v2 <= v0 at n1", v2, v0);
        }
        if n1 >= 1 {
            let [v0, v1, v2] = q(n1 - 1);
            require(n1 - 1, "v0 <= min(v1, v2) below n1", v0, v1.min(v2));
        }
    }
    if let Some(n2) = n.n2().finite().filter(|&n2| n2 <= top) {
        let [_, v1, v2] = q(n2);
        require(n2, "v2 <= v1 at n2", v2, v1);
    }
    out
}
