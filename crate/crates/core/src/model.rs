//! System model: the binary source, the sensor's three actions, the AoSI
//! stage cost and the one-step AoSI transition kernel.
//!
//! The AoSI `s` only ever moves to `s + 1` or resets to `0`, so the kernel is
//! fully described by the increment probability returned by
//! [`increment_prob`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack accepted at probability and ordering boundaries.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Sensor action at one time step, ordered by energy cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Action {
    Idle = 0,
    Compressed = 1,
    Uncompressed = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Idle, Action::Compressed, Action::Uncompressed];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Action::Idle => "idle",
            Action::Compressed => "compressed",
            Action::Uncompressed => "uncompressed",
        };
        f.write_str(name)
    }
}

/// How the state-0 increment constant `f` of the always-transmit chain is
/// computed.
///
/// `Kernel` uses the transition kernel, `(1 - r0)(1 - rho q)`. `PaperLiteral`
/// reproduces the printed variant `(1 - r0)(1 - rho)`, kept only so the
/// discrepancy can be measured against simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FMode {
    #[default]
    Kernel,
    PaperLiteral,
}

impl std::str::FromStr for FMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kernel" => Ok(FMode::Kernel),
            "paper_literal" | "paper-literal" => Ok(FMode::PaperLiteral),
            other => Err(format!("unknown f-mode `{other}` (expected kernel or paper-literal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("drift condition violated: r0 + r1 = {sum} < 1")]
    DriftCondition { sum: f64 },
    #[error("quality order violated: q = {q} < p = {p}")]
    QualityOrder { p: f64, q: f64 },
    #[error("energy order violated: need lambda2 >= lambda1 >= 0, got lambda1 = {lambda1}, lambda2 = {lambda2}")]
    EnergyOrder { lambda1: f64, lambda2: f64 },
    #[error("unstable chain: max(a, b, c) = {max_ratio} >= 1, average AoSI would be infinite")]
    UnstableChain { max_ratio: f64 },
}

/// Unvalidated parameter record, the flat JSON shape of [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub r0: f64,
    pub r1: f64,
    pub rho: f64,
    pub p: f64,
    pub q: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default)]
    pub f_mode: FMode,
}

impl RawParams {
    /// Numerical-study defaults: `r0 = 0.1, r1 = 0.9, rho = 0.1, p = 0.5,
    /// q = 0.9` with the given energies.
    pub fn reference(lambda1: f64, lambda2: f64) -> Self {
        RawParams { r0: 0.1, r1: 0.9, rho: 0.1, p: 0.5, q: 0.9, lambda1, lambda2, f_mode: FMode::Kernel }
    }
}

/// Validated model parameters. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    r0: f64,
    r1: f64,
    rho: f64,
    p: f64,
    q: f64,
    lambda1: f64,
    lambda2: f64,
    f_mode: FMode,
}

fn probability(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if !value.is_finite() || !(-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&value) {
        return Err(ModelError::InvalidProbability { name, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Checks every model assumption and returns the validated parameters.
pub fn validate_params(raw: RawParams) -> Result<ModelParams, ModelError> {
    validate(raw, true)
}

/// Like [`validate_params`] but admits `lambda2 < lambda1`.
///
/// Energy sweeps cover the full `(lambda1, lambda2)` grid, including the
/// half where the uncompressed update is the cheaper one. Every formula and
/// the threshold structure only need `q >= p`, so nothing else is relaxed.
pub fn validate_params_relaxed(raw: RawParams) -> Result<ModelParams, ModelError> {
    validate(raw, false)
}

fn validate(raw: RawParams, energy_order: bool) -> Result<ModelParams, ModelError> {
    let r0 = probability("r0", raw.r0)?;
    let r1 = probability("r1", raw.r1)?;
    let rho = probability("rho", raw.rho)?;
    let p = probability("p", raw.p)?;
    let q = probability("q", raw.q)?;

    if r0 + r1 < 1.0 - BOUNDARY_TOL {
        return Err(ModelError::DriftCondition { sum: r0 + r1 });
    }
    if q < p - BOUNDARY_TOL {
        return Err(ModelError::QualityOrder { p, q });
    }
    let (lambda1, mut lambda2) = (raw.lambda1, raw.lambda2);
    let finite_non_negative = lambda1.is_finite() && lambda2.is_finite() && lambda1 >= 0.0 && lambda2 >= 0.0;
    if !finite_non_negative || (energy_order && lambda2 < lambda1 - BOUNDARY_TOL) {
        return Err(ModelError::EnergyOrder { lambda1, lambda2 });
    }
    if energy_order {
        lambda2 = lambda2.max(lambda1);
    }

    let params = ModelParams { r0, r1, rho, p, q: q.max(p), lambda1, lambda2, f_mode: raw.f_mode };
    let k = params.constants();
    let max_ratio = k.a.max(k.b).max(k.c);
    if max_ratio >= 1.0 {
        return Err(ModelError::UnstableChain { max_ratio });
    }
    Ok(params)
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ModelError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        validate_params(raw)
    }
}

impl From<ModelParams> for RawParams {
    fn from(m: ModelParams) -> Self {
        RawParams {
            r0: m.r0,
            r1: m.r1,
            rho: m.rho,
            p: m.p,
            q: m.q,
            lambda1: m.lambda1,
            lambda2: m.lambda2,
            f_mode: m.f_mode,
        }
    }
}

impl ModelParams {
    pub fn new(raw: RawParams) -> Result<Self, ModelError> {
        validate_params(raw)
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn r1(&self) -> f64 {
        self.r1
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
    pub fn f_mode(&self) -> FMode {
        self.f_mode
    }

    pub fn raw(&self) -> RawParams {
        (*self).into()
    }

    /// Same model with different energy costs. The energy order is not
    /// enforced here (see [`validate_params_relaxed`]).
    pub fn with_energies(&self, lambda1: f64, lambda2: f64) -> Result<Self, ModelError> {
        validate_params_relaxed(RawParams { lambda1, lambda2, ..self.raw() })
    }

    pub fn with_f_mode(&self, f_mode: FMode) -> Self {
        ModelParams { f_mode, ..*self }
    }

    /// Energy charged for `action`.
    pub fn energy(&self, action: Action) -> f64 {
        match action {
            Action::Idle => 0.0,
            Action::Compressed => self.lambda1,
            Action::Uncompressed => self.lambda2,
        }
    }

    /// Chain constants using this parameter set's own f-mode.
    pub fn constants(&self) -> ChainConstants {
        chain_constants(self, self.f_mode)
    }
}

/// Probability that the source leaves (or stays out of) the stable mode in
/// one step when the sensor is idle.
fn base_increment(params: &ModelParams, s: usize) -> f64 {
    if s == 0 {
        1.0 - params.r0
    } else {
        params.r1
    }
}

/// `Pr(s(t+1) = s + 1 | s(t) = s, action)`. The reset probability to `0` is
/// the complement.
pub fn increment_prob(params: &ModelParams, s: usize, action: Action) -> f64 {
    let r = base_increment(params, s);
    match action {
        Action::Idle => r,
        Action::Compressed => r * (1.0 - params.rho * params.p),
        Action::Uncompressed => r * (1.0 - params.rho * params.q),
    }
}

/// `s + lambda1 * [action = compressed] + lambda2 * [action = uncompressed]`.
pub fn stage_cost(params: &ModelParams, s: usize, action: Action) -> f64 {
    s as f64 + params.energy(action)
}

/// Increment probabilities of the chain induced by a threshold policy.
///
/// `a`, `b`, `c` apply at `s >= 1` under idle, compressed and uncompressed
/// actions; `d`, `e`, `f` are the matching values at `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

pub fn chain_constants(params: &ModelParams, mode: FMode) -> ChainConstants {
    let d = 1.0 - params.r0;
    let f = match mode {
        FMode::Kernel => d * (1.0 - params.rho * params.q),
        FMode::PaperLiteral => d * (1.0 - params.rho),
    };
    ChainConstants {
        a: params.r1,
        b: params.r1 * (1.0 - params.rho * params.p),
        c: params.r1 * (1.0 - params.rho * params.q),
        d,
        e: d * (1.0 - params.rho * params.p),
        f,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::valid_raw;
    use proptest::prelude::*;

    fn reference() -> ModelParams {
        ModelParams::new(RawParams::reference(1.0, 2.0)).unwrap()
    }

    #[test]
    fn reference_parameters_validate() {
        let m = reference();
        assert_eq!(m.r1(), 0.9);
        assert_eq!(m.f_mode(), FMode::Kernel);
    }

    #[test]
    fn validation_errors() {
        let bad_drift = RawParams { r0: 0.0, r1: 0.5, ..RawParams::reference(1.0, 2.0) };
        assert!(matches!(validate_params(bad_drift), Err(ModelError::DriftCondition { .. })));

        let unstable = RawParams { r0: 0.1, r1: 1.0, rho: 0.0, ..RawParams::reference(1.0, 2.0) };
        assert!(matches!(validate_params(unstable), Err(ModelError::UnstableChain { .. })));

        let bad_prob = RawParams { rho: 1.5, ..RawParams::reference(1.0, 2.0) };
        assert!(matches!(validate_params(bad_prob), Err(ModelError::InvalidProbability { name: "rho", .. })));

        let bad_quality = RawParams { p: 0.9, q: 0.5, ..RawParams::reference(1.0, 2.0) };
        assert!(matches!(validate_params(bad_quality), Err(ModelError::QualityOrder { .. })));

        let bad_energy = RawParams::reference(3.0, 2.0);
        assert!(matches!(validate_params(bad_energy), Err(ModelError::EnergyOrder { .. })));
        let negative = RawParams::reference(-1.0, 2.0);
        assert!(matches!(validate_params(negative), Err(ModelError::EnergyOrder { .. })));
        assert!(validate_params_relaxed(negative).is_err());
        let inverted = validate_params_relaxed(bad_energy).unwrap();
        assert_eq!((inverted.lambda1(), inverted.lambda2()), (3.0, 2.0));

        let nan = RawParams { r0: f64::NAN, ..RawParams::reference(1.0, 2.0) };
        assert!(validate_params(nan).is_err());
    }

    #[test]
    fn boundary_round_off_is_absorbed() {
        let raw = RawParams { r0: 1.0 + 5e-13, r1: -5e-13, ..RawParams::reference(1.0, 2.0) };
        let m = validate_params(raw).unwrap();
        assert_eq!(m.r0(), 1.0);
        assert_eq!(m.r1(), 0.0);
        let raw = RawParams { p: 0.9, q: 0.9 - 1e-13, ..RawParams::reference(1.0, 1.0 - 1e-13) };
        let m = validate_params(raw).unwrap();
        assert!(m.q() >= m.p() && m.lambda2() >= m.lambda1());
    }

    #[test]
    fn degenerate_orders_are_admitted() {
        let raw = RawParams { p: 0.7, q: 0.7, ..RawParams::reference(2.0, 2.0) };
        assert!(validate_params(raw).is_ok());
    }

    #[test]
    fn increment_probabilities_match_kernel_bullets() {
        let m = reference();
        assert_eq!(increment_prob(&m, 0, Action::Idle), 1.0 - 0.1);
        let (rho, p, q, r0, r1) = (0.1, 0.5, 0.9, 0.1, 0.9);
        let two_scenario = (1.0 - rho) * r1 + rho * (1.0 - p) * r1;
        assert!((increment_prob(&m, 3, Action::Compressed) - two_scenario).abs() < 1e-15);
        let at_zero = (1.0 - rho) * (1.0 - r0) + rho * (1.0 - q) * (1.0 - r0);
        assert!((increment_prob(&m, 0, Action::Uncompressed) - at_zero).abs() < 1e-15);
    }

    #[test]
    fn no_channel_means_actions_are_equivalent() {
        let m = ModelParams::new(RawParams { rho: 0.0, ..RawParams::reference(1.0, 1.0) }).unwrap();
        for s in [0, 1, 7] {
            let idle = increment_prob(&m, s, Action::Idle);
            assert_eq!(increment_prob(&m, s, Action::Compressed), idle);
            assert_eq!(increment_prob(&m, s, Action::Uncompressed), idle);
        }
    }

    #[test]
    fn stage_costs() {
        let m = reference();
        assert_eq!(stage_cost(&m, 0, Action::Idle), 0.0);
        assert_eq!(stage_cost(&m, 5, Action::Compressed), 6.0);
        let m9 = m.with_energies(1.0, 9.0).unwrap();
        assert_eq!(stage_cost(&m9, 5, Action::Uncompressed), 14.0);
    }

    #[test]
    fn reference_chain_constants() {
        let m = reference();
        let k = chain_constants(&m, FMode::Kernel);
        let close = |x: f64, y: f64| (x - y).abs() < 1e-15;
        assert!(close(k.a, 0.9));
        assert!(close(k.b, 0.855));
        assert!(close(k.c, 0.819));
        assert!(close(k.d, 0.9));
        assert!(close(k.e, 0.855));
        assert!(close(k.f, 0.819));
        let lit = chain_constants(&m, FMode::PaperLiteral);
        assert!(close(lit.f, 0.81));
        assert_eq!((lit.a, lit.b, lit.c, lit.d, lit.e), (k.a, k.b, k.c, k.d, k.e));
    }

    #[test]
    fn json_round_trip_and_default_mode() {
        let json = r#"{"r0":0.1,"r1":0.9,"rho":0.1,"p":0.5,"q":0.9,"lambda1":1,"lambda2":2}"#;
        let m: ModelParams = serde_json::from_str(json).unwrap();
        assert_eq!(m, reference());
        let lit: ModelParams = serde_json::from_str(
            r#"{"r0":0.1,"r1":0.9,"rho":0.1,"p":0.5,"q":0.9,"lambda1":1,"lambda2":2,"f_mode":"paper_literal"}"#,
        )
        .unwrap();
        assert_eq!(lit.f_mode(), FMode::PaperLiteral);
        let back: ModelParams = serde_json::from_str(&serde_json::to_string(&lit).unwrap()).unwrap();
        assert_eq!(back, lit);
        let invalid = r#"{"r0":0.0,"r1":0.5,"rho":0.1,"p":0.5,"q":0.9,"lambda1":1,"lambda2":2}"#;
        assert!(serde_json::from_str::<ModelParams>(invalid).is_err());
    }

    proptest! {
        #[test]
        fn kernel_invariants(raw in valid_raw(), s in 0usize..50) {
            let m = validate_params(raw).unwrap();
            let probs: Vec<f64> = Action::ALL.iter().map(|&a| increment_prob(&m, s, a)).collect();
            for &pr in &probs {
                prop_assert!((0.0..=1.0).contains(&pr));
                prop_assert_eq!(pr + (1.0 - pr), 1.0);
            }
            prop_assert!(probs[0] >= probs[1] && probs[1] >= probs[2]);
            let idle = if s == 0 { 1.0 - m.r0() } else { m.r1() };
            prop_assert_eq!(probs[0], idle);
            if s > 0 {
                prop_assert_eq!(increment_prob(&m, s + 17, Action::Compressed), probs[1]);
            }
            let k = m.constants();
            prop_assert_eq!(k.f, increment_prob(&m, 0, Action::Uncompressed));
            prop_assert!(k.c <= k.b && k.b <= k.a && k.e <= k.d);
        }
    }
}
