//! Exact steady state of the AoSI chain under a threshold policy.
//!
//! Under `(n1, n2)` the increment probability is `d`, `e` or `f` at `s = 0`
//! and `a`, `b` or `c` at `s >= 1` depending on the active segment, so the
//! stationary law is piecewise geometric. Every quantity here is evaluated in
//! closed form on the whole of ℕ; no truncation happens in this module.
//!
//! Infinite thresholds are handled as the exact limits of the finite
//! formulas (`b^(n2 - n1) -> 0`), which covers the never-transmit chain and
//! the never-uncompressed family.

use serde::{Deserialize, Serialize};

use crate::model::{ChainConstants, ModelParams};
use crate::policy::{Threshold, ThresholdPolicy};

/// Exponents above this are evaluated as `exp(k ln x)`.
const LOG_DOMAIN_EXPONENT: usize = 500;

pub(crate) fn powu(x: f64, k: usize) -> f64 {
    if k <= LOG_DOMAIN_EXPONENT {
        x.powi(k as i32)
    } else if x <= 0.0 {
        0.0
    } else {
        (k as f64 * x.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryCase {
    /// `n1 > 0` (idle at state 0); `n2` may be infinite.
    BothPositive,
    /// `n1 = 0 < n2`; `n2` may be infinite.
    N1Zero,
    /// `n1 = n2 = 0`.
    BothZero,
    /// `n1 = n2 = inf`.
    NeverTransmit,
}

/// Run of states `start, start+1, ..` (for `len` states, or forever) whose
/// probabilities are `first * ratio^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricSegment {
    pub start: usize,
    pub len: Option<usize>,
    pub first: f64,
    pub ratio: f64,
}

impl GeometricSegment {
    fn contains(&self, i: usize) -> bool {
        i >= self.start && self.len.is_none_or(|len| i < self.start + len)
    }

    /// Mass of the first `k` states of the segment (`None` = all of it).
    fn prefix_mass(&self, k: Option<usize>) -> f64 {
        let k = match (k, self.len) {
            (Some(k), Some(len)) => Some(k.min(len)),
            (Some(k), None) => Some(k),
            (None, len) => len,
        };
        match k {
            Some(0) => 0.0,
            Some(k) => self.first * (1.0 - powu(self.ratio, k)) / (1.0 - self.ratio),
            None => self.first / (1.0 - self.ratio),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub policy: ThresholdPolicy,
    pub case: StationaryCase,
    pub u0: f64,
    /// States `1..` as consecutive geometric runs; empty runs are omitted.
    pub segments: Vec<GeometricSegment>,
}

impl StationaryDistribution {
    /// `u(i)`.
    pub fn prob(&self, i: usize) -> f64 {
        if i == 0 {
            return self.u0;
        }
        self.segments.iter().find(|seg| seg.contains(i)).map_or(0.0, |seg| seg.first * powu(seg.ratio, i - seg.start))
    }

    /// `sum_{lo <= i < hi} u(i)`, with `hi = None` meaning the full tail.
    pub fn mass(&self, lo: usize, hi: Option<usize>) -> f64 {
        if hi.is_some_and(|h| h <= lo) {
            return 0.0;
        }
        let mut total = if lo == 0 { self.u0 } else { 0.0 };
        for seg in &self.segments {
            let seg_end = seg.len.map(|l| seg.start + l);
            let from = lo.max(seg.start);
            let to = match (hi, seg_end) {
                (Some(h), Some(e)) => Some(h.min(e)),
                (Some(h), None) => Some(h),
                (None, e) => e,
            };
            if to.is_some_and(|t| t <= from) {
                continue;
            }
            let shifted = GeometricSegment {
                start: from,
                len: None,
                first: seg.first * powu(seg.ratio, from - seg.start),
                ratio: seg.ratio,
            };
            total += shifted.prefix_mass(to.map(|t| t - from));
        }
        total
    }

    /// `u(0..=cap)` as a dense vector.
    pub fn to_vec(&self, cap: usize) -> Vec<f64> {
        (0..=cap).map(|i| self.prob(i)).collect()
    }
}

/// Long-run averages under a threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub policy: ThresholdPolicy,
    pub avg_aosi: f64,
    pub frac_compressed: f64,
    pub frac_uncompressed: f64,
    pub objective: f64,
}

impl SteadyStateReport {
    pub const CSV_HEADER: &'static str = "n1,n2,avg_aosi,frac_c,frac_u,F";

    pub fn csv_row(&self) -> String {
        use crate::fmt::sig;
        format!(
            "{},{},{},{},{},{}",
            self.policy.n1(),
            self.policy.n2(),
            sig(self.avg_aosi),
            sig(self.frac_compressed),
            sig(self.frac_uncompressed),
            sig(self.objective)
        )
    }
}

/// Classification of a policy plus the segment lengths the formulas need.
#[derive(Debug, Clone, Copy)]
enum Shape {
    /// `n1 > 0`; `m = n2 - n1` or `None` if `n2` is infinite.
    BothPositive {
        n1: usize,
        m: Option<usize>,
    },
    /// `n1 = 0 < n2`.
    N1Zero {
        n2: Option<usize>,
    },
    BothZero,
    NeverTransmit,
}

fn shape(n: ThresholdPolicy) -> Shape {
    match (n.n1(), n.n2()) {
        (Threshold::Infinite, _) => Shape::NeverTransmit,
        (Threshold::Finite(0), Threshold::Finite(0)) => Shape::BothZero,
        (Threshold::Finite(0), n2) => Shape::N1Zero { n2: n2.finite() },
        (Threshold::Finite(n1), n2) => Shape::BothPositive { n1, m: n2.finite().map(|n2| n2 - n1) },
    }
}

/// Stationary distribution of the chain induced by `n`.
pub fn stationary(params: &ModelParams, n: ThresholdPolicy) -> StationaryDistribution {
    let ChainConstants { a, b, c, d, e, f } = params.constants();
    let seg = |start, len, first, ratio| GeometricSegment { start, len, first, ratio };
    let (case, u0, segments) = match shape(n) {
        Shape::BothPositive { n1, m } => {
            let an = powu(a, n1 - 1);
            let (u0, mut segs) = match m {
                Some(m) => {
                    let bm = powu(b, m);
                    let u0 = (1.0 - a) * (1.0 - b) * (1.0 - c)
                        / ((1.0 - a + d) * (1.0 - c) * (1.0 - b)
                            + (1.0 - c) * (b - a) * d * an
                            + d * (1.0 - a) * (c - b) * bm * an);
                    let n2 = n1 + m;
                    let segs = vec![
                        seg(1, Some(n1), u0 * d, a),
                        seg(n1 + 1, Some(m), u0 * d * an * b, b),
                        seg(n2 + 1, None, u0 * d * an * bm * c, c),
                    ];
                    (u0, segs)
                }
                None => {
                    let u0 = (1.0 - a) * (1.0 - b) / ((1.0 - a + d) * (1.0 - b) + (b - a) * d * an);
                    let segs = vec![seg(1, Some(n1), u0 * d, a), seg(n1 + 1, None, u0 * d * an * b, b)];
                    (u0, segs)
                }
            };
            segs.retain(|s| s.len != Some(0));
            (StationaryCase::BothPositive, u0, segs)
        }
        Shape::N1Zero { n2: Some(n2) } => {
            let bn = powu(b, n2 - 1);
            let u0 = (1.0 - b) * (1.0 - c) / ((1.0 - b + e) * (1.0 - c) + (c - b) * e * bn);
            let segs = vec![seg(1, Some(n2), u0 * e, b), seg(n2 + 1, None, u0 * e * bn * c, c)];
            (StationaryCase::N1Zero, u0, segs)
        }
        Shape::N1Zero { n2: None } => {
            let u0 = (1.0 - b) / (1.0 - b + e);
            (StationaryCase::N1Zero, u0, vec![seg(1, None, u0 * e, b)])
        }
        Shape::BothZero => {
            let u0 = (1.0 - c) / (1.0 - c + f);
            (StationaryCase::BothZero, u0, vec![seg(1, None, u0 * f, c)])
        }
        Shape::NeverTransmit => {
            let u0 = (1.0 - a) / (1.0 - a + d);
            (StationaryCase::NeverTransmit, u0, vec![seg(1, None, u0 * d, a)])
        }
    };
    StationaryDistribution { policy: n, case, u0, segments }
}

/// `sum_{i=1}^{n} i x^(i-1)`.
fn weighted_prefix(x: f64, n: usize) -> f64 {
    let xn = powu(x, n);
    (x * xn * n as f64 - n as f64 * xn - xn + 1.0) / ((1.0 - x) * (1.0 - x))
}

/// Long-run average AoSI under `n`.
pub fn average_aosi(params: &ModelParams, n: ThresholdPolicy) -> f64 {
    let ChainConstants { a, b, c, d, e, f } = params.constants();
    let u0 = stationary(params, n).u0;
    match shape(n) {
        Shape::BothPositive { n1, m } => {
            let an = powu(a, n1 - 1);
            let n1f = n1 as f64;
            let head = d * weighted_prefix(a, n1);
            match m {
                Some(m) => {
                    let bm = powu(b, m);
                    let n2f = (n1 + m) as f64;
                    let mid = d * b * an * (bm * (b * n2f - n2f - 1.0) - b * n1f + n1f + 1.0) / ((1.0 - b) * (1.0 - b));
                    let tail = d * c * bm * an * (-c * n2f + n2f + 1.0) / ((1.0 - c) * (1.0 - c));
                    u0 * (head + mid + tail)
                }
                None => {
                    let mid = d * b * an * (-b * n1f + n1f + 1.0) / ((1.0 - b) * (1.0 - b));
                    u0 * (head + mid)
                }
            }
        }
        Shape::N1Zero { n2: Some(n2) } => {
            let bn = powu(b, n2 - 1);
            let n2f = n2 as f64;
            let head = e * weighted_prefix(b, n2);
            let tail = e * c * bn * (-c * n2f + n2f + 1.0) / ((1.0 - c) * (1.0 - c));
            u0 * (head + tail)
        }
        Shape::N1Zero { n2: None } => u0 * e / ((1.0 - b) * (1.0 - b)),
        Shape::BothZero => u0 * f / ((1.0 - c) * (1.0 - c)),
        Shape::NeverTransmit => u0 * d / ((1.0 - a) * (1.0 - a)),
    }
}

/// Long-run fractions of time spent sending compressed and uncompressed
/// updates under `n`.
pub fn transmit_fractions(params: &ModelParams, n: ThresholdPolicy) -> (f64, f64) {
    let ChainConstants { a, b, c, d, e, .. } = params.constants();
    let u0 = stationary(params, n).u0;
    match shape(n) {
        Shape::BothPositive { n1, m } => {
            let an = powu(a, n1 - 1);
            match m {
                Some(m) => {
                    let bm = powu(b, m);
                    (u0 * d * an * (1.0 - bm) / (1.0 - b), u0 * d * an * bm / (1.0 - c))
                }
                None => (u0 * d * an / (1.0 - b), 0.0),
            }
        }
        Shape::N1Zero { n2: Some(n2) } => {
            let bn = powu(b, n2 - 1);
            (u0 * (1.0 + e * (1.0 - bn) / (1.0 - b)), u0 * e * bn / (1.0 - c))
        }
        Shape::N1Zero { n2: None } => (1.0, 0.0),
        Shape::BothZero => (0.0, 1.0),
        Shape::NeverTransmit => (0.0, 0.0),
    }
}

/// Objective `F(n1, n2)`: average AoSI plus energy, evaluated from the
/// single-fraction form of each case.
pub fn objective_f(params: &ModelParams, n: ThresholdPolicy) -> f64 {
    let ChainConstants { a, b, c, d, e, f } = params.constants();
    let (l1, l2) = (params.lambda1(), params.lambda2());
    match shape(n) {
        Shape::BothPositive { n1, m: Some(m) } => {
            let an = powu(a, n1 - 1);
            let bm = powu(b, m);
            let n1f = n1 as f64;
            let n2f = (n1 + m) as f64;
            let an1 = powu(a, n1);
            let denom = (1.0 - a + d) * (1.0 - c) * (1.0 - b)
                + (1.0 - c) * (b - a) * d * an
                + d * (1.0 - a) * (c - b) * bm * an;
            let numer = (1.0 - b) * (1.0 - c) * d * (a * an1 * n1f - n1f * an1 - an1 + 1.0) / (1.0 - a)
                + d * b * (1.0 - a) * (1.0 - c) * an * (bm * (b * n2f - n2f - 1.0) - b * n1f + n1f + 1.0) / (1.0 - b)
                + d * c * (1.0 - a) * (1.0 - b) * bm * an * (-c * n2f + n2f + 1.0) / (1.0 - c)
                + l1 * d * (1.0 - a) * (1.0 - c) * an * (1.0 - bm)
                + l2 * d * an * (1.0 - a) * (1.0 - b) * bm;
            numer / denom
        }
        Shape::BothPositive { n1, m: None } => {
            let an = powu(a, n1 - 1);
            let an1 = powu(a, n1);
            let n1f = n1 as f64;
            let denom = (1.0 - a + d) * (1.0 - b) + (b - a) * d * an;
            let numer = (1.0 - b) * d * (a * an1 * n1f - n1f * an1 - an1 + 1.0) / (1.0 - a)
                + d * b * (1.0 - a) * an * (-b * n1f + n1f + 1.0) / (1.0 - b)
                + l1 * d * (1.0 - a) * an;
            numer / denom
        }
        Shape::N1Zero { n2: Some(n2) } => {
            let bn = powu(b, n2 - 1);
            let bn1 = powu(b, n2);
            let n2f = n2 as f64;
            let denom = (1.0 - b + e) * (1.0 - c) + (c - b) * e * bn;
            let numer = (1.0 - c) * e * (b * bn1 * n2f - n2f * bn1 - bn1 + 1.0) / (1.0 - b)
                + (1.0 - b) * e * c * bn * (-c * n2f + n2f + 1.0) / (1.0 - c)
                + l1 * ((1.0 - b) * (1.0 - c) + e * (1.0 - c) * (1.0 - bn))
                + l2 * (1.0 - b) * e * bn;
            numer / denom
        }
        Shape::N1Zero { n2: None } => e / ((1.0 - b + e) * (1.0 - b)) + l1,
        Shape::BothZero => f / ((1.0 - c + f) * (1.0 - c)) + l2,
        Shape::NeverTransmit => d / ((1.0 - a + d) * (1.0 - a)),
    }
}

/// All steady-state quantities for `n` in one record.
pub fn steady_state(params: &ModelParams, n: ThresholdPolicy) -> SteadyStateReport {
    let (frac_compressed, frac_uncompressed) = transmit_fractions(params, n);
    SteadyStateReport {
        policy: n,
        avg_aosi: average_aosi(params, n),
        frac_compressed,
        frac_uncompressed,
        objective: objective_f(params, n),
    }
}
