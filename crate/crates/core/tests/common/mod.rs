#![allow(dead_code)]

use aosi_core::{FMode, ModelParams, RawParams, ThresholdPolicy};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Random valid parameters with `r1` kept in `[0.05, 0.95]` so every ratio of
/// the induced chain stays at most 0.95.
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let r1 = rng.gen_range(0.05..=0.95);
    let r0 = (1.0 - r1) + rng.gen::<f64>() * r1;
    let (x, y): (f64, f64) = (rng.gen(), rng.gen());
    let lambda1 = rng.gen_range(0.0..10.0);
    ModelParams::new(RawParams {
        r0,
        r1,
        rho: rng.gen(),
        p: x.min(y),
        q: x.max(y),
        lambda1,
        lambda2: lambda1 + rng.gen_range(0.0..10.0),
        f_mode: FMode::Kernel,
    })
    .expect("sampled parameters are valid")
}

pub fn random_policy<R: Rng>(rng: &mut R, max: usize) -> ThresholdPolicy {
    let a = rng.gen_range(0..=max);
    let b = rng.gen_range(0..=max);
    ThresholdPolicy::finite(a.min(b), a.max(b))
}

/// State cap beyond which the stationary tail (ratio at most 0.95) is below
/// 1e-16.
pub fn brute_force_cap(n: ThresholdPolicy) -> usize {
    n.n2().finite().unwrap_or(0) + 800
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest deviation in units of the standard error, with exact agreement
/// (both deviation and error zero) counted as zero.
pub fn z_score(reference: f64, estimate: f64, se: f64) -> f64 {
    let dev = (reference - estimate).abs();
    if dev == 0.0 {
        0.0
    } else {
        dev / se
    }
}
