//! Closed forms for the perfect-consistency lower bound and their
//! Monte-Carlo cross-checks.
//!
//! The construction fixes two bidders, conditions the equal-revenue
//! distribution (density proportional to `1/(v1^2 v2^2)`) on the square
//! `[sqrt(N), N]^2`, and compares the expected fixed-price benchmark with
//! the revenue any 1-consistent mechanism can extract.

use crate::error::{AugmechError, Result};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundEval {
    /// `E[F^(2)] = 4N/(sqrt(N)-1) - 2N ln N/(sqrt(N)-1)^2` under the
    /// conditioned square.
    pub benchmark_mean: f64,
    /// Revenue upper bound for a 1-consistent, `alpha`-robust mechanism:
    /// `(N/(sqrt(N)-1)) * (2 - 1/sqrt(N) - 2/alpha + 2/(alpha sqrt(N)))`.
    pub revenue_upper: f64,
    /// Implied ratio bound `4 / (2 - 2/alpha - (1 - 2/alpha)/sqrt(N))`.
    pub ratio_bound: f64,
    /// Self-consistent bound `(3 - 1/sqrt(N)) / (1 - 1/(2 sqrt(N)))`,
    /// approaching 3 from above as `N` grows.
    pub limit_bound: f64,
}

pub fn lower_bound_formulas(n_param: f64, alpha: f64) -> Result<LowerBoundEval> {
    if !(n_param > 1.0) {
        return Err(AugmechError::InvalidParam("N must exceed 1".into()));
    }
    if !(alpha > 0.0) {
        return Err(AugmechError::InvalidParam("alpha must be positive".into()));
    }
    let s = n_param.sqrt();
    let benchmark_mean = 4.0 * n_param / (s - 1.0)
        - 2.0 * n_param * n_param.ln() / ((s - 1.0) * (s - 1.0));
    let revenue_upper =
        n_param / (s - 1.0) * (2.0 - 1.0 / s - 2.0 / alpha + 2.0 / (alpha * s));
    let ratio_bound = 4.0 / (2.0 - 2.0 / alpha - (1.0 - 2.0 / alpha) / s);
    let limit_bound = (3.0 - 1.0 / s) / (1.0 - 1.0 / (2.0 * s));
    Ok(LowerBoundEval { benchmark_mean, revenue_upper, ratio_bound, limit_bound })
}

/// Marginal CDF of one coordinate on `[sqrt(N), N]`:
/// `(1/sqrt(N) - 1/v) / (1/sqrt(N) - 1/N)`.
pub fn conditioned_marginal_cdf(n_param: f64, v: f64) -> f64 {
    let s = n_param.sqrt();
    let d = 1.0 / s - 1.0 / n_param;
    ((1.0 / s - 1.0 / v) / d).clamp(0.0, 1.0)
}

fn inverse_marginal(n_param: f64, u: f64) -> f64 {
    let s = n_param.sqrt();
    let d = 1.0 / s - 1.0 / n_param;
    1.0 / (1.0 / s - u * d)
}

/// Inverse-CDF draw of both coordinates (they are independent under the
/// conditioned density).
pub fn sample_conditioned_square(n_param: f64, u1: f64, u2: f64) -> (f64, f64) {
    (inverse_marginal(n_param, u1), inverse_marginal(n_param, u2))
}

/// Sample mean of `F^(2)(v) = 2 min(v1, v2)` under the conditioned square.
pub fn mc_verify_benchmark_mean(n_param: f64, samples: usize, rng: &mut ChaCha12Rng) -> f64 {
    let mut total = 0.0;
    for _ in 0..samples {
        let (v1, v2) = sample_conditioned_square(
            n_param,
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        );
        total += 2.0 * v1.min(v2);
    }
    total / samples as f64
}

/// Kolmogorov-Smirnov statistic of samples against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let f = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}
