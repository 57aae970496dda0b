//! Experiment harness: instance generators, ratio estimation, truthfulness
//! and feasibility drivers, lower-bound evaluation, and result
//! serialization. Everything is reproducible from a master seed.

mod drivers;
mod generators;
mod lowerbound;
mod ratio;
mod registry;

pub use drivers::{
    bid_independence_check, feasibility_violations, truthfulness_violations, DeviationGrid,
    TruthfulnessViolation,
};
pub use generators::{EnvChoice, InstanceGenerator, PredictionModel, ValueGen};
pub use lowerbound::{
    conditioned_marginal_cdf, ks_statistic, lower_bound_formulas, mc_verify_benchmark_mean,
    sample_conditioned_square, LowerBoundEval,
};
pub use ratio::{estimate_ratio, figure_curves, write_ratio_csv, RatioReport, RatioRow};
pub use registry::{build_mechanism, mechanism_names, MechFactory};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Worker-count environment variable honored by the CLI.
pub const THREADS_ENV: &str = "AUGMECH_THREADS";

/// Deterministic per-stream RNG: one master seed, independent streams for
/// trials/instances so parallel evaluation stays reproducible.
pub fn seeded_rng(master: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Builds the global rayon pool from `AUGMECH_THREADS` when set. Safe to
/// call more than once; later calls are ignored.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if let Ok(threads) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
}

/// 99% Hoeffding half-width for a mean of `trials` values in `[0, bound]`.
pub fn hoeffding_half_width_99(bound: f64, trials: usize) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    bound * ((2.0f64 / 0.01).ln() / (2.0 * trials as f64)).sqrt()
}
