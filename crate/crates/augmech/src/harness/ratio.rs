//! Empirical competitive-ratio estimation and the error-tolerance curves.

use super::generators::InstanceGenerator;
use super::registry::MechFactory;
use crate::baseline::{expected_revenue_exact, expected_revenue_sampled};
use crate::benchmarks::BenchmarkKind;
use crate::error::Result;
use crate::errortol::{randomized_bounds, GammaDensity};
use crate::rat::{format_rat, to_f64};
use rayon::prelude::*;

/// One emitted result row; rationals are exact strings for determinism.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RatioRow {
    pub instance_id: usize,
    pub mechanism: String,
    pub benchmark: String,
    pub revenue: String,
    pub benchmark_value: String,
    pub ratio: String,
}

/// Empirical revenue-vs-benchmark report over seeded random instances.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RatioReport {
    pub mechanism: String,
    pub benchmark: String,
    pub trials: usize,
    pub skipped_zero_benchmark: usize,
    pub mean_revenue: f64,
    pub mean_benchmark: f64,
    /// Mean of per-instance `benchmark / E[revenue]`.
    pub mean_ratio: f64,
    /// Worst (largest) per-instance ratio observed.
    pub worst_ratio: f64,
    /// 99% Hoeffding half-width on the mean revenue.
    pub ci_half_width_99: f64,
    pub seed: u64,
    /// Instance attaining the worst ratio, as schema JSON.
    pub worst_instance: Option<String>,
    pub rows: Vec<RatioRow>,
}

struct TrialResult {
    row: Option<RatioRow>,
    revenue: f64,
    benchmark: f64,
    ratio: Option<f64>,
    bound: f64,
    instance_json: String,
}

/// Estimates the empirical ratio of a mechanism against a benchmark.
///
/// Per trial the expected revenue is exact when the mechanism randomness is
/// enumerable and inner Monte Carlo (`inner_mc` draws) otherwise; instances
/// whose benchmark is zero are skipped and counted.
pub fn estimate_ratio(
    name: &str,
    factory: &MechFactory,
    generator: &InstanceGenerator,
    benchmark: BenchmarkKind,
    trials: usize,
    inner_mc: usize,
    seed: u64,
) -> Result<RatioReport> {
    let results: Vec<Result<TrialResult>> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(t, factory, generator, benchmark, inner_mc, seed))
        .collect();

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    let mut sum_rev = 0.0;
    let mut sum_bench = 0.0;
    let mut sum_ratio = 0.0;
    let mut count = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_instance = None;
    let mut bound: f64 = 0.0;
    for r in results {
        let r = r?;
        bound = bound.max(r.bound);
        match r.ratio {
            None => skipped += 1,
            Some(ratio) => {
                count += 1;
                sum_rev += r.revenue;
                sum_bench += r.benchmark;
                sum_ratio += ratio;
                if ratio > worst {
                    worst = ratio;
                    worst_instance = Some(r.instance_json.clone());
                }
            }
        }
        if let Some(row) = r.row {
            rows.push(row);
        }
    }
    let denom = count.max(1) as f64;
    Ok(RatioReport {
        mechanism: name.to_string(),
        benchmark: benchmark.label(),
        trials,
        skipped_zero_benchmark: skipped,
        mean_revenue: sum_rev / denom,
        mean_benchmark: sum_bench / denom,
        mean_ratio: sum_ratio / denom,
        worst_ratio: if count == 0 { f64::NAN } else { worst },
        ci_half_width_99: super::hoeffding_half_width_99(bound, count.max(1)),
        seed,
        worst_instance,
        rows,
    })
}

fn run_trial(
    t: usize,
    factory: &MechFactory,
    generator: &InstanceGenerator,
    benchmark: BenchmarkKind,
    inner_mc: usize,
    seed: u64,
) -> Result<TrialResult> {
    let mut rng = super::seeded_rng(seed, 1000 + t as u64);
    let inst = generator.generate(&mut rng)?;
    let ctx = inst.context()?;
    let mech = factory(&inst)?;
    let bids = inst.values.values().to_vec();
    let bench = benchmark.eval(&inst.values, &inst.env)?.value;
    let (revenue_f, revenue_str) =
        match expected_revenue_exact(mech.as_ref(), &bids, &ctx) {
            Some(rev) => (to_f64(&rev), format_rat(&rev)),
            None => {
                let rev =
                    expected_revenue_sampled(mech.as_ref(), &bids, &ctx, inner_mc, &mut rng);
                (rev, format!("{rev:.9}"))
            }
        };
    let bench_f = to_f64(&bench);
    let bound: f64 = bids.iter().map(to_f64).sum();
    let (ratio, ratio_str) = if bench_f == 0.0 {
        (None, "skipped".to_string())
    } else if revenue_f == 0.0 {
        (Some(f64::INFINITY), "inf".to_string())
    } else {
        let r = bench_f / revenue_f;
        (Some(r), format!("{r:.9}"))
    };
    Ok(TrialResult {
        row: Some(RatioRow {
            instance_id: t,
            mechanism: mech.name(),
            benchmark: benchmark.label(),
            revenue: revenue_str,
            benchmark_value: format_rat(&bench),
            ratio: ratio_str,
        }),
        revenue: revenue_f,
        benchmark: bench_f,
        ratio,
        bound,
        instance_json: inst.to_json(),
    })
}

/// Writes the per-instance rows in the fixed CSV column order.
pub fn write_ratio_csv(rows: &[RatioRow], out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "instance_id,mechanism,benchmark,revenue,benchmark_value,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.instance_id, r.mechanism, r.benchmark, r.revenue, r.benchmark_value, r.ratio
        )?;
    }
    Ok(())
}

/// Error-tolerance curves: one row `(eta, 1/opt_bound, 1/f_bound)` per grid
/// point. Infinite ratios render as `inf` downstream.
pub fn figure_curves(
    density: &GammaDensity,
    beta: f64,
    eta_grid: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        let (opt_bound, f_bound) = randomized_bounds(density, eta, beta)?;
        let inv = |b: f64| if b > 0.0 { 1.0 / b } else { f64::INFINITY };
        rows.push((eta, inv(opt_bound), inv(f_bound)));
    }
    Ok(rows)
}
