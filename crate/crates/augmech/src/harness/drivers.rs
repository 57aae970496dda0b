//! Truthfulness, bid-independence, and feasibility drivers.
//!
//! The truthfulness test evaluates each bidder's realized step rules on a
//! deviation grid that includes every rule threshold (and its neighborhood),
//! the predicted value, and points around the truthful value, comparing
//! expected utilities exactly over enumerated mechanism randomness and with
//! a Hoeffding margin over sampled randomness.

use crate::baseline::{is_feasible_outcome, Mechanism, OthersBids, StepRule};
use crate::error::Result;
use crate::rat::{int, rat, to_f64, zero, Rat};
use crate::schema::Instance;
use num_traits::Zero;

/// Grid configuration for the deviation test.
#[derive(Debug, Clone)]
pub struct DeviationGrid {
    /// Minimum number of deviation points per bidder.
    pub min_points: usize,
    /// Monte-Carlo realizations when the support is not enumerable.
    pub mc_samples: usize,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        Self { min_points: 20, mc_samples: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct TruthfulnessViolation {
    pub bidder: usize,
    pub deviation: Rat,
    pub truthful_utility: String,
    pub deviant_utility: String,
}

/// Builds the deviation grid for one bidder.
fn deviation_grid(
    value: &Rat,
    prediction: &Rat,
    other_bids: &[Rat],
    thresholds: &[Rat],
    min_points: usize,
) -> Vec<Rat> {
    let mut anchors: Vec<Rat> = thresholds.to_vec();
    anchors.push(prediction.clone());
    anchors.sort();
    anchors.dedup();
    // Neighborhood radius: small enough not to cross between anchors.
    let mut eps = rat(1, 64);
    for w in anchors.windows(2) {
        let gap = w[1].clone() - w[0].clone();
        if !gap.is_zero() && gap / int(4) < eps {
            eps = (w[1].clone() - w[0].clone()) / int(4);
        }
    }
    for a in &anchors {
        if *a > zero() && a.clone() / int(4) < eps {
            eps = a.clone() / int(4);
        }
    }
    if eps.is_zero() {
        eps = rat(1, 64);
    }

    let mut grid: Vec<Rat> = Vec::new();
    let mut push = |x: Rat| {
        if x >= zero() {
            grid.push(x);
        }
    };
    push(zero());
    push(value.clone());
    push(value.clone() / int(2));
    push(value.clone() * rat(9, 10));
    push(value.clone() * rat(11, 10));
    push(value.clone() * rat(3, 2));
    push(value.clone() * int(2));
    push(value.clone() * int(10));
    for a in &anchors {
        push(a.clone());
        push(a.clone() + eps.clone());
        let down = a.clone() - eps.clone();
        push(down);
    }
    // Midpoints of consecutive distinct competitor bids, plus one beyond.
    let mut sorted = other_bids.to_vec();
    sorted.sort();
    sorted.dedup();
    for w in sorted.windows(2) {
        push((w[0].clone() + w[1].clone()) / int(2));
    }
    if let Some(top) = sorted.last() {
        push(top.clone() + int(1));
    }
    let scale = if value.is_zero() { int(1) } else { value.clone() };
    let mut k = 1i128;
    grid.sort();
    grid.dedup();
    while grid.len() < min_points {
        grid.push(scale.clone() * rat(k, 7));
        grid.sort();
        grid.dedup();
        k += 1;
    }
    grid
}

/// Runs the grid deviation test for every bidder, truthful opponents.
/// Exact over enumerated randomness; Hoeffding-buffered over sampled
/// randomness.
pub fn truthfulness_violations(
    m: &dyn Mechanism,
    inst: &Instance,
    cfg: &DeviationGrid,
    seed: u64,
) -> Result<Vec<TruthfulnessViolation>> {
    let ctx = inst.context()?;
    let bids = inst.values.values().to_vec();
    let n = inst.n();
    let mut violations = Vec::new();

    let support = m.support(&ctx);
    for bidder in 0..n {
        let others = OthersBids::new(&bids, bidder);
        // (weight, rule) pairs; None weight marks uniform Monte Carlo.
        let (rules, exact): (Vec<(Rat, StepRule)>, bool) = match &support {
            Some(s) => (
                s.iter()
                    .map(|(p, r)| (p.clone(), r.rule(bidder, &others, &ctx)))
                    .collect(),
                true,
            ),
            None => {
                let mut rng = crate::harness::seeded_rng(seed, bidder as u64 + 1);
                let w = rat(1, cfg.mc_samples as i128);
                (
                    (0..cfg.mc_samples)
                        .map(|_| (w.clone(), m.sample(&ctx, &mut rng).rule(bidder, &others, &ctx)))
                        .collect(),
                    false,
                )
            }
        };
        let mut thresholds: Vec<Rat> = Vec::new();
        for (_, rule) in &rules {
            thresholds.extend(rule.thresholds().cloned());
        }
        thresholds.sort();
        thresholds.dedup();

        let value = &inst.values.values()[bidder];
        let other_bids: Vec<Rat> = others.iter().into_iter().map(|(_, b)| b.clone()).collect();
        let grid = deviation_grid(
            value,
            inst.prediction.value(bidder),
            &other_bids,
            &thresholds,
            cfg.min_points,
        );

        let utility = |b: &Rat| -> Rat {
            let mut u = zero();
            for (w, rule) in &rules {
                u += w.clone() * (rule.allocation(b) * value.clone() - rule.payment(b));
            }
            u
        };
        let truthful = utility(value);
        // Monte-Carlo slack: utilities lie in [-b, value]; a 6-sigma-ish
        // Hoeffding band on the difference of two sample means.
        for b in &grid {
            let dev = utility(b);
            let allowed = if exact {
                zero()
            } else {
                let range = to_f64(value) + to_f64(b) + 1.0;
                let margin =
                    2.0 * range * ((2.0f64 / 1e-6).ln() / (2.0 * cfg.mc_samples as f64)).sqrt();
                rat(((margin * 1e6).ceil() as i128).max(1), 1_000_000)
            };
            if dev > truthful.clone() + allowed {
                violations.push(TruthfulnessViolation {
                    bidder,
                    deviation: b.clone(),
                    truthful_utility: crate::rat::format_rat(&truthful),
                    deviant_utility: crate::rat::format_rat(&dev),
                });
            }
        }
    }
    Ok(violations)
}

/// Verifies that each bidder's rule is unchanged when only its own bid
/// moves: `pairs` random own-bid values per bidder per realization.
pub fn bid_independence_check(
    m: &dyn Mechanism,
    inst: &Instance,
    pairs: usize,
    seed: u64,
) -> Result<bool> {
    use rand::Rng;
    let ctx = inst.context()?;
    let n = inst.n();
    let mut rng = crate::harness::seeded_rng(seed, 0);
    let realizations = match m.support(&ctx) {
        Some(s) => s.into_iter().map(|(_, r)| r).take(8).collect::<Vec<_>>(),
        None => (0..4).map(|_| m.sample(&ctx, &mut rng)).collect(),
    };
    for r in &realizations {
        for bidder in 0..n {
            let base = inst.values.values().to_vec();
            let reference = r.rule(bidder, &OthersBids::new(&base, bidder), &ctx);
            for _ in 0..pairs {
                let mut perturbed = base.clone();
                perturbed[bidder] = rat(rng.gen_range(0..=1000), rng.gen_range(1..=7));
                let rule = r.rule(bidder, &OthersBids::new(&perturbed, bidder), &ctx);
                if rule != reference {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Counts infeasible realized allocations at the given bid vector, over the
/// full support or `samples` draws.
pub fn feasibility_violations(
    m: &dyn Mechanism,
    inst: &Instance,
    bids: &[Rat],
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let ctx = inst.context()?;
    let mut bad = 0usize;
    match m.support(&ctx) {
        Some(support) => {
            for (_, r) in &support {
                if !is_feasible_outcome(r.as_ref(), bids, &ctx)? {
                    bad += 1;
                }
            }
        }
        None => {
            let mut rng = crate::harness::seeded_rng(seed, 1);
            for _ in 0..samples {
                let r = m.sample(&ctx, &mut rng);
                if !is_feasible_outcome(r.as_ref(), bids, &ctx)? {
                    bad += 1;
                }
            }
        }
    }
    Ok(bad)
}
