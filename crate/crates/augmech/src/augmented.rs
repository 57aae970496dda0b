//! Learning-augmented mechanisms: bid-independent combinations of the
//! prediction-optimal mechanism with prediction-free black boxes.
//!
//! Which sub-mechanism applies to bidder `i` is decided only from the other
//! bidders' bids and the predictions, so truthfulness is preserved even
//! though different bidders may face different sub-mechanisms. All of them
//! are 1-consistent: with perfect predictions every realization's revenue is
//! exactly the optimal revenue of the environment.

use crate::baseline::{
    mix, AuctionContext, Mechanism, MechanismRef, Mix, OthersBids, Realization, RealizationRef,
    StepRule,
};
use crate::benchmarks::BenchmarkKind;
use crate::env::linear_max;
use crate::error::{AugmechError, Result};
use crate::rat::{int, one, zero, Rat};
use num_traits::Zero;
use rand::RngCore;
use std::sync::Arc;

pub use crate::baseline::mix as mix_mechanisms;

/// Step rule of the prediction-optimal mechanism `OPT_X(v_hat)` for one
/// bidder: allocation level `x_hat_i` posted at unit price `v_hat_i`
/// (fractional posted price), so the payment on acceptance is
/// `x_hat_i * v_hat_i`.
fn opt_hat_rule(bidder: usize, ctx: &AuctionContext) -> StepRule {
    StepRule::posted(
        ctx.prediction.value(bidder).clone(),
        ctx.opt_hat.get(bidder).clone(),
    )
}

/// Single-item Vickrey rule for one bidder at allocation `level`: a jump at
/// the highest competing bid, ties broken by index.
fn vickrey_rule(others: &OthersBids<'_>, level: Rat) -> StepRule {
    if level.is_zero() {
        return StepRule::reject();
    }
    match others.entry_threshold(1) {
        None => StepRule::posted(zero(), level),
        Some((t, wins_tie)) => {
            if wins_tie {
                StepRule::posted(t, level)
            } else {
                StepRule::from_jumps(vec![crate::baseline::Jump {
                    threshold: t,
                    level_at: zero(),
                    level_above: level,
                }])
                .expect("valid open jump")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Digital goods
// ---------------------------------------------------------------------------

struct Dga1;

impl Realization for Dga1 {
    fn rule(&self, bidder: usize, _others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        StepRule::posted(ctx.prediction.value(bidder).clone(), one())
    }
}

struct Dga1Mech;

/// The `OPT(v_hat)` mechanism for digital goods: offer price `v_hat_i` to
/// bidder `i`. 2-robust against any benchmark dominated by `OPT^(2)` when at
/// most one prediction is wrong.
pub fn mech_dga1() -> MechanismRef {
    Arc::new(Dga1Mech)
}

impl Mechanism for Dga1Mech {
    fn name(&self) -> String {
        "dga1".into()
    }

    fn support(&self, _ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(vec![(one(), Arc::new(Dga1))])
    }

    fn sample(&self, _ctx: &AuctionContext, _rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(Dga1)
    }
}

struct Dga2Realization {
    blackbox: RealizationRef,
}

impl Realization for Dga2Realization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        if others.count_wrong(&ctx.prediction) == 0 {
            StepRule::posted(ctx.prediction.value(bidder).clone(), one())
        } else {
            self.blackbox.rule(bidder, others, ctx)
        }
    }
}

struct Dga2Mech {
    blackbox: MechanismRef,
}

/// Bid-independent combination for digital goods: bidder `i` is offered its
/// predicted price when all other predictions are correct, and faces the
/// black box otherwise. With at least two wrong predictions the outcome is
/// exactly the black box's.
pub fn mech_dga2(blackbox: MechanismRef) -> MechanismRef {
    Arc::new(Dga2Mech { blackbox })
}

impl Mechanism for Dga2Mech {
    fn name(&self) -> String {
        format!("dga2({})", self.blackbox.name())
    }

    fn support(&self, ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(
            self.blackbox
                .support(ctx)?
                .into_iter()
                .map(|(p, r)| {
                    (p, Arc::new(Dga2Realization { blackbox: r }) as RealizationRef)
                })
                .collect(),
        )
    }

    fn sample(&self, ctx: &AuctionContext, rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(Dga2Realization { blackbox: self.blackbox.sample(ctx, rng) })
    }
}

/// The digital-good mechanism: run the bid-independent combination with
/// probability `alpha / (alpha + 2)` and the posted-prediction mechanism
/// with probability `2 / (alpha + 2)`, where `alpha` is the plugged black
/// box's declared ratio. 1-consistent against `OPT`, `(alpha+2)`-robust
/// against the black box's benchmark.
pub fn digital_good_augmented(blackbox: MechanismRef) -> Result<Arc<Mix>> {
    let alpha = blackbox.declared_alpha().ok_or_else(|| {
        AugmechError::InvalidParam("black box must declare a competitive ratio".into())
    })?;
    let benchmark = blackbox.declared_benchmark().unwrap_or(BenchmarkKind::F2);
    let m2 = mech_dga2(blackbox);
    let m1 = mech_dga1();
    let m = mix(vec![(alpha.clone(), m2), (int(2), m1)], "dga-augmented")?;
    Ok(m.with_alpha(alpha + int(2), benchmark))
}

// ---------------------------------------------------------------------------
// Limited supply
// ---------------------------------------------------------------------------

struct Lsa1;

impl Realization for Lsa1 {
    fn rule(&self, bidder: usize, _others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        let l = ctx.env.supply().unwrap_or(ctx.n());
        if ctx.prediction.sigma_inv(bidder) <= l {
            StepRule::posted(ctx.prediction.value(bidder).clone(), one())
        } else {
            StepRule::reject()
        }
    }
}

struct Lsa1Mech;

/// `OPT(v_hat)` for limited supply: offer `v_hat_{sigma(j)}` to the `l`
/// highest-predicted bidders, reject the rest.
pub fn mech_lsa1() -> MechanismRef {
    Arc::new(Lsa1Mech)
}

impl Mechanism for Lsa1Mech {
    fn name(&self) -> String {
        "lsa1".into()
    }

    fn support(&self, _ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(vec![(one(), Arc::new(Lsa1))])
    }

    fn sample(&self, _ctx: &AuctionContext, _rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(Lsa1)
    }
}

struct Lsa2Realization {
    blackbox: RealizationRef,
}

impl Realization for Lsa2Realization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        if others.count_wrong(&ctx.prediction) == 0 {
            opt_hat_rule(bidder, ctx)
        } else {
            self.blackbox.rule(bidder, others, ctx)
        }
    }
}

struct Lsa2Mech {
    blackbox: MechanismRef,
}

/// Bid-independent combination for limited supply. Requires a black box
/// whose winner set always lies within the `l` highest bidders; together
/// with the prediction-order tie-breaking of `opt_hat` this keeps the
/// combined allocation feasible even when exactly one prediction is wrong.
pub fn mech_lsa2(blackbox: MechanismRef) -> Result<MechanismRef> {
    let within = blackbox.winner_set_within_top();
    if within.is_none() {
        return Err(AugmechError::MissingWinnerSetProperty(0));
    }
    Ok(Arc::new(Lsa2Mech { blackbox }))
}

impl Mechanism for Lsa2Mech {
    fn name(&self) -> String {
        format!("lsa2({})", self.blackbox.name())
    }

    fn support(&self, ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(
            self.blackbox
                .support(ctx)?
                .into_iter()
                .map(|(p, r)| {
                    (p, Arc::new(Lsa2Realization { blackbox: r }) as RealizationRef)
                })
                .collect(),
        )
    }

    fn sample(&self, ctx: &AuctionContext, rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(Lsa2Realization { blackbox: self.blackbox.sample(ctx, rng) })
    }
}

/// The limited-supply mechanism against the envy-free benchmark:
/// `mix(lsa2, alpha, lsa1, 2)`.
pub fn limited_efo_augmented(blackbox: MechanismRef) -> Result<Arc<Mix>> {
    let alpha = blackbox.declared_alpha().ok_or_else(|| {
        AugmechError::InvalidParam("black box must declare a competitive ratio".into())
    })?;
    let m2 = mech_lsa2(blackbox)?;
    let m1 = mech_lsa1();
    let m = mix(vec![(alpha.clone(), m2), (int(2), m1)], "lsa-augmented")?;
    Ok(m.with_alpha(alpha + int(2), BenchmarkKind::Efo2))
}

// ---------------------------------------------------------------------------
// Downward-closed environments
// ---------------------------------------------------------------------------

struct Rank21Realization {
    blackbox: RealizationRef,
}

impl Realization for Rank21Realization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        match others.count_wrong(&ctx.prediction) {
            0 => opt_hat_rule(bidder, ctx),
            1 => StepRule::reject(),
            _ => self.blackbox.rule(bidder, others, ctx),
        }
    }
}

struct Rank21Mech {
    blackbox: MechanismRef,
}

/// Bid-independent combination of `OPT_X(v_hat)`, the rejection mechanism,
/// and the black box: the rejection buffer keeps the allocation feasible in
/// every case, and with three or more wrong predictions the outcome equals
/// the black box's.
pub fn mech_rank2_1(blackbox: MechanismRef) -> MechanismRef {
    Arc::new(Rank21Mech { blackbox })
}

impl Mechanism for Rank21Mech {
    fn name(&self) -> String {
        format!("rank2-1({})", self.blackbox.name())
    }

    fn support(&self, ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(
            self.blackbox
                .support(ctx)?
                .into_iter()
                .map(|(p, r)| {
                    (p, Arc::new(Rank21Realization { blackbox: r }) as RealizationRef)
                })
                .collect(),
        )
    }

    fn sample(&self, ctx: &AuctionContext, rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(Rank21Realization { blackbox: self.blackbox.sample(ctx, rng) })
    }
}

struct InsensitiveRealization;

impl Realization for InsensitiveRealization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        // W_i: others whose prediction strictly exceeds their bid. Zero them
        // out of the predictions and serve this bidder its coordinate of the
        // resulting optimum at its predicted price.
        let mut weights = ctx.prediction.values().to_vec();
        for (j, b) in others.iter() {
            if ctx.prediction.value(j) > b {
                weights[j] = zero();
            }
        }
        let (x, _) = linear_max(&weights, &ctx.env).expect("weights valid");
        StepRule::posted(ctx.prediction.value(bidder).clone(), x.get(bidder).clone())
    }
}

struct InsensitiveMech;

/// Bid-independent combination of `OPT_X(v_hat_{-W})` over per-bidder
/// rejection sets `W`: robust against the insensitive benchmarks
/// `EFO^(m+1) / (m+1)` when exactly `m` predictions are wrong.
pub fn mech_insensitive() -> MechanismRef {
    Arc::new(InsensitiveMech)
}

impl Mechanism for InsensitiveMech {
    fn name(&self) -> String {
        "insensitive".into()
    }

    fn support(&self, _ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(vec![(one(), Arc::new(InsensitiveRealization))])
    }

    fn sample(&self, _ctx: &AuctionContext, _rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(InsensitiveRealization)
    }
}

/// Allocation level of the restricted single-item Vickrey auction given the
/// wrong bidder `j`: `max(x_hat_{sigma(1)}, 1 - x_hat_j)`. At least 1/2 by
/// the tie-broken monotonicity of `opt_hat`.
fn res_vic_level(j: usize, ctx: &AuctionContext) -> Rat {
    let top = ctx.opt_hat.get(ctx.prediction.sigma(1)).clone();
    let complement = one() - ctx.opt_hat.get(j).clone();
    top.max(complement)
}

struct ResVicRealization {
    wrong_bidder: usize,
}

impl Realization for ResVicRealization {
    fn rule(&self, _bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        vickrey_rule(others, res_vic_level(self.wrong_bidder, ctx))
    }
}

struct ResVicMech {
    wrong_bidder: usize,
}

/// Restricted single-item Vickrey auction `ResVic_j`: the highest bidder is
/// served at level `max(x_hat_{sigma(1)}, 1 - x_hat_j)` and pays that level
/// times the second-highest bid.
pub fn res_vic(wrong_bidder: usize) -> MechanismRef {
    Arc::new(ResVicMech { wrong_bidder })
}

impl Mechanism for ResVicMech {
    fn name(&self) -> String {
        format!("resvic({})", self.wrong_bidder)
    }

    fn support(&self, _ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(vec![(one(), Arc::new(ResVicRealization { wrong_bidder: self.wrong_bidder }))])
    }

    fn sample(&self, _ctx: &AuctionContext, _rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(ResVicRealization { wrong_bidder: self.wrong_bidder })
    }
}

struct Rank24Realization;

impl Realization for Rank24Realization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        let wrong = others.wrong_indices(&ctx.prediction);
        match wrong.len() {
            0 => opt_hat_rule(bidder, ctx),
            1 => vickrey_rule(others, res_vic_level(wrong[0], ctx)),
            _ => vickrey_rule(others, one()),
        }
    }
}

struct Rank24Mech;

/// Bid-independent combination of `OPT_X(v_hat)`, `ResVic_j`, and the
/// single-item Vickrey auction. When exactly two predictions are wrong its
/// revenue is at least `v_(2) / 2`.
pub fn mech_rank2_4() -> MechanismRef {
    Arc::new(Rank24Mech)
}

impl Mechanism for Rank24Mech {
    fn name(&self) -> String {
        "rank2-4".into()
    }

    fn support(&self, _ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        Some(vec![(one(), Arc::new(Rank24Realization))])
    }

    fn sample(&self, _ctx: &AuctionContext, _rng: &mut dyn RngCore) -> RealizationRef {
        Arc::new(Rank24Realization)
    }
}

/// The downward-closed mechanism: `mech_rank2_1`, `mech_insensitive`, and
/// `mech_rank2_4` with probabilities `alpha/(alpha+7)`, `3/(alpha+7)`,
/// `4/(alpha+7)`. 1-consistent against `OPT_X`, `(alpha+7)`-robust against
/// the two-winner envy-free benchmark.
pub fn downward_closed_augmented(blackbox: MechanismRef) -> Result<Arc<Mix>> {
    let alpha = blackbox.declared_alpha().ok_or_else(|| {
        AugmechError::InvalidParam("black box must declare a competitive ratio".into())
    })?;
    let m = mix(
        vec![
            (alpha.clone(), mech_rank2_1(blackbox)),
            (int(3), mech_insensitive()),
            (int(4), mech_rank2_4()),
        ],
        "dc-augmented",
    )?;
    Ok(m.with_alpha(alpha + int(7), BenchmarkKind::Efo2))
}
