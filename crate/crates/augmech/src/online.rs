//! Online sampling auction with predictions (OSAP).
//!
//! Bidders arrive one at a time; the first is offered its predicted price,
//! and each later arrival `pi(t)` is offered the price that an offline
//! `t`-bidder mechanism produces for it from the earlier arrivals' bids and
//! predictions. The offline mechanism's internal randomness is drawn fresh
//! per step. Digital goods only: arrivals never compete for supply.

use crate::baseline::{
    AuctionContext, Mechanism, MechanismRef, OthersBids, Realization, RealizationRef, StepRule,
};
use crate::error::{AugmechError, Result};
use crate::rat::{one, rat, Rat};
use rand::seq::SliceRandom;
use rand::RngCore;
use std::sync::Arc;

/// Joint realizations enumerated for the exact-expectation path are capped
/// at this many branches; larger instances fall back to sampling.
const MAX_OSAP_SUPPORT: usize = 5000;

#[derive(Debug, Clone)]
pub enum ArrivalOrder {
    /// A fixed permutation of the bidders.
    Fixed(Vec<usize>),
    /// Uniformly random order, drawn from the run's seed stream.
    Random,
}

impl ArrivalOrder {
    pub fn fixed(pi: Vec<usize>) -> Result<Self> {
        let n = pi.len();
        let mut seen = vec![false; n];
        for &i in &pi {
            if i >= n || seen[i] {
                return Err(AugmechError::InvalidParam("not a permutation".into()));
            }
            seen[i] = true;
        }
        Ok(Self::Fixed(pi))
    }
}

/// Offline mechanism family indexed by prefix size.
pub type OfflineFamily = Arc<dyn Fn(usize) -> Option<MechanismRef> + Send + Sync>;

struct OsapRealization {
    order: Vec<usize>,
    /// Realization used at arrival position `t` (0-based), for `t >= 1`.
    steps: Vec<RealizationRef>,
}

impl Realization for OsapRealization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        let t = self
            .order
            .iter()
            .position(|&j| j == bidder)
            .expect("bidder in arrival order");
        if t == 0 {
            return StepRule::posted(ctx.prediction.value(bidder).clone(), one());
        }
        let active: Vec<usize> = self.order[..=t].to_vec();
        let sub = OthersBids::restricted(others.raw_bids(), bidder, active);
        self.steps[t - 1].rule(bidder, &sub, ctx)
    }
}

pub struct Osap {
    family: OfflineFamily,
    order: ArrivalOrder,
    n: usize,
    /// The online reduction costs at most a factor 2 in robustness, so the
    /// claimed ratio is twice the offline family's.
    claimed_alpha: Option<Rat>,
    claimed_benchmark: Option<crate::benchmarks::BenchmarkKind>,
}

/// Builds the online mechanism for `n` bidders. The offline family must be
/// truthful and 1-consistent at every prefix size in `2..=n`.
pub fn osap(family: OfflineFamily, order: ArrivalOrder, n: usize) -> Result<MechanismRef> {
    for t in 2..=n {
        if family(t).is_none() {
            return Err(AugmechError::MissingPrefixSize(t));
        }
    }
    if let ArrivalOrder::Fixed(pi) = &order {
        if pi.len() != n {
            return Err(AugmechError::DimensionMismatch { expected: n, got: pi.len() });
        }
    }
    let offline = if n >= 2 { family(n) } else { None };
    let claimed_alpha = offline
        .as_ref()
        .and_then(|m| m.declared_alpha())
        .map(|a| a * crate::rat::int(2));
    let claimed_benchmark = offline.as_ref().and_then(|m| m.declared_benchmark());
    Ok(Arc::new(Osap { family, order, n, claimed_alpha, claimed_benchmark }))
}

/// OSAP over the digital-good mechanism with the cost-sharing black box.
pub fn default_osap(order: ArrivalOrder, n: usize) -> Result<MechanismRef> {
    let offline: MechanismRef =
        crate::augmented::digital_good_augmented(crate::baseline::rscs())?;
    osap(Arc::new(move |_t| Some(offline.clone())), order, n)
}

fn all_orders(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    permute(&mut cur, 0, &mut out);
    out
}

fn permute(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == cur.len() {
        out.push(cur.clone());
        return;
    }
    for i in k..cur.len() {
        cur.swap(k, i);
        permute(cur, k + 1, out);
        cur.swap(k, i);
    }
}

impl Osap {
    fn order_support(&self) -> Option<Vec<(Rat, Vec<usize>)>> {
        match &self.order {
            ArrivalOrder::Fixed(pi) => Some(vec![(one(), pi.clone())]),
            ArrivalOrder::Random => {
                let orders = all_orders(self.n);
                let p = rat(1, orders.len() as i128);
                Some(orders.into_iter().map(|o| (p.clone(), o)).collect())
            }
        }
    }
}

impl Mechanism for Osap {
    fn name(&self) -> String {
        "osap".into()
    }

    fn declared_alpha(&self) -> Option<Rat> {
        self.claimed_alpha.clone()
    }

    fn declared_benchmark(&self) -> Option<crate::benchmarks::BenchmarkKind> {
        self.claimed_benchmark
    }

    fn support(&self, ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        let n = self.n;
        if n != ctx.n() {
            return None;
        }
        // Per-step supports for arrivals 2..=n.
        let mut step_supports = Vec::new();
        let mut total: usize = 1;
        for t in 2..=n {
            let m = (self.family)(t)?;
            let s = m.support(ctx)?;
            total = total.checked_mul(s.len())?;
            if total > MAX_OSAP_SUPPORT {
                return None;
            }
            step_supports.push(s);
        }
        let orders = self.order_support()?;
        if total.checked_mul(orders.len())? > MAX_OSAP_SUPPORT {
            return None;
        }
        // Cartesian product of the step supports.
        let mut combos: Vec<(Rat, Vec<RealizationRef>)> = vec![(one(), Vec::new())];
        for s in &step_supports {
            let mut next = Vec::with_capacity(combos.len() * s.len());
            for (p, steps) in &combos {
                for (q, r) in s {
                    let mut steps = steps.clone();
                    steps.push(r.clone());
                    next.push((p.clone() * q.clone(), steps));
                }
            }
            combos = next;
        }
        let mut out = Vec::with_capacity(orders.len() * combos.len());
        for (po, order) in &orders {
            for (pc, steps) in &combos {
                out.push((
                    po.clone() * pc.clone(),
                    Arc::new(OsapRealization { order: order.clone(), steps: steps.clone() })
                        as RealizationRef,
                ));
            }
        }
        Some(out)
    }

    fn sample(&self, ctx: &AuctionContext, rng: &mut dyn RngCore) -> RealizationRef {
        let order = match &self.order {
            ArrivalOrder::Fixed(pi) => pi.clone(),
            ArrivalOrder::Random => {
                let mut pi: Vec<usize> = (0..self.n).collect();
                pi.shuffle(&mut ShimRng(rng));
                pi
            }
        };
        let steps = (2..=self.n)
            .map(|t| (self.family)(t).expect("validated at construction").sample(ctx, rng))
            .collect();
        Arc::new(OsapRealization { order, steps })
    }
}

/// Adapter so `&mut dyn RngCore` satisfies the `Rng` bound of `shuffle`.
struct ShimRng<'a>(&'a mut dyn RngCore);

impl RngCore for ShimRng<'_> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}
