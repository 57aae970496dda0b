//! Error-tolerant wrapper: the bid attractor, the step-rule rewrite with
//! exact Myerson payments, the randomized confidence distribution, and the
//! revenue-bound evaluators for the randomized-parameter analysis.

use crate::baseline::{
    AuctionContext, Mechanism, MechanismRef, OthersBids, Realization, RealizationRef, StepRule,
};
use crate::benchmarks::BenchmarkKind;
use crate::env::ValueProfile;
use crate::error::{AugmechError, Result};
use crate::rat::{one, rat, to_f64, zero, Rat};
use num_traits::Zero;
use rand::Rng;
use rand::RngCore;
use std::sync::Arc;

/// Density of the confidence level on `[1, infinity)`.
#[derive(Clone)]
pub enum GammaDensity {
    /// `exp(1 - gamma)`.
    ExpShifted,
    /// Arbitrary density with an effective upper support bound for
    /// quadrature and a flag for inverse-CDF sampling via bisection.
    Custom { pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>, upper: f64 },
}

impl std::fmt::Debug for GammaDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ExpShifted => write!(f, "ExpShifted"),
            Self::Custom { upper, .. } => write!(f, "Custom {{ upper: {upper} }}"),
        }
    }
}

impl GammaDensity {
    pub fn pdf(&self, gamma: f64) -> f64 {
        if gamma < 1.0 {
            return 0.0;
        }
        match self {
            Self::ExpShifted => (1.0 - gamma).exp(),
            Self::Custom { pdf, .. } => pdf(gamma),
        }
    }

    /// Upper integration cutoff: mass beyond it is negligible against the
    /// 1e-8 quadrature tolerance.
    pub fn upper_cutoff(&self) -> f64 {
        match self {
            Self::ExpShifted => 36.0, // tail mass e^(1-36) < 1e-15
            Self::Custom { upper, .. } => *upper,
        }
    }

    /// Inverse-CDF sample.
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Self::ExpShifted => 1.0 - (1.0 - u).ln(),
            Self::Custom { .. } => {
                // Bisection on the numeric CDF.
                let (mut lo, mut hi) = (1.0, self.upper_cutoff());
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let mass = adaptive_simpson(|g| self.pdf(g), 1.0, mid, 1e-10);
                    if mass < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Total mass, by quadrature.
    pub fn total_mass(&self) -> f64 {
        adaptive_simpson(|g| self.pdf(g), 1.0, self.upper_cutoff(), 1e-9)
    }
}

/// Confidence level: a fixed rational `gamma >= 1`, or one drawn per
/// realization from a density on `[1, infinity)`.
#[derive(Debug, Clone)]
pub enum ConfidenceParam {
    Fixed(Rat),
    Sampled(GammaDensity),
}

impl ConfidenceParam {
    pub fn fixed(gamma: Rat) -> Result<Self> {
        if gamma < one() {
            return Err(AugmechError::InvalidParam("confidence level must be >= 1".into()));
        }
        Ok(Self::Fixed(gamma))
    }

    pub fn sampled(density: GammaDensity) -> Result<Self> {
        let mass = density.total_mass();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(AugmechError::UnnormalizedDensity(mass));
        }
        Ok(Self::Sampled(density))
    }
}

/// The attractor: snaps each bid to its prediction when they are within a
/// multiplicative factor `gamma` of each other (inclusive). Zero entries
/// have infinite ratio against any positive partner and are never snapped.
pub fn approx(bids: &[Rat], predictions: &[Rat], gamma: &Rat) -> Vec<Rat> {
    bids.iter()
        .zip(predictions)
        .map(|(b, p)| snap(b, p, gamma))
        .collect()
}

fn snap(bid: &Rat, prediction: &Rat, gamma: &Rat) -> Rat {
    if bid == prediction {
        return prediction.clone();
    }
    if bid.is_zero() || prediction.is_zero() {
        return bid.clone();
    }
    let lo = prediction.clone() / gamma.clone();
    let hi = prediction.clone() * gamma.clone();
    if *bid >= lo && *bid <= hi {
        prediction.clone()
    } else {
        bid.clone()
    }
}

/// Rewrites one bidder's rule for a snapped own bid: thresholds inside
/// `(v_hat/gamma, gamma*v_hat]` collapse to the allocation level held at
/// `v_hat`, with the jump relocated to `v_hat/gamma` (inclusive); thresholds
/// outside pass through. Payments follow from the rewritten jumps.
pub fn rewrite_rule(rule: &StepRule, prediction: &Rat, gamma: &Rat) -> StepRule {
    if prediction.is_zero() {
        return rule.clone();
    }
    let lo = prediction.clone() / gamma.clone();
    let hi = prediction.clone() * gamma.clone();
    let mid = rule.allocation(prediction);
    let mut jumps = Vec::new();
    let mut prev = zero();
    for j in rule.jumps() {
        if j.threshold < lo {
            jumps.push(j.clone());
            prev = j.level_above.clone();
        } else {
            break;
        }
    }
    let above_hi = rule.allocation_above(&hi);
    if lo == hi {
        // gamma = 1: the only snapped bid is v_hat itself.
        if above_hi > prev || mid > prev {
            jumps.push(crate::baseline::Jump {
                threshold: lo,
                level_at: mid,
                level_above: above_hi.clone(),
            });
            prev = above_hi;
        }
    } else {
        if mid > prev {
            jumps.push(crate::baseline::Jump {
                threshold: lo,
                level_at: mid.clone(),
                level_above: mid.clone(),
            });
            prev = mid.clone();
        }
        if above_hi > prev {
            jumps.push(crate::baseline::Jump {
                threshold: hi,
                level_at: prev.clone(),
                level_above: above_hi.clone(),
            });
            prev = above_hi;
        }
    }
    for j in rule.jumps() {
        if j.threshold > hi && j.level_above > prev {
            jumps.push(j.clone());
            prev = j.level_above.clone();
        }
    }
    StepRule::from_jumps(jumps).expect("rewritten rule is well formed")
}

struct ErrModRealization {
    inner: RealizationRef,
    gamma: Rat,
}

impl Realization for ErrModRealization {
    fn rule(&self, bidder: usize, others: &OthersBids<'_>, ctx: &AuctionContext) -> StepRule {
        // Snap the visible others' bids, then rewrite the resulting rule for
        // the snapped own-bid dimension.
        let mut snapped = others.raw_bids().to_vec();
        for (j, b) in others.iter() {
            snapped[j] = snap(b, ctx.prediction.value(j), &self.gamma);
        }
        let view = match others.active_set() {
            None => OthersBids::new(&snapped, bidder),
            Some(a) => OthersBids::restricted(&snapped, bidder, a.to_vec()),
        };
        let inner_rule = self.inner.rule(bidder, &view, ctx);
        rewrite_rule(&inner_rule, ctx.prediction.value(bidder), &self.gamma)
    }
}

pub struct ErrMod {
    inner: MechanismRef,
    confidence: ConfidenceParam,
}

/// The error-tolerant wrapper: runs the wrapped mechanism on snapped bids
/// with payments recomputed by Myerson from the rewritten step rules.
pub fn errmod(inner: MechanismRef, confidence: ConfidenceParam) -> MechanismRef {
    Arc::new(ErrMod { inner, confidence })
}

impl Mechanism for ErrMod {
    fn name(&self) -> String {
        format!("errmod({})", self.inner.name())
    }

    fn declared_alpha(&self) -> Option<Rat> {
        self.inner.declared_alpha()
    }

    fn declared_benchmark(&self) -> Option<BenchmarkKind> {
        self.inner.declared_benchmark()
    }

    fn support(&self, ctx: &AuctionContext) -> Option<Vec<(Rat, RealizationRef)>> {
        match &self.confidence {
            ConfidenceParam::Fixed(g) => Some(
                self.inner
                    .support(ctx)?
                    .into_iter()
                    .map(|(p, r)| {
                        (
                            p,
                            Arc::new(ErrModRealization { inner: r, gamma: g.clone() })
                                as RealizationRef,
                        )
                    })
                    .collect(),
            ),
            ConfidenceParam::Sampled(_) => None,
        }
    }

    fn sample(&self, ctx: &AuctionContext, rng: &mut dyn RngCore) -> RealizationRef {
        let gamma = match &self.confidence {
            ConfidenceParam::Fixed(g) => g.clone(),
            ConfidenceParam::Sampled(d) => {
                let u: f64 = rng.gen_range(0.0..1.0);
                dyadic_at_least_one(d.sample(u))
            }
        };
        Arc::new(ErrModRealization { inner: self.inner.sample(ctx, rng), gamma })
    }
}

/// Nearest dyadic rational (denominator 2^24) at least 1; sampled confidence
/// levels stay exact rationals downstream.
fn dyadic_at_least_one(x: f64) -> Rat {
    let scaled = (x * ((1u64 << 24) as f64)).round();
    let scaled = scaled.clamp(1.0, 9e18) as i128;
    let r = rat(scaled, 1 << 24);
    if r < one() {
        one()
    } else {
        r
    }
}

// ---------------------------------------------------------------------------
// Error rate and the two-regime revenue guarantee
// ---------------------------------------------------------------------------

/// Maximal multiplicative prediction error; infinite when exactly one of a
/// pair is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Eta {
    Finite(Rat),
    Infinite,
}

impl Eta {
    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(r) => to_f64(r),
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn le(&self, gamma: &Rat) -> bool {
        match self {
            Self::Finite(r) => r <= gamma,
            Self::Infinite => false,
        }
    }
}

/// `eta = max_i max(v_i / v_hat_i, v_hat_i / v_i)`, with equal pairs
/// contributing ratio 1.
pub fn error_rate(values: &[Rat], predictions: &[Rat]) -> Eta {
    let mut eta = one();
    for (v, p) in values.iter().zip(predictions) {
        if v == p {
            continue;
        }
        if v.is_zero() || p.is_zero() {
            return Eta::Infinite;
        }
        let r = (v.clone() / p.clone()).max(p.clone() / v.clone());
        if r > eta {
            eta = r;
        }
    }
    Eta::Finite(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `eta <= gamma`: revenue at least `OPT / (eta * gamma)`.
    Consistency,
    /// `eta > gamma`: revenue at least `f / (beta * gamma^2)`.
    Robustness,
}

#[derive(Debug, Clone)]
pub struct ErrModCheck {
    pub eta: Eta,
    pub gamma: Rat,
    pub regime: Regime,
    pub revenue: Rat,
    pub benchmark: Rat,
    pub bound: Rat,
    pub satisfied: bool,
    pub realized_ratio: Option<Rat>,
}

/// Evaluates the two-regime guarantee of the wrapped mechanism on one
/// instance, exactly: expected revenue over the enumerated randomness
/// against `OPT/(eta*gamma)` or `f/(beta*gamma^2)`.
pub fn theorem_errmod_check(
    inner: MechanismRef,
    ctx: &AuctionContext,
    values: &ValueProfile,
    gamma: Rat,
    beta: Rat,
    benchmark: BenchmarkKind,
) -> Result<ErrModCheck> {
    if gamma < one() {
        return Err(AugmechError::InvalidParam("gamma must be >= 1".into()));
    }
    let wrapped = errmod(inner, ConfidenceParam::Fixed(gamma.clone()));
    let revenue = crate::baseline::expected_revenue_exact(wrapped.as_ref(), values.values(), ctx)
        .ok_or_else(|| {
            AugmechError::InvalidParam("mechanism randomness not enumerable".into())
        })?;
    let eta = error_rate(values.values(), ctx.prediction.values());
    let (regime, reference) = if eta.le(&gamma) {
        (Regime::Consistency, crate::env::opt_value(values.values(), &ctx.env)?)
    } else {
        (Regime::Robustness, benchmark.eval(values, &ctx.env)?.value)
    };
    let bound = match (&eta, regime) {
        (Eta::Finite(e), Regime::Consistency) => {
            reference.clone() / (e.clone() * gamma.clone())
        }
        (_, _) => reference.clone() / (beta.clone() * gamma.clone() * gamma.clone()),
    };
    let satisfied = revenue >= bound;
    let realized_ratio = if revenue.is_zero() {
        None
    } else {
        Some(reference.clone() / revenue.clone())
    };
    Ok(ErrModCheck {
        eta,
        gamma,
        regime,
        revenue,
        benchmark: reference,
        bound,
        satisfied,
        realized_ratio,
    })
}

// ---------------------------------------------------------------------------
// Randomized confidence: revenue-fraction integrals
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_slice(a, b, fa, fm, fb);
    adapt(f, a, b, fa, fm, fb, whole, tol, 0)
}

fn simpson_slice(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: impl Fn(f64) -> f64 + Copy,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_slice(a, m, fa, flm, fm);
    let right = simpson_slice(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= 50 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
            + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
    }
}

/// Guaranteed revenue fractions under a confidence level sampled from
/// `density`, at error rate `eta` (possibly infinite):
///
/// * `opt_bound  = (1/eta) * integral_eta^inf density(g)/g dg`
/// * `f_bound    = opt_bound + (1/beta) * integral_1^eta density(g)/g^2 dg`
///
/// `opt_bound * OPT` and `f_bound * f` are the guaranteed revenues.
pub fn randomized_bounds(density: &GammaDensity, eta: f64, beta: f64) -> Result<(f64, f64)> {
    if !(eta >= 1.0) {
        return Err(AugmechError::InvalidParam("eta must be >= 1".into()));
    }
    if beta <= 0.0 {
        return Err(AugmechError::InvalidParam("beta must be positive".into()));
    }
    let mass = density.total_mass();
    if !mass.is_finite() || (mass - 1.0).abs() > 1e-6 {
        return Err(AugmechError::UnnormalizedDensity(mass));
    }
    let cutoff = density.upper_cutoff();
    let tol = 1e-8;
    let opt_bound = if eta.is_infinite() || eta >= cutoff {
        0.0
    } else {
        adaptive_simpson(|g| density.pdf(g) / g, eta, cutoff, tol) / eta
    };
    let upper_f = if eta.is_infinite() { cutoff } else { eta.min(cutoff) };
    let f_part = adaptive_simpson(|g| density.pdf(g) / (g * g), 1.0, upper_f, tol) / beta;
    Ok((opt_bound, opt_bound + f_part))
}
