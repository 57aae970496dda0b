//! Value/prediction profiles, ordering with tie-breaking, and feasibility
//! environments with membership and linear-maximization oracles.
//!
//! Feasibility constraints are symmetric downward-closed convex subsets of
//! `[0,1]^n`, represented by concave prefix-sum caps `c(k)`: an allocation is
//! feasible iff for every `k` the sum of its `k` largest entries is at most
//! `c(k)`. This family contains the digital-good constraint (`c(k) = k`) and
//! the `l`-limited-supply constraint (`c(k) = min(k, l)`), admits exact greedy
//! linear maximization, and is closed under the operations the mechanisms
//! need (componentwise decrease, permutation, convex combination).

use crate::error::{AugmechError, Result};
use crate::rat::{int, one, zero, Rat};
use num_traits::Zero;

/// A vector of exact nonnegative values with a canonical descending order.
///
/// `order[k]` is the index of the `k`-th largest value; ties are broken by
/// index so that the order is stable and reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueProfile {
    values: Vec<Rat>,
    order: Vec<usize>,
}

impl ValueProfile {
    pub fn new(values: Vec<Rat>) -> Result<Self> {
        if values.is_empty() {
            return Err(AugmechError::TooFewBidders { need: 1, got: 0 });
        }
        for (i, v) in values.iter().enumerate() {
            if *v < zero() {
                return Err(AugmechError::NegativeValue(i));
            }
        }
        let order = descending_order(&values);
        Ok(Self { values, order })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Index of the `k`-th largest value (0-based rank).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `k`-th largest value, 1-based: `sorted(1)` is the maximum.
    pub fn sorted(&self, k: usize) -> &Rat {
        &self.values[self.order[k - 1]]
    }

    /// All values in descending order.
    pub fn sorted_values(&self) -> Vec<Rat> {
        self.order.iter().map(|&i| self.values[i].clone()).collect()
    }

    /// Rank (0-based) of bidder `i` in the descending value order.
    pub fn rank_of(&self, i: usize) -> usize {
        self.order.iter().position(|&j| j == i).expect("index in range")
    }
}

/// Indices sorted by value descending, ties by index ascending.
pub fn descending_order(values: &[Rat]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Predicted values together with the permutation `sigma` ordering them
/// descending, tie-broken consistently with the value ordering: among
/// bidders with equal predictions, `sigma` follows their descending-value
/// rank (and therefore index order when values tie as well).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionProfile {
    values: Vec<Rat>,
    sigma: Vec<usize>,
}

impl PredictionProfile {
    /// Builds the profile, breaking prediction ties against `values`.
    pub fn new(predictions: Vec<Rat>, values: &ValueProfile) -> Result<Self> {
        if predictions.len() != values.n() {
            return Err(AugmechError::DimensionMismatch {
                expected: values.n(),
                got: predictions.len(),
            });
        }
        for (i, v) in predictions.iter().enumerate() {
            if *v < zero() {
                return Err(AugmechError::NegativeValue(i));
            }
        }
        let value_rank: Vec<usize> = {
            let mut rank = vec![0usize; values.n()];
            for (r, &i) in values.order().iter().enumerate() {
                rank[i] = r;
            }
            rank
        };
        let mut sigma: Vec<usize> = (0..predictions.len()).collect();
        sigma.sort_by(|&a, &b| {
            predictions[b]
                .cmp(&predictions[a])
                .then(value_rank[a].cmp(&value_rank[b]))
        });
        Ok(Self { values: predictions, sigma })
    }

    /// A profile whose tie-breaking is taken against itself (used when no
    /// separate value vector exists, e.g. when predictions are the values).
    pub fn self_ordered(predictions: Vec<Rat>) -> Result<Self> {
        let vp = ValueProfile::new(predictions.clone())?;
        Self::new(predictions, &vp)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Rat {
        &self.values[i]
    }

    /// `sigma(k)`, 1-based: the bidder with the `k`-th largest prediction.
    pub fn sigma(&self, k: usize) -> usize {
        self.sigma[k - 1]
    }

    /// `sigma^{-1}(i)`, 1-based: the rank of bidder `i` among predictions.
    pub fn sigma_inv(&self, i: usize) -> usize {
        self.sigma.iter().position(|&j| j == i).expect("index in range") + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    DigitalGood,
    LimitedSupply(usize),
    SymmetricCap,
}

/// A symmetric downward-closed convex feasibility constraint on `n` bidders,
/// given by concave prefix-sum caps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    kind: EnvKind,
    caps: Vec<Rat>,
}

impl Environment {
    pub fn digital_good(n: usize) -> Result<Self> {
        let caps = (1..=n as i128).map(int).collect();
        Self::with_kind(EnvKind::DigitalGood, caps)
    }

    pub fn limited_supply(n: usize, l: usize) -> Result<Self> {
        if l == 0 || l > n {
            return Err(AugmechError::InvalidParam(format!(
                "supply l must satisfy 1 <= l <= n, got l = {l}, n = {n}"
            )));
        }
        let caps = (1..=n).map(|k| int(k.min(l) as i128)).collect();
        Self::with_kind(EnvKind::LimitedSupply(l), caps)
    }

    pub fn symmetric_cap(caps: Vec<Rat>) -> Result<Self> {
        Self::with_kind(EnvKind::SymmetricCap, caps)
    }

    fn with_kind(kind: EnvKind, caps: Vec<Rat>) -> Result<Self> {
        if caps.is_empty() {
            return Err(AugmechError::InvalidEnvironment("empty cap vector".into()));
        }
        if caps[0] < one() {
            return Err(AugmechError::InvalidEnvironment(
                "c(1) >= 1 required (singleton allocations must be feasible)".into(),
            ));
        }
        let mut prev_diff: Option<Rat> = None;
        let mut prev = zero();
        for (k, c) in caps.iter().enumerate() {
            if *c > int(k as i128 + 1) {
                return Err(AugmechError::InvalidEnvironment(format!(
                    "c({}) = {} exceeds k",
                    k + 1,
                    c
                )));
            }
            let diff = c.clone() - prev.clone();
            if diff < zero() {
                return Err(AugmechError::InvalidEnvironment(format!(
                    "caps not nondecreasing at k = {}",
                    k + 1
                )));
            }
            if let Some(pd) = &prev_diff {
                if diff > *pd {
                    return Err(AugmechError::InvalidEnvironment(format!(
                        "caps not concave at k = {}",
                        k + 1
                    )));
                }
            }
            prev_diff = Some(diff);
            prev = c.clone();
        }
        Ok(Self { kind, caps })
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.caps.len()
    }

    /// `c(k)`, 1-based.
    pub fn cap(&self, k: usize) -> &Rat {
        &self.caps[k - 1]
    }

    pub fn caps(&self) -> &[Rat] {
        &self.caps
    }

    /// Supply bound when the environment is a limited-supply constraint.
    pub fn supply(&self) -> Option<usize> {
        match self.kind {
            EnvKind::LimitedSupply(l) => Some(l),
            _ => None,
        }
    }

    /// Restriction of the constraint to the first `m` coordinates. Used by
    /// the online reduction, which runs offline auctions on prefixes.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        match self.kind {
            EnvKind::DigitalGood => Environment::digital_good(m),
            _ => Err(AugmechError::InvalidEnvironment(
                "prefix environments only defined for digital goods".into(),
            )),
        }
    }
}

/// A fractional allocation: per-bidder service probabilities in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    x: Vec<Rat>,
}

impl Allocation {
    pub fn new(x: Vec<Rat>) -> Result<Self> {
        for (i, xi) in x.iter().enumerate() {
            if *xi < zero() || *xi > one() {
                return Err(AugmechError::InvalidParam(format!(
                    "allocation entry {i} = {xi} outside [0,1]"
                )));
            }
        }
        Ok(Self { x })
    }

    pub fn zero(n: usize) -> Self {
        Self { x: vec![zero(); n] }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, i: usize) -> &Rat {
        &self.x[i]
    }

    pub fn entries(&self) -> &[Rat] {
        &self.x
    }
}

/// Membership oracle: true iff for every `k` the sum of the `k` largest
/// entries of `x` is at most `c(k)`.
pub fn is_feasible(x: &Allocation, env: &Environment) -> Result<bool> {
    if x.n() != env.n() {
        return Err(AugmechError::DimensionMismatch { expected: env.n(), got: x.n() });
    }
    let mut sorted = x.entries().to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut prefix = zero();
    for (k, xi) in sorted.iter().enumerate() {
        prefix += xi.clone();
        if prefix > *env.cap(k + 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Linear-maximization oracle: returns a maximizer of `sum w_i x_i` over the
/// environment together with its value.
///
/// Greedy fill in descending weight order: the `k`-th served bidder receives
/// `min(1, c(k) - filled)` while its weight is positive. Allocation mass is
/// then averaged within blocks of equal weight, so equal weights receive
/// equal allocations and the solution is monotone along any descending
/// ordering of the weights (the tie-broken optimum the mechanisms rely on).
pub fn linear_max(w: &[Rat], env: &Environment) -> Result<(Allocation, Rat)> {
    if w.len() != env.n() {
        return Err(AugmechError::DimensionMismatch { expected: env.n(), got: w.len() });
    }
    for (i, wi) in w.iter().enumerate() {
        if *wi < zero() {
            return Err(AugmechError::NegativeValue(i));
        }
    }
    let order = descending_order(w);
    let n = w.len();
    let mut x_sorted = vec![zero(); n];
    let mut filled = zero();
    for k in 0..n {
        let wi = &w[order[k]];
        if wi.is_zero() {
            break;
        }
        let room = env.cap(k + 1).clone() - filled.clone();
        let xi = if room > one() { one() } else { room };
        filled += xi.clone();
        x_sorted[k] = xi;
    }
    // Average within equal-weight blocks.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && w[order[end]] == w[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            let mut total = zero();
            for xs in &x_sorted[start..end] {
                total += xs.clone();
            }
            let avg = total / int((end - start) as i128);
            for xs in &mut x_sorted[start..end] {
                *xs = avg.clone();
            }
        }
        start = end;
    }
    let mut x = vec![zero(); n];
    let mut value = zero();
    for k in 0..n {
        value += w[order[k]].clone() * x_sorted[k].clone();
        x[order[k]] = x_sorted[k].clone();
    }
    let alloc = Allocation::new(x)?;
    debug_assert!(is_feasible(&alloc, env)?);
    Ok((alloc, value))
}

/// Optimal revenue benchmark `OPT_X(v)` over the environment.
pub fn opt_value(v: &[Rat], env: &Environment) -> Result<Rat> {
    Ok(linear_max(v, env)?.1)
}

/// Number of indices where the two vectors differ (exact equality).
pub fn count_wrong(values: &[Rat], predictions: &[Rat]) -> usize {
    values
        .iter()
        .zip(predictions)
        .filter(|(v, p)| v != p)
        .count()
}

/// Same, ignoring index `skip`.
pub fn count_wrong_excluding(values: &[Rat], predictions: &[Rat], skip: usize) -> usize {
    values
        .iter()
        .zip(predictions)
        .enumerate()
        .filter(|(i, (v, p))| *i != skip && v != p)
        .count()
}
