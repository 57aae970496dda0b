//! Revenue benchmarks: `OPT`, `F^(2)`, `maxV`, `F^(2,l)`, the concave
//! envelope with its virtual values, envy-free optimal revenue `EFO` and its
//! top-`m` flattenings, plus a grid brute-force oracle for `EFO`.
//!
//! All benchmarks are symmetric in bidder identity: they sort first.

use crate::env::{linear_max, Environment, ValueProfile};
use crate::error::{AugmechError, Result};
use crate::rat::{int, rat, zero, Rat};


/// The minimal nondecreasing concave majorant `R` of the revenue curve
/// `{(i, i * v_i)}` (values descending), together with its first differences,
/// the virtual values `phi_i = R(i) - R(i-1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    /// `R(0) ..= R(n)`.
    pub r: Vec<Rat>,
    /// `phi_1 ..= phi_n` (nonincreasing, nonnegative).
    pub phi: Vec<Rat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Opt,
    F2,
    MaxV,
    /// `F^(2,l)` with `l` taken from the environment's supply bound.
    F2L,
    Efo,
    Efo2,
    EfoM(usize),
}

impl BenchmarkKind {
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "opt" => Self::Opt,
            "f2" => Self::F2,
            "maxv" => Self::MaxV,
            "f2l" => Self::F2L,
            "efo" => Self::Efo,
            "efo2" => Self::Efo2,
            other => {
                if let Some(m) = other.strip_prefix("efo") {
                    let m: usize = m
                        .parse()
                        .map_err(|_| AugmechError::InvalidParam(format!("unknown benchmark {name}")))?;
                    Self::EfoM(m)
                } else {
                    return Err(AugmechError::InvalidParam(format!("unknown benchmark {name}")));
                }
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Opt => "opt".into(),
            Self::F2 => "f2".into(),
            Self::MaxV => "maxv".into(),
            Self::F2L => "f2l".into(),
            Self::Efo => "efo".into(),
            Self::Efo2 => "efo2".into(),
            Self::EfoM(m) => format!("efo{m}"),
        }
    }

    pub fn eval(&self, v: &ValueProfile, env: &Environment) -> Result<BenchmarkValue> {
        let value = match self {
            Self::Opt => crate::env::opt_value(v.values(), env)?,
            Self::F2 => f2(v)?,
            Self::MaxV => maxv(v)?,
            Self::F2L => {
                let l = env.supply().ok_or_else(|| {
                    AugmechError::InvalidParam(
                        "f2l needs a limited-supply environment".into(),
                    )
                })?;
                f2l(v, l)?
            }
            Self::Efo => efo(v, env)?,
            Self::Efo2 => efom(v, 2, env)?,
            Self::EfoM(m) => efom(v, *m, env)?,
        };
        Ok(BenchmarkValue { kind: *self, value })
    }
}

/// A named benchmark evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkValue {
    pub kind: BenchmarkKind,
    pub value: Rat,
}

/// `F^(2)(v) = max_{k >= 2} k * v_(k)`: best single-price revenue with at
/// least two winners.
pub fn f2(v: &ValueProfile) -> Result<Rat> {
    if v.n() < 2 {
        return Err(AugmechError::TooFewBidders { need: 2, got: v.n() });
    }
    Ok((2..=v.n())
        .map(|k| int(k as i128) * v.sorted(k).clone())
        .max()
        .expect("n >= 2"))
}

/// `maxV(v) = max_{k < n} k * v_(k+1)`: best multi-unit Vickrey revenue.
pub fn maxv(v: &ValueProfile) -> Result<Rat> {
    if v.n() < 2 {
        return Err(AugmechError::TooFewBidders { need: 2, got: v.n() });
    }
    Ok((1..v.n())
        .map(|k| int(k as i128) * v.sorted(k + 1).clone())
        .max()
        .expect("n >= 2"))
}

/// `F^(2,l)(v) = max_{2 <= k <= min(l,n)} k * v_(k)`.
pub fn f2l(v: &ValueProfile, l: usize) -> Result<Rat> {
    if l < 2 {
        return Err(AugmechError::InvalidParam(format!("f2l needs l >= 2, got {l}")));
    }
    if v.n() < 2 {
        return Err(AugmechError::TooFewBidders { need: 2, got: v.n() });
    }
    Ok((2..=l.min(v.n()))
        .map(|k| int(k as i128) * v.sorted(k).clone())
        .max()
        .expect("range nonempty"))
}

/// Envelope of a descending-sorted value slice.
///
/// Computes the exact upper concave hull of the `n+1` points
/// `(i, i * v_i)` (with the `(0, 0)` anchor) by a monotone chain, evaluates
/// it at the integers, and then flattens it after its peak so the result is
/// nondecreasing. The flattened hull is the minimal function that is
/// nondecreasing, concave, and dominates every point.
pub fn envelope_sorted(v_desc: &[Rat]) -> Envelope {
    let n = v_desc.len();
    let points: Vec<(i128, Rat)> = std::iter::once((0i128, zero()))
        .chain(
            v_desc
                .iter()
                .enumerate()
                .map(|(i, vi)| ((i + 1) as i128, int((i + 1) as i128) * vi.clone())),
        )
        .collect();
    // Monotone chain, upper hull: pop the middle point whenever it does not
    // lie strictly above the chord of its neighbors.
    let mut hull: Vec<(i128, Rat)> = Vec::with_capacity(n + 1);
    for p in points {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // cross(a, b, p) >= 0 means b is on or below segment a-p.
            let cross = int(b.0 - a.0) * (p.1.clone() - a.1.clone())
                - (b.1.clone() - a.1.clone()) * int(p.0 - a.0);
            if cross >= zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // Evaluate the hull at integers 0..=n, then monotonize by running max.
    let mut r = Vec::with_capacity(n + 1);
    let mut seg = 0usize;
    for j in 0..=(n as i128) {
        while seg + 1 < hull.len() && hull[seg + 1].0 < j {
            seg += 1;
        }
        let val = if seg + 1 < hull.len() {
            let (x0, y0) = (&hull[seg].0, &hull[seg].1);
            let (x1, y1) = (&hull[seg + 1].0, &hull[seg + 1].1);
            y0.clone()
                + (y1.clone() - y0.clone()) * int(j - x0) / int(x1 - x0)
        } else {
            hull[seg].1.clone()
        };
        r.push(val);
    }
    for j in 1..r.len() {
        if r[j] < r[j - 1] {
            r[j] = r[j - 1].clone();
        }
    }
    let phi = (1..=n).map(|i| r[i].clone() - r[i - 1].clone()).collect();
    Envelope { r, phi }
}

/// Envelope of a value profile (sorted internally).
pub fn envelope(v: &ValueProfile) -> Envelope {
    envelope_sorted(&v.sorted_values())
}

/// Envy-free optimal revenue: the feasibility-constrained linear optimum of
/// the virtual values.
pub fn efo(v: &ValueProfile, env: &Environment) -> Result<Rat> {
    let e = envelope(v);
    Ok(linear_max(&e.phi, env)?.1)
}

/// The flattened profile `v^(m)`: the top `m` values replaced by `v_(m)`.
pub fn flatten_top(v: &ValueProfile, m: usize) -> Result<ValueProfile> {
    if m == 0 || m > v.n() {
        return Err(AugmechError::InvalidParam(format!(
            "efom needs 1 <= m <= n, got m = {m}, n = {}",
            v.n()
        )));
    }
    let mut sorted = v.sorted_values();
    let vm = sorted[m - 1].clone();
    for s in sorted.iter_mut().take(m) {
        *s = vm.clone();
    }
    ValueProfile::new(sorted)
}

/// `EFO^(m)_X(v) = EFO_X(v^(m))`.
pub fn efom(v: &ValueProfile, m: usize, env: &Environment) -> Result<Rat> {
    efo(&flatten_top(v, m)?, env)
}

/// Envy-free revenue of a monotone allocation:
/// `EF^x(v) = sum_j j * v_(j) * (x_j - x_{j+1})` with `x_{n+1} = 0`,
/// where `x` is aligned with the descending order of `v`.
pub fn ef_revenue(x: &[Rat], v: &ValueProfile) -> Result<Rat> {
    if x.len() != v.n() {
        return Err(AugmechError::DimensionMismatch { expected: v.n(), got: x.len() });
    }
    for j in 1..x.len() {
        if x[j] > x[j - 1] {
            return Err(AugmechError::NonMonotoneAllocation(j));
        }
    }
    let n = x.len();
    let mut total = zero();
    for j in 1..=n {
        let next = if j < n { x[j].clone() } else { zero() };
        total += int(j as i128) * v.sorted(j).clone() * (x[j - 1].clone() - next);
    }
    Ok(total)
}

/// Grid brute force for `EFO`, `n <= 4`: maximizes `ef_revenue` over all
/// feasible monotone allocations with entries that are multiples of
/// `1/grid`. Converges to `efo` from below as the grid refines.
///
/// Dynamic program over positions with states (level, prefix sum), both in
/// grid units; the objective is rewritten by summation by parts as
/// `sum_j u_j * d_j` with `d_j = j*v_j - (j-1)*v_{j-1}`, which makes the
/// transition a suffix maximum. Values are brought to a common denominator
/// so the whole search runs in scaled integers, exactly.
pub fn brute_efo(v: &ValueProfile, env: &Environment, grid: usize) -> Result<Rat> {
    let n = v.n();
    if n > 4 {
        return Err(AugmechError::BruteForceTooLarge(n));
    }
    if grid == 0 {
        return Err(AugmechError::InvalidParam("grid must be positive".into()));
    }
    if env.n() != n {
        return Err(AugmechError::DimensionMismatch { expected: n, got: env.n() });
    }
    let g = grid as i128;
    let sorted = v.sorted_values();
    let denom = sorted
        .iter()
        .map(|x| *x.denom())
        .fold(1i128, num_integer::lcm);
    let overflow = || AugmechError::InvalidParam("values too large for grid search".into());
    // Scaled integer numerators p_j = v_(j) * denom.
    let mut p = Vec::with_capacity(n);
    for x in &sorted {
        let scaled = x
            .numer()
            .checked_mul(denom / x.denom())
            .ok_or_else(overflow)?;
        p.push(scaled);
    }
    // d_j = j*p_j - (j-1)*p_{j-1}, all over `denom`.
    let d: Vec<i128> = (1..=n as i128)
        .map(|j| {
            let cur = j.checked_mul(p[(j - 1) as usize]).ok_or_else(overflow)?;
            let prev = if j >= 2 {
                (j - 1).checked_mul(p[(j - 2) as usize]).ok_or_else(overflow)?
            } else {
                0
            };
            cur.checked_sub(prev).ok_or_else(overflow)
        })
        .collect::<Result<_>>()?;
    let bound = d
        .iter()
        .map(|x| x.unsigned_abs())
        .max()
        .unwrap_or(0)
        .checked_mul((g * n as i128) as u128)
        .ok_or_else(overflow)?;
    if bound > i128::MAX as u128 / 4 {
        return Err(overflow());
    }
    // Prefix caps in grid units: floor(g * c(t)).
    let cap_u: Vec<i128> = (1..=n)
        .map(|t| (int(g) * env.cap(t).clone()).floor().to_integer())
        .collect();

    let levels = (g + 1) as usize;
    let width = (cap_u[n - 1].min(g * n as i128) + 1) as usize;
    const NEG: i128 = i128::MIN;

    // best[u * width + s]: best scaled objective over monotone prefixes
    // ending at level u with prefix sum s.
    let mut best: Vec<i128> = vec![NEG; levels * width];
    for u in 0..levels {
        if (u as i128) <= cap_u[0] {
            best[u * width + u] = d[0] * u as i128;
        }
    }
    let mut suffix: Vec<i128> = vec![NEG; levels * width];
    for j in 1..n {
        // Suffix max over the level axis of the previous layer.
        for s in 0..width {
            let mut acc = NEG;
            for u in (0..levels).rev() {
                let val = best[u * width + s];
                if val > acc {
                    acc = val;
                }
                suffix[u * width + s] = acc;
            }
        }
        let mut next: Vec<i128> = vec![NEG; levels * width];
        for u in 0..levels {
            for s in 0..width {
                let s_total = s + u;
                if s_total as i128 > cap_u[j] || s_total >= width {
                    continue;
                }
                let prev_best = suffix[u * width + s];
                if prev_best == NEG {
                    continue;
                }
                let cand = prev_best + d[j] * u as i128;
                let slot = &mut next[u * width + s_total];
                if cand > *slot {
                    *slot = cand;
                }
            }
        }
        best = next;
    }
    let answer = best.iter().copied().filter(|&x| x != NEG).max().unwrap_or(0).max(0);
    Ok(rat(answer, 1) / (int(g) * int(denom)))
}
