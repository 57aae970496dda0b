//! Shared brute-force oracles for the integration suites. Everything here
//! is deliberately naive and independent of the library's algorithms.

#![allow(dead_code)]

use augmech::env::{is_feasible, Allocation, Environment, ValueProfile};
use augmech::rat::{int, rat, zero, Rat};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

pub fn rats(v: &[i128]) -> Vec<Rat> {
    v.iter().map(|&x| int(x)).collect()
}

/// Exhaustive recursion over monotone grid allocations; the reference for
/// the library's DP-based grid search.
pub fn naive_brute_efo(v: &ValueProfile, env: &Environment, grid: usize) -> Rat {
    let _n = v.n();
    let sorted = v.sorted_values();
    let mut best = zero();
    let mut stack: Vec<i128> = Vec::new();
    recurse(&sorted, env, grid as i128, &mut stack, &mut best);
    best
}

fn recurse(sorted: &[Rat], env: &Environment, g: i128, prefix: &mut Vec<i128>, best: &mut Rat) {
    let j = prefix.len();
    if j == sorted.len() {
        let x: Vec<Rat> = prefix.iter().map(|&u| rat(u, g)).collect();
        let mut value = zero();
        for (k, xk) in x.iter().enumerate() {
            let next = if k + 1 < x.len() { x[k + 1].clone() } else { zero() };
            value += int(k as i128 + 1) * sorted[k].clone() * (xk.clone() - next);
        }
        if value > *best {
            *best = value;
        }
        return;
    }
    let hi = if j == 0 { g } else { prefix[j - 1] };
    let sum_so_far: i128 = prefix.iter().sum();
    for u in 0..=hi {
        // Prefix-cap prune.
        if int(sum_so_far + u) > int(g) * env.cap(j + 1).clone() {
            break;
        }
        prefix.push(u);
        recurse(sorted, env, g, prefix, best);
        prefix.pop();
    }
}

/// The double-max chord formula for the minimal nondecreasing concave
/// majorant, evaluated literally (with the `(0, 0)` anchor).
pub fn envelope_formula(v: &ValueProfile) -> Vec<Rat> {
    let n = v.n();
    let sorted = v.sorted_values();
    let point = |i: usize| -> Rat {
        if i == 0 {
            zero()
        } else {
            int(i as i128) * sorted[i - 1].clone()
        }
    };
    let mut r = vec![zero()];
    for j in 1..=n {
        let mut best = zero();
        for l in 1..=j {
            for i in 0..=l {
                for k in l..=n {
                    let val = if i == k {
                        if i == l {
                            point(i)
                        } else {
                            continue;
                        }
                    } else {
                        // Chord through (i, point(i)) and (k, point(k)) at l.
                        point(i) * rat((k - l) as i128, (k - i) as i128)
                            + point(k) * rat((l - i) as i128, (k - i) as i128)
                    };
                    if val > best {
                        best = val;
                    }
                }
            }
        }
        r.push(best);
    }
    r
}

/// All vertices of the cap polytope, `n <= 3`: solutions of n active
/// constraints drawn from `x_i = 0`, `x_i = 1`, and the subset caps.
pub fn polytope_vertices(env: &Environment) -> Vec<Vec<Rat>> {
    let n = env.n();
    assert!(n <= 3, "vertex enumeration is exponential");
    // Constraint rows (a, b): a . x = b.
    let mut rows: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for i in 0..n {
        let mut a = vec![zero(); n];
        a[i] = int(1);
        rows.push((a.clone(), zero()));
        rows.push((a, int(1)));
    }
    for mask in 1u32..(1 << n) {
        let mut a = vec![zero(); n];
        let mut size = 0;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                a[i] = int(1);
                size += 1;
            }
        }
        rows.push((a, env.cap(size).clone()));
    }
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    let m = rows.len();
    let mut pick = vec![0usize; n];
    enumerate_combinations(m, n, &mut pick, 0, 0, &mut |combo| {
        if let Some(x) = solve(&rows, combo, n) {
            if x.iter().all(|xi| *xi >= zero() && *xi <= int(1)) {
                let alloc = Allocation::new(x.clone()).expect("in box");
                if is_feasible(&alloc, env).expect("dims match") && !vertices.contains(&x) {
                    vertices.push(x);
                }
            }
        }
    });
    vertices
}

fn enumerate_combinations(
    m: usize,
    n: usize,
    pick: &mut Vec<usize>,
    depth: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == n {
        f(pick);
        return;
    }
    for i in start..m {
        pick[depth] = i;
        enumerate_combinations(m, n, pick, depth + 1, i + 1, f);
    }
}

/// Gaussian elimination over the rationals; `None` when singular.
fn solve(rows: &[(Vec<Rat>, Rat)], combo: &[usize], n: usize) -> Option<Vec<Rat>> {
    let mut a: Vec<Vec<Rat>> = combo.iter().map(|&r| rows[r].0.clone()).collect();
    let mut b: Vec<Rat> = combo.iter().map(|&r| rows[r].1.clone()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !num_traits::Zero::is_zero(&a[r][col]))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col].clone() / p.clone();
            if num_traits::Zero::is_zero(&factor) {
                continue;
            }
            for c in 0..n {
                let delta = factor.clone() * a[col][c].clone();
                a[r][c] -= delta;
            }
            let delta = factor * b[col].clone();
            b[r] -= delta;
        }
    }
    Some(
        (0..n)
            .map(|i| b[i].clone() / a[i][i].clone())
            .collect(),
    )
}

/// A random feasible point: a random box point scaled down until every
/// sorted prefix cap holds.
pub fn random_feasible_point(env: &Environment, rng: &mut ChaCha12Rng) -> Vec<Rat> {
    let n = env.n();
    let y: Vec<Rat> = (0..n).map(|_| rat(rng.gen_range(0..=64), 64)).collect();
    let mut sorted = y.clone();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut scale = int(1);
    let mut prefix = zero();
    for (k, s) in sorted.iter().enumerate() {
        prefix += s.clone();
        let cap = env.cap(k + 1);
        if prefix.clone() > cap.clone() * scale.clone() {
            scale = prefix.clone() / cap.clone();
        }
    }
    y.into_iter().map(|yi| yi / scale.clone()).collect()
}

/// Exponential integral `E1(x)` by series, for the figure-reproduction
/// oracle: `E1(x) = -gamma - ln x + sum (-1)^(k+1) x^k / (k k!)`.
pub fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..=60 {
        term *= x / k as f64;
        let contrib = term / k as f64;
        if k % 2 == 1 {
            sum += contrib;
        } else {
            sum -= contrib;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Random small-denominator positive rationals.
pub fn random_values(n: usize, rng: &mut ChaCha12Rng) -> Vec<Rat> {
    (0..n).map(|_| rat(rng.gen_range(1..=60), rng.gen_range(1..=6))).collect()
}

/// Random environment over `n` bidders spanning all three kinds.
pub fn random_env(n: usize, rng: &mut ChaCha12Rng) -> Environment {
    match rng.gen_range(0..3) {
        0 => Environment::digital_good(n).expect("valid"),
        1 => Environment::limited_supply(n, rng.gen_range(1..=n)).expect("valid"),
        _ => {
            let mut caps = Vec::with_capacity(n);
            let mut total = int(1);
            let mut max_step: i128 = 8;
            caps.push(total.clone());
            for _ in 1..n {
                let step: i128 = rng.gen_range(0..=max_step);
                max_step = step;
                total += rat(step, 8);
                caps.push(total.clone());
            }
            Environment::symmetric_cap(caps).expect("valid")
        }
    }
}
