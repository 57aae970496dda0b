//! Seeded instance generators.
//!
//! Values are kept as rationals with small denominators so that exact
//! arithmetic stays cheap and never overflows the fixed-width rational.

use crate::env::Environment;
use crate::error::Result;
use crate::rat::{one, rat, Rat};
use crate::schema::Instance;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// How the private value vector is drawn.
#[derive(Debug, Clone)]
pub enum ValueGen {
    /// Equal-revenue profile: `v_(k) = C / k` for a random constant `C`,
    /// randomly permuted. Adversarial for fixed-price benchmarks.
    EqualRevenue { n: usize },
    /// Two bidders with a large gap, the lower-bound configuration: values
    /// drawn on `[sqrt(N), N]` by the conditioned equal-revenue marginal,
    /// rounded to dyadic rationals.
    TwoBidderGap { n_param: f64 },
    /// Both coordinates of a two-bidder instance from the conditioned
    /// square distribution (density proportional to `1/(v1^2 v2^2)`).
    ConditionedSquare { n_param: f64 },
    /// Independent uniform rationals `p/q`, `p` in `1..=max_num`, `q` in
    /// `1..=max_den`.
    UniformRational { n: usize, max_num: i128, max_den: i128 },
}

/// How predictions are derived from the values.
#[derive(Debug, Clone)]
pub enum PredictionModel {
    Perfect,
    /// Exactly `k` coordinates multiplied by a random rational factor in
    /// `[1/3, 3] \ {1}`; the remaining predictions are exact.
    KWrong { k: usize },
    /// Independent multiplicative noise with ratio capped at `eta`.
    EtaControlled { eta: Rat },
    /// Fresh independent predictions, unrelated to the values.
    Arbitrary { max_num: i128, max_den: i128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvChoice {
    Digital,
    Supply(usize),
    /// Random concave cap vector.
    RandomCap,
}

/// Composition of a value generator, a prediction model, and an
/// environment, generating full instances from a seeded RNG.
#[derive(Debug, Clone)]
pub struct InstanceGenerator {
    pub values: ValueGen,
    pub prediction: PredictionModel,
    pub env: EnvChoice,
}

impl ValueGen {
    pub fn n(&self) -> usize {
        match self {
            Self::EqualRevenue { n } | Self::UniformRational { n, .. } => *n,
            Self::TwoBidderGap { .. } | Self::ConditionedSquare { .. } => 2,
        }
    }

    pub fn draw(&self, rng: &mut ChaCha12Rng) -> Vec<Rat> {
        match self {
            Self::EqualRevenue { n } => {
                let c: i128 = rng.gen_range(1..=360);
                let mut v: Vec<Rat> = (1..=*n as i128).map(|k| rat(c, k)).collect();
                v.shuffle(rng);
                v
            }
            Self::TwoBidderGap { n_param } | Self::ConditionedSquare { n_param } => {
                let (v1, v2) = super::lowerbound::sample_conditioned_square(
                    *n_param,
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                );
                vec![dyadic(v1), dyadic(v2)]
            }
            Self::UniformRational { n, max_num, max_den } => (0..*n)
                .map(|_| rat(rng.gen_range(1..=*max_num), rng.gen_range(1..=*max_den)))
                .collect(),
        }
    }
}

/// Nearest dyadic rational with denominator 2^16.
fn dyadic(x: f64) -> Rat {
    let scaled = (x * 65536.0).round().max(1.0) as i128;
    rat(scaled, 65536)
}

/// Random factor in `[1/3, 3]` other than 1, on a 1/32 grid.
fn wrong_factor(rng: &mut ChaCha12Rng) -> Rat {
    loop {
        let m: i128 = rng.gen_range(11..=96);
        if m != 32 {
            return rat(m, 32);
        }
    }
}

impl PredictionModel {
    pub fn derive(&self, values: &[Rat], rng: &mut ChaCha12Rng) -> Vec<Rat> {
        match self {
            Self::Perfect => values.to_vec(),
            Self::KWrong { k } => {
                let n = values.len();
                let k = (*k).min(n);
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(rng);
                let mut out = values.to_vec();
                for &i in idx.iter().take(k) {
                    let f = wrong_factor(rng);
                    // A zero value cannot be perturbed multiplicatively;
                    // replace it instead.
                    if out[i].is_zero() {
                        out[i] = f;
                    } else {
                        out[i] = out[i].clone() * f;
                    }
                }
                out
            }
            Self::EtaControlled { eta } => {
                values
                    .iter()
                    .map(|v| {
                        if v.is_zero() {
                            return v.clone();
                        }
                        // Factor on a grid within [1/eta, eta].
                        let steps: i128 = 16;
                        let j: i128 = rng.gen_range(-steps..=steps);
                        let f = if j >= 0 {
                            one() + (eta.clone() - one()) * rat(j, steps)
                        } else {
                            let inv = one() + (eta.clone() - one()) * rat(-j, steps);
                            inv.recip()
                        };
                        v.clone() * f
                    })
                    .collect()
            }
            Self::Arbitrary { max_num, max_den } => (0..values.len())
                .map(|_| rat(rng.gen_range(1..=*max_num), rng.gen_range(1..=*max_den)))
                .collect(),
        }
    }
}

impl EnvChoice {
    pub fn build(&self, n: usize, rng: &mut ChaCha12Rng) -> Result<Environment> {
        match self {
            Self::Digital => Environment::digital_good(n),
            Self::Supply(l) => Environment::limited_supply(n, (*l).min(n).max(1)),
            Self::RandomCap => {
                // Concave nondecreasing caps on a 1/8 grid: c(1) = 1 and
                // increments never grow.
                let mut caps = Vec::with_capacity(n);
                let mut total = one();
                let mut max_step: i128 = 8; // eighths
                caps.push(total.clone());
                for _ in 1..n {
                    let step: i128 = rng.gen_range(0..=max_step);
                    max_step = step;
                    total += rat(step, 8);
                    caps.push(total.clone());
                }
                Environment::symmetric_cap(caps)
            }
        }
    }
}

impl InstanceGenerator {
    pub fn generate(&self, rng: &mut ChaCha12Rng) -> Result<Instance> {
        let values = self.values.draw(rng);
        let predictions = self.prediction.derive(&values, rng);
        let env = self.env.build(values.len(), rng)?;
        Instance::new(values, predictions, env)
    }
}
