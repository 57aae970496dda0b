//! Exact rational scalar used throughout the crate.
//!
//! Bid/prediction equality, consistency checks (revenue = OPT exactly), and
//! Myerson threshold payments all branch on exact comparisons, so every
//! monetary quantity is a `Ratio<i128>`. Floating point appears only in the
//! error-tolerance integrals and in harness statistics.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rat = Ratio<i128>;

/// `p/q` as an exact rational. Panics on `q == 0`.
pub fn rat(p: i128, q: i128) -> Rat {
    Ratio::new(p, q)
}

/// Integer as an exact rational.
pub fn int(n: i128) -> Rat {
    Ratio::from_integer(n)
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| (*r.numer() as f64) / (*r.denom() as f64))
}

/// Renders in the wire format used by the JSON schema and CSV output:
/// `"p"` for integers, `"p/q"` otherwise.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p"` or `"p/q"`.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let s = s.trim();
    match s.split_once('/') {
        None => {
            let p = i128::from_str(s).map_err(|_| ParseRatError(s.to_string()))?;
            Ok(Ratio::from_integer(p))
        }
        Some((p, q)) => {
            let p = i128::from_str(p.trim()).map_err(|_| ParseRatError(s.to_string()))?;
            let q = i128::from_str(q.trim()).map_err(|_| ParseRatError(s.to_string()))?;
            if q == 0 {
                return Err(ParseRatError(s.to_string()));
            }
            Ok(Ratio::new(p, q))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal: {0:?}")]
pub struct ParseRatError(pub String);

/// Serde adapter: rationals as `"p/q"` strings.
pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rat>` in the same string format.
pub mod serde_rat_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rat))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Absolute value helper (`num_traits::Signed` is not always in scope at call sites).
pub fn abs(r: &Rat) -> Rat {
    r.abs()
}
