//! JSON instance format and the bundled instance type.
//!
//! ```json
//! {
//!   "n": 3,
//!   "values": ["5", "3/2", "2"],
//!   "predictions": ["5", "2", "2"],
//!   "env": { "kind": "supply", "l": 2 }
//! }
//! ```
//!
//! Rationals are `"p"` or `"p/q"` strings; `env.kind` is `"digital"`,
//! `"supply"` (with `l`), or `"cap"` (with the cap vector).

use crate::baseline::AuctionContext;
use crate::env::{Environment, PredictionProfile, ValueProfile};
use crate::error::{AugmechError, Result};
use crate::rat::{format_rat, parse_rat, Rat};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub values: Vec<String>,
    pub predictions: Vec<String>,
    pub env: EnvSpec,
}

/// A fully validated instance: values, tie-consistent predictions, and the
/// feasibility environment.
#[derive(Debug, Clone)]
pub struct Instance {
    pub values: ValueProfile,
    pub prediction: PredictionProfile,
    pub env: Environment,
}

impl Instance {
    pub fn new(values: Vec<Rat>, predictions: Vec<Rat>, env: Environment) -> Result<Self> {
        let values = ValueProfile::new(values)?;
        let prediction = PredictionProfile::new(predictions, &values)?;
        if env.n() != values.n() {
            return Err(AugmechError::DimensionMismatch {
                expected: values.n(),
                got: env.n(),
            });
        }
        Ok(Self { values, prediction, env })
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn context(&self) -> Result<AuctionContext> {
        AuctionContext::new(self.prediction.clone(), self.env.clone())
    }

    pub fn to_spec(&self) -> InstanceSpec {
        let env = match self.env.kind() {
            crate::env::EnvKind::DigitalGood => {
                EnvSpec { kind: "digital".into(), l: None, cap: None }
            }
            crate::env::EnvKind::LimitedSupply(l) => {
                EnvSpec { kind: "supply".into(), l: Some(l), cap: None }
            }
            crate::env::EnvKind::SymmetricCap => EnvSpec {
                kind: "cap".into(),
                l: None,
                cap: Some(self.env.caps().iter().map(format_rat).collect()),
            },
        };
        InstanceSpec {
            n: self.n(),
            values: self.values.values().iter().map(format_rat).collect(),
            predictions: self.prediction.values().iter().map(format_rat).collect(),
            env,
        }
    }

    pub fn from_spec(spec: &InstanceSpec) -> Result<Self> {
        if spec.values.len() != spec.n || spec.predictions.len() != spec.n {
            return Err(AugmechError::Schema(format!(
                "n = {} but {} values and {} predictions",
                spec.n,
                spec.values.len(),
                spec.predictions.len()
            )));
        }
        let parse_all = |xs: &[String]| -> Result<Vec<Rat>> {
            xs.iter()
                .map(|s| parse_rat(s).map_err(|e| AugmechError::Schema(e.to_string())))
                .collect()
        };
        let values = parse_all(&spec.values)?;
        let predictions = parse_all(&spec.predictions)?;
        let env = match spec.env.kind.as_str() {
            "digital" => Environment::digital_good(spec.n)?,
            "supply" => {
                let l = spec.env.l.ok_or_else(|| {
                    AugmechError::Schema("supply environment needs l".into())
                })?;
                Environment::limited_supply(spec.n, l)?
            }
            "cap" => {
                let cap = spec
                    .env
                    .cap
                    .as_ref()
                    .ok_or_else(|| AugmechError::Schema("cap environment needs cap".into()))?;
                Environment::symmetric_cap(parse_all(cap)?)?
            }
            other => {
                return Err(AugmechError::Schema(format!("unknown env kind {other:?}")));
            }
        };
        Self::new(values, predictions, env)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("instances serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: InstanceSpec =
            serde_json::from_str(s).map_err(|e| AugmechError::Schema(e.to_string()))?;
        Self::from_spec(&spec)
    }
}
