//! Learning-augmented competitive auctions.
//!
//! A library for simulating truthful revenue-maximizing auctions that take
//! machine-learned predictions of bidder values as advice: prediction-free
//! baselines, learning-augmented combinations with perfect consistency, an
//! online random-arrival reduction, an error-tolerant wrapper, the revenue
//! benchmarks they are measured against, and a seeded experiment harness.
//!
//! Monetary quantities are exact rationals end to end; truthfulness,
//! feasibility, and consistency checks are exact comparisons, not tolerances.

pub mod augmented;
pub mod baseline;
pub mod benchmarks;
pub mod env;
pub mod error;
pub mod errortol;
pub mod harness;
pub mod online;
pub mod rat;
pub mod schema;

pub use error::{AugmechError, Result};
pub use rat::Rat;
