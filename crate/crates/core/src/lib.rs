//! Exact-arithmetic toolkit for strategy-proof random social choice on hybrid
//! preference domains.
//!
//! The crate covers preference domains and their regularity, the
//! strong-connectedness structure that pins down hybrid thresholds,
//! probabilistic fixed ballot rules, brute-force axiom audits, and the
//! decomposition of anonymous rules into mixtures of fixed ballot rules.

pub mod audit;
pub mod decompose;
pub mod domains;
pub mod error;
pub mod prefcore;
pub mod rational;
pub mod rules;
pub mod structure;

pub use error::{Error, Result};
pub use prefcore::{Alternative, Lottery, Preference, Profile, TopProfile};
pub use rational::Rational;
