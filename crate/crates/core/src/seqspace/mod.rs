//! Exact arithmetic on ℓ^p sequence spaces for p ∈ {1, 2, ∞}.
//!
//! Vectors carry a finite prefix followed by a periodically modulated
//! geometric tail, so every norm, pairing and Gram entry is a finite sum of
//! geometric series and can be evaluated in closed form.

mod functional;
mod subspace;
mod vector;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use functional::{norming_functional, pairing, project_into_kernels, LinearFunctional};
pub use subspace::{gram, Subspace};
pub use vector::{inner_product, linear_combine, norm, truncate, TailVector};
pub(crate) use vector::lcm as lcm_periods;

/// Relative eigenvalue threshold below which a Gram matrix counts as singular.
pub const GRAM_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("incompatible tails: ratios {0} and {1} cannot be combined exactly")]
    IncompatibleTails(f64, f64),
    #[error("invalid tail vector: {0}")]
    InvalidVector(String),
    #[error("zero vector has no norming functional")]
    ZeroVector,
    #[error("norming functionals for p = {0} require a finitely supported vector")]
    UnsupportedTail(Exponent),
    #[error("operation requires p = 2, got p = {0}")]
    UnsupportedExponent(Exponent),
    #[error("functional representers are linearly dependent")]
    DegenerateFunctionals,
    #[error("subspace basis is empty or linearly dependent")]
    DegenerateBasis,
}

/// Norm exponent of an ℓ^p space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    One,
    Two,
    Infinity,
}

impl Exponent {
    /// Conjugate exponent q with 1/p + 1/q = 1.
    pub fn dual(self) -> Exponent {
        match self {
            Exponent::One => Exponent::Infinity,
            Exponent::Two => Exponent::Two,
            Exponent::Infinity => Exponent::One,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::One => f.write_str("1"),
            Exponent::Two => f.write_str("2"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

// Encoded as the JSON numbers 1 and 2, or the string "inf".
impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Exponent::One => serializer.serialize_u64(1),
            Exponent::Two => serializer.serialize_u64(2),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(1.0) => Ok(Exponent::One),
            Raw::Num(2.0) => Ok(Exponent::Two),
            Raw::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "∞") => Ok(Exponent::Infinity),
            Raw::Text(s) if s == "1" => Ok(Exponent::One),
            Raw::Text(s) if s == "2" => Ok(Exponent::Two),
            _ => Err(serde::de::Error::custom("p must be one of 1, 2, \"inf\"")),
        }
    }
}

/// The ambient space X = Y = ℓ^p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub p: Exponent,
}

impl SpaceConfig {
    pub const L1: SpaceConfig = SpaceConfig { p: Exponent::One };
    pub const L2: SpaceConfig = SpaceConfig { p: Exponent::Two };
    pub const LINF: SpaceConfig = SpaceConfig { p: Exponent::Infinity };

    pub fn new(p: Exponent) -> Self {
        SpaceConfig { p }
    }

    /// The dual space ℓ^q housing functional representers.
    pub fn dual(self) -> SpaceConfig {
        SpaceConfig { p: self.p.dual() }
    }

    pub(crate) fn require_hilbert(self) -> Result<(), SeqError> {
        if self.p == Exponent::Two {
            Ok(())
        } else {
            Err(SeqError::UnsupportedExponent(self.p))
        }
    }
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig::L2
    }
}
