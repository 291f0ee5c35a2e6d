//! Dempster-Shafer evidence mathematics.
//!
//! Frames of discernment, exact belief (mass) functions over bit-pattern
//! subsets, total belief and plausibility, Dempster's orthogonal combination,
//! ranking normalization for rule elicitation, discounting of uncertain rule
//! premises and set-theoretic negation of hypotheses.
//!
//! Everything here is a pure function over immutable values.

mod frame;
mod mass;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{Frame, HypSubset, MAX_FRAME_SIZE};
pub use mass::{
    attenuate, belief_of, combine, make_vacuous, mass_from_rankings, negate_subset, plausibility_of, MassFunction,
    CONFLICT_EPSILON, MASS_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    #[error("frame `{0}` has no values")]
    EmptyFrame(String),
    #[error("frame `{attribute}` has {size} values; at most 16 are supported")]
    FrameTooLarge { attribute: String, size: usize },
    #[error("value `{value}` declared twice in frame `{attribute}`")]
    DuplicateValue { attribute: String, value: String },
    #[error("`{value}` is not a value of `{attribute}`")]
    UnknownValue { attribute: String, value: String },
    #[error("subset {bits:#b} lies outside frame `{attribute}`")]
    SubsetOutOfFrame { attribute: String, bits: u16 },
    #[error("frames `{left}` and `{right}` differ")]
    FrameMismatch { left: String, right: String },
    #[error("the empty set cannot carry mass")]
    EmptyFocal,
    #[error("mass {0} is outside (0, 1]")]
    MassOutOfRange(f64),
    #[error("masses sum to {0}, expected 1")]
    MassSum(f64),
    #[error("total conflict: {conflict} of the combined mass falls on the empty set")]
    TotalConflict { conflict: f64 },
    #[error("no rankings given")]
    EmptyRankings,
    #[error("ranking {0} is outside 1..=10")]
    RankingOutOfRange(u8),
    #[error("relevance {0} is outside 0..=10")]
    RelevanceOutOfRange(u8),
    #[error("cannot negate {0}: the complement would be empty or the whole frame")]
    NotNegatable(String),
    #[error("belief {0} is outside [0, 1]")]
    BeliefOutOfRange(f64),
}

/// A belief value in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Belief(f64);

impl Belief {
    pub const ZERO: Belief = Belief(0.0);
    pub const ONE: Belief = Belief(1.0);

    pub fn new(value: f64) -> Result<Self, EvidenceError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Belief(value))
        } else {
            Err(EvidenceError::BeliefOutOfRange(value))
        }
    }

    /// Clamps float round-off (e.g. 1.0000000000000002) back into range.
    /// An empty float sum is -0.0; adding 0.0 turns it into 0.0.
    pub(crate) fn clamped(value: f64) -> Self {
        Belief(value.clamp(0.0, 1.0) + 0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Belief {
    type Error = EvidenceError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Belief::new(value)
    }
}

impl From<Belief> for f64 {
    fn from(b: Belief) -> f64 {
        b.0
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.0)
    }
}
