use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use super::{Belief, EvidenceError, Frame, HypSubset};

/// Tolerance on the unit-sum invariant of a mass function.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Normalization denominators at or below this are treated as total conflict.
pub const CONFLICT_EPSILON: f64 = 1e-12;

/// An exact belief function over the subsets of one frame.
///
/// Only focal elements are stored; `m(Θ)` is an ordinary entry keyed by the
/// frame's full subset. Masses are positive and sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MassFunction {
    frame: Arc<Frame>,
    focal: BTreeMap<HypSubset, f64>,
}

impl MassFunction {
    /// Builds a mass function from explicit focal masses.
    ///
    /// Repeated subsets are summed. The masses must already sum to 1.
    pub fn new<I>(frame: Arc<Frame>, masses: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = (HypSubset, f64)>,
    {
        let focal = collect_focal(&frame, masses)?;
        let total: f64 = focal.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(EvidenceError::MassSum(total));
        }
        Ok(MassFunction { frame, focal })
    }

    /// Builds a mass function from focal masses summing to at most 1, assigning
    /// the remainder to Θ.
    pub fn with_ignorance<I>(frame: Arc<Frame>, masses: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = (HypSubset, f64)>,
    {
        let mut focal = collect_focal(&frame, masses)?;
        let total: f64 = focal.values().sum();
        if total > 1.0 + MASS_TOLERANCE {
            return Err(EvidenceError::MassSum(total));
        }
        let rest = 1.0 - total;
        if rest > MASS_TOLERANCE {
            *focal.entry(frame.theta()).or_insert(0.0) += rest;
        }
        Ok(MassFunction { frame, focal })
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    /// Mass committed exactly to `subset` (zero when not focal).
    pub fn mass(&self, subset: HypSubset) -> f64 {
        self.focal.get(&subset).copied().unwrap_or(0.0)
    }

    /// `m(Θ)`, the unassigned belief.
    pub fn ignorance(&self) -> f64 {
        self.mass(self.frame.theta())
    }

    pub fn focal(&self) -> impl Iterator<Item = (HypSubset, f64)> + '_ {
        self.focal.iter().map(|(s, m)| (*s, *m))
    }

    pub fn focal_count(&self) -> usize {
        self.focal.len()
    }

    pub fn is_vacuous(&self) -> bool {
        self.focal.len() == 1 && self.focal.contains_key(&self.frame.theta())
    }

    pub fn total(&self) -> f64 {
        self.focal.values().sum()
    }

    pub fn same_frame(&self, other: &MassFunction) -> bool {
        same_frame(&self.frame, &other.frame)
    }

    /// Focal elements rendered as `(value names, mass)` in subset order.
    pub fn labelled(&self) -> Vec<(Vec<String>, f64)> {
        self.focal
            .iter()
            .map(|(s, m)| {
                let names = self.frame.names(*s).into_iter().map(str::to_string).collect();
                (names, *m)
            })
            .collect()
    }
}

impl Serialize for MassFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Focal<'a> {
            subset: Vec<&'a str>,
            theta: bool,
            mass: f64,
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            frame: &'a str,
            focal: Vec<Focal<'a>>,
        }
        let theta = self.frame.theta();
        Repr {
            frame: self.frame.attribute(),
            focal: self
                .focal
                .iter()
                .map(|(s, m)| Focal {
                    subset: self.frame.names(*s),
                    theta: *s == theta,
                    mass: *m,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

fn same_frame(a: &Arc<Frame>, b: &Arc<Frame>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn mismatch(a: &Frame, b: &Frame) -> EvidenceError {
    EvidenceError::FrameMismatch {
        left: a.attribute().to_string(),
        right: b.attribute().to_string(),
    }
}

fn collect_focal<I>(frame: &Frame, masses: I) -> Result<BTreeMap<HypSubset, f64>, EvidenceError>
where
    I: IntoIterator<Item = (HypSubset, f64)>,
{
    let mut focal = BTreeMap::new();
    for (subset, mass) in masses {
        frame.check(subset)?;
        if subset.is_empty() {
            return Err(EvidenceError::EmptyFocal);
        }
        if !(mass > 0.0 && mass <= 1.0 + MASS_TOLERANCE) {
            return Err(EvidenceError::MassOutOfRange(mass));
        }
        *focal.entry(subset).or_insert(0.0) += mass;
    }
    Ok(focal)
}

/// Total ignorance: all mass on Θ. The identity element of [`combine`].
pub fn make_vacuous(frame: Arc<Frame>) -> MassFunction {
    let theta = frame.theta();
    MassFunction {
        frame,
        focal: BTreeMap::from([(theta, 1.0)]),
    }
}

/// Turns an expert's 1-10 rankings of conclusion subsets and a 1-10 relevance
/// into a mass function.
///
/// `m(Θ) = 1 − relevance/10`, and the remaining `relevance/10` is shared out
/// in proportion to the rankings. A relevance of 0 gives the vacuous function.
pub fn mass_from_rankings(
    frame: Arc<Frame>,
    rankings: &[(HypSubset, u8)],
    relevance: u8,
) -> Result<MassFunction, EvidenceError> {
    if rankings.is_empty() {
        return Err(EvidenceError::EmptyRankings);
    }
    if relevance > 10 {
        return Err(EvidenceError::RelevanceOutOfRange(relevance));
    }
    for &(subset, rank) in rankings {
        frame.check(subset)?;
        if subset.is_empty() {
            return Err(EvidenceError::EmptyFocal);
        }
        if !(1..=10).contains(&rank) {
            return Err(EvidenceError::RankingOutOfRange(rank));
        }
    }
    if relevance == 0 {
        return Ok(make_vacuous(frame));
    }
    // Integer numerators keep editor values such as 72/120 = 0.6 exact.
    let rank_sum: u32 = rankings.iter().map(|&(_, r)| u32::from(r)).sum();
    let denom = f64::from(10 * rank_sum);
    let mut focal = BTreeMap::new();
    for &(subset, rank) in rankings {
        let share = f64::from(u32::from(rank) * u32::from(relevance)) / denom;
        *focal.entry(subset).or_insert(0.0) += share;
    }
    if relevance < 10 {
        let ignorance = f64::from(10 - relevance) / 10.0;
        *focal.entry(frame.theta()).or_insert(0.0) += ignorance;
    }
    Ok(MassFunction { frame, focal })
}

/// Dempster's rule of orthogonal combination.
pub fn combine(m1: &MassFunction, m2: &MassFunction) -> Result<MassFunction, EvidenceError> {
    if !m1.same_frame(m2) {
        return Err(mismatch(&m1.frame, &m2.frame));
    }
    let mut joint: BTreeMap<HypSubset, f64> = BTreeMap::new();
    let mut conflict = 0.0;
    for (&a, &ma) in &m1.focal {
        for (&b, &mb) in &m2.focal {
            let c = a.intersect(b);
            let product = ma * mb;
            if c.is_empty() {
                conflict += product;
            } else {
                *joint.entry(c).or_insert(0.0) += product;
            }
        }
    }
    let norm = 1.0 - conflict;
    if norm <= CONFLICT_EPSILON {
        return Err(EvidenceError::TotalConflict { conflict });
    }
    for m in joint.values_mut() {
        *m /= norm;
    }
    joint.retain(|_, m| *m > 0.0);
    Ok(MassFunction {
        frame: Arc::clone(&m1.frame),
        focal: joint,
    })
}

/// Total belief committed to `subset`: the sum of masses of its subsets.
pub fn belief_of(m: &MassFunction, subset: HypSubset) -> Result<Belief, EvidenceError> {
    m.frame.check(subset)?;
    let bel = m
        .focal
        .iter()
        .filter(|(b, _)| b.is_subset_of(subset))
        .map(|(_, mass)| mass)
        .sum();
    Ok(Belief::clamped(bel))
}

/// Plausibility of `subset`: the mass not committed against it.
pub fn plausibility_of(m: &MassFunction, subset: HypSubset) -> Result<Belief, EvidenceError> {
    m.frame.check(subset)?;
    let pl = m
        .focal
        .iter()
        .filter(|(b, _)| b.intersects(subset))
        .map(|(_, mass)| mass)
        .sum();
    Ok(Belief::clamped(pl))
}

/// Discounts `m` by the belief `b` held in the evidence that produced it.
///
/// Every non-Θ mass is scaled by `b`; the removed mass moves to Θ.
pub fn attenuate(m: &MassFunction, b: Belief) -> MassFunction {
    let b = b.value();
    if b >= 1.0 {
        return m.clone();
    }
    let theta = m.frame.theta();
    let mut focal: BTreeMap<HypSubset, f64> = m
        .focal
        .iter()
        .filter(|(s, _)| **s != theta)
        .map(|(s, mass)| (*s, mass * b))
        .filter(|(_, mass)| *mass > 0.0)
        .collect();
    let ignorance = 1.0 - b * (1.0 - m.ignorance());
    if ignorance > 0.0 {
        focal.insert(theta, ignorance);
    }
    MassFunction {
        frame: Arc::clone(&m.frame),
        focal,
    }
}

/// Evidence against `subset` is evidence for its complement within the frame.
pub fn negate_subset(frame: &Frame, subset: HypSubset) -> Result<HypSubset, EvidenceError> {
    frame.check(subset)?;
    let theta = frame.theta();
    if subset.is_empty() || subset == theta {
        return Err(EvidenceError::NotNegatable(frame.label(subset)));
    }
    Ok(HypSubset::from_bits(theta.bits() & !subset.bits()))
}
