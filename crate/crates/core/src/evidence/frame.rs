//! Frames of discernment and bit-pattern subsets over them.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvidenceError;

/// Largest frame whose subsets fit in a [`HypSubset`].
pub const MAX_FRAME_SIZE: usize = 16;

/// A subset of a frame, one bit per frame value in declaration order.
///
/// The bit pattern carries no reference to its frame; operations that take a
/// frame check that no bit lies outside it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HypSubset(u16);

impl HypSubset {
    pub const EMPTY: HypSubset = HypSubset(0);

    pub const fn from_bits(bits: u16) -> Self {
        HypSubset(bits)
    }

    /// The subset holding only the value at `index`.
    pub fn singleton(index: usize) -> Self {
        assert!(index < MAX_FRAME_SIZE, "value index {index} exceeds frame capacity");
        HypSubset(1 << index)
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn contains(self, index: usize) -> bool {
        index < MAX_FRAME_SIZE && self.0 & (1 << index) != 0
    }

    pub const fn intersect(self, other: HypSubset) -> HypSubset {
        HypSubset(self.0 & other.0)
    }

    pub const fn union(self, other: HypSubset) -> HypSubset {
        HypSubset(self.0 | other.0)
    }

    pub const fn is_subset_of(self, other: HypSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn intersects(self, other: HypSubset) -> bool {
        self.0 & other.0 != 0
    }

    /// Indices of member values, ascending.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..MAX_FRAME_SIZE).filter(move |&i| self.contains(i))
    }
}

/// A verifiable attribute together with its exhaustive, mutually exclusive
/// value set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    attribute: String,
    values: Vec<String>,
}

impl Frame {
    pub fn new<A, I, V>(attribute: A, values: I) -> Result<Self, EvidenceError>
    where
        A: Into<String>,
        I: IntoIterator<Item = V>,
        V: Into<String>,
    {
        let attribute = attribute.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(EvidenceError::EmptyFrame(attribute));
        }
        if values.len() > MAX_FRAME_SIZE {
            return Err(EvidenceError::FrameTooLarge {
                attribute,
                size: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(EvidenceError::DuplicateValue {
                    attribute,
                    value: v.clone(),
                });
            }
        }
        Ok(Frame { attribute, values })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The whole frame, Θ.
    pub fn theta(&self) -> HypSubset {
        HypSubset(((1u32 << self.values.len()) - 1) as u16)
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    pub fn singleton(&self, value: &str) -> Result<HypSubset, EvidenceError> {
        self.index_of(value)
            .map(HypSubset::singleton)
            .ok_or_else(|| self.unknown(value))
    }

    /// Builds the subset holding the named values.
    pub fn subset<I, V>(&self, values: I) -> Result<HypSubset, EvidenceError>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<str>,
    {
        values
            .into_iter()
            .try_fold(HypSubset::EMPTY, |acc, v| Ok(acc.union(self.singleton(v.as_ref())?)))
    }

    /// Value names of `subset` in frame order.
    pub fn names(&self, subset: HypSubset) -> Vec<&str> {
        subset
            .indices()
            .filter_map(|i| self.values.get(i).map(String::as_str))
            .collect()
    }

    pub fn check(&self, subset: HypSubset) -> Result<(), EvidenceError> {
        if subset.is_subset_of(self.theta()) {
            Ok(())
        } else {
            Err(EvidenceError::SubsetOutOfFrame {
                attribute: self.attribute.clone(),
                bits: subset.bits(),
            })
        }
    }

    /// Human-readable rendering: `Θ`, or `{a,b}`.
    pub fn label(&self, subset: HypSubset) -> String {
        if subset == self.theta() {
            "Θ".to_string()
        } else {
            format!("{{{}}}", self.names(subset).join(","))
        }
    }

    fn unknown(&self, value: &str) -> EvidenceError {
        EvidenceError::UnknownValue {
            attribute: self.attribute.clone(),
            value: value.to_string(),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.attribute, self.values.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_covers_every_value() {
        let f = Frame::new("site", ["craton", "shelf", "margin"]).unwrap();
        assert_eq!(f.theta().bits(), 0b111);
        assert_eq!(f.subset(["margin", "craton", "shelf"]).unwrap(), f.theta());
    }

    #[test]
    fn sixteen_values_fit_seventeen_do_not() {
        let names: Vec<String> = (0..16).map(|i| format!("v{i}")).collect();
        let f = Frame::new("wide", names.clone()).unwrap();
        assert_eq!(f.theta().bits(), u16::MAX);

        let mut more = names;
        more.push("v16".into());
        assert!(matches!(
            Frame::new("wide", more),
            Err(EvidenceError::FrameTooLarge { size: 17, .. })
        ));
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(matches!(
            Frame::new("a", ["x", "x"]),
            Err(EvidenceError::DuplicateValue { .. })
        ));
        assert!(matches!(
            Frame::new("a", Vec::<String>::new()),
            Err(EvidenceError::EmptyFrame(_))
        ));
    }

    #[test]
    fn names_follow_declaration_order() {
        let f = Frame::new("site", ["craton", "shelf", "margin"]).unwrap();
        let s = f.subset(["margin", "shelf"]).unwrap();
        assert_eq!(f.names(s), vec!["shelf", "margin"]);
        assert_eq!(f.label(s), "{shelf,margin}");
        assert_eq!(f.label(f.theta()), "Θ");
    }

    #[test]
    fn out_of_frame_bits_are_caught() {
        let f = Frame::new("a", ["x", "y"]).unwrap();
        assert!(f.check(HypSubset::from_bits(0b100)).is_err());
        assert!(f.check(HypSubset::from_bits(0b11)).is_ok());
    }
}
