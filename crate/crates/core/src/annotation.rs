//! Agreement rates, majority voting, and disagreement labels.
//!
//! A record with `N` votes over `K` classes yields a per-class agreement rate
//! `count_k / N`. The majority class is the argmax of those rates (lowest index
//! wins ties). Two disagreement labels are derived from the majority rate:
//!
//! - the binary label is `1` whenever at least one annotator dissents,
//! - the continuous label is `1 - majority_rate`, `0` meaning unanimity.
//!
//! All rates are exact fractions; floats only appear at the API edges.

use std::collections::HashSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact fraction in `[0, 1]`.
pub type Rate = Ratio<u32>;

pub fn rate_to_f64(rate: Rate) -> f64 {
    f64::from(*rate.numer()) / f64::from(*rate.denom())
}

/// The `K` classes a dataset's annotators choose from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelSpace {
    class_names: Vec<String>,
}

impl LabelSpace {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let class_names: Vec<String> = names.into_iter().map(Into::into).collect();
        if class_names.len() < 2 {
            return Err(Error::LabelSpace(format!(
                "need at least 2 classes, got {}",
                class_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &class_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::LabelSpace(format!("duplicate class name `{name}`")));
            }
        }
        Ok(Self { class_names })
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }
}

impl<'de> Deserialize<'de> for LabelSpace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            class_names: Vec<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        LabelSpace::new(raw.class_names).map_err(serde::de::Error::custom)
    }
}

/// One text together with its per-annotator votes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub text_id: String,
    pub text: String,
    /// Class indices into the [`LabelSpace`], aligned with `annotator_ids`.
    pub votes: Vec<usize>,
    pub annotator_ids: Vec<String>,
}

impl AnnotationRecord {
    pub fn n_annotators(&self) -> usize {
        self.votes.len()
    }

    pub fn validate(&self, space: &LabelSpace) -> Result<()> {
        let malformed = |reason: String| Error::MalformedRecord {
            text_id: self.text_id.clone(),
            reason,
        };
        if self.text.is_empty() {
            return Err(malformed("empty text".into()));
        }
        if self.votes.is_empty() {
            return Err(malformed("no votes".into()));
        }
        if self.votes.len() != self.annotator_ids.len() {
            return Err(malformed(format!(
                "{} votes but {} annotator ids",
                self.votes.len(),
                self.annotator_ids.len()
            )));
        }
        if u32::try_from(self.votes.len()).is_err() {
            return Err(malformed("too many votes".into()));
        }
        if let Some(&bad) = self.votes.iter().find(|&&v| v >= space.class_count()) {
            return Err(malformed(format!(
                "vote index {bad} out of range for {} classes",
                space.class_count()
            )));
        }
        Ok(())
    }

    /// Agreement rates and the disagreement label in one step.
    pub fn disagreement(&self, space: &LabelSpace) -> Result<DisagreementLabel> {
        agreement_rates(self, space).map(|p| disagreement_label(&p))
    }
}

/// Per-class agreement rates of one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementProfile {
    pub rates: Vec<Rate>,
    pub majority_index: usize,
    pub majority_rate: Rate,
}

/// Disagreement derived from a vote vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DisagreementLabel {
    pub binary: u8,
    pub continuous: Rate,
}

impl DisagreementLabel {
    pub fn from_continuous(continuous: Rate) -> Self {
        Self {
            binary: u8::from(*continuous.numer() != 0),
            continuous,
        }
    }

    pub fn continuous_f64(&self) -> f64 {
        rate_to_f64(self.continuous)
    }

    /// The regression target for the given prediction mode.
    pub fn target(&self, binary_mode: bool) -> f64 {
        if binary_mode {
            f64::from(self.binary)
        } else {
            self.continuous_f64()
        }
    }
}

impl fmt::Display for DisagreementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "binary={} continuous={}", self.binary, self.continuous)
    }
}

#[derive(Serialize, Deserialize)]
struct LabelRepr {
    binary: u8,
    continuous: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
}

impl Serialize for DisagreementLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LabelRepr {
            binary: self.binary,
            continuous: self.continuous_f64(),
            exact: Some(format!(
                "{}/{}",
                self.continuous.numer(),
                self.continuous.denom()
            )),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DisagreementLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = LabelRepr::deserialize(deserializer)?;
        let continuous = match repr.exact {
            Some(text) => parse_rate(&text).map_err(D::Error::custom)?,
            None => nearest_rate(repr.continuous, 64)
                .ok_or_else(|| D::Error::custom("continuous label outside [0, 1]"))?,
        };
        let label = DisagreementLabel::from_continuous(continuous);
        if label.binary != repr.binary {
            return Err(D::Error::custom(format!(
                "binary flag {} inconsistent with continuous label {}",
                repr.binary, continuous
            )));
        }
        Ok(label)
    }
}

/// Parses `m/n` (or a bare integer) into a rate in `[0, 1]`.
pub fn parse_rate(text: &str) -> Result<Rate> {
    let bad = || Error::Config(format!("invalid fraction `{text}`"));
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let numer: u32 = numer.parse().map_err(|_| bad())?;
    let denom: u32 = denom.parse().map_err(|_| bad())?;
    if denom == 0 || numer > denom {
        return Err(bad());
    }
    Ok(Rate::new(numer, denom))
}

/// Closest fraction to `value` with denominator at most `max_denom`.
pub fn nearest_rate(value: f64, max_denom: u32) -> Option<Rate> {
    if !(0.0..=1.0).contains(&value) {
        return None;
    }
    let mut best = Rate::new(0, 1);
    let mut best_err = value;
    for denom in 1..=max_denom {
        let numer = (value * f64::from(denom)).round() as u32;
        let candidate = Rate::new(numer.min(denom), denom);
        let err = (rate_to_f64(candidate) - value).abs();
        if err < best_err - 1e-15 {
            best = candidate;
            best_err = err;
        }
    }
    Some(best)
}

/// Counts votes per class. Ties for the majority go to the lowest class index.
pub fn agreement_rates(record: &AnnotationRecord, space: &LabelSpace) -> Result<AgreementProfile> {
    record.validate(space)?;
    let mut counts = vec![0u32; space.class_count()];
    for &vote in &record.votes {
        counts[vote] += 1;
    }
    let total = record.votes.len() as u32;
    let mut majority_index = 0;
    for (k, &count) in counts.iter().enumerate() {
        if count > counts[majority_index] {
            majority_index = k;
        }
    }
    Ok(AgreementProfile {
        rates: counts.iter().map(|&c| Rate::new(c, total)).collect(),
        majority_index,
        majority_rate: Rate::new(counts[majority_index], total),
    })
}

pub fn disagreement_label(profile: &AgreementProfile) -> DisagreementLabel {
    DisagreementLabel::from_continuous(Rate::new(1, 1) - profile.majority_rate)
}

/// Every continuous label reachable with `n_annotators` votes over the space,
/// ascending.
pub fn achievable_levels(n_annotators: usize, space: &LabelSpace) -> Vec<Rate> {
    levels_for(n_annotators, space.class_count())
}

pub(crate) fn levels_for(n_annotators: usize, class_count: usize) -> Vec<Rate> {
    if n_annotators == 0 {
        return Vec::new();
    }
    let n = n_annotators as u32;
    let min_majority = n_annotators.div_ceil(class_count) as u32;
    let mut levels: Vec<Rate> = (min_majority..=n).map(|m| Rate::new(n - m, n)).collect();
    levels.sort();
    levels.dedup();
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(k: usize) -> LabelSpace {
        LabelSpace::new((0..k).map(|i| format!("c{i}"))).unwrap()
    }

    fn record(votes: &[usize]) -> AnnotationRecord {
        AnnotationRecord {
            text_id: "t1".into(),
            text: "some text".into(),
            votes: votes.to_vec(),
            annotator_ids: (0..votes.len()).map(|i| format!("a{i}")).collect(),
        }
    }

    #[test]
    fn rates_by_counting() {
        let p = agreement_rates(&record(&[0, 0, 1]), &space(3)).unwrap();
        assert_eq!(
            p.rates,
            vec![Rate::new(2, 3), Rate::new(1, 3), Rate::new(0, 1)]
        );
        assert_eq!(p.majority_index, 0);
        assert_eq!(p.majority_rate, Rate::new(2, 3));
    }

    #[test]
    fn unanimity() {
        let p = agreement_rates(&record(&[2, 2, 2, 2, 2]), &space(3)).unwrap();
        assert_eq!(
            p.rates,
            vec![Rate::new(0, 1), Rate::new(0, 1), Rate::new(1, 1)]
        );
        assert_eq!(p.majority_rate, Rate::new(1, 1));
        let label = disagreement_label(&p);
        assert_eq!(label.binary, 0);
        assert_eq!(label.continuous, Rate::new(0, 1));
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let p = agreement_rates(&record(&[1, 1, 0, 0, 2]), &space(3)).unwrap();
        assert_eq!(p.majority_index, 0);
        assert_eq!(p.majority_rate, Rate::new(2, 5));
    }

    #[test]
    fn three_annotator_split() {
        let yes_no = LabelSpace::new(["yes", "maybe", "no"]).unwrap();
        let label = record(&[0, 0, 2]).disagreement(&yes_no).unwrap();
        assert_eq!(label.continuous, Rate::new(1, 3));
        assert_eq!(label.binary, 1);
    }

    #[test]
    fn out_of_range_vote_names_record() {
        let err = agreement_rates(&record(&[0, 3]), &space(3)).unwrap_err();
        assert!(err.to_string().contains("t1"), "{err}");
    }

    #[test]
    fn single_annotator_never_disagrees() {
        let label = record(&[1]).disagreement(&space(2)).unwrap();
        assert_eq!(label.binary, 0);
        assert_eq!(achievable_levels(1, &space(4)), vec![Rate::new(0, 1)]);
    }

    #[test]
    fn label_space_rejects_duplicates_and_singletons() {
        assert!(LabelSpace::new(["a"]).is_err());
        assert!(LabelSpace::new(["a", "b", "a"]).is_err());
    }

    #[test]
    fn achievable_level_examples() {
        assert_eq!(
            achievable_levels(3, &space(3)),
            vec![Rate::new(0, 1), Rate::new(1, 3), Rate::new(2, 3)]
        );
        assert_eq!(
            achievable_levels(5, &space(3)),
            vec![
                Rate::new(0, 1),
                Rate::new(1, 5),
                Rate::new(2, 5),
                Rate::new(3, 5)
            ]
        );
    }

    #[test]
    fn label_serde_keeps_exact_fraction() {
        let label = DisagreementLabel::from_continuous(Rate::new(1, 3));
        let json = serde_json::to_string(&label).unwrap();
        let back: DisagreementLabel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, label);

        let approx: DisagreementLabel =
            serde_json::from_str(r#"{"binary":1,"continuous":0.4}"#).unwrap();
        assert_eq!(approx.continuous, Rate::new(2, 5));
        assert!(
            serde_json::from_str::<DisagreementLabel>(r#"{"binary":0,"continuous":0.4}"#).is_err()
        );
    }
}
