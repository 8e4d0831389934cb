//! Downstream uses of predicted disagreement: how many annotators a text
//! needs, and whether it needs a demographically broad pool.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulation::SimulationSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountBand {
    /// Inclusive upper bound on predicted disagreement.
    pub upper_bound: f64,
    pub annotator_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentPolicy {
    count_bands: Vec<CountBand>,
    diversity_variance_threshold: f64,
}

impl Default for AssignmentPolicy {
    fn default() -> Self {
        Self::new(
            vec![
                CountBand {
                    upper_bound: 0.05,
                    annotator_count: 1,
                },
                CountBand {
                    upper_bound: 0.2,
                    annotator_count: 3,
                },
                CountBand {
                    upper_bound: 1.0,
                    annotator_count: 5,
                },
            ],
            0.01,
        )
        .expect("default policy is valid")
    }
}

impl AssignmentPolicy {
    pub fn new(count_bands: Vec<CountBand>, diversity_variance_threshold: f64) -> Result<Self> {
        let invalid = |msg: &str| Err(Error::Config(format!("assignment policy: {msg}")));
        let Some(last) = count_bands.last() else {
            return invalid("no count bands");
        };
        if last.upper_bound != 1.0 {
            return invalid("final band must end at 1.0");
        }
        for pair in count_bands.windows(2) {
            if pair[1].upper_bound <= pair[0].upper_bound {
                return invalid("upper bounds must strictly increase");
            }
            if pair[1].annotator_count < pair[0].annotator_count {
                return invalid("annotator counts must not decrease");
            }
        }
        if count_bands.iter().any(|b| b.annotator_count == 0) {
            return invalid("annotator counts must be positive");
        }
        if diversity_variance_threshold.is_nan() || diversity_variance_threshold < 0.0 {
            return invalid("diversity threshold must be non-negative");
        }
        Ok(Self {
            count_bands,
            diversity_variance_threshold,
        })
    }

    pub fn count_bands(&self) -> &[CountBand] {
        &self.count_bands
    }

    pub fn diversity_variance_threshold(&self) -> f64 {
        self.diversity_variance_threshold
    }

    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            count_bands: Vec<CountBand>,
            diversity_variance_threshold: f64,
        }
        let raw: Raw = serde_json::from_str(json)?;
        Self::new(raw.count_bands, raw.diversity_variance_threshold)
    }
}

/// Count of the first band whose upper bound is at least `predicted`.
pub fn recommend_count(predicted: f64, policy: &AssignmentPolicy) -> u32 {
    policy
        .count_bands
        .iter()
        .find(|band| predicted <= band.upper_bound)
        .unwrap_or_else(|| policy.count_bands.last().expect("policy has bands"))
        .annotator_count
}

/// Whether the simulated predictions vary enough across annotator profiles
/// that the text should go to a demographically broad pool.
pub fn flag_for_diverse_pool(summary: &SimulationSummary, policy: &AssignmentPolicy) -> bool {
    summary.variance > policy.diversity_variance_threshold
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub text_id: String,
    pub predicted: f64,
    pub recommended_count: u32,
    pub diverse_pool_flag: bool,
}

pub fn write_recommendations_csv<W: Write>(rows: &[Recommendation], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "text_id",
        "predicted",
        "recommended_count",
        "diverse_pool_flag",
    ])?;
    for row in rows {
        csv.write_record([
            row.text_id.clone(),
            row.predicted.to_string(),
            row.recommended_count.to_string(),
            row.diverse_pool_flag.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{DisagreementLabel, Rate};

    fn summary(variance: f64) -> SimulationSummary {
        SimulationSummary {
            text_id: "t".into(),
            original_label: DisagreementLabel::from_continuous(Rate::new(0, 1)),
            predictions: vec![],
            mean: 0.1,
            variance,
            delta_from_original: 0.1,
        }
    }

    #[test]
    fn default_bands() {
        let policy = AssignmentPolicy::default();
        assert_eq!(recommend_count(0.0, &policy), 1);
        assert_eq!(recommend_count(0.5, &policy), 5);
        assert_eq!(recommend_count(0.2, &policy), 3);
        assert_eq!(recommend_count(0.05, &policy), 1);
        assert_eq!(recommend_count(1.0, &policy), 5);
    }

    #[test]
    fn diverse_pool_flag() {
        let policy = AssignmentPolicy::default();
        assert!(!flag_for_diverse_pool(&summary(0.0), &policy));
        assert!(flag_for_diverse_pool(&summary(0.2), &policy));
        let zero = AssignmentPolicy::new(policy.count_bands().to_vec(), 0.0).unwrap();
        assert!(flag_for_diverse_pool(&summary(1e-12), &zero));
        assert!(!flag_for_diverse_pool(&summary(0.0), &zero));
    }

    #[test]
    fn policy_validation() {
        let band = |upper_bound, annotator_count| CountBand {
            upper_bound,
            annotator_count,
        };
        assert!(AssignmentPolicy::new(vec![], 0.0).is_err());
        assert!(AssignmentPolicy::new(vec![band(0.5, 1)], 0.0).is_err());
        assert!(AssignmentPolicy::new(vec![band(0.5, 3), band(1.0, 1)], 0.0).is_err());
        assert!(
            AssignmentPolicy::new(vec![band(0.5, 1), band(0.5, 3), band(1.0, 5)], 0.0).is_err()
        );
        assert!(AssignmentPolicy::new(vec![band(1.0, 2)], -1.0).is_err());
        let json = r#"{"count_bands":[{"upper_bound":0.1,"annotator_count":2},{"upper_bound":1.0,"annotator_count":7}],"diversity_variance_threshold":0.02}"#;
        let policy = AssignmentPolicy::from_json(json).unwrap();
        assert_eq!(recommend_count(0.3, &policy), 7);
    }
}
