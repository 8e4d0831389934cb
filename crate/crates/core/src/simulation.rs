//! Artificial annotator simulation.
//!
//! Each text is paired with every profile of a demographic grid (the full
//! Cartesian product of the simulated attributes), the predictor scores every
//! pair, and the per-text mean and population variance of those scores are
//! compared against the text's original disagreement label. Low variance and
//! a small shift point at controversy inherent in the text; high variance and
//! a large shift point at disagreement driven by who annotates.

use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::DisagreementLabel;
use crate::error::{Error, Result};
use crate::formatting::{
    personal_input_text, AnnotatorProfile, Attribute, DemographicFormat, DemographicSchema,
    FormattedInstance, Origin,
};
use crate::predictor::{DisagreementPredictor, Mode};

pub const GENDERS: [&str; 4] = ["woman", "man", "transgender", "non-binary"];

pub const ETHNICITIES: [&str; 7] = [
    "white",
    "black or African American",
    "American Indian or Alaska Native",
    "Asian",
    "Native Hawaiian or other pacific islanders",
    "Hispanic",
    "some other race",
];

pub const AGE_RANGES: [&str; 5] = ["18-29", "30-39", "40-49", "50-59", "60+"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// 4 genders × 7 ethnicities = 28 profiles.
    GenderEthnicity,
    /// 4 genders × 7 ethnicities × 5 age ranges = 140 profiles.
    GenderEthnicityAge,
}

impl GridKind {
    pub fn from_size(size: usize) -> Result<Self> {
        match size {
            28 => Ok(Self::GenderEthnicity),
            140 => Ok(Self::GenderEthnicityAge),
            other => Err(Error::Config(format!(
                "no default grid with {other} profiles (use 28 or 140)"
            ))),
        }
    }
}

/// Every combination of the simulated attributes' values.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationGrid {
    schema: DemographicSchema,
    profiles: Vec<AnnotatorProfile>,
}

impl SimulationGrid {
    /// Enumerates profiles lexicographically: the first schema attribute
    /// varies slowest, values follow their listed order.
    pub fn from_schema(schema: DemographicSchema) -> Result<Self> {
        let mut axes: Vec<(&str, &[String])> = Vec::new();
        for attr in schema.attributes() {
            let values = attr.values.as_deref().ok_or_else(|| {
                Error::Schema(format!(
                    "grid attribute `{}` must list its values",
                    attr.name
                ))
            })?;
            axes.push((&attr.name, values));
        }
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        let mut profiles = Vec::with_capacity(total);
        let mut digits = vec![0usize; axes.len()];
        for index in 0..total {
            profiles.push(AnnotatorProfile::new(
                format!("sim-{index:03}"),
                axes.iter()
                    .zip(&digits)
                    .map(|((name, values), &d)| (name.to_string(), values[d].clone())),
            ));
            for pos in (0..axes.len()).rev() {
                digits[pos] += 1;
                if digits[pos] < axes[pos].1.len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
        Ok(Self { schema, profiles })
    }

    pub fn schema(&self) -> &DemographicSchema {
        &self.schema
    }

    pub fn profiles(&self) -> &[AnnotatorProfile] {
        &self.profiles
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

pub fn default_schema(kind: GridKind) -> DemographicSchema {
    let mut attributes = vec![
        Attribute::enumerated("gender", GENDERS),
        Attribute::enumerated("ethnicity", ETHNICITIES),
    ];
    if kind == GridKind::GenderEthnicityAge {
        attributes.push(Attribute::enumerated("age", AGE_RANGES));
    }
    DemographicSchema::new(attributes).expect("default grid schema is valid")
}

pub fn default_grid(kind: GridKind) -> SimulationGrid {
    SimulationGrid::from_schema(default_schema(kind))
        .expect("default grid attributes are enumerated")
}

/// A text to simulate, with its original label.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTarget {
    pub text_id: String,
    pub text: String,
    pub original: DisagreementLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub text_id: String,
    pub original_label: DisagreementLabel,
    /// Aligned with the grid's profiles.
    pub predictions: Vec<f64>,
    pub mean: f64,
    /// Population variance over the grid.
    pub variance: f64,
    pub delta_from_original: f64,
}

/// Personal-format inputs pairing `text` with every grid profile.
pub fn simulated_instances(
    target: &SimulationTarget,
    grid: &SimulationGrid,
    format: DemographicFormat,
) -> Vec<FormattedInstance> {
    grid.profiles()
        .iter()
        .map(|profile| FormattedInstance {
            text_id: target.text_id.clone(),
            annotator_id: Some(profile.annotator_id.clone()),
            origin: Origin::Personal,
            input_text: personal_input_text(profile, grid.schema(), format, &target.text),
            label: target.original,
        })
        .collect()
}

fn summarize(target: &SimulationTarget, predictions: Vec<f64>) -> SimulationSummary {
    // shifted by the first prediction
    let n = predictions.len() as f64;
    let shift = predictions[0];
    let offset = predictions.iter().map(|p| p - shift).sum::<f64>() / n;
    let mean = shift + offset;
    let variance = (predictions.iter().map(|p| (p - shift).powi(2)).sum::<f64>() / n
        - offset * offset)
        .max(0.0);
    SimulationSummary {
        text_id: target.text_id.clone(),
        original_label: target.original,
        mean,
        variance,
        delta_from_original: mean - target.original.continuous_f64(),
        predictions,
    }
}

fn require_continuous(predictor: &dyn DisagreementPredictor) -> Result<()> {
    if predictor.mode() != Mode::Continuous {
        return Err(Error::Model(
            "simulation needs a continuous-mode predictor".into(),
        ));
    }
    Ok(())
}

pub fn simulate_text(
    target: &SimulationTarget,
    grid: &SimulationGrid,
    predictor: &dyn DisagreementPredictor,
    format: DemographicFormat,
) -> Result<SimulationSummary> {
    require_continuous(predictor)?;
    if grid.is_empty() {
        return Err(Error::Config("simulation grid is empty".into()));
    }
    let predictions = simulated_instances(target, grid, format)
        .par_iter()
        .map(|inst| predictor.predict_instance(inst))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(target, predictions))
}

/// Seeded sample of `sample_size` targets, returned in corpus order.
pub fn sample_targets(
    corpus: &[SimulationTarget],
    sample_size: usize,
    seed: u64,
) -> Result<Vec<SimulationTarget>> {
    if corpus.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if sample_size > corpus.len() {
        return Err(Error::Config(format!(
            "sample of {sample_size} exceeds corpus of {}",
            corpus.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, corpus.len(), sample_size).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| corpus[i].clone()).collect())
}

/// Simulates a seeded sample of the corpus. Output follows corpus order.
pub fn batch_simulate(
    corpus: &[SimulationTarget],
    sample_size: usize,
    seed: u64,
    grid: &SimulationGrid,
    predictor: &dyn DisagreementPredictor,
    format: DemographicFormat,
) -> Result<Vec<SimulationSummary>> {
    require_continuous(predictor)?;
    sample_targets(corpus, sample_size, seed)?
        .par_iter()
        .map(|target| simulate_text(target, grid, predictor, format))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceClass {
    AnnotatorDriven,
    TextInherent,
    Indeterminate,
}

impl fmt::Display for SourceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AnnotatorDriven => "annotator-driven",
            Self::TextInherent => "text-inherent",
            Self::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceThresholds {
    pub variance: f64,
    pub delta: f64,
}

impl Default for SourceThresholds {
    fn default() -> Self {
        Self {
            variance: 0.01,
            delta: 0.1,
        }
    }
}

pub fn classify_source(summary: &SimulationSummary, thresholds: SourceThresholds) -> SourceClass {
    let high_variance = summary.variance > thresholds.variance;
    let large_shift = summary.delta_from_original.abs() > thresholds.delta;
    match (high_variance, large_shift) {
        (true, true) => SourceClass::AnnotatorDriven,
        (false, false) => SourceClass::TextInherent,
        _ => SourceClass::Indeterminate,
    }
}

pub const SCATTER_HEADER: [&str; 6] = [
    "text_id",
    "mean",
    "variance",
    "original_continuous",
    "original_binary",
    "source_class",
];

pub fn write_scatter_csv<W: Write>(
    summaries: &[SimulationSummary],
    thresholds: SourceThresholds,
    writer: W,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(SCATTER_HEADER)?;
    for s in summaries {
        csv.write_record([
            s.text_id.clone(),
            s.mean.to_string(),
            s.variance.to_string(),
            s.original_label.continuous.to_string(),
            s.original_label.binary.to_string(),
            classify_source(s, thresholds).to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Rate;

    fn summary(variance: f64, delta: f64) -> SimulationSummary {
        SimulationSummary {
            text_id: "t".into(),
            original_label: DisagreementLabel::from_continuous(Rate::new(0, 1)),
            predictions: vec![],
            mean: 0.0,
            variance,
            delta_from_original: delta,
        }
    }

    #[test]
    fn default_grid_sizes_and_order() {
        let small = default_grid(GridKind::GenderEthnicity);
        assert_eq!(small.len(), 28);
        let big = default_grid(GridKind::GenderEthnicityAge);
        assert_eq!(big.len(), 140);
        let first = &big.profiles()[0];
        assert_eq!(first.get("gender"), Some("woman"));
        assert_eq!(first.get("ethnicity"), Some("white"));
        assert_eq!(first.get("age"), Some("18-29"));
        let second = &big.profiles()[1];
        assert_eq!(second.get("age"), Some("30-39"));
        let last = &big.profiles()[139];
        assert_eq!(last.get("gender"), Some("non-binary"));
        assert_eq!(last.get("ethnicity"), Some("some other race"));
        assert_eq!(last.get("age"), Some("60+"));
    }

    #[test]
    fn free_form_attributes_cannot_form_a_grid() {
        let schema = DemographicSchema::new(vec![Attribute::free_form("age")]).unwrap();
        assert!(SimulationGrid::from_schema(schema).is_err());
    }

    #[test]
    fn grid_size_lookup() {
        assert_eq!(GridKind::from_size(28).unwrap(), GridKind::GenderEthnicity);
        assert_eq!(
            GridKind::from_size(140).unwrap(),
            GridKind::GenderEthnicityAge
        );
        assert!(GridKind::from_size(30).is_err());
    }

    #[test]
    fn source_classes() {
        let t = SourceThresholds {
            variance: 0.01,
            delta: 0.1,
        };
        assert_eq!(
            classify_source(&summary(0.0, 0.0), t),
            SourceClass::TextInherent
        );
        assert_eq!(
            classify_source(&summary(0.19, -0.46), t),
            SourceClass::AnnotatorDriven
        );
        assert_eq!(
            classify_source(&summary(0.19, 0.0), t),
            SourceClass::Indeterminate
        );
        assert_eq!(
            classify_source(&summary(0.0, 0.3), t),
            SourceClass::Indeterminate
        );
    }

    #[test]
    fn sampling_is_seeded_and_ordered() {
        let corpus: Vec<SimulationTarget> = (0..50)
            .map(|i| SimulationTarget {
                text_id: format!("t{i:02}"),
                text: format!("text {i}"),
                original: DisagreementLabel::from_continuous(Rate::new(0, 1)),
            })
            .collect();
        let a = sample_targets(&corpus, 10, 7).unwrap();
        let b = sample_targets(&corpus, 10, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].text_id < w[1].text_id));
        assert!(sample_targets(&corpus, 51, 7).is_err());
        assert!(matches!(
            sample_targets(&[], 0, 7),
            Err(Error::EmptyDataset)
        ));
    }
}
