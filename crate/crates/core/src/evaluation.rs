//! Hard (F1) and soft (MSE) scores for disagreement predictions, plus label
//! distribution statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::annotation::{rate_to_f64, DisagreementLabel, Rate};
use crate::error::{Error, Result};
use crate::predictor::Mode;

fn check_lengths(predictions: usize, labels: usize) -> Result<()> {
    if predictions != labels {
        return Err(Error::Evaluation(format!(
            "{predictions} predictions for {labels} labels"
        )));
    }
    if predictions == 0 {
        return Err(Error::Evaluation("nothing to evaluate".into()));
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(predictions: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    let sum: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y).powi(2))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Nearest level to `prediction`; an exact midpoint goes to the lower level.
///
/// # Panics
///
/// If `levels` is empty.
pub fn quantize(prediction: f64, levels: &[Rate]) -> Rate {
    assert!(!levels.is_empty(), "quantize needs at least one level");
    let mut best = levels[0];
    for pair in levels.windows(2) {
        let (low, high) = (rate_to_f64(pair[0]), rate_to_f64(pair[1]));
        if 2.0 * prediction > low + high {
            best = pair[1];
        } else {
            break;
        }
    }
    best
}

/// F1 together with whether its denominator was empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1Score {
    pub value: f64,
    /// No true and no predicted positives; `value` is reported as 0.
    pub degenerate: bool,
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> F1Score {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        F1Score {
            value: 0.0,
            degenerate: true,
        }
    } else {
        F1Score {
            value: (2 * tp) as f64 / denom as f64,
            degenerate: false,
        }
    }
}

/// Binary mode: F1 of the disagreement class with predictions thresholded at
/// 0.5. Continuous mode: predictions are quantized to `levels` and per-level
/// F1 is macro-averaged over the levels present in the labels.
pub fn f1_hard(
    predictions: &[f64],
    labels: &[DisagreementLabel],
    levels: &[Rate],
    mode: Mode,
) -> Result<F1Score> {
    check_lengths(predictions.len(), labels.len())?;
    match mode {
        Mode::Binary => {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (p, y) in predictions.iter().zip(labels) {
                match (*p >= 0.5, y.binary == 1) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            Ok(f1_from_counts(tp, fp, fn_))
        }
        Mode::Continuous => {
            if levels.is_empty() {
                return Err(Error::Evaluation("no levels to quantize to".into()));
            }
            if let Some(off) = labels.iter().find(|y| !levels.contains(&y.continuous)) {
                return Err(Error::Evaluation(format!(
                    "label {} is not one of the levels",
                    off.continuous
                )));
            }
            let quantized: Vec<Rate> = predictions.iter().map(|&p| quantize(p, levels)).collect();
            let mut present: Vec<Rate> = labels.iter().map(|y| y.continuous).collect();
            present.sort();
            present.dedup();
            let total: f64 = present
                .iter()
                .map(|&level| {
                    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                    for (q, y) in quantized.iter().zip(labels) {
                        match (*q == level, y.continuous == level) {
                            (true, true) => tp += 1,
                            (true, false) => fp += 1,
                            (false, true) => fn_ += 1,
                            (false, false) => {}
                        }
                    }
                    f1_from_counts(tp, fp, fn_).value
                })
                .sum();
            Ok(F1Score {
                value: total / present.len() as f64,
                degenerate: false,
            })
        }
    }
}

/// Hard and soft scores for one prediction run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: Mode,
    /// In `[0, 1]`; shown ×100 in text output.
    pub f1: f64,
    pub f1_degenerate: bool,
    pub mse: f64,
    pub n_instances: usize,
    /// level → (predicted count, true count)
    pub per_level_counts: BTreeMap<Rate, (usize, usize)>,
}

pub fn evaluate(
    predictions: &[f64],
    labels: &[DisagreementLabel],
    levels: &[Rate],
    mode: Mode,
) -> Result<EvalReport> {
    let binary = mode == Mode::Binary;
    let targets: Vec<f64> = labels.iter().map(|y| y.target(binary)).collect();
    let mse = mse(predictions, &targets)?;
    let f1 = f1_hard(predictions, labels, levels, mode)?;

    let mut per_level_counts: BTreeMap<Rate, (usize, usize)> = BTreeMap::new();
    let (zero, one) = (Rate::new(0, 1), Rate::new(1, 1));
    for (p, y) in predictions.iter().zip(labels) {
        let (predicted, truth) = if binary {
            (
                if *p >= 0.5 { one } else { zero },
                if y.binary == 1 { one } else { zero },
            )
        } else {
            (quantize(*p, levels), y.continuous)
        };
        per_level_counts.entry(predicted).or_default().0 += 1;
        per_level_counts.entry(truth).or_default().1 += 1;
    }

    Ok(EvalReport {
        mode,
        f1: f1.value,
        f1_degenerate: f1.degenerate,
        mse,
        n_instances: predictions.len(),
        per_level_counts,
    })
}

impl EvalReport {
    /// Flat `key: value` block.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode: {}", self.mode);
        let _ = writeln!(out, "n_instances: {}", self.n_instances);
        let _ = writeln!(out, "f1: {:.2}", self.f1 * 100.0);
        let _ = writeln!(out, "f1_degenerate: {}", self.f1_degenerate);
        let _ = writeln!(out, "mse: {:.6}", self.mse);
        for (level, (predicted, truth)) in &self.per_level_counts {
            let _ = writeln!(out, "level {level}: predicted {predicted}, true {truth}");
        }
        out
    }

    pub const CSV_HEADER: [&'static str; 5] = ["dataset", "setup", "f1", "mse", "n"];

    pub fn csv_row(&self, dataset: &str, setup: &str) -> [String; 5] {
        [
            dataset.to_string(),
            setup.to_string(),
            format!("{:.2}", self.f1 * 100.0),
            format!("{:.6}", self.mse),
            self.n_instances.to_string(),
        ]
    }
}

/// Distribution of continuous disagreement labels over their levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelHistogram {
    pub counts: BTreeMap<Rate, usize>,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub n: usize,
}

impl LabelHistogram {
    /// Fraction of labels with `low <= continuous <= high`.
    pub fn mass_between(&self, low: f64, high: f64) -> f64 {
        let inside: usize = self
            .counts
            .iter()
            .filter(|(level, _)| (low..=high).contains(&rate_to_f64(**level)))
            .map(|(_, c)| c)
            .sum();
        inside as f64 / self.n as f64
    }
}

/// Counts per level (every supplied level gets a bin, occupied or not) plus
/// mean and variance of the continuous labels.
pub fn dataset_stats(labels: &[DisagreementLabel], levels: &[Rate]) -> Result<LabelHistogram> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts: BTreeMap<Rate, usize> = levels.iter().map(|&l| (l, 0)).collect();
    for label in labels {
        *counts.entry(label.continuous).or_default() += 1;
    }
    let n = labels.len() as f64;
    let mean = labels
        .iter()
        .map(DisagreementLabel::continuous_f64)
        .sum::<f64>()
        / n;
    let variance = labels
        .iter()
        .map(|l| (l.continuous_f64() - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(LabelHistogram {
        counts,
        mean,
        variance,
        n: labels.len(),
    })
}

/// Distinct continuous labels, ascending.
pub fn observed_levels(labels: &[DisagreementLabel]) -> Vec<Rate> {
    let mut levels: Vec<Rate> = labels.iter().map(|l| l.continuous).collect();
    levels.sort();
    levels.dedup();
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(n: u32, d: u32) -> DisagreementLabel {
        DisagreementLabel::from_continuous(Rate::new(n, d))
    }

    fn thirds() -> Vec<Rate> {
        vec![Rate::new(0, 1), Rate::new(1, 3), Rate::new(2, 3)]
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.5], &[0.0]).unwrap(), 0.25);
        assert_eq!(mse(&[0.2, 0.7], &[0.2, 0.7]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(mse(&[0.0], &[0.0, 1.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(0.30, &thirds()), Rate::new(1, 3));
        assert_eq!(quantize(1.0 / 6.0, &thirds()), Rate::new(0, 1));
        let fifths = [
            Rate::new(0, 1),
            Rate::new(1, 5),
            Rate::new(2, 5),
            Rate::new(3, 5),
        ];
        assert_eq!(quantize(0.95, &fifths), Rate::new(3, 5));
        assert_eq!(quantize(-0.2, &fifths), Rate::new(0, 1));
    }

    #[test]
    fn perfect_predictions_score_one() {
        let labels = [label(0, 1), label(1, 3), label(2, 3), label(1, 3)];
        let preds: Vec<f64> = labels.iter().map(|l| l.continuous_f64()).collect();
        let f1 = f1_hard(&preds, &labels, &thirds(), Mode::Continuous).unwrap();
        assert_eq!(f1.value, 1.0);
        let bin: Vec<f64> = labels.iter().map(|l| f64::from(l.binary)).collect();
        assert_eq!(
            f1_hard(&bin, &labels, &thirds(), Mode::Binary)
                .unwrap()
                .value,
            1.0
        );
    }

    #[test]
    fn all_negative_binary_is_degenerate_zero() {
        let labels = [label(0, 1); 4];
        let f1 = f1_hard(&[0.0; 4], &labels, &thirds(), Mode::Binary).unwrap();
        assert_eq!(
            f1,
            F1Score {
                value: 0.0,
                degenerate: true
            }
        );
    }

    #[test]
    fn macro_f1_over_true_levels() {
        let levels = [Rate::new(0, 1), Rate::new(1, 2)];
        let labels = [label(0, 1), label(0, 1), label(1, 2), label(1, 2)];
        let f1 = f1_hard(&[0.0; 4], &labels, &levels, Mode::Continuous).unwrap();
        assert!((f1.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn off_level_labels_rejected() {
        let err = f1_hard(&[0.1], &[label(1, 5)], &thirds(), Mode::Continuous).unwrap_err();
        assert!(matches!(err, Error::Evaluation(_)));
    }

    #[test]
    fn histogram_examples() {
        let zeros = dataset_stats(&[label(0, 1); 3], &[Rate::new(0, 1)]).unwrap();
        assert_eq!(zeros.counts.len(), 1);
        assert_eq!((zeros.mean, zeros.variance), (0.0, 0.0));

        let stats = dataset_stats(
            &[label(0, 1), label(1, 3), label(1, 3), label(2, 3)],
            &thirds(),
        )
        .unwrap();
        assert_eq!(stats.counts[&Rate::new(0, 1)], 1);
        assert_eq!(stats.counts[&Rate::new(1, 3)], 2);
        assert_eq!(stats.counts[&Rate::new(2, 3)], 1);
        assert!((stats.mean - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(stats.counts.values().sum::<usize>(), stats.n);
        assert!((stats.mass_between(0.3, 0.6) - 0.5).abs() < 1e-15);
        assert!(dataset_stats(&[], &thirds()).is_err());
    }

    #[test]
    fn report_serializations() {
        let labels = [label(0, 1), label(1, 3)];
        let report = evaluate(&[0.0, 0.3], &labels, &thirds(), Mode::Continuous).unwrap();
        assert_eq!(report.f1, 1.0);
        let block = report.to_key_value();
        assert!(block.contains("f1: 100.00"), "{block}");
        assert!(block.contains("n_instances: 2"));
        let row = report.csv_row("sbic", "personal");
        assert_eq!(row[0], "sbic");
        assert_eq!(row[4], "2");
    }
}
