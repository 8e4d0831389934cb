//! Disagreement predictors.
//!
//! [`DisagreementPredictor`] is the contract the evaluation and simulation
//! stages consume. The built-in [`PredictorModel`] is a linear model over
//! hashed features trained by mini-batch Adam on the squared error between
//! its output and the disagreement label.

mod features;
mod model;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formatting::FormattedInstance;

pub use features::{featurize, split_demographic_prefix, SparseVector};
pub use model::{PredictorModel, MODEL_FORMAT};
pub use train::{gradient_check, instance_loss, loss_gradient, train, Gradient, GradientCheck};

/// Which disagreement label a model regresses on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Binary,
    Continuous,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Self::Binary),
            "continuous" => Ok(Self::Continuous),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Binary => "binary",
            Self::Continuous => "continuous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub mode: Mode,
    /// Number of hash buckets; a power of two.
    pub feature_dim: usize,
    /// Inclusive word n-gram range, `None` to disable.
    pub word_ngrams: Option<(usize, usize)>,
    /// Inclusive character n-gram range, `None` to disable.
    pub char_ngrams: Option<(usize, usize)>,
    /// One-hot `attr=value` features from colon-template prefixes, crossed
    /// with the text's unigrams.
    pub demographic_features: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub l2: f64,
    pub shuffle: bool,
    /// Binary mode only: weight positives by `negatives / positives`.
    pub balance_classes: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Continuous,
            feature_dim: 1 << 18,
            word_ngrams: Some((1, 2)),
            char_ngrams: Some((3, 5)),
            demographic_features: true,
            learning_rate: 0.01,
            batch_size: 8,
            epochs: 15,
            seed: 0,
            l2: 1e-6,
            shuffle: true,
            balance_classes: false,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.feature_dim < 2 || !self.feature_dim.is_power_of_two() {
            return fail(format!(
                "feature_dim {} is not a power of two >= 2",
                self.feature_dim
            ));
        }
        if u32::try_from(self.feature_dim).is_err() {
            return fail(format!("feature_dim {} is too large", self.feature_dim));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail(format!("l2 {} must be non-negative", self.l2));
        }
        for (name, range) in [
            ("word_ngrams", self.word_ngrams),
            ("char_ngrams", self.char_ngrams),
        ] {
            if let Some((lo, hi)) = range {
                if lo == 0 || lo > hi {
                    return fail(format!("{name} range {lo}..={hi} is invalid"));
                }
            }
        }
        Ok(())
    }
}

/// Anything that maps a formatted instance to a disagreement score in `[0, 1]`.
pub trait DisagreementPredictor: Sync {
    fn mode(&self) -> Mode;

    fn predict_instance(&self, instance: &FormattedInstance) -> Result<f64>;
}

impl DisagreementPredictor for PredictorModel {
    fn mode(&self) -> Mode {
        self.config.mode
    }

    fn predict_instance(&self, instance: &FormattedInstance) -> Result<f64> {
        if !self.is_fitted() {
            return Err(Error::Model("model has not been trained".into()));
        }
        Ok(self.predict(&instance.input_text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(PredictorConfig::default().validate().is_ok());
        for bad in [
            PredictorConfig {
                feature_dim: 1000,
                ..Default::default()
            },
            PredictorConfig {
                feature_dim: 1,
                ..Default::default()
            },
            PredictorConfig {
                epochs: 0,
                ..Default::default()
            },
            PredictorConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            PredictorConfig {
                batch_size: 0,
                ..Default::default()
            },
            PredictorConfig {
                l2: -1.0,
                ..Default::default()
            },
            PredictorConfig {
                char_ngrams: Some((4, 3)),
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn mode_names() {
        assert_eq!("binary".parse::<Mode>().unwrap(), Mode::Binary);
        assert_eq!(Mode::Continuous.to_string(), "continuous");
        assert!("ordinal".parse::<Mode>().is_err());
    }
}
