use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{featurize, Mode, PredictorConfig, SparseVector};
use crate::error::{Error, Result};

/// Version tag written into every serialized model.
pub const MODEL_FORMAT: &str = "disagreement-linear/1";

/// Linear disagreement predictor over hashed features.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub config: PredictorConfig,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Full training objective after each epoch.
    pub training_log: Vec<f64>,
    /// Objective at the starting point, before any update.
    pub initial_loss: Option<f64>,
    fitted: bool,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl PredictorModel {
    /// Zero-initialized, untrained model.
    pub fn new(config: PredictorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            weights: vec![0.0; config.feature_dim],
            bias: 0.0,
            training_log: Vec::new(),
            initial_loss: None,
            fitted: false,
            config,
        })
    }

    /// A model with the given parameters, usable for prediction as-is.
    pub fn from_parameters(config: PredictorConfig, weights: Vec<f64>, bias: f64) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.feature_dim {
            return Err(Error::Model(format!(
                "{} weights for feature_dim {}",
                weights.len(),
                config.feature_dim
            )));
        }
        Ok(Self {
            weights,
            bias,
            training_log: Vec::new(),
            initial_loss: None,
            fitted: true,
            config,
        })
    }

    pub(crate) fn mark_fitted(&mut self) {
        self.fitted = true;
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn features(&self, input_text: &str) -> SparseVector {
        featurize(input_text, &self.config)
    }

    pub fn raw_score(&self, features: &SparseVector) -> f64 {
        self.bias + features.dot(&self.weights)
    }

    /// Training-time output: identity (continuous) or logistic (binary).
    pub(crate) fn head(&self, z: f64) -> f64 {
        match self.config.mode {
            Mode::Continuous => z,
            Mode::Binary => sigmoid(z),
        }
    }

    pub fn predict_features(&self, features: &SparseVector) -> f64 {
        let out = self.head(self.raw_score(features));
        if out.is_nan() {
            return 0.0;
        }
        out.clamp(0.0, 1.0)
    }

    /// Predicted disagreement in `[0, 1]`.
    pub fn predict(&self, input_text: &str) -> f64 {
        self.predict_features(&self.features(input_text))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = ModelRepr {
            format: MODEL_FORMAT.to_string(),
            config: self.config.clone(),
            bias: self.bias,
            fitted: self.fitted,
            initial_loss: self.initial_loss,
            training_log: self.training_log.clone(),
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(i, w)| (i as u32, *w))
                .collect(),
        };
        Ok(serde_json::to_string(&repr)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let repr: ModelRepr = serde_json::from_str(json)?;
        if repr.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unsupported model format `{}` (expected `{MODEL_FORMAT}`)",
                repr.format
            )));
        }
        repr.config.validate()?;
        let mut weights = vec![0.0; repr.config.feature_dim];
        for (index, value) in repr.weights {
            let slot = weights
                .get_mut(index as usize)
                .ok_or_else(|| Error::Model(format!("weight index {index} out of range")))?;
            *slot = value;
        }
        Ok(Self {
            config: repr.config,
            weights,
            bias: repr.bias,
            training_log: repr.training_log,
            initial_loss: repr.initial_loss,
            fitted: repr.fitted,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    format: String,
    config: PredictorConfig,
    bias: f64,
    fitted: bool,
    initial_loss: Option<f64>,
    training_log: Vec<f64>,
    /// Non-zero weights as `(bucket, value)`.
    weights: Vec<(u32, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> PredictorConfig {
        PredictorConfig {
            feature_dim: 1 << 10,
            ..PredictorConfig::default()
        }
    }

    #[test]
    fn predictions_stay_in_unit_interval() {
        let config = small_config();
        let high =
            PredictorModel::from_parameters(config.clone(), vec![50.0; 1 << 10], 3.0).unwrap();
        let low = PredictorModel::from_parameters(config, vec![-50.0; 1 << 10], -3.0).unwrap();
        for text in ["a", "some longer text here", "x"] {
            assert_eq!(high.predict(text), 1.0);
            assert_eq!(low.predict(text), 0.0);
        }
    }

    #[test]
    fn binary_head_is_logistic() {
        let config = PredictorConfig {
            mode: Mode::Binary,
            ..small_config()
        };
        let model = PredictorModel::from_parameters(config, vec![0.0; 1 << 10], 0.0).unwrap();
        assert_eq!(model.predict("anything"), 0.5);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut weights = vec![0.0; 1 << 10];
        weights[3] = 0.1 + 0.2;
        weights[1000] = -1e-300;
        let mut x = 0.7f64;
        for w in &mut weights[10..900] {
            x = (x * 3.9 * (1.0 - x)).fract();
            *w = x * 1e-3 - 5e-4;
        }
        let mut model =
            PredictorModel::from_parameters(small_config(), weights, 1.0 / 3.0).unwrap();
        model.training_log = vec![0.5, 0.25, 1.0 / 7.0];
        model.initial_loss = Some(0.75);
        let back = PredictorModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_unknown_format() {
        let json = PredictorModel::new(small_config())
            .unwrap()
            .to_json()
            .unwrap();
        let tampered = json.replace(MODEL_FORMAT, "disagreement-linear/0");
        assert!(PredictorModel::from_json(&tampered).is_err());
    }

    #[test]
    fn weight_length_checked() {
        assert!(PredictorModel::from_parameters(small_config(), vec![0.0; 3], 0.0).is_err());
    }
}
