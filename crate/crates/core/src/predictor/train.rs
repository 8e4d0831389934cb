//! Mini-batch Adam on the mean squared disagreement error.
//!
//! Objective over a batch `B`:
//!
//! ```text
//! L(w, b) = mean_{i in B} (head(b + w.x_i) - y_i)^2 + l2 * |w|^2
//! ```
//!
//! The bias starts at the best constant fit and is not regularized. Updates
//! are lazy: only buckets touched by the batch move, so the decay term is
//! applied to those buckets alone. The step size decays linearly from
//! `learning_rate` towards zero over the run.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::PredictorModel;
use super::{featurize, Mode, PredictorConfig, SparseVector};
use crate::error::{Error, Result};
use crate::formatting::FormattedInstance;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-3;

struct Example {
    features: SparseVector,
    target: f64,
    weight: f64,
}

fn canonical_cmp(a: &FormattedInstance, b: &FormattedInstance) -> Ordering {
    a.text_id
        .cmp(&b.text_id)
        .then_with(|| a.annotator_id.cmp(&b.annotator_id))
        .then_with(|| a.input_text.cmp(&b.input_text))
        .then_with(|| a.label.continuous.cmp(&b.label.continuous))
}

/// Per-instance data loss `(head(z) - y)^2` plus the decay term.
pub fn instance_loss(model: &PredictorModel, features: &SparseVector, target: f64) -> f64 {
    let out = model.head(model.raw_score(features));
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    (out - target).powi(2) + model.config.l2 * sq
}

/// d(data loss)/dz for one example.
fn score_gradient(model: &PredictorModel, z: f64, target: f64) -> f64 {
    let out = model.head(z);
    let dhead = match model.config.mode {
        Mode::Continuous => 1.0,
        Mode::Binary => out * (1.0 - out),
    };
    2.0 * (out - target) * dhead
}

/// Analytic gradient of [`instance_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub bias: f64,
    /// Sorted `(bucket, partial)` for every bucket with a non-zero partial.
    pub weights: Vec<(usize, f64)>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        (self.bias * self.bias + self.weights.iter().map(|(_, g)| g * g).sum::<f64>()).sqrt()
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights
            .binary_search_by_key(&index, |(i, _)| *i)
            .map_or(0.0, |pos| self.weights[pos].1)
    }
}

pub fn loss_gradient(model: &PredictorModel, features: &SparseVector, target: f64) -> Gradient {
    let dz = score_gradient(model, model.raw_score(features), target);
    let l2 = model.config.l2;
    let mut partials: Vec<(usize, f64)> = Vec::new();
    let mut active = features.entries().iter().peekable();
    for (index, &w) in model.weights.iter().enumerate() {
        let mut g = 2.0 * l2 * w;
        if let Some(&&(i, x)) = active.peek() {
            if i as usize == index {
                g += dz * x;
                active.next();
            }
        }
        if g != 0.0 {
            partials.push((index, g));
        }
    }
    Gradient {
        bias: dz,
        weights: partials,
    }
}

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub coordinates: usize,
}

const FD_STEP: f64 = 1e-5;
const MIN_COORDINATES: usize = 20;

/// Checks [`loss_gradient`] against central finite differences on the bias,
/// every active bucket of the instance, and random inactive buckets until at
/// least 20 coordinates are covered.
pub fn gradient_check(model: &PredictorModel, instance: &FormattedInstance) -> GradientCheck {
    let features = featurize(&instance.input_text, &model.config);
    let target = instance.label.target(model.config.mode == Mode::Binary);
    let analytic = loss_gradient(model, &features, target);

    let dim = model.weights.len();
    let mut coords: Vec<usize> = features
        .entries()
        .iter()
        .map(|(i, _)| *i as usize)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed ^ 0x6772_6164);
    let wanted = (MIN_COORDINATES - 1).max(coords.len()).min(dim);
    while coords.len() < wanted {
        let c = rng.gen_range(0..dim);
        if !coords.contains(&c) {
            coords.push(c);
        }
    }

    // |w|^2 is adjusted per coordinate rather than recomputed over all buckets.
    let base_sq: f64 = model.weights.iter().map(|w| w * w).sum();
    let data_loss = |bias: f64, dot: f64| (model.head(bias + dot) - target).powi(2);
    let dot = features.dot(&model.weights);

    let relative = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-7);

    let plus = data_loss(model.bias + FD_STEP, dot) + model.config.l2 * base_sq;
    let minus = data_loss(model.bias - FD_STEP, dot) + model.config.l2 * base_sq;
    let mut worst = relative(analytic.bias, (plus - minus) / (2.0 * FD_STEP));

    for &c in &coords {
        let w = model.weights[c];
        let x = features.get(c as u32);
        let loss_at = |delta: f64| {
            let sq = base_sq - w * w + (w + delta) * (w + delta);
            data_loss(model.bias, dot + delta * x) + model.config.l2 * sq
        };
        let numeric = (loss_at(FD_STEP) - loss_at(-FD_STEP)) / (2.0 * FD_STEP);
        worst = worst.max(relative(analytic.weight(c), numeric));
    }

    GradientCheck {
        max_relative_error: worst,
        coordinates: coords.len() + 1,
    }
}

fn objective(model: &PredictorModel, examples: &[Example], order: &[usize]) -> f64 {
    let total_weight: f64 = order.iter().map(|&i| examples[i].weight).sum();
    let data: f64 = order
        .iter()
        .map(|&i| {
            let ex = &examples[i];
            ex.weight * (model.head(model.raw_score(&ex.features)) - ex.target).powi(2)
        })
        .sum();
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    data / total_weight + model.config.l2 * sq
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    m_bias: f64,
    v_bias: f64,
    step: i32,
}

impl Adam {
    fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            m_bias: 0.0,
            v_bias: 0.0,
            step: 0,
        }
    }

    fn update(m: &mut f64, v: &mut f64, g: f64, lr_t: f64) -> f64 {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        lr_t * *m / (v.sqrt() + EPSILON)
    }
}

/// Trains a fresh model on `instances`.
///
/// Deterministic for a fixed config: features are computed per instance,
/// batch members are reduced in a canonical order, and shuffling draws from
/// a ChaCha stream seeded by `config.seed`.
pub fn train(instances: &[FormattedInstance], config: &PredictorConfig) -> Result<PredictorModel> {
    if instances.is_empty() {
        return Err(Error::Config(
            "cannot train on an empty instance list".into(),
        ));
    }
    let mut model = PredictorModel::new(config.clone())?;
    let binary = config.mode == Mode::Binary;

    let positive_weight = if binary && config.balance_classes {
        let positives = instances.iter().filter(|i| i.label.binary == 1).count();
        let negatives = instances.len() - positives;
        if positives > 0 && negatives > 0 {
            negatives as f64 / positives as f64
        } else {
            1.0
        }
    } else {
        1.0
    };

    let examples: Vec<Example> = instances
        .par_iter()
        .map(|inst| {
            let target = inst.label.target(binary);
            Example {
                features: featurize(&inst.input_text, config),
                target,
                weight: if binary && inst.label.binary == 1 {
                    positive_weight
                } else {
                    1.0
                },
            }
        })
        .collect();

    let mut canonical: Vec<usize> = (0..instances.len()).collect();
    canonical.sort_by(|&a, &b| canonical_cmp(&instances[a], &instances[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; instances.len()];
    for (r, &i) in canonical.iter().enumerate() {
        rank[i] = r;
    }

    // Start from the best constant predictor.
    let total_weight: f64 = canonical.iter().map(|&i| examples[i].weight).sum();
    let mean_target = canonical
        .iter()
        .map(|&i| examples[i].weight * examples[i].target)
        .sum::<f64>()
        / total_weight;
    model.bias = match config.mode {
        Mode::Continuous => mean_target,
        Mode::Binary => {
            let p = mean_target.clamp(1e-3, 1.0 - 1e-3);
            (p / (1.0 - p)).ln()
        }
    };
    model.initial_loss = Some(objective(&model, &examples, &canonical));

    let dim = config.feature_dim;
    let mut adam = Adam::new(dim);
    let mut grad = vec![0.0f64; dim];
    let mut in_batch = vec![false; dim];
    let mut touched: Vec<u32> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let total_steps = config.epochs * instances.len().div_ceil(config.batch_size);

    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(config.batch_size) {
            let mut batch = chunk.to_vec();
            batch.sort_unstable_by_key(|&i| rank[i]);
            let batch_weight: f64 = batch.iter().map(|&i| examples[i].weight).sum();

            let mut grad_bias = 0.0;
            for &i in &batch {
                let ex = &examples[i];
                let dz = ex.weight
                    * score_gradient(&model, model.raw_score(&ex.features), ex.target)
                    / batch_weight;
                grad_bias += dz;
                for &(j, x) in ex.features.entries() {
                    if !in_batch[j as usize] {
                        in_batch[j as usize] = true;
                        touched.push(j);
                    }
                    grad[j as usize] += dz * x;
                }
            }
            touched.sort_unstable();

            adam.step += 1;
            let decay = 1.0 - f64::from(adam.step - 1) / total_steps as f64;
            let lr_t = config.learning_rate * decay * (1.0 - BETA2.powi(adam.step)).sqrt()
                / (1.0 - BETA1.powi(adam.step));
            model.bias -= Adam::update(&mut adam.m_bias, &mut adam.v_bias, grad_bias, lr_t);
            for &j in &touched {
                let j = j as usize;
                let g = grad[j] + 2.0 * config.l2 * model.weights[j];
                model.weights[j] -= Adam::update(&mut adam.m[j], &mut adam.v[j], g, lr_t);
                grad[j] = 0.0;
                in_batch[j] = false;
            }
            touched.clear();
        }
        model
            .training_log
            .push(objective(&model, &examples, &canonical));
    }

    model.mark_fitted();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{DisagreementLabel, Rate};
    use crate::formatting::Origin;

    fn instance(id: &str, text: &str, label: Rate) -> FormattedInstance {
        FormattedInstance {
            text_id: id.into(),
            annotator_id: None,
            origin: Origin::TextOnly,
            input_text: text.into(),
            label: DisagreementLabel::from_continuous(label),
        }
    }

    fn small(epochs: usize) -> PredictorConfig {
        PredictorConfig {
            feature_dim: 1 << 12,
            epochs,
            ..PredictorConfig::default()
        }
    }

    #[test]
    fn empty_training_set_is_a_config_error() {
        assert!(matches!(train(&[], &small(1)), Err(Error::Config(_))));
    }

    #[test]
    fn memorizes_a_single_point() {
        let data = [instance("t", "a lonely training sentence", Rate::new(2, 5))];
        let model = train(&data, &small(400)).unwrap();
        let final_loss = *model.training_log.last().unwrap();
        assert!(final_loss < 1e-6, "final loss {final_loss}");
        assert!((model.predict("a lonely training sentence") - 0.4).abs() < 1e-3);
        assert_eq!(model.training_log.len(), 400);
    }

    #[test]
    fn constant_labels_fit_the_constant() {
        let data: Vec<_> = (0..200)
            .map(|i| {
                instance(
                    &format!("t{i}"),
                    &format!("text number {i} here"),
                    Rate::new(1, 3),
                )
            })
            .collect();
        let model = train(&data, &small(15)).unwrap();
        for inst in &data {
            let p = model.predict(&inst.input_text);
            assert!((p - 1.0 / 3.0).abs() < 0.01, "{p}");
        }
    }

    #[test]
    fn bit_reproducible_and_loss_decreases() {
        let data: Vec<_> = (0..60)
            .map(|i| {
                let label = if i % 3 == 0 {
                    Rate::new(3, 5)
                } else {
                    Rate::new(0, 1)
                };
                let marker = if i % 3 == 0 { " controversial" } else { "" };
                instance(&format!("t{i}"), &format!("post {i}{marker}"), label)
            })
            .collect();
        let a = train(&data, &small(10)).unwrap();
        let b = train(&data, &small(10)).unwrap();
        assert_eq!(a, b);
        assert!(a.training_log.last().unwrap() <= &a.initial_loss.unwrap());
        let other_seed = train(
            &data,
            &PredictorConfig {
                seed: 9,
                ..small(10)
            },
        )
        .unwrap();
        assert_ne!(a.weights, other_seed.weights);
    }

    #[test]
    fn full_batch_ignores_input_order() {
        let data: Vec<_> = (0..12)
            .map(|i| {
                instance(
                    &format!("t{i}"),
                    &format!("words {} {}", i % 4, i % 3),
                    Rate::new(i % 3, 3),
                )
            })
            .collect();
        let config = PredictorConfig {
            batch_size: data.len(),
            shuffle: false,
            ..small(5)
        };
        let mut reversed = data.clone();
        reversed.reverse();
        assert_eq!(
            train(&data, &config).unwrap(),
            train(&reversed, &config).unwrap()
        );
    }

    #[test]
    fn zero_feature_input_has_bias_only_gradient() {
        let config = PredictorConfig {
            word_ngrams: None,
            char_ngrams: Some((3, 5)),
            demographic_features: false,
            ..small(1)
        };
        let model = PredictorModel::new(config).unwrap();
        let features = featurize("ab", &model.config);
        assert!(features.is_empty());
        let grad = loss_gradient(&model, &features, 0.5);
        assert!(grad.weights.is_empty());
        assert_eq!(grad.bias, -1.0);
    }

    #[test]
    fn stationary_at_the_minimizer() {
        let config = PredictorConfig {
            l2: 0.0,
            ..small(1)
        };
        let model = PredictorModel::from_parameters(config, vec![0.0; 1 << 12], 0.4).unwrap();
        let features = featurize("anything at all", &model.config);
        assert!(loss_gradient(&model, &features, 0.4).norm() < 1e-8);
    }

    #[test]
    fn gradient_check_on_trained_model() {
        let data: Vec<_> = (0..30)
            .map(|i| {
                instance(
                    &format!("t{i}"),
                    &format!("sample text {i}"),
                    Rate::new(i % 2, 2),
                )
            })
            .collect();
        for mode in [Mode::Continuous, Mode::Binary] {
            let model = train(
                &data,
                &PredictorConfig {
                    mode,
                    l2: 1e-3,
                    ..small(3)
                },
            )
            .unwrap();
            let check = gradient_check(&model, &data[0]);
            assert!(check.coordinates >= 20);
            assert!(check.max_relative_error < 1e-4, "{mode}: {check:?}");
        }
    }

    #[test]
    fn balanced_binary_weights_positives() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                let label = if i == 0 {
                    Rate::new(1, 3)
                } else {
                    Rate::new(0, 1)
                };
                instance(&format!("t{i}"), &format!("item {i}"), label)
            })
            .collect();
        let base = PredictorConfig {
            mode: Mode::Binary,
            ..small(15)
        };
        let plain = train(&data, &base).unwrap();
        let balanced = train(
            &data,
            &PredictorConfig {
                balance_classes: true,
                ..base
            },
        )
        .unwrap();
        assert!(balanced.predict("item 0") > plain.predict("item 0"));
    }
}
