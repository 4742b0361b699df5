//! Logistic regression trained by gradient descent on binary cross-entropy.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    Empty,
    #[error("labels contain a single class ({0}); both classes are required")]
    SingleClass(u8),
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("{rows} feature rows but {labels} labels")]
    Misaligned { rows: usize, labels: usize },
    #[error("expected {expected} features, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("loss became non-finite at iteration {iteration} (weights {weights:?}, bias {bias})")]
    NonFinite {
        iteration: usize,
        weights: Vec<f64>,
        bias: f64,
    },
    #[error("zero weight vector has no decision boundary")]
    ZeroWeights,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model file {path}: {message}")]
    Persist { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightInit {
    Zeros,
    /// Uniform on `[-scale, scale]`, drawn from the config seed.
    Uniform {
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// `None` means full-batch steps.
    pub batch_size: Option<usize>,
    pub init: WeightInit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            iterations: 2000,
            seed: 0,
            batch_size: None,
            init: WeightInit::Zeros,
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// BCE of a logit `z` against label `y`, without forming `log(sigmoid(z))`.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl LinearModel {
    pub fn zeros(feature_count: usize) -> Self {
        Self {
            weights: vec![0.0; feature_count],
            bias: 0.0,
        }
    }

    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn feature_count(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(ClassifierError::Dimension {
                expected: self.weights.len(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `w·x + b`, with no dimension check.
    pub fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.score_unchecked(x))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.score(x)?))
    }

    /// Class 1 iff the score is non-negative (ties go to the favorable class).
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.score(x)? >= 0.0))
    }

    pub fn predict_unchecked(&self, x: &[f64]) -> u8 {
        u8::from(self.score_unchecked(x) >= 0.0)
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `(w·x + b) / ‖w‖`: positive on the favorable side.
    pub fn signed_boundary_distance(&self, x: &[f64]) -> Result<f64> {
        let norm = self.weight_norm();
        if norm == 0.0 {
            return Err(ClassifierError::ZeroWeights);
        }
        Ok(self.score(x)? / norm)
    }
}

fn check_training_set(features: &[Vec<f64>], labels: &[u8]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(ClassifierError::Misaligned {
            rows: features.len(),
            labels: labels.len(),
        });
    }
    let Some(first) = features.first() else {
        return Err(ClassifierError::Empty);
    };
    let dim = first.len();
    if let Some(row) = features.iter().find(|r| r.len() != dim) {
        return Err(ClassifierError::Dimension {
            expected: dim,
            actual: row.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(ClassifierError::BadLabel(bad));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(ClassifierError::SingleClass(labels[0]));
    }
    Ok(dim)
}

/// Mean binary cross-entropy over the rows in `batch`.
fn batch_loss(model: &LinearModel, features: &[Vec<f64>], labels: &[u8], batch: &[usize]) -> f64 {
    batch
        .iter()
        .map(|&i| bce_from_logit(model.score_unchecked(&features[i]), f64::from(labels[i])))
        .sum::<f64>()
        / batch.len() as f64
}

fn batch_gradient(
    model: &LinearModel,
    features: &[Vec<f64>],
    labels: &[u8],
    batch: &[usize],
) -> (Vec<f64>, f64) {
    let mut grad_w = vec![0.0; model.weights.len()];
    let mut grad_b = 0.0;
    for &i in batch {
        let residual = sigmoid(model.score_unchecked(&features[i])) - f64::from(labels[i]);
        for (g, v) in grad_w.iter_mut().zip(&features[i]) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    let m = batch.len() as f64;
    grad_w.iter_mut().for_each(|g| *g /= m);
    (grad_w, grad_b / m)
}

/// Mean BCE loss over the whole training set.
pub fn bce_loss(model: &LinearModel, features: &[Vec<f64>], labels: &[u8]) -> f64 {
    let all: Vec<usize> = (0..features.len()).collect();
    batch_loss(model, features, labels, &all)
}

/// Analytic gradient of [`bce_loss`] as `(d/dw, d/db)`.
pub fn bce_gradient(model: &LinearModel, features: &[Vec<f64>], labels: &[u8]) -> (Vec<f64>, f64) {
    let all: Vec<usize> = (0..features.len()).collect();
    batch_gradient(model, features, labels, &all)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Full-training-set loss before each step, plus the final loss.
    pub loss_history: Vec<f64>,
}

pub fn train(features: &[Vec<f64>], labels: &[u8], config: &TrainConfig) -> Result<LinearModel> {
    train_with_history(features, labels, config).map(|o| o.model)
}

/// Run exactly `config.iterations` gradient steps.
///
/// Rows are visited in index order within a step so accumulation order, and
/// therefore the result, is fixed. Mini-batches (when configured) come from a
/// ChaCha8 shuffle reseeded each pass over the data.
pub fn train_with_history(
    features: &[Vec<f64>],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let dim = check_training_set(features, labels)?;
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(ClassifierError::Config(
            "learning_rate must be positive".into(),
        ));
    }
    if config.iterations == 0 {
        return Err(ClassifierError::Config(
            "iterations must be positive".into(),
        ));
    }
    if config.batch_size == Some(0) {
        return Err(ClassifierError::Config(
            "batch_size must be positive".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = match config.init {
        WeightInit::Zeros => LinearModel::zeros(dim),
        WeightInit::Uniform { scale } => LinearModel {
            weights: (0..dim).map(|_| rng.random_range(-scale..=scale)).collect(),
            bias: rng.random_range(-scale..=scale),
        },
    };

    let all: Vec<usize> = (0..features.len()).collect();
    let mut order = all.clone();
    let mut cursor = order.len();
    let mut loss_history = Vec::with_capacity(config.iterations + 1);

    for iteration in 0..config.iterations {
        let loss = batch_loss(&model, features, labels, &all);
        if !loss.is_finite() {
            return Err(ClassifierError::NonFinite {
                iteration,
                weights: model.weights,
                bias: model.bias,
            });
        }
        loss_history.push(loss);

        let batch: &[usize] = match config.batch_size {
            None => &all,
            Some(size) => {
                if cursor + size > order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let end = (cursor + size).min(order.len());
                let slice = &order[cursor..end];
                cursor = end;
                slice
            }
        };
        let (grad_w, grad_b) = batch_gradient(&model, features, labels, batch);
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * g;
        }
        model.bias -= config.learning_rate * grad_b;
    }

    let final_loss = batch_loss(&model, features, labels, &all);
    if !final_loss.is_finite() || !model.is_finite() {
        return Err(ClassifierError::NonFinite {
            iteration: config.iterations,
            weights: model.weights,
            bias: model.bias,
        });
    }
    loss_history.push(final_loss);
    Ok(TrainOutcome {
        model,
        loss_history,
    })
}

pub fn accuracy(model: &LinearModel, features: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
    if features.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if features.len() != labels.len() {
        return Err(ClassifierError::Misaligned {
            rows: features.len(),
            labels: labels.len(),
        });
    }
    let mut correct = 0usize;
    for (x, &y) in features.iter().zip(labels) {
        if model.predict(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / features.len() as f64)
}

/// Persisted model: parameters, feature names and the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub feature_names: Vec<String>,
    pub model: LinearModel,
    pub train: TrainConfig,
}

impl ModelFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, text + "\n").map_err(|e| ClassifierError::Persist {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let persist = |message: String| ClassifierError::Persist {
            path: path.display().to_string(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| persist(e.to_string()))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| persist(e.to_string()))?;
        if file.model.weights.len() != file.feature_names.len() {
            return Err(persist("weight count differs from feature names".into()));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::split;
    use crate::synthgen::{generate, preset_da, preset_db};
    use proptest::prelude::*;

    #[test]
    fn predict_proba_examples() {
        let zero = LinearModel::zeros(3);
        assert_eq!(zero.predict_proba(&[4.0, -1.0, 7.0]).unwrap(), 0.5);
        let diag = LinearModel::new(vec![1.0, -1.0], 0.0);
        assert_eq!(diag.predict_proba(&[3.0, 3.0]).unwrap(), 0.5);
        let one_d = LinearModel::new(vec![2.0], -1.0);
        // 1 / (1 + e^-1)
        assert!((one_d.predict_proba(&[1.0]).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn predict_examples() {
        let diag = LinearModel::new(vec![1.0, -1.0], 0.0);
        assert_eq!(diag.predict(&[3.0, 3.0]).unwrap(), 1);
        assert_eq!(diag.predict(&[9.0, 1.0]).unwrap(), 1);
        assert_eq!(diag.predict(&[1.0, 9.0]).unwrap(), 0);
        assert!(matches!(
            diag.predict(&[1.0]),
            Err(ClassifierError::Dimension {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!(bce_from_logit(-800.0, 1.0).is_finite());
        assert!((bce_from_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn signed_distance_examples() {
        let m = LinearModel::new(vec![0.0, 1.0], 0.0);
        assert_eq!(m.signed_boundary_distance(&[5.0, 3.0]).unwrap(), 3.0);
        assert_eq!(m.signed_boundary_distance(&[5.0, 0.0]).unwrap(), 0.0);
        let m = LinearModel::new(vec![1.0, 1.0], -2.0);
        let d = m.signed_boundary_distance(&[0.0, 0.0]).unwrap();
        assert!((d + 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            LinearModel::zeros(2).signed_boundary_distance(&[1.0, 1.0]),
            Err(ClassifierError::ZeroWeights)
        ));
    }

    #[test]
    fn toy_separable_set() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 0.1],
            vec![1.0, 0.9],
        ];
        let y = vec![0, 1, 0, 1];
        let config = TrainConfig {
            learning_rate: 0.5,
            ..TrainConfig::default()
        };
        let model = train(&x, &y, &config).unwrap();
        assert_eq!(accuracy(&model, &x, &y).unwrap(), 1.0);
    }

    #[test]
    fn presets_are_separated_with_default_recipe() {
        for spec in [preset_da(), preset_db()] {
            let s = split(&generate(&spec, 42));
            let out = train_with_history(&s.features, &s.labels, &TrainConfig::default()).unwrap();
            assert_eq!(out.loss_history.len(), 2001);
            assert_eq!(accuracy(&out.model, &s.features, &s.labels).unwrap(), 1.0);
            for window in out.loss_history.windows(101) {
                assert!(window[100] <= window[0]);
            }
        }
    }

    #[test]
    fn training_errors() {
        let cfg = TrainConfig::default();
        assert!(matches!(train(&[], &[], &cfg), Err(ClassifierError::Empty)));
        assert!(matches!(
            train(&[vec![1.0], vec![2.0]], &[1, 1], &cfg),
            Err(ClassifierError::SingleClass(1))
        ));
        assert!(matches!(
            train(&[vec![1.0]], &[1, 0], &cfg),
            Err(ClassifierError::Misaligned { .. })
        ));
        let huge = TrainConfig {
            learning_rate: 1e308,
            iterations: 5,
            ..cfg
        };
        assert!(matches!(
            train(&[vec![1e308], vec![-1e308]], &[1, 0], &huge),
            Err(ClassifierError::NonFinite { .. })
        ));
    }

    #[test]
    fn accuracy_complement_symmetry() {
        let s = split(&generate(&preset_db(), 3));
        let model = LinearModel::new(vec![0.3, -0.2], 0.1);
        let flipped: Vec<u8> = s.labels.iter().map(|y| 1 - y).collect();
        let a = accuracy(&model, &s.features, &s.labels).unwrap();
        let b = accuracy(&model, &s.features, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
        assert!(matches!(
            accuracy(&model, &[], &[]),
            Err(ClassifierError::Empty)
        ));
    }

    #[test]
    fn minibatch_and_random_init_are_deterministic() {
        let s = split(&generate(&preset_da(), 8));
        let cfg = TrainConfig {
            batch_size: Some(16),
            init: WeightInit::Uniform { scale: 0.1 },
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train(&s.features, &s.labels, &cfg).unwrap();
        let b = train(&s.features, &s.labels, &cfg).unwrap();
        assert_eq!(a, b);
        let c = train(&s.features, &s.labels, &TrainConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let file = ModelFile {
            feature_names: vec!["x1".into(), "x2".into()],
            model: LinearModel::new(vec![0.1 + 0.2, -1.0 / 3.0], std::f64::consts::PI * 1e-7),
            train: TrainConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        file.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        for (a, b) in back.model.weights.iter().zip(&file.model.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.model.bias.to_bits(), file.model.bias.to_bits());
        assert_eq!(back, file);
    }

    fn instance() -> impl Strategy<Value = (LinearModel, Vec<Vec<f64>>, Vec<u8>)> {
        (1usize..5, 2usize..12).prop_flat_map(|(dim, rows)| {
            (
                prop::collection::vec(-2.0f64..2.0, dim),
                -2.0f64..2.0,
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, dim), rows),
                prop::collection::vec(0u8..2, rows),
            )
                .prop_map(|(w, b, x, y)| (LinearModel::new(w, b), x, y))
        })
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences((model, x, y) in instance()) {
            let h = 1e-5;
            let (grad_w, grad_b) = bce_gradient(&model, &x, &y);
            let mut params: Vec<f64> = model.weights.clone();
            params.push(model.bias);
            let analytic: Vec<f64> = grad_w.iter().copied().chain([grad_b]).collect();
            for k in 0..params.len() {
                let eval = |delta: f64| {
                    let mut p = params.clone();
                    p[k] += delta;
                    let bias = p.pop().unwrap();
                    bce_loss(&LinearModel::new(p, bias), &x, &y)
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let scale = analytic[k].abs().max(numeric.abs()).max(1e-3);
                prop_assert!((analytic[k] - numeric).abs() / scale <= 1e-4,
                    "param {}: analytic {} numeric {}", k, analytic[k], numeric);
            }
        }

        #[test]
        fn predict_agrees_with_signed_distance(
            w in prop::collection::vec(-5.0f64..5.0, 3),
            b in -5.0f64..5.0,
            x in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            let model = LinearModel::new(w, b);
            prop_assume!(model.weight_norm() > 0.0);
            let label = model.predict(&x).unwrap();
            let d = model.signed_boundary_distance(&x).unwrap();
            prop_assert_eq!(label == 1, d >= 0.0);
        }

        #[test]
        fn proba_is_monotone_in_score(b in -30.0f64..30.0, step in 0.01f64..5.0) {
            let m = LinearModel::new(vec![1.0], b);
            let lo = m.predict_proba(&[0.0]).unwrap();
            let hi = m.predict_proba(&[step]).unwrap();
            prop_assert!(hi > lo);
        }
    }
}
