//! The fixed classifier: L2-regularized logistic regression trained by
//! full-batch gradient descent from a zero initialization, with
//! standardization parameters fitted on the training split only. One spec
//! is reused across pipelines and environments within an experiment so that
//! performance differences reflect representation, not model variation.

use serde::{Deserialize, Serialize};

use crate::window::FeatureMatrix;

use super::EvalError;

/// Classifier configuration, held constant across an experiment. The seed
/// keys the derived bootstrap streams; training itself is a deterministic
/// fold from zero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub l2_strength: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            l2_strength: 1e-3,
            learning_rate: 0.1,
            epochs: 500,
            standardize: true,
            seed: 42,
        }
    }
}

/// Trained model: weights over standardized features plus the train-split
/// standardization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticModel {
    pub fn standardized(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .enumerate()
            .map(|(j, x)| (x - self.mean[j]) / self.std[j])
            .collect()
    }

    /// Linear margin `w . x_std + b`. Monotone in the predicted
    /// probability, so ranking metrics use it directly and avoid sigmoid
    /// saturation ties.
    pub fn margin(&self, features: &[f64]) -> f64 {
        let x = self.standardized(features);
        self.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn probability(&self, features: &[f64]) -> f64 {
        sigmoid(self.margin(features))
    }

    pub fn margins(&self, m: &FeatureMatrix) -> Vec<f64> {
        m.rows.iter().map(|r| self.margin(&r.features)).collect()
    }

    pub fn probabilities(&self, m: &FeatureMatrix) -> Vec<f64> {
        m.rows.iter().map(|r| self.probability(&r.features)).collect()
    }
}

/// Fit the fixed classifier on a training matrix.
///
/// Gate: the split must contain at least one row of each class, mirroring
/// the predefined viability gates for transfer evaluation.
pub fn train_classifier(
    train: &FeatureMatrix,
    spec: &ClassifierSpec,
) -> Result<LogisticModel, EvalError> {
    let pos = train.positives();
    let neg = train.negatives();
    if pos == 0 || neg == 0 {
        return Err(EvalError::ViabilityGateFailure {
            train_pos: pos,
            train_neg: neg,
        });
    }
    let n = train.rows.len();
    let d = train.feature_names.len();

    let (mean, std) = if spec.standardize {
        let mut mean = vec![0.0f64; d];
        for r in &train.rows {
            for (j, v) in r.features.iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0f64; d];
        for r in &train.rows {
            for (j, v) in r.features.iter().enumerate() {
                var[j] += (v - mean[j]).powi(2);
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        (mean, std)
    } else {
        (vec![0.0; d], vec![1.0; d])
    };

    let x: Vec<Vec<f64>> = train
        .rows
        .iter()
        .map(|r| {
            r.features
                .iter()
                .enumerate()
                .map(|(j, v)| (v - mean[j]) / std[j])
                .collect()
        })
        .collect();
    let y: Vec<f64> = train.rows.iter().map(|r| r.label as f64).collect();

    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    for _ in 0..spec.epochs {
        let mut gw = vec![0.0f64; d];
        let mut gb = 0.0f64;
        for (xi, yi) in x.iter().zip(&y) {
            let z = w.iter().zip(xi).map(|(wj, xij)| wj * xij).sum::<f64>() + b;
            let err = sigmoid(z) - yi;
            for (gj, xij) in gw.iter_mut().zip(xi) {
                *gj += err * xij;
            }
            gb += err;
        }
        let inv_n = 1.0 / n as f64;
        for (wj, gj) in w.iter_mut().zip(&gw) {
            *wj -= spec.learning_rate * (gj * inv_n + spec.l2_strength * *wj);
        }
        b -= spec.learning_rate * gb * inv_n;
    }

    Ok(LogisticModel {
        feature_names: train.feature_names.clone(),
        weights: w,
        bias: b,
        mean,
        std,
    })
}
