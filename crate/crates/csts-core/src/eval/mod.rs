//! Evaluation harness: the fixed classifier, transfer and robustness
//! reports with bootstrap intervals and split class counts, the semantic
//! orientation diagnostic, and the train-only-quantile producer-divergence
//! viability protocol.

pub mod classifier;
pub mod metrics;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::graph::{CanonicalRelationship, SubstrateGraph};
use crate::window::{
    Channel, FeatureError, FeatureMatrix, SplitDescriptor, TrainHistory, WindowIndexer,
};

pub use classifier::{train_classifier, ClassifierSpec, LogisticModel};
pub use metrics::{
    auroc, auroc_bruteforce, best_f1_sweep, bootstrap_ci, bootstrap_ci_seq, f1_at,
    precision_recall_at, quantile, sweep_grid, Auroc, CiResult, MetricKind,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("viability gate failure: train split has {train_pos} positives / {train_neg} negatives")]
    ViabilityGateFailure { train_pos: usize, train_neg: usize },
    #[error("degenerate class distribution: {0}")]
    DegenerateClass(String),
    #[error("missing artifact: {0} (run the producing stage first)")]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One Table-1/2-style report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub setting: String,
    pub method: String,
    pub level: String,
    pub status: String,
    pub f1_at_05: f64,
    pub precision: f64,
    pub recall: f64,
    pub auroc: f64,
    pub best_f1: f64,
    pub best_threshold: f64,
    pub train_pos: usize,
    pub train_neg: usize,
    pub test_pos: usize,
    pub test_neg: usize,
    pub auroc_ci: [f64; 2],
    pub f1_ci: [f64; 2],
    pub ci_degenerate: bool,
    pub config_fingerprint: String,
}

impl EvalReport {
    /// Zero-filled row for a pipeline whose feature extraction failed on a
    /// schema-perturbed input.
    pub fn schema_failure(
        task: &str,
        setting: &str,
        method: &str,
        level: &str,
        config_fingerprint: &str,
    ) -> EvalReport {
        EvalReport {
            task: task.to_string(),
            setting: setting.to_string(),
            method: method.to_string(),
            level: level.to_string(),
            status: "schema_failure".to_string(),
            f1_at_05: 0.0,
            precision: 0.0,
            recall: 0.0,
            auroc: 0.0,
            best_f1: 0.0,
            best_threshold: 0.5,
            train_pos: 0,
            train_neg: 0,
            test_pos: 0,
            test_neg: 0,
            auroc_ci: [0.0, 0.0],
            f1_ci: [0.0, 0.0],
            ci_degenerate: true,
            config_fingerprint: config_fingerprint.to_string(),
        }
    }

    pub const TRANSFER_CSV_HEADER: &'static str = "task,setting,method,f1_at_05,precision,recall,auroc,best_f1,best_threshold,train_pos,train_neg,test_pos,test_neg,auroc_ci_lo,auroc_ci_hi,f1_ci_lo,f1_ci_hi,status,config";

    pub fn transfer_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.2},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{},{}",
            self.task,
            self.setting,
            self.method,
            self.f1_at_05,
            self.precision,
            self.recall,
            self.auroc,
            self.best_f1,
            self.best_threshold,
            self.train_pos,
            self.train_neg,
            self.test_pos,
            self.test_neg,
            self.auroc_ci[0],
            self.auroc_ci[1],
            self.f1_ci[0],
            self.f1_ci[1],
            self.status,
            self.config_fingerprint,
        )
    }

    pub const ROBUSTNESS_CSV_HEADER: &'static str =
        "task,level,method,f1_at_05,auroc,best_f1,best_threshold,train_pos,train_neg,test_pos,test_neg,status,config";

    pub fn robustness_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.3},{:.3},{:.3},{:.2},{},{},{},{},{},{}",
            self.task,
            self.level,
            self.method,
            self.f1_at_05,
            self.auroc,
            self.best_f1,
            self.best_threshold,
            self.train_pos,
            self.train_neg,
            self.test_pos,
            self.test_neg,
            self.status,
            self.config_fingerprint,
        )
    }
}

/// Score a trained model against a test matrix and assemble the full report
/// row. Ranking metrics use the linear margin; threshold metrics use the
/// predicted probability, where 0.5 corresponds to a zero margin.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    model: &LogisticModel,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    spec: &ClassifierSpec,
    task: &str,
    setting: &str,
    method: &str,
    level: &str,
    config_fingerprint: &str,
) -> EvalReport {
    let margins = model.margins(test);
    let probs = model.probabilities(test);
    let labels = test.labels();

    let a = auroc(&margins, &labels);
    let f1 = f1_at(&probs, &labels, 0.5);
    let (precision, recall) = precision_recall_at(&probs, &labels, 0.5);
    let (best_f1, best_threshold) = best_f1_sweep(&probs, &labels);
    let auroc_ci = bootstrap_ci(&margins, &labels, MetricKind::Auroc, 1000, spec.seed);
    let f1_ci = bootstrap_ci(&probs, &labels, MetricKind::F1At05, 1000, spec.seed);
    // a CI is degenerate when fewer than two positives survive, or when
    // every resample collapsed to a single class
    let test_pos = test.positives();
    let ci_degenerate = test_pos < 2 || auroc_ci.degenerate_resamples == 1000;

    EvalReport {
        task: task.to_string(),
        setting: setting.to_string(),
        method: method.to_string(),
        level: level.to_string(),
        status: if a.degenerate { "degenerate" } else { "ok" }.to_string(),
        f1_at_05: f1,
        precision,
        recall,
        auroc: a.value,
        best_f1,
        best_threshold,
        train_pos: train.positives(),
        train_neg: train.negatives(),
        test_pos,
        test_neg: test.negatives(),
        auroc_ci: [auroc_ci.lo, auroc_ci.hi],
        f1_ci: [f1_ci.lo, f1_ci.hi],
        ci_degenerate,
        config_fingerprint: config_fingerprint.to_string(),
    }
}

/// Prepared feature matrices for one pipeline: the EnvA train split and the
/// two evaluation splits. Feature-extraction failures stay as errors so the
/// transfer runner can turn them into schema-failure rows.
pub struct PipelineMatrices {
    pub train: Result<FeatureMatrix, FeatureError>,
    pub test_in: Result<FeatureMatrix, FeatureError>,
    pub test_cross: Result<FeatureMatrix, FeatureError>,
}

/// The four transfer cells for one task: {baseline, csts} x {in-domain,
/// cross-domain}, with schema failures recorded as zero rows.
pub fn run_transfer(
    task: &str,
    baseline: PipelineMatrices,
    csts: PipelineMatrices,
    spec: &ClassifierSpec,
    config_fingerprint: &str,
) -> Result<Vec<EvalReport>, EvalError> {
    let mut reports = Vec::with_capacity(4);
    for (method, m) in [("baseline", baseline), ("csts", csts)] {
        match (&m.train, &m.test_in, &m.test_cross) {
            (Ok(train), test_in, test_cross) => {
                let model = train_classifier(train, spec)?;
                for (setting, test) in [("EnvA->EnvA", test_in), ("EnvA->EnvB", test_cross)] {
                    match test {
                        Ok(test) => reports.push(evaluate_model(
                            &model,
                            train,
                            test,
                            spec,
                            task,
                            setting,
                            method,
                            "P0",
                            config_fingerprint,
                        )),
                        Err(_) => reports.push(EvalReport::schema_failure(
                            task,
                            setting,
                            method,
                            "P0",
                            config_fingerprint,
                        )),
                    }
                }
            }
            _ => {
                for setting in ["EnvA->EnvA", "EnvA->EnvB"] {
                    reports.push(EvalReport::schema_failure(
                        task,
                        setting,
                        method,
                        "P0",
                        config_fingerprint,
                    ));
                }
            }
        }
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Orientation diagnostic
// ---------------------------------------------------------------------------

/// Per-feature class-conditional direction in both environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureOrientation {
    pub feature: String,
    pub delta_a: f64,
    pub delta_b: f64,
    pub sign_agree: bool,
}

/// Orientation-stability report: per-feature sign agreement plus the
/// score-level polarity-inversion flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationReport {
    pub task: String,
    pub method: String,
    pub features: Vec<FeatureOrientation>,
    pub n_sign_disagreements: usize,
    pub auroc: f64,
    pub auroc_inverted: f64,
    pub polarity_inverted: bool,
    pub config_fingerprint: String,
}

/// Dead band under which a class-conditional difference counts as zero,
/// and zero agrees with any sign.
pub const ORIENTATION_DEAD_BAND: f64 = 1e-9;

fn sign_with_dead_band(x: f64) -> i8 {
    if x.abs() < ORIENTATION_DEAD_BAND {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

fn class_conditional_deltas(
    m: &FeatureMatrix,
    model: &LogisticModel,
) -> Result<Vec<f64>, EvalError> {
    let pos: Vec<&crate::window::FeatureRow> = m.rows.iter().filter(|r| r.label == 1).collect();
    let neg: Vec<&crate::window::FeatureRow> = m.rows.iter().filter(|r| r.label == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::DegenerateClass(format!(
            "{} {} split has {} positives / {} negatives",
            m.env,
            m.pipeline,
            pos.len(),
            neg.len()
        )));
    }
    let d = m.feature_names.len();
    let mean_of = |rows: &[&crate::window::FeatureRow]| -> Vec<f64> {
        let mut acc = vec![0.0f64; d];
        for r in rows {
            let std = model.standardized(&r.features);
            for (a, v) in acc.iter_mut().zip(&std) {
                *a += v;
            }
        }
        acc.into_iter().map(|a| a / rows.len() as f64).collect()
    };
    let mp = mean_of(&pos);
    let mn = mean_of(&neg);
    Ok(mp.iter().zip(&mn).map(|(p, n)| p - n).collect())
}

/// Compare per-feature class-conditional direction between the training
/// environment and the transfer environment, on standardized features, and
/// flag score-level polarity inversion.
pub fn orientation_diagnostic(
    model: &LogisticModel,
    train_a: &FeatureMatrix,
    test_b: &FeatureMatrix,
    scores_b: &[f64],
    config_fingerprint: &str,
) -> Result<OrientationReport, EvalError> {
    assert_eq!(
        train_a.feature_names, test_b.feature_names,
        "matrices must share feature names"
    );
    let delta_a = class_conditional_deltas(train_a, model)?;
    let delta_b = class_conditional_deltas(test_b, model)?;

    let features: Vec<FeatureOrientation> = train_a
        .feature_names
        .iter()
        .zip(delta_a.iter().zip(&delta_b))
        .map(|(name, (da, db))| {
            let (sa, sb) = (sign_with_dead_band(*da), sign_with_dead_band(*db));
            FeatureOrientation {
                feature: name.clone(),
                delta_a: *da,
                delta_b: *db,
                sign_agree: sa == 0 || sb == 0 || sa == sb,
            }
        })
        .collect();
    let n_sign_disagreements = features.iter().filter(|f| !f.sign_agree).count();

    let labels = test_b.labels();
    let a = auroc(scores_b, &labels);
    let inverted: Vec<f64> = scores_b.iter().map(|s| -s).collect();
    let a_inv = auroc(&inverted, &labels);
    Ok(OrientationReport {
        task: test_b.task.clone(),
        method: test_b.pipeline.clone(),
        features,
        n_sign_disagreements,
        auroc: a.value,
        auroc_inverted: a_inv.value,
        polarity_inverted: a.value < 0.5 && a_inv.value > 0.5,
        config_fingerprint: config_fingerprint.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Producer-divergence viability protocol
// ---------------------------------------------------------------------------

/// Multichannel novelty score of one window: per channel, the mean
/// Laplace-smoothed surprisal of the window's tokens against the train
/// history; the window score averages the nonempty channels. `None` when
/// every channel is empty.
pub fn novelty_score(
    edges: &[&CanonicalRelationship],
    hist: &TrainHistory,
    channels: &[Channel],
) -> Option<f64> {
    let mut channel_scores = Vec::with_capacity(channels.len());
    for ch in channels {
        let tokens: Vec<&str> = edges
            .iter()
            .filter(|e| Channel::of(e.rel_type) == Some(*ch))
            .map(|e| e.dst.as_str())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let s = tokens
            .iter()
            .map(|t| hist.token_surprisal(*ch, t))
            .sum::<f64>()
            / tokens.len() as f64;
        channel_scores.push(s);
    }
    if channel_scores.is_empty() {
        None
    } else {
        Some(channel_scores.iter().sum::<f64>() / channel_scores.len() as f64)
    }
}

/// Per-split score summary inside a [`ViabilityReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub n_windows: usize,
    pub excluded_empty: usize,
    pub above_threshold: usize,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
    pub channel_nonempty_rate: BTreeMap<String, f64>,
}

/// Train-only quantile thresholding of multichannel novelty scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViabilityReport {
    pub window_minutes: u32,
    pub quantile: f64,
    pub gate: usize,
    pub train_threshold: f64,
    pub train: ScoreSummary,
    pub test: ScoreSummary,
    pub verdict: String,
    pub config_fingerprint: String,
}

impl ViabilityReport {
    pub fn viable(&self) -> bool {
        self.verdict == "viable"
    }
}

fn summarize(
    scores: &[f64],
    excluded: usize,
    threshold: f64,
    channel_rates: BTreeMap<String, f64>,
) -> ScoreSummary {
    ScoreSummary {
        n_windows: scores.len(),
        excluded_empty: excluded,
        above_threshold: scores.iter().filter(|s| **s > threshold).count(),
        p50: quantile(scores, 0.5),
        p90: quantile(scores, 0.9),
        max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        channel_nonempty_rate: channel_rates,
    }
}

/// Score-level core of the protocol, exposed for metamorphic testing: the
/// threshold is the interpolated `q`-quantile of the train scores and never
/// touches test data.
pub fn viability_from_scores(
    train_scores: &[f64],
    test_scores: &[f64],
    q: f64,
    gate: usize,
) -> (f64, usize, usize) {
    let tau = quantile(train_scores, q);
    let train_above = train_scores.iter().filter(|s| **s > tau).count();
    let test_above = test_scores.iter().filter(|s| **s > tau).count();
    let _ = gate;
    (tau, train_above, test_above)
}

struct SplitScores {
    scores: Vec<f64>,
    excluded: usize,
    channel_rates: BTreeMap<String, f64>,
}

fn score_split(
    g: &SubstrateGraph,
    idx: &WindowIndexer,
    hist: &TrainHistory,
    channels: &[Channel],
) -> SplitScores {
    let mut by_window: BTreeMap<i64, Vec<&CanonicalRelationship>> = BTreeMap::new();
    for e in g.edges() {
        by_window.entry(idx.assign(e.time.start)).or_default().push(e);
    }
    let (lo, hi) = match (by_window.keys().next(), by_window.keys().last()) {
        (Some(lo), Some(hi)) => (*lo, *hi),
        _ => {
            return SplitScores {
                scores: Vec::new(),
                excluded: 0,
                channel_rates: BTreeMap::new(),
            }
        }
    };
    let empty: Vec<&CanonicalRelationship> = Vec::new();
    let mut scores = Vec::new();
    let mut excluded = 0usize;
    let mut nonempty: BTreeMap<Channel, usize> = BTreeMap::new();
    let mut total = 0usize;
    for w in lo..=hi {
        let edges = by_window.get(&w).unwrap_or(&empty);
        total += 1;
        for ch in channels {
            if edges.iter().any(|e| Channel::of(e.rel_type) == Some(*ch)) {
                *nonempty.entry(*ch).or_default() += 1;
            }
        }
        match novelty_score(edges, hist, channels) {
            Some(s) => scores.push(s),
            None => excluded += 1,
        }
    }
    let channel_rates = channels
        .iter()
        .map(|ch| {
            (
                ch.as_str().to_string(),
                nonempty.get(ch).copied().unwrap_or(0) as f64 / total.max(1) as f64,
            )
        })
        .collect();
    SplitScores {
        scores,
        excluded,
        channel_rates,
    }
}

/// Full protocol over two ingested producers: fit token history on the
/// train producer, score both splits per window, threshold at the train
/// quantile, and gate the verdict on test positives.
pub fn viability_protocol(
    train: &SubstrateGraph,
    test: &SubstrateGraph,
    idx: &WindowIndexer,
    q: f64,
    gate: usize,
    channels: &[Channel],
    config_fingerprint: &str,
) -> ViabilityReport {
    let train_windows: Vec<i64> = {
        let mut ws: std::collections::BTreeSet<i64> = std::collections::BTreeSet::new();
        for e in train.edges() {
            ws.insert(idx.assign(e.time.start));
        }
        ws.into_iter().collect()
    };
    let descriptor = SplitDescriptor {
        producer: "viability-train".to_string(),
        task: "PD".to_string(),
        window_ids: train_windows,
    };
    let hist = TrainHistory::fit(train, idx, &descriptor);

    let train_split = score_split(train, idx, &hist, channels);
    let test_split = score_split(test, idx, &hist, channels);
    let (tau, _, test_above) =
        viability_from_scores(&train_split.scores, &test_split.scores, q, gate);

    let verdict = if test_above >= gate { "viable" } else { "not-viable" };
    ViabilityReport {
        window_minutes: idx.window_minutes,
        quantile: q,
        gate,
        train_threshold: tau,
        train: summarize(&train_split.scores, train_split.excluded, tau, train_split.channel_rates),
        test: summarize(&test_split.scores, test_split.excluded, tau, test_split.channel_rates),
        verdict: verdict.to_string(),
        config_fingerprint: config_fingerprint.to_string(),
    }
}
