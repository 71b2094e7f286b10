//! Ranking and threshold metrics with exact tie handling, plus the seeded
//! bootstrap.
//!
//! AUROC uses average ranks, so the numerator is always an exact multiple
//! of one half; together with a single final division this makes the
//! complement identity `auroc(s) + auroc(-s) = 1` hold exactly under the
//! half-credit tie rule.

use serde::{Deserialize, Serialize};

use crate::util::{indexed_map, indexed_map_seq, subseed};

/// AUROC value plus a degenerate flag for single-class inputs (reported as
/// zero, mirroring schema-failure rows).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Auroc {
    pub value: f64,
    pub degenerate: bool,
}

/// Probability that a random positive outranks a random negative, ties
/// counted half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Auroc {
    debug_assert_eq!(scores.len(), labels.len());
    let p = labels.iter().filter(|l| **l == 1).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Auroc {
            value: 0.0,
            degenerate: true,
        };
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // average ranks within tie groups; ranks are 1-based
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (p * (p + 1)) as f64 / 2.0;
    Auroc {
        value: u / (p * n) as f64,
        degenerate: false,
    }
}

/// The fixed sweep grid: thresholds 0.00, 0.05, ..., 1.00.
pub fn sweep_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// F1 of predicting positive where `score >= threshold`; 0/0 counts as 0.
pub fn f1_at(scores: &[f64], labels: &[u8], threshold: f64) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fnn = 0usize;
    for (s, l) in scores.iter().zip(labels) {
        let pred = *s >= threshold;
        match (pred, *l) {
            (true, 1) => tp += 1,
            (true, 0) => fp += 1,
            (false, 1) => fnn += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fnn) as f64
}

pub fn precision_recall_at(scores: &[f64], labels: &[u8], threshold: f64) -> (f64, f64) {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fnn = 0usize;
    for (s, l) in scores.iter().zip(labels) {
        let pred = *s >= threshold;
        match (pred, *l) {
            (true, 1) => tp += 1,
            (true, 0) => fp += 1,
            (false, 1) => fnn += 1,
            _ => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fnn == 0 { 0.0 } else { tp as f64 / (tp + fnn) as f64 };
    (precision, recall)
}

/// Max F1 over the fixed grid and the smallest threshold achieving it.
pub fn best_f1_sweep(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    let mut best = (0.0f64, 0.0f64);
    let mut first = true;
    for t in sweep_grid() {
        let f1 = f1_at(scores, labels, t);
        if first || f1 > best.0 {
            best = (f1, t);
            first = false;
        }
    }
    best
}

/// Interpolated quantile (linear between order statistics) of a sorted or
/// unsorted sample. Empty input yields zero.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Metric resampled by the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Auroc,
    F1At05,
}

/// Percentile bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub lo: f64,
    pub hi: f64,
    /// Resamples skipped because only one class survived.
    pub degenerate_resamples: usize,
}

fn resample_metric(scores: &[f64], labels: &[u8], metric: MetricKind, seed: u64) -> Option<f64> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = scores.len();
    let mut s = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        s.push(scores[i]);
        l.push(labels[i]);
    }
    match metric {
        MetricKind::Auroc => {
            let a = auroc(&s, &l);
            (!a.degenerate).then_some(a.value)
        }
        MetricKind::F1At05 => {
            if l.iter().all(|x| *x == 0) || l.iter().all(|x| *x == 1) {
                None
            } else {
                Some(f1_at(&s, &l, 0.5))
            }
        }
    }
}

fn ci_from_samples(mut kept: Vec<f64>, skipped: usize) -> CiResult {
    if kept.is_empty() {
        return CiResult {
            lo: 0.0,
            hi: 0.0,
            degenerate_resamples: skipped,
        };
    }
    kept.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    CiResult {
        lo: quantile(&kept, 0.025),
        hi: quantile(&kept, 0.975),
        degenerate_resamples: skipped,
    }
}

/// Percentile bootstrap over `b` resamples of the rows, with one derived
/// seed per resample so the result is independent of worker count.
pub fn bootstrap_ci(
    scores: &[f64],
    labels: &[u8],
    metric: MetricKind,
    b: usize,
    seed: u64,
) -> CiResult {
    assert!(b >= 100, "bootstrap needs at least 100 resamples");
    if scores.is_empty() {
        return CiResult {
            lo: 0.0,
            hi: 0.0,
            degenerate_resamples: b,
        };
    }
    let indices: Vec<usize> = (0..b).collect();
    let samples = indexed_map(&indices, |_, i| {
        resample_metric(scores, labels, metric, subseed(seed, &format!("bootstrap-{i}")))
    });
    let skipped = samples.iter().filter(|s| s.is_none()).count();
    ci_from_samples(samples.into_iter().flatten().collect(), skipped)
}

/// Sequential twin of [`bootstrap_ci`]; the bench compares the two, and a
/// test pins byte-equality of their outputs.
pub fn bootstrap_ci_seq(
    scores: &[f64],
    labels: &[u8],
    metric: MetricKind,
    b: usize,
    seed: u64,
) -> CiResult {
    assert!(b >= 100, "bootstrap needs at least 100 resamples");
    if scores.is_empty() {
        return CiResult {
            lo: 0.0,
            hi: 0.0,
            degenerate_resamples: b,
        };
    }
    let indices: Vec<usize> = (0..b).collect();
    let samples = indexed_map_seq(&indices, |_, i| {
        resample_metric(scores, labels, metric, subseed(seed, &format!("bootstrap-{i}")))
    });
    let skipped = samples.iter().filter(|s| s.is_none()).count();
    ci_from_samples(samples.into_iter().flatten().collect(), skipped)
}

/// O(P*N) pairwise oracle for AUROC. Test-only reference; kept here so the
/// acceptance suite and property tests share one definition.
pub fn auroc_bruteforce(scores: &[f64], labels: &[u8]) -> f64 {
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l == 1)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l == 0)
        .map(|(s, _)| *s)
        .collect();
    let mut numerator_halves: u64 = 0; // counts in units of one half
    for p in &pos {
        for n in &neg {
            if p > n {
                numerator_halves += 2;
            } else if p == n {
                numerator_halves += 1;
            }
        }
    }
    (numerator_halves as f64 / 2.0) / (pos.len() * neg.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    #[test]
    fn perfect_ranking_is_one() {
        let a = auroc(&[0.9, 0.1], &[1, 0]);
        assert_eq!(a.value, 1.0);
        assert!(!a.degenerate);
    }

    #[test]
    fn all_ties_are_half() {
        let a = auroc(&[0.5, 0.5, 0.5, 0.5], &[1, 0, 1, 0]);
        assert_eq!(a.value, 0.5);
    }

    #[test]
    fn four_point_example_matches_pair_counting() {
        // pairs: 3 wins, 0 ties, 1 loss -> 3/4
        let scores = [0.8, 0.6, 0.4, 0.3];
        let labels = [1, 0, 1, 0];
        let a = auroc(&scores, &labels);
        assert_eq!(a.value, 0.75);
        assert_eq!(a.value, auroc_bruteforce(&scores, &labels));
    }

    #[test]
    fn single_class_is_degenerate_zero() {
        let a = auroc(&[0.3, 0.4], &[0, 0]);
        assert!(a.degenerate);
        assert_eq!(a.value, 0.0);
    }

    #[test]
    fn matches_bruteforce_and_complement_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.gen_range(2..=50);
            let mut scores: Vec<f64> = Vec::with_capacity(n);
            let mut labels: Vec<u8> = Vec::with_capacity(n);
            for _ in 0..n {
                // coarse grid to force ties
                scores.push((rng.gen_range(0..8) as f64) / 7.0);
                labels.push(u8::from(rng.gen_bool(0.4)));
            }
            if labels.iter().all(|l| *l == 0) || labels.iter().all(|l| *l == 1) {
                continue;
            }
            let a = auroc(&scores, &labels).value;
            assert_eq!(a, auroc_bruteforce(&scores, &labels));
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            assert_eq!(a + auroc(&neg, &labels).value, 1.0, "exact complement");
        }
    }

    #[test]
    fn sweep_example_from_first_principles() {
        // labels [1,0,1], scores [0.9,0.8,0.2]: all-positive at t=0 gives
        // P=2/3, R=1 -> F1 = 0.8; nothing on the grid beats it
        let (best, thr) = best_f1_sweep(&[0.9, 0.8, 0.2], &[1, 0, 1]);
        assert!((best - 0.8).abs() < 1e-12);
        assert_eq!(thr, 0.0);
    }

    #[test]
    fn sweep_finds_perfect_separation() {
        let (best, _) = best_f1_sweep(&[0.9, 0.8, 0.1], &[1, 1, 0]);
        assert_eq!(best, 1.0);
    }

    #[test]
    fn sweep_with_no_positives_is_zero() {
        let (best, thr) = best_f1_sweep(&[0.9, 0.1], &[0, 0]);
        assert_eq!(best, 0.0);
        assert_eq!(thr, 0.0, "smallest threshold achieving the max");
    }

    #[test]
    fn sweep_dominates_fixed_threshold() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..40);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.3))).collect();
            let (best, _) = best_f1_sweep(&scores, &labels);
            assert!(best >= f1_at(&scores, &labels, 0.5) - 1e-15);
        }
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.5), 2.0);
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0], 0.5), 1.5);
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.4), 1.6000000000000001);
    }

    #[test]
    fn bootstrap_is_deterministic_and_matches_sequential() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..80).map(|_| rng.gen::<f64>()).collect();
        let labels: Vec<u8> = (0..80).map(|i| u8::from(i % 4 == 0)).collect();
        let a = bootstrap_ci(&scores, &labels, MetricKind::Auroc, 1000, 42);
        let b = bootstrap_ci(&scores, &labels, MetricKind::Auroc, 1000, 42);
        let c = bootstrap_ci_seq(&scores, &labels, MetricKind::Auroc, 1000, 42);
        assert_eq!(a, b, "same seed, same interval");
        assert_eq!(a, c, "parallel equals sequential");
        assert_ne!(
            a,
            bootstrap_ci(&scores, &labels, MetricKind::Auroc, 1000, 43)
        );
    }

    #[test]
    fn bootstrap_interval_contains_point_estimate_when_well_populated() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let pos = i % 3 == 0;
            labels.push(u8::from(pos));
            scores.push(if pos {
                0.6 + 0.4 * rng.gen::<f64>()
            } else {
                0.4 * rng.gen::<f64>()
            });
        }
        let point = auroc(&scores, &labels).value;
        let ci = bootstrap_ci(&scores, &labels, MetricKind::Auroc, 1000, 42);
        assert!(ci.lo <= point && point <= ci.hi, "{ci:?} vs {point}");
        assert_eq!(ci.degenerate_resamples, 0);
    }

    #[test]
    fn bootstrap_collapses_on_constant_metric() {
        // scores identical per class and cleanly separated: every resample
        // that keeps both classes has AUROC exactly 1
        let mut scores = vec![0.9; 50];
        scores.extend(vec![0.1; 50]);
        let mut labels = vec![1u8; 50];
        labels.extend(vec![0u8; 50]);
        let ci = bootstrap_ci(&scores, &labels, MetricKind::Auroc, 500, 42);
        assert_eq!((ci.lo, ci.hi), (1.0, 1.0));
    }
}
