//! Tumbling windows, train-only histories, and the two feature pipelines.
//!
//! Both pipelines consume the identical half-open window partition from one
//! [`WindowIndexer`]. The event-centric baseline binds raw column names and
//! raw value strings directly, which is its deliberate fragility. The
//! substrate pipeline computes per-actor (LM) or per-window (ZDT) statistics
//! over canonical edges, with novelty and rarity measured against a
//! [`TrainHistory`] fitted strictly on the training split; histories carry a
//! split fingerprint and featurization refuses a history fitted on the
//! wrong split.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{CanonicalRelationship, EntityType, RelationshipType, SubstrateGraph};
use crate::synth::WindowLabel;
use crate::util::{fingerprint, indexed_map};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("history is unfitted (no training windows)")]
    UnfittedHistory,
    #[error("history fingerprint mismatch: expected {expected}, got {actual}")]
    FingerprintMismatch { expected: String, actual: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Deterministic tumbling-window assignment over half-open intervals
/// `[k*w, (k+1)*w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowIndexer {
    pub window_minutes: u32,
    pub origin: i64,
}

impl WindowIndexer {
    pub fn new(window_minutes: u32) -> WindowIndexer {
        WindowIndexer {
            window_minutes,
            origin: 0,
        }
    }

    pub fn width_seconds(&self) -> i64 {
        self.window_minutes as i64 * 60
    }

    pub fn assign(&self, t: i64) -> i64 {
        (t - self.origin).div_euclid(self.width_seconds())
    }

    pub fn window_start(&self, window_id: i64) -> i64 {
        self.origin + window_id * self.width_seconds()
    }
}

/// Which training split a history was fitted on. The fingerprint covers the
/// producer, task, and the exact window-id list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub producer: String,
    pub task: String,
    pub window_ids: Vec<i64>,
}

impl SplitDescriptor {
    pub fn fingerprint(&self) -> String {
        let blob = serde_json::to_string(self).expect("descriptor serializes");
        fingerprint(blob.as_bytes())
    }
}

/// Token channels used by the producer-divergence viability protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Process,
    File,
    Network,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Process, Channel::File, Channel::Network];

    pub fn of(rel: RelationshipType) -> Option<Channel> {
        use RelationshipType as R;
        match rel {
            R::Executes | R::Spawns => Some(Channel::Process),
            R::Reads | R::Writes | R::Modifies => Some(Channel::File),
            R::ConnectsTo => Some(Channel::Network),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Process => "process",
            Channel::File => "file",
            Channel::Network => "network",
        }
    }
}

type EdgeKey = (String, String, RelationshipType);

/// History statistics computed strictly on the training split: seen edge
/// keys and counts for novelty/rarity, and per-channel token counts for the
/// viability protocol.
#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub edge_counts: BTreeMap<EdgeKey, u64>,
    pub n_observations: u64,
    pub token_counts: BTreeMap<Channel, BTreeMap<String, u64>>,
    pub token_totals: BTreeMap<Channel, u64>,
    pub split_fingerprint: String,
    pub fitted_windows: usize,
}

impl TrainHistory {
    /// Sequential fold over the training windows of `g`.
    pub fn fit(g: &SubstrateGraph, idx: &WindowIndexer, descriptor: &SplitDescriptor) -> TrainHistory {
        let wanted: BTreeSet<i64> = descriptor.window_ids.iter().copied().collect();
        let mut edge_counts: BTreeMap<EdgeKey, u64> = BTreeMap::new();
        let mut token_counts: BTreeMap<Channel, BTreeMap<String, u64>> = BTreeMap::new();
        let mut token_totals: BTreeMap<Channel, u64> = BTreeMap::new();
        let mut n = 0u64;
        for e in g.edges() {
            if !wanted.contains(&idx.assign(e.time.start)) {
                continue;
            }
            *edge_counts.entry(e.key()).or_default() += 1;
            n += 1;
            if let Some(ch) = Channel::of(e.rel_type) {
                *token_counts.entry(ch).or_default().entry(e.dst.clone()).or_default() += 1;
                *token_totals.entry(ch).or_default() += 1;
            }
        }
        TrainHistory {
            edge_counts,
            n_observations: n,
            token_counts,
            token_totals,
            split_fingerprint: descriptor.fingerprint(),
            fitted_windows: descriptor.window_ids.len(),
        }
    }

    pub fn seen(&self, key: &EdgeKey) -> bool {
        self.edge_counts.contains_key(key)
    }

    pub fn distinct_keys(&self) -> u64 {
        self.edge_counts.len() as u64
    }

    /// Laplace-smoothed surprisal of one edge key:
    /// `-ln((count + 1) / (N + V))`.
    pub fn edge_surprisal(&self, key: &EdgeKey) -> f64 {
        let count = self.edge_counts.get(key).copied().unwrap_or(0);
        let denom = (self.n_observations + self.distinct_keys()) as f64;
        -(((count + 1) as f64) / denom).ln()
    }

    /// Laplace-smoothed surprisal of one channel token.
    pub fn token_surprisal(&self, channel: Channel, token: &str) -> f64 {
        let count = self
            .token_counts
            .get(&channel)
            .and_then(|m| m.get(token))
            .copied()
            .unwrap_or(0);
        let n = self.token_totals.get(&channel).copied().unwrap_or(0);
        let v = self
            .token_counts
            .get(&channel)
            .map(|m| m.len() as u64)
            .unwrap_or(0);
        -(((count + 1) as f64) / ((n + v) as f64)).ln()
    }
}

/// One feature row: a window (baseline, ZDT) or an actor-window (LM
/// substrate pipeline).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub window_id: i64,
    pub actor: Option<String>,
    pub features: Vec<f64>,
    pub label: u8,
}

/// Rectangular feature matrix plus the provenance needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub pipeline: String,
    pub task: String,
    pub env: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
    /// The full window partition this matrix covers (shared across
    /// pipelines by construction).
    pub window_partition: Vec<i64>,
    pub split_fingerprint: String,
    pub history_fingerprint: String,
}

impl FeatureMatrix {
    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.rows.len() - self.positives()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// CSV serialization: one row per feature row, sorted, stable floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("window_id,env,pipeline,actor,label");
        for f in &self.feature_names {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                r.window_id,
                self.env,
                self.pipeline,
                r.actor.as_deref().unwrap_or(""),
                r.label
            ));
            for v in &r.features {
                out.push(',');
                out.push_str(&format_float(*v));
            }
            out.push('\n');
        }
        out
    }

    /// JSON sidecar recording pipeline, task, split and history
    /// fingerprints, and the frozen feature-name order.
    pub fn sidecar(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "pipeline": self.pipeline,
            "task": self.task,
            "env": self.env,
            "split_fingerprint": self.split_fingerprint,
            "history_fingerprint": self.history_fingerprint,
            "feature_names": self.feature_names,
            "rows": self.rows.len(),
        }))
        .expect("sidecar serializes")
    }
}

fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn label_map<'l>(labels: &'l [WindowLabel], idx: &WindowIndexer) -> BTreeMap<i64, &'l WindowLabel> {
    labels
        .iter()
        .map(|l| (idx.assign(l.window_start), l))
        .collect()
}

// ---------------------------------------------------------------------------
// Event-centric baseline
// ---------------------------------------------------------------------------

/// Raw column names the baseline binds directly, plus the fixed event-label
/// vocabulary its count features use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineBinding {
    pub ts: String,
    pub event: String,
    pub user: String,
    pub src_host: String,
    pub dst_host: String,
    pub dst_ip: String,
    pub event_labels: Vec<String>,
}

impl Default for BaselineBinding {
    fn default() -> Self {
        BaselineBinding {
            ts: "ts".into(),
            event: "event".into(),
            user: "user".into(),
            src_host: "src_host".into(),
            dst_host: "dst_host".into(),
            dst_ip: "dst_ip".into(),
            event_labels: vec!["logon".into(), "exec".into(), "conn".into()],
        }
    }
}

impl BaselineBinding {
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .event_labels
            .iter()
            .map(|l| format!("count_{l}"))
            .collect();
        names.extend(
            [
                "distinct_user",
                "distinct_dst",
                "max_events_per_actor",
                "burstiness",
                "burstiness_missing",
            ]
            .map(String::from),
        );
        names
    }
}

struct RawRow {
    t: i64,
    event: String,
    user: String,
    src_host: String,
    dst_host: String,
    dst_ip: String,
}

/// Windowed raw-field statistics straight off the file. Fails with
/// `MissingColumn` as soon as any bound column is absent from the header,
/// which is the schema-failure mode the perturbation study exercises.
pub fn baseline_features(
    raw_path: &Path,
    binding: &BaselineBinding,
    idx: &WindowIndexer,
    windows: &[i64],
    labels: &[WindowLabel],
    env: &str,
    task: &str,
    split_fingerprint: &str,
) -> Result<FeatureMatrix, FeatureError> {
    let mut rdr = csv::Reader::from_path(raw_path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize, FeatureError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FeatureError::MissingColumn(name.to_string()))
    };
    let c_ts = col(&binding.ts)?;
    let c_event = col(&binding.event)?;
    let c_user = col(&binding.user)?;
    let c_src = col(&binding.src_host)?;
    let c_dst_host = col(&binding.dst_host)?;
    let c_dst_ip = col(&binding.dst_ip)?;

    let mut by_window: BTreeMap<i64, Vec<RawRow>> = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        let raw_ts = row.get(c_ts).unwrap_or("");
        // the baseline binds the raw epoch encoding; anything else is the
        // schema-failure mode
        let t: i64 = raw_ts
            .parse()
            .map_err(|_| FeatureError::MissingColumn(binding.ts.clone()))?;
        by_window.entry(idx.assign(t)).or_default().push(RawRow {
            t,
            event: row.get(c_event).unwrap_or("").to_string(),
            user: row.get(c_user).unwrap_or("").to_string(),
            src_host: row.get(c_src).unwrap_or("").to_string(),
            dst_host: row.get(c_dst_host).unwrap_or("").to_string(),
            dst_ip: row.get(c_dst_ip).unwrap_or("").to_string(),
        });
    }

    let labels = label_map(labels, idx);
    let empty: Vec<RawRow> = Vec::new();
    let width = idx.width_seconds();
    let rows = indexed_map(windows, |_, w| {
        let recs = by_window.get(w).unwrap_or(&empty);
        let mut features = Vec::with_capacity(binding.event_labels.len() + 5);
        for l in &binding.event_labels {
            features.push(recs.iter().filter(|r| &r.event == l).count() as f64);
        }
        let distinct_user: BTreeSet<&str> = recs
            .iter()
            .map(|r| r.user.as_str())
            .filter(|u| !u.is_empty())
            .collect();
        features.push(distinct_user.len() as f64);
        let distinct_dst: BTreeSet<&str> = recs
            .iter()
            .flat_map(|r| [r.dst_host.as_str(), r.dst_ip.as_str()])
            .filter(|d| !d.is_empty())
            .collect();
        features.push(distinct_dst.len() as f64);
        let mut per_actor: BTreeMap<&str, usize> = BTreeMap::new();
        for r in recs {
            let actor = if r.user.is_empty() { r.src_host.as_str() } else { r.user.as_str() };
            if !actor.is_empty() {
                *per_actor.entry(actor).or_default() += 1;
            }
        }
        features.push(per_actor.values().max().copied().unwrap_or(0) as f64);
        // burstiness: max five-minute bucket over mean bucket
        let n_buckets = (width / 300).max(1) as usize;
        let mut buckets = vec![0usize; n_buckets];
        let wstart = idx.window_start(*w);
        for r in recs {
            let b = (((r.t - wstart) / 300).max(0) as usize).min(n_buckets - 1);
            buckets[b] += 1;
        }
        let total: usize = buckets.iter().sum();
        if total == 0 {
            features.push(0.0);
            features.push(1.0); // burstiness_missing
        } else {
            let mean = total as f64 / n_buckets as f64;
            features.push(*buckets.iter().max().expect("nonempty") as f64 / mean);
            features.push(0.0);
        }
        FeatureRow {
            window_id: *w,
            actor: None,
            features,
            label: labels.get(w).map_or(0, |l| l.label),
        }
    });

    Ok(FeatureMatrix {
        pipeline: "baseline".into(),
        task: task.into(),
        env: env.into(),
        feature_names: binding.feature_names(),
        rows,
        window_partition: windows.to_vec(),
        split_fingerprint: split_fingerprint.to_string(),
        history_fingerprint: String::new(),
    })
}

// ---------------------------------------------------------------------------
// Substrate pipeline
// ---------------------------------------------------------------------------

pub const CSTS_LM_FEATURES: [&str; 6] = [
    "out_degree",
    "new_edge_count",
    "new_edge_rate",
    "two_hop",
    "rarity",
    "priv_spread",
];

pub const CSTS_ZDT_FEATURES: [&str; 9] = [
    "flow_count",
    "distinct_dst",
    "max_host_fanout",
    "active_hosts",
    "new_edge_rate",
    "new_edge_rate_missing",
    "rarity",
    "rarity_missing",
    "two_hop",
];

fn check_history(hist: &TrainHistory, expected: &SplitDescriptor) -> Result<(), FeatureError> {
    if hist.fitted_windows == 0 {
        return Err(FeatureError::UnfittedHistory);
    }
    let expected_fp = expected.fingerprint();
    if hist.split_fingerprint != expected_fp {
        return Err(FeatureError::FingerprintMismatch {
            expected: expected_fp,
            actual: hist.split_fingerprint.clone(),
        });
    }
    Ok(())
}

fn communities(g: &SubstrateGraph) -> BTreeMap<&str, &str> {
    g.entities()
        .filter_map(|e| {
            e.attributes
                .get("community")
                .and_then(|v| v.as_str())
                .map(|c| (e.id.as_str(), c))
        })
        .collect()
}

fn edges_by_window<'g>(
    g: &'g SubstrateGraph,
    idx: &WindowIndexer,
) -> BTreeMap<i64, Vec<&'g CanonicalRelationship>> {
    let mut map: BTreeMap<i64, Vec<&CanonicalRelationship>> = BTreeMap::new();
    for e in g.edges() {
        map.entry(idx.assign(e.time.start)).or_default().push(e);
    }
    map
}

fn injected_ids<'l>(labels: &'l [WindowLabel], idx: &WindowIndexer) -> BTreeMap<i64, BTreeSet<&'l str>> {
    labels
        .iter()
        .map(|l| {
            (
                idx.assign(l.window_start),
                l.event_ids.iter().map(|s| s.as_str()).collect(),
            )
        })
        .collect()
}

fn edge_event_id<'e>(e: &'e CanonicalRelationship) -> Option<&'e str> {
    e.attributes.get("event_id").and_then(|v| v.as_str())
}

/// Identity-centric rows: one per (User actor, window) with canonical
/// degree, novelty, rarity, expansion, and community-crossing features.
#[allow(clippy::too_many_arguments)]
pub fn csts_features_lm(
    g: &SubstrateGraph,
    idx: &WindowIndexer,
    windows: &[i64],
    hist: &TrainHistory,
    expected: &SplitDescriptor,
    labels: &[WindowLabel],
    env: &str,
    split_fingerprint: &str,
) -> Result<FeatureMatrix, FeatureError> {
    check_history(hist, expected)?;
    let comm = communities(g);
    let by_window = edges_by_window(g, idx);
    let injected = injected_ids(labels, idx);
    let is_user =
        |id: &str| g.entity(id).map_or(false, |e| e.entity_type == EntityType::User);

    let empty: Vec<&CanonicalRelationship> = Vec::new();
    let per_window = indexed_map(windows, |_, w| {
        let edges = by_window.get(w).unwrap_or(&empty);
        let window_injected = injected.get(w);

        // per-actor grouping over User sources
        let mut actors: BTreeMap<&str, Vec<&CanonicalRelationship>> = BTreeMap::new();
        for e in edges {
            if is_user(&e.src) {
                actors.entry(e.src.as_str()).or_default().push(e);
            }
        }

        // auth destination hosts per actor, for the two-hop expansion
        let mut auth_hosts: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in edges {
            if e.rel_type == RelationshipType::AuthenticatesTo && is_user(&e.src) {
                auth_hosts.entry(e.src.as_str()).or_default().insert(e.dst.as_str());
            }
        }

        let mut rows = Vec::with_capacity(actors.len());
        for (actor, actor_edges) in &actors {
            let auth: Vec<&&CanonicalRelationship> = actor_edges
                .iter()
                .filter(|e| e.rel_type == RelationshipType::AuthenticatesTo)
                .collect();
            let out_degree = auth.iter().map(|e| e.dst.as_str()).collect::<BTreeSet<_>>().len();
            let new_edge_count = actor_edges.iter().filter(|e| !hist.seen(&e.key())).count();
            let new_edge_rate = new_edge_count as f64 / actor_edges.len() as f64;
            let rarity = actor_edges
                .iter()
                .map(|e| hist.edge_surprisal(&e.key()))
                .sum::<f64>()
                / actor_edges.len() as f64;

            // hosts reachable through users sharing a host with this actor
            let own: BTreeSet<&str> = auth_hosts.get(actor).cloned().unwrap_or_default();
            let mut two_hop: BTreeSet<&str> = BTreeSet::new();
            for (other, hosts) in &auth_hosts {
                if other == actor || hosts.is_disjoint(&own) {
                    continue;
                }
                for h in hosts {
                    if !own.contains(h) {
                        two_hop.insert(h);
                    }
                }
            }

            let actor_comm = comm.get(actor).copied();
            let priv_spread = auth
                .iter()
                .filter(|e| {
                    matches!(
                        (actor_comm, comm.get(e.dst.as_str())),
                        (Some(a), Some(b)) if a != *b
                    )
                })
                .map(|e| e.dst.as_str())
                .collect::<BTreeSet<_>>()
                .len();

            let label = window_injected.map_or(0, |ids| {
                u8::from(
                    actor_edges
                        .iter()
                        .any(|e| edge_event_id(e).map_or(false, |id| ids.contains(id))),
                )
            });

            rows.push(FeatureRow {
                window_id: *w,
                actor: Some(actor.to_string()),
                features: vec![
                    out_degree as f64,
                    new_edge_count as f64,
                    new_edge_rate,
                    two_hop.len() as f64,
                    rarity,
                    priv_spread as f64,
                ],
                label,
            });
        }
        rows
    });

    Ok(FeatureMatrix {
        pipeline: "csts".into(),
        task: "LM".into(),
        env: env.into(),
        feature_names: CSTS_LM_FEATURES.map(String::from).to_vec(),
        rows: per_window.into_iter().flatten().collect(),
        window_partition: windows.to_vec(),
        split_fingerprint: split_fingerprint.to_string(),
        history_fingerprint: hist.split_fingerprint.clone(),
    })
}

/// Flow-centric rows: one per window over the canonical CONNECTS_TO
/// subgraph.
#[allow(clippy::too_many_arguments)]
pub fn csts_features_zdt(
    g: &SubstrateGraph,
    idx: &WindowIndexer,
    windows: &[i64],
    hist: &TrainHistory,
    expected: &SplitDescriptor,
    labels: &[WindowLabel],
    env: &str,
    split_fingerprint: &str,
) -> Result<FeatureMatrix, FeatureError> {
    csts_features_zdt_with(
        g,
        idx,
        windows,
        hist,
        expected,
        labels,
        env,
        split_fingerprint,
        true,
    )
}

/// Sequential twin of [`csts_features_zdt`]. Byte-identical output; the
/// bench suite compares the two.
#[allow(clippy::too_many_arguments)]
pub fn csts_features_zdt_seq(
    g: &SubstrateGraph,
    idx: &WindowIndexer,
    windows: &[i64],
    hist: &TrainHistory,
    expected: &SplitDescriptor,
    labels: &[WindowLabel],
    env: &str,
    split_fingerprint: &str,
) -> Result<FeatureMatrix, FeatureError> {
    csts_features_zdt_with(
        g,
        idx,
        windows,
        hist,
        expected,
        labels,
        env,
        split_fingerprint,
        false,
    )
}

#[allow(clippy::too_many_arguments)]
fn csts_features_zdt_with(
    g: &SubstrateGraph,
    idx: &WindowIndexer,
    windows: &[i64],
    hist: &TrainHistory,
    expected: &SplitDescriptor,
    labels: &[WindowLabel],
    env: &str,
    split_fingerprint: &str,
    use_parallel: bool,
) -> Result<FeatureMatrix, FeatureError> {
    check_history(hist, expected)?;
    let by_window = edges_by_window(g, idx);
    let labels = label_map(labels, idx);

    let empty: Vec<&CanonicalRelationship> = Vec::new();
    let row_for = |_: usize, w: &i64| -> FeatureRow {
        let flows: Vec<&&CanonicalRelationship> = by_window
            .get(w)
            .unwrap_or(&empty)
            .iter()
            .filter(|e| e.rel_type == RelationshipType::ConnectsTo)
            .collect();
        let flow_count = flows.len();
        let distinct_dst = flows.iter().map(|e| e.dst.as_str()).collect::<BTreeSet<_>>().len();
        let mut fanout: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &flows {
            fanout.entry(e.src.as_str()).or_default().insert(e.dst.as_str());
        }
        let max_host_fanout = fanout.values().map(|s| s.len()).max().unwrap_or(0);
        let active_hosts = fanout.len();
        // destinations reachable at two hops: endpoints shared between hosts
        let shared_endpoints = {
            let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
            for dsts in fanout.values() {
                for d in dsts {
                    *seen.entry(d).or_default() += 1;
                }
            }
            seen.values().filter(|c| **c > 1).count()
        };

        let (new_edge_rate, new_missing, rarity, rarity_missing) = if flow_count == 0 {
            (0.0, 1.0, 0.0, 1.0)
        } else {
            let new = flows.iter().filter(|e| !hist.seen(&e.key())).count();
            let rarity = flows
                .iter()
                .map(|e| hist.edge_surprisal(&e.key()))
                .sum::<f64>()
                / flow_count as f64;
            (new as f64 / flow_count as f64, 0.0, rarity, 0.0)
        };

        FeatureRow {
            window_id: *w,
            actor: None,
            features: vec![
                flow_count as f64,
                distinct_dst as f64,
                max_host_fanout as f64,
                active_hosts as f64,
                new_edge_rate,
                new_missing,
                rarity,
                rarity_missing,
                shared_endpoints as f64,
            ],
            label: labels.get(w).map_or(0, |l| l.label),
        }
    };
    let rows = if use_parallel {
        indexed_map(windows, row_for)
    } else {
        crate::util::indexed_map_seq(windows, row_for)
    };

    Ok(FeatureMatrix {
        pipeline: "csts".into(),
        task: "ZDT".into(),
        env: env.into(),
        feature_names: CSTS_ZDT_FEATURES.map(String::from).to_vec(),
        rows,
        window_partition: windows.to_vec(),
        split_fingerprint: split_fingerprint.to_string(),
        history_fingerprint: hist.split_fingerprint.clone(),
    })
}
