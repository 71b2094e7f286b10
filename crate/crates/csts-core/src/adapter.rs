//! Thin telemetry adapters: parse raw CSV/JSONL files, recover logical
//! fields through ordered alias lists, and map records through identity
//! resolution into graph deltas.
//!
//! This is the only layer allowed to know raw field names. Vendor renames
//! are absorbed by alias lists; a deleted event-type column is recovered
//! from per-kind sidecar fields; records that cannot be mapped become
//! categorized skips, never hard failures.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{
    AttributeValue, CanonicalEntity, CanonicalRelationship, EntityType, GraphDelta, Provenance,
    RelationshipType, TimeSpan,
};
use crate::identity::{resolve, RawObservation, ResolutionPolicy};

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown format {0} (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("adapter spec {name}: {reason}")]
    SpecRejected { name: String, reason: String },
}

/// Raw input formats the adapters accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawFormat {
    Csv,
    Jsonl,
}

impl RawFormat {
    pub fn from_path(path: &Path) -> Result<RawFormat, AdapterError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(RawFormat::Csv),
            Some("jsonl") | Some("ndjson") => Ok(RawFormat::Jsonl),
            other => Err(AdapterError::UnknownFormat(
                other.unwrap_or("<none>").to_string(),
            )),
        }
    }
}

/// One raw observation: free-form field map plus recovered timestamps.
/// Empty-valued fields are dropped at parse time, so "present" always means
/// present and non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub producer: String,
    pub raw_fields: BTreeMap<String, String>,
    pub t_e: i64,
    pub t_i: i64,
    pub line_no: usize,
}

/// Why a line or record produced no graph delta. Reasons partition all
/// non-emitting records and are surfaced in the ingest report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkipReason {
    MalformedLine,
    BadTimestamp,
    UnknownEventKind,
    UnresolvableSrc,
    UnresolvableDst,
}

impl SkipReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkipReason::MalformedLine => "malformed line",
            SkipReason::BadTimestamp => "timestamp",
            SkipReason::UnknownEventKind => "unknown event kind",
            SkipReason::UnresolvableSrc => "unresolvable src",
            SkipReason::UnresolvableDst => "unresolvable dst",
        }
    }
}

/// Parse outcome for one input line.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedLine {
    Record(TelemetryRecord),
    Skipped { line_no: usize, reason: SkipReason },
}

/// Accepted timestamp encodings, tried in declared order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    EpochSeconds,
    Iso8601,
}

impl TimestampFormat {
    fn parse(&self, raw: &str) -> Option<i64> {
        match self {
            TimestampFormat::EpochSeconds => raw.parse::<i64>().ok(),
            TimestampFormat::Iso8601 => chrono::DateTime::parse_from_rfc3339(raw)
                .ok()
                .map(|dt| dt.timestamp()),
        }
    }
}

/// How one raw event label maps into the substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventKind {
    pub rel_type: RelationshipType,
    pub src_field: String,
    pub src_type: EntityType,
    pub dst_field: String,
    pub dst_type: EntityType,
}

/// Declarative adapter specification for one raw schema flavor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub name: String,
    /// Substrate schema version this adapter declares compatibility with.
    pub schema_version: String,
    /// Logical field -> ordered list of accepted raw names (alias recovery).
    pub logical_fields: BTreeMap<String, Vec<String>>,
    /// Raw event label -> canonical mapping.
    pub event_kind_map: BTreeMap<String, EventKind>,
    /// Fallback when the event column itself is gone: first rule whose
    /// logical field is recoverable decides the kind.
    #[serde(default)]
    pub kind_inference: Vec<(String, String)>,
    pub timestamp_formats: Vec<TimestampFormat>,
}

impl AdapterSpec {
    pub fn from_json(json: &str) -> Result<AdapterSpec, AdapterError> {
        let spec: AdapterSpec = serde_json::from_str(json).map_err(|e| AdapterError::SpecRejected {
            name: "<json>".to_string(),
            reason: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Load-time gate: signature-compatible event mappings, a compatible
    /// schema version, and an alias entry for every required logical field.
    /// A spec revision that drops a required field without leaving a
    /// deprecation alias is rejected here, before any record is read.
    pub fn validate(&self) -> Result<(), AdapterError> {
        let reject = |reason: String| AdapterError::SpecRejected {
            name: self.name.clone(),
            reason,
        };
        if self.schema_version != crate::graph::SCHEMA_VERSION {
            return Err(reject(format!(
                "declares schema version {} but substrate is {}",
                self.schema_version,
                crate::graph::SCHEMA_VERSION
            )));
        }
        let mut required: Vec<&str> = vec!["ts"];
        if self.kind_inference.is_empty() {
            required.push("event");
        }
        for (label, kind) in &self.event_kind_map {
            if !kind.rel_type.admits(kind.src_type, kind.dst_type) {
                return Err(reject(format!(
                    "event kind {label}: {} does not admit ({} -> {})",
                    kind.rel_type, kind.src_type, kind.dst_type
                )));
            }
            required.push(&kind.src_field);
            required.push(&kind.dst_field);
        }
        for field in required {
            let has_alias = self
                .logical_fields
                .get(field)
                .map_or(false, |aliases| !aliases.is_empty());
            if !has_alias {
                return Err(reject(format!(
                    "required logical field {field} has no alias entry"
                )));
            }
        }
        if self.timestamp_formats.is_empty() {
            return Err(reject("no timestamp formats declared".to_string()));
        }
        Ok(())
    }
}

/// Resolve a logical field against a record: the first alias present in
/// declared order wins.
pub fn recover_field(rec: &TelemetryRecord, logical: &str, spec: &AdapterSpec) -> Option<String> {
    spec.logical_fields
        .get(logical)?
        .iter()
        .find_map(|alias| rec.raw_fields.get(alias).cloned())
}

fn recover_timestamp(fields: &BTreeMap<String, String>, spec: &AdapterSpec) -> Option<i64> {
    let aliases = spec.logical_fields.get("ts")?;
    let raw = aliases.iter().find_map(|a| fields.get(a))?;
    spec.timestamp_formats.iter().find_map(|f| f.parse(raw))
}

/// Parse a raw telemetry file into records, in file order. Malformed lines
/// and unparseable timestamps are yielded as skips; ingestion time is a
/// monotone per-file counter.
pub fn parse_records(
    path: &Path,
    format: RawFormat,
    spec: &AdapterSpec,
) -> Result<Vec<ParsedLine>, AdapterError> {
    let mut out = Vec::new();
    match format {
        RawFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
            let headers = rdr.headers()?.clone();
            for (i, row) in rdr.records().enumerate() {
                let line_no = i + 1;
                let row = match row {
                    Ok(r) => r,
                    Err(_) => {
                        out.push(ParsedLine::Skipped {
                            line_no,
                            reason: SkipReason::MalformedLine,
                        });
                        continue;
                    }
                };
                let mut fields = BTreeMap::new();
                for (h, v) in headers.iter().zip(row.iter()) {
                    if !v.is_empty() {
                        fields.insert(h.to_string(), v.to_string());
                    }
                }
                out.push(finish_record(fields, line_no, spec));
            }
        }
        RawFormat::Jsonl => {
            let text = std::fs::read_to_string(path)?;
            for (i, line) in text.lines().enumerate() {
                let line_no = i + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value = match serde_json::from_str(line) {
                    Ok(v) => v,
                    Err(_) => {
                        out.push(ParsedLine::Skipped {
                            line_no,
                            reason: SkipReason::MalformedLine,
                        });
                        continue;
                    }
                };
                let obj = match value.as_object() {
                    Some(o) => o,
                    None => {
                        out.push(ParsedLine::Skipped {
                            line_no,
                            reason: SkipReason::MalformedLine,
                        });
                        continue;
                    }
                };
                let mut fields = BTreeMap::new();
                for (k, v) in obj {
                    let s = match v {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Number(n) => n.to_string(),
                        serde_json::Value::Bool(b) => b.to_string(),
                        _ => continue,
                    };
                    if !s.is_empty() {
                        fields.insert(k.clone(), s);
                    }
                }
                out.push(finish_record(fields, line_no, spec));
            }
        }
    }
    Ok(out)
}

fn finish_record(
    fields: BTreeMap<String, String>,
    line_no: usize,
    spec: &AdapterSpec,
) -> ParsedLine {
    match recover_timestamp(&fields, spec) {
        Some(t_e) => ParsedLine::Record(TelemetryRecord {
            producer: spec.name.clone(),
            raw_fields: fields,
            t_e,
            t_i: line_no as i64,
            line_no,
        }),
        None => ParsedLine::Skipped {
            line_no,
            reason: SkipReason::BadTimestamp,
        },
    }
}

/// Outcome of adapting one record.
#[derive(Debug, Clone, PartialEq)]
pub enum Adapted {
    Delta(GraphDelta),
    Skipped(SkipReason),
}

fn event_kind<'s>(
    rec: &TelemetryRecord,
    spec: &'s AdapterSpec,
) -> Option<(&'s str, &'s EventKind)> {
    if let Some(label) = recover_field(rec, "event", spec) {
        return spec
            .event_kind_map
            .get_key_value(label.as_str())
            .map(|(k, v)| (k.as_str(), v));
    }
    for (field, label) in &spec.kind_inference {
        if recover_field(rec, field, spec).is_some() {
            if let Some((k, v)) = spec.event_kind_map.get_key_value(label.as_str()) {
                return Some((k.as_str(), v));
            }
        }
    }
    None
}

fn resolve_endpoint(
    rec: &TelemetryRecord,
    field: &str,
    ty: EntityType,
    spec: &AdapterSpec,
    policy: &ResolutionPolicy,
) -> Option<(String, String)> {
    let value = recover_field(rec, field, spec)?;
    let mut single = BTreeMap::new();
    single.insert(field.to_string(), value);
    let obs = RawObservation {
        producer: &rec.producer,
        entity_hint: ty,
        raw_fields: &single,
    };
    resolve(&obs, policy)
        .ok()
        .map(|o| (o.canonical_id, o.lineage_note))
}

/// Map one record into a graph delta: upsert both endpoints (Created ->
/// Active on first sight) and append one fully provenanced edge. Unmappable
/// records come back as categorized skips.
pub fn adapt(rec: &TelemetryRecord, spec: &AdapterSpec, policy: &ResolutionPolicy) -> Adapted {
    let (_, kind) = match event_kind(rec, spec) {
        Some(k) => k,
        None => return Adapted::Skipped(SkipReason::UnknownEventKind),
    };
    let (src_id, src_note) =
        match resolve_endpoint(rec, &kind.src_field, kind.src_type, spec, policy) {
            Some(r) => r,
            None => return Adapted::Skipped(SkipReason::UnresolvableSrc),
        };
    let (dst_id, dst_note) =
        match resolve_endpoint(rec, &kind.dst_field, kind.dst_type, spec, policy) {
            Some(r) => r,
            None => return Adapted::Skipped(SkipReason::UnresolvableDst),
        };

    let lineage_tag = format!("adapter:{}", spec.name);
    let mut src_entity = CanonicalEntity::new(&src_id, kind.src_type, rec.t_e)
        .with_lineage(&rec.producer, &lineage_tag)
        .with_lineage("identity", &src_note);
    let mut dst_entity = CanonicalEntity::new(&dst_id, kind.dst_type, rec.t_e)
        .with_lineage(&rec.producer, &lineage_tag)
        .with_lineage("identity", &dst_note);

    // Community attributes feed the privilege-spread feature downstream.
    if kind.src_type == EntityType::User {
        if let Some(c) = recover_field(rec, "community", spec) {
            src_entity = src_entity.with_attr("community", AttributeValue::Str(c));
        }
    }
    if kind.dst_type == EntityType::Host {
        if let Some(c) = recover_field(rec, "dst_community", spec) {
            dst_entity = dst_entity.with_attr("community", AttributeValue::Str(c));
        }
    }

    let time = TimeSpan::point(rec.t_e);
    let mut edge = CanonicalRelationship::new(
        &src_id,
        &dst_id,
        kind.rel_type,
        time,
        Provenance {
            source_system: rec.producer.clone(),
            ingestion_time: rec.t_i,
            valid_time: time,
            confidence: 1.0,
            lineage: vec![lineage_tag, "resolve".to_string()],
        },
    );
    if let Some(eid) = recover_field(rec, "event_id", spec) {
        edge = edge.with_attr("event_id", AttributeValue::Str(eid));
    }

    let delta = GraphDelta::at(rec.t_e)
        .upsert(src_entity)
        .upsert(dst_entity)
        .edge(edge);
    Adapted::Delta(delta)
}

/// Counts of emitted and skipped records for one ingested file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub producer: String,
    pub lines: usize,
    pub emitted: usize,
    pub skipped: BTreeMap<String, usize>,
}

impl IngestReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }
}

/// Parse, adapt, order by (event time, line), and apply a whole file into a
/// fresh substrate graph. Redundant re-upserts of unchanged entities are
/// pruned so the delta log stays proportional to the event stream.
pub fn ingest_file(
    path: &Path,
    format: RawFormat,
    spec: &AdapterSpec,
    policy: &ResolutionPolicy,
) -> Result<(crate::graph::SubstrateGraph, IngestReport), AdapterError> {
    spec.validate()?;
    let parsed = parse_records(path, format, spec)?;
    let mut report = IngestReport {
        producer: spec.name.clone(),
        lines: parsed.len(),
        ..Default::default()
    };

    let mut pending: Vec<(i64, usize, GraphDelta)> = Vec::new();
    for line in parsed {
        match line {
            ParsedLine::Skipped { reason, .. } => {
                *report.skipped.entry(reason.as_str().to_string()).or_default() += 1;
            }
            ParsedLine::Record(rec) => match adapt(&rec, spec, policy) {
                Adapted::Delta(d) => pending.push((rec.t_e, rec.line_no, d)),
                Adapted::Skipped(reason) => {
                    *report.skipped.entry(reason.as_str().to_string()).or_default() += 1;
                }
            },
        }
    }
    pending.sort_by_key(|(t, line, _)| (*t, *line));

    let mut g = crate::graph::SubstrateGraph::default();
    let mut seen: BTreeMap<String, CanonicalEntity> = BTreeMap::new();
    for (_, _, mut d) in pending {
        d.entity_upserts.retain(|e| {
            let changed = match seen.get(&e.id) {
                None => true,
                Some(prev) => upsert_changes(prev, e),
            };
            if changed {
                let merged = match seen.get(&e.id) {
                    None => e.clone(),
                    Some(prev) => merge_emitted(prev, e),
                };
                seen.insert(e.id.clone(), merged);
            }
            changed
        });
        g.apply_delta(d).map_err(|e| AdapterError::SpecRejected {
            name: spec.name.clone(),
            reason: format!("delta rejected during ingest: {e}"),
        })?;
        report.emitted += 1;
    }
    Ok((g, report))
}

fn upsert_changes(prev: &CanonicalEntity, e: &CanonicalEntity) -> bool {
    let attrs_new = e
        .attributes
        .iter()
        .any(|(k, v)| prev.attributes.get(k) != Some(v));
    let lineage_new = e.source_meta.iter().any(|l| !prev.source_meta.contains(l));
    let widens = e.validity.start < prev.validity.start;
    attrs_new || lineage_new || widens
}

fn merge_emitted(prev: &CanonicalEntity, e: &CanonicalEntity) -> CanonicalEntity {
    let mut merged = prev.clone();
    for (k, v) in &e.attributes {
        merged.attributes.insert(k.clone(), v.clone());
    }
    for l in &e.source_meta {
        if !merged.source_meta.contains(l) {
            merged.source_meta.push(l.clone());
        }
    }
    merged.validity = merged.validity.union(&e.validity);
    merged
}

// ---------------------------------------------------------------------------
// Built-in flavors
// ---------------------------------------------------------------------------

mod builtin;
pub use builtin::{adapter_for, env_a_adapter, env_b_adapter, policy_for};
