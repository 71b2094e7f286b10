//! Targeted raw-schema perturbations applied to telemetry files before
//! ingestion.
//!
//! Levels are cumulative and mirror common vendor renames: P1 renames the
//! identity-critical columns, P2 additionally moves timestamps to ISO-8601
//! under `@timestamp`, and P3 additionally drops the event-type column and
//! renames the source host. P0 is the identity and copies bytes untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapter::RawFormat;

#[derive(Debug, thiserror::Error)]
pub enum PerturbError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown perturbation level {0}")]
    UnknownLevel(String),
}

/// Perturbation severity. `P0` is the identity; each later level is a
/// superset of the one before.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    P0,
    P1,
    P2,
    P3,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::P0, Level::P1, Level::P2, Level::P3];

    pub fn parse(s: &str) -> Result<Level, PerturbError> {
        match s.to_ascii_uppercase().as_str() {
            "P0" => Ok(Level::P0),
            "P1" => Ok(Level::P1),
            "P2" => Ok(Level::P2),
            "P3" => Ok(Level::P3),
            other => Err(PerturbError::UnknownLevel(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Level::P0 => "P0",
            Level::P1 => "P1",
            Level::P2 => "P2",
            Level::P3 => "P3",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Level::P0 => 0,
            Level::P1 => 1,
            Level::P2 => 2,
            Level::P3 => 3,
        }
    }

    /// The concrete edits for this level.
    pub fn spec(&self) -> PerturbationSpec {
        PerturbationSpec::between(Level::P0, *self)
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value rewrite applied to one field before any renames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteRule {
    EpochToIso8601,
}

impl RewriteRule {
    fn apply(&self, value: &str) -> String {
        match self {
            RewriteRule::EpochToIso8601 => match value.parse::<i64>() {
                Ok(epoch) => chrono::DateTime::from_timestamp(epoch, 0)
                    .map(|dt| dt.format("%Y-%m-%dT%H:%M:%SZ").to_string())
                    .unwrap_or_else(|| value.to_string()),
                Err(_) => value.to_string(),
            },
        }
    }
}

/// The edits one perturbation application performs: value rewrites first,
/// then key renames, then deletions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerturbationSpec {
    pub rename_map: BTreeMap<String, String>,
    pub delete_set: BTreeSet<String>,
    pub format_rewrites: BTreeMap<String, RewriteRule>,
}

impl PerturbationSpec {
    /// Edits introduced strictly after `lo` up to and including `hi`.
    /// `between(P0, level)` is the full spec; `between(P1, P2)` is the
    /// P2-minus-P1 increment used by the cumulativity check.
    pub fn between(lo: Level, hi: Level) -> PerturbationSpec {
        let mut spec = PerturbationSpec::default();
        let in_range = |lv: Level| lv.rank() > lo.rank() && lv.rank() <= hi.rank();
        if in_range(Level::P1) {
            spec.rename_map
                .insert("user".to_string(), "SubjectUserName".to_string());
            spec.rename_map
                .insert("dst_host".to_string(), "DestinationHostName".to_string());
        }
        if in_range(Level::P2) {
            spec.format_rewrites
                .insert("ts".to_string(), RewriteRule::EpochToIso8601);
            spec.rename_map
                .insert("ts".to_string(), "@timestamp".to_string());
        }
        if in_range(Level::P3) {
            spec.delete_set.insert("event".to_string());
            spec.rename_map
                .insert("src_host".to_string(), "Computer".to_string());
        }
        spec
    }

    fn is_identity(&self) -> bool {
        self.rename_map.is_empty() && self.delete_set.is_empty() && self.format_rewrites.is_empty()
    }

    fn map_key(&self, key: &str) -> Option<String> {
        if self.delete_set.contains(key) {
            return None;
        }
        Some(
            self.rename_map
                .get(key)
                .cloned()
                .unwrap_or_else(|| key.to_string()),
        )
    }

    fn map_value(&self, key: &str, value: &str) -> String {
        match self.format_rewrites.get(key) {
            Some(rule) => rule.apply(value),
            None => value.to_string(),
        }
    }
}

/// Rewrite one telemetry file under the given level. Row count is preserved
/// exactly; P0 copies bytes untouched.
pub fn perturb_file(input: &Path, output: &Path, level: Level) -> Result<(), PerturbError> {
    apply_spec(input, output, &level.spec())
}

/// Rewrite one telemetry file under an explicit edit spec.
pub fn apply_spec(input: &Path, output: &Path, spec: &PerturbationSpec) -> Result<(), PerturbError> {
    if spec.is_identity() {
        std::fs::copy(input, output)?;
        return Ok(());
    }
    match RawFormat::from_path(input).unwrap_or(RawFormat::Csv) {
        RawFormat::Csv => perturb_csv(input, output, spec),
        RawFormat::Jsonl => perturb_jsonl(input, output, spec),
    }
}

fn perturb_csv(input: &Path, output: &Path, spec: &PerturbationSpec) -> Result<(), PerturbError> {
    let mut rdr = csv::Reader::from_path(input)?;
    let headers = rdr.headers()?.clone();
    let keep: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| spec.map_key(h).map(|renamed| (i, renamed)))
        .collect();

    let mut wtr = csv::Writer::from_path(output)?;
    wtr.write_record(keep.iter().map(|(_, name)| name.as_str()))?;
    for row in rdr.records() {
        let row = row?;
        let out: Vec<String> = keep
            .iter()
            .map(|(i, _)| {
                let original_key = &headers[*i];
                spec.map_value(original_key, row.get(*i).unwrap_or(""))
            })
            .collect();
        wtr.write_record(&out)?;
    }
    wtr.flush()?;
    Ok(())
}

fn perturb_jsonl(input: &Path, output: &Path, spec: &PerturbationSpec) -> Result<(), PerturbError> {
    use std::io::Write;
    let text = std::fs::read_to_string(input)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(output)?);
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            // malformed lines pass through untouched; row count is sacred
            Err(_) => {
                writeln!(out, "{line}")?;
                continue;
            }
        };
        let obj = match value.as_object() {
            Some(o) => o,
            None => {
                writeln!(out, "{line}")?;
                continue;
            }
        };
        let mut mapped = serde_json::Map::new();
        for (k, v) in obj {
            if let Some(new_key) = spec.map_key(k) {
                let new_val = match v.as_str() {
                    Some(s) => serde_json::Value::String(spec.map_value(k, s)),
                    None => match spec.format_rewrites.get(k) {
                        Some(rule) => serde_json::Value::String(rule.apply(&v.to_string())),
                        None => v.clone(),
                    },
                };
                mapped.insert(new_key, new_val);
            }
        }
        writeln!(out, "{}", serde_json::Value::Object(mapped))?;
    }
    out.flush()?;
    Ok(())
}
