//! The two shipped vendor flavors and their resolution policies.
//!
//! EnvA is the source deployment; EnvB carries the target deployment's
//! schema variation (different auxiliary column names, different identifier
//! surface forms) plus the alias entries that absorb the P1-P3 perturbation
//! renames and the sidecar rules that recover a deleted event column.

use std::collections::BTreeMap;

use super::{AdapterSpec, EventKind, TimestampFormat};
use crate::graph::{EntityType, RelationshipType};
use crate::identity::{Normalization, ResolutionPolicy, TypeRule};

fn kind(
    rel_type: RelationshipType,
    src_field: &str,
    src_type: EntityType,
    dst_field: &str,
    dst_type: EntityType,
) -> EventKind {
    EventKind {
        rel_type,
        src_field: src_field.to_string(),
        src_type,
        dst_field: dst_field.to_string(),
        dst_type,
    }
}

fn fields(pairs: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect()
}

/// EnvA flavor: plain epoch timestamps, `corp.local` naming, the full event
/// vocabulary (authentication, execution, spawn, file access, flows).
pub fn env_a_adapter() -> AdapterSpec {
    let mut event_kind_map = BTreeMap::new();
    event_kind_map.insert(
        "logon".to_string(),
        kind(
            RelationshipType::AuthenticatesTo,
            "user",
            EntityType::User,
            "dst_host",
            EntityType::Host,
        ),
    );
    event_kind_map.insert(
        "exec".to_string(),
        kind(
            RelationshipType::Executes,
            "user",
            EntityType::User,
            "proc",
            EntityType::Process,
        ),
    );
    event_kind_map.insert(
        "spawn".to_string(),
        kind(
            RelationshipType::Spawns,
            "parent_proc",
            EntityType::Process,
            "proc",
            EntityType::Process,
        ),
    );
    event_kind_map.insert(
        "read".to_string(),
        kind(
            RelationshipType::Reads,
            "proc",
            EntityType::Process,
            "file",
            EntityType::File,
        ),
    );
    event_kind_map.insert(
        "write".to_string(),
        kind(
            RelationshipType::Writes,
            "proc",
            EntityType::Process,
            "file",
            EntityType::File,
        ),
    );
    event_kind_map.insert(
        "conn".to_string(),
        kind(
            RelationshipType::ConnectsTo,
            "src_host",
            EntityType::Host,
            "dst_ip",
            EntityType::ExternalEntity,
        ),
    );

    AdapterSpec {
        name: "env_a".to_string(),
        schema_version: crate::graph::SCHEMA_VERSION.to_string(),
        logical_fields: fields(&[
            ("ts", &["ts"]),
            ("event", &["event"]),
            ("event_id", &["event_id"]),
            ("user", &["user"]),
            ("src_host", &["src_host"]),
            ("dst_host", &["dst_host"]),
            ("proc", &["proc"]),
            ("parent_proc", &["parent_proc"]),
            ("file", &["file"]),
            ("dst_ip", &["dst_ip"]),
            ("port", &["port"]),
            ("logon_type", &["logon_type"]),
            ("community", &["ou"]),
            ("dst_community", &["host_ou"]),
        ]),
        event_kind_map,
        kind_inference: Vec::new(),
        timestamp_formats: vec![TimestampFormat::EpochSeconds, TimestampFormat::Iso8601],
    }
}

/// EnvB flavor: same critical columns at P0, different auxiliary columns,
/// plus alias entries for the vendor renames (SubjectUserName,
/// DestinationHostName, @timestamp, Computer) and sidecar kind inference
/// for files whose event column was dropped outright.
pub fn env_b_adapter() -> AdapterSpec {
    let mut event_kind_map = BTreeMap::new();
    event_kind_map.insert(
        "logon".to_string(),
        kind(
            RelationshipType::AuthenticatesTo,
            "user",
            EntityType::User,
            "dst_host",
            EntityType::Host,
        ),
    );
    event_kind_map.insert(
        "exec".to_string(),
        kind(
            RelationshipType::Executes,
            "user",
            EntityType::User,
            "proc",
            EntityType::Process,
        ),
    );
    event_kind_map.insert(
        "conn".to_string(),
        kind(
            RelationshipType::ConnectsTo,
            "src_host",
            EntityType::Host,
            "dst_ip",
            EntityType::ExternalEntity,
        ),
    );

    AdapterSpec {
        name: "env_b".to_string(),
        schema_version: crate::graph::SCHEMA_VERSION.to_string(),
        logical_fields: fields(&[
            ("ts", &["ts", "@timestamp"]),
            ("event", &["event"]),
            ("event_id", &["event_id"]),
            ("user", &["user", "SubjectUserName"]),
            ("src_host", &["src_host", "Computer"]),
            ("dst_host", &["dst_host", "DestinationHostName"]),
            ("proc", &["process_path"]),
            ("dst_ip", &["dst_ip", "remote_addr"]),
            ("port", &["remote_port"]),
            ("logon_type", &["logon_kind"]),
            ("community", &["dept"]),
            ("dst_community", &["host_dept"]),
        ]),
        event_kind_map,
        // Sidecar presence decides the kind when the event column is gone:
        // logons carry logon_kind, execs carry process_path, flows carry
        // remote_port. The generator keeps these mutually exclusive.
        kind_inference: vec![
            ("logon_type".to_string(), "logon".to_string()),
            ("proc".to_string(), "exec".to_string()),
            ("port".to_string(), "conn".to_string()),
        ],
        timestamp_formats: vec![TimestampFormat::EpochSeconds, TimestampFormat::Iso8601],
    }
}

/// Resolution policy for EnvA surfaces (`WS01.corp.local`, `CORP\alice`).
fn policy_env_a() -> ResolutionPolicy {
    let mut rules = BTreeMap::new();
    rules.insert(
        EntityType::Host,
        TypeRule {
            keys: vec!["dst_host".into(), "src_host".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                strip_suffixes: vec![".corp.local".into()],
                strip_prefixes: vec![],
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::User,
        TypeRule {
            keys: vec!["user".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                strip_suffixes: vec![],
                strip_prefixes: vec!["corp\\".into()],
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::Process,
        TypeRule {
            keys: vec!["proc".into(), "parent_proc".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                ..Default::default()
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::File,
        TypeRule {
            keys: vec!["file".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                ..Default::default()
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::ExternalEntity,
        TypeRule {
            keys: vec!["dst_ip".into()],
            normalization: Normalization {
                trim: true,
                ..Default::default()
            },
            aliases: BTreeMap::new(),
        },
    );
    ResolutionPolicy { rules }
}

/// Resolution policy for EnvB surfaces (`srv-007.envb.example`,
/// `u1001@envb.example`).
fn policy_env_b() -> ResolutionPolicy {
    let mut rules = BTreeMap::new();
    rules.insert(
        EntityType::Host,
        TypeRule {
            keys: vec!["dst_host".into(), "src_host".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                strip_suffixes: vec![".envb.example".into()],
                strip_prefixes: vec![],
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::User,
        TypeRule {
            keys: vec!["user".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                strip_suffixes: vec!["@envb.example".into()],
                strip_prefixes: vec![],
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::Process,
        TypeRule {
            keys: vec!["proc".into()],
            normalization: Normalization {
                lowercase: true,
                trim: true,
                ..Default::default()
            },
            aliases: BTreeMap::new(),
        },
    );
    rules.insert(
        EntityType::ExternalEntity,
        TypeRule {
            keys: vec!["dst_ip".into()],
            normalization: Normalization {
                trim: true,
                ..Default::default()
            },
            aliases: BTreeMap::new(),
        },
    );
    ResolutionPolicy { rules }
}

/// Look up a shipped adapter by environment name.
pub fn adapter_for(name: &str) -> Option<AdapterSpec> {
    match name {
        "env_a" => Some(env_a_adapter()),
        "env_b" => Some(env_b_adapter()),
        _ => None,
    }
}

/// Look up a shipped resolution policy by environment name.
pub fn policy_for(name: &str) -> ResolutionPolicy {
    match name {
        "env_b" => policy_env_b(),
        _ => policy_env_a(),
    }
}
