//! Deterministic canonical identity resolution.
//!
//! Raw observations carry vendor-specific surface forms; resolution maps
//! them onto canonical identifiers via idempotent normalization steps,
//! per-type key-field candidate lists, and per-environment alias tables.
//! Merges route through the substrate delta path so replay reproduces them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityType, GraphDelta, GraphError, MergeOp, SubstrateGraph};

#[derive(Debug, thiserror::Error)]
pub enum IdentityError {
    #[error("unresolvable observation: none of {candidates:?} present for {entity_type}")]
    UnresolvableObservation {
        entity_type: EntityType,
        candidates: Vec<String>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One raw telemetry observation, as a free-form field map plus a type hint
/// from the adapter's event mapping.
#[derive(Debug, Clone)]
pub struct RawObservation<'a> {
    pub producer: &'a str,
    pub entity_hint: EntityType,
    pub raw_fields: &'a BTreeMap<String, String>,
}

/// Normalization steps applied to a surface form, in declared order. Every
/// step is idempotent, so the whole pipeline is too.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    #[serde(default)]
    pub lowercase: bool,
    #[serde(default)]
    pub trim: bool,
    /// Domain suffixes stripped from the end, e.g. `.corp.local`.
    #[serde(default)]
    pub strip_suffixes: Vec<String>,
    /// Realm prefixes stripped from the front, e.g. `CORP\`.
    #[serde(default)]
    pub strip_prefixes: Vec<String>,
}

/// Apply the configured steps. Idempotent: `normalize(normalize(x)) ==
/// normalize(x)`.
pub fn normalize(surface: &str, steps: &Normalization) -> String {
    let mut s = surface.to_string();
    if steps.trim {
        s = s.trim().to_string();
    }
    if steps.lowercase {
        s = s.to_lowercase();
    }
    for suffix in &steps.strip_suffixes {
        let suffix = if steps.lowercase {
            suffix.to_lowercase()
        } else {
            suffix.clone()
        };
        if let Some(stripped) = s.strip_suffix(&suffix) {
            s = stripped.to_string();
        }
    }
    for prefix in &steps.strip_prefixes {
        let prefix = if steps.lowercase {
            prefix.to_lowercase()
        } else {
            prefix.clone()
        };
        if let Some(stripped) = s.strip_prefix(&prefix) {
            s = stripped.to_string();
        }
    }
    s
}

/// Per-entity-type resolution rule: ordered key-field candidates,
/// normalization steps, and an alias table consulted before id synthesis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeRule {
    pub keys: Vec<String>,
    #[serde(default)]
    pub normalization: Normalization,
    /// Normalized surface form -> canonical id.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

/// Resolution policy over all entity types. Loaded from JSON configuration;
/// see the shipped environment policies in [`crate::adapter`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPolicy {
    pub rules: BTreeMap<EntityType, TypeRule>,
}

impl ResolutionPolicy {
    pub fn rule(&self, ty: EntityType) -> Option<&TypeRule> {
        self.rules.get(&ty)
    }

    pub fn from_json(json: &str) -> Result<ResolutionPolicy, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Outcome of resolving one observation: the canonical id plus an audit
/// trail of which candidate matched and which steps fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionOutcome {
    pub canonical_id: String,
    pub matched_key: String,
    pub lineage_note: String,
}

/// Resolve an observation to a canonical id.
///
/// The first candidate key present (and non-empty) wins; its value is
/// normalized and looked up in the alias table, falling back to
/// `<type-prefix>:<normalized key>`. Pure in `(observation, policy)`.
pub fn resolve(
    o: &RawObservation<'_>,
    policy: &ResolutionPolicy,
) -> Result<ResolutionOutcome, IdentityError> {
    let rule = policy.rule(o.entity_hint).ok_or_else(|| {
        IdentityError::UnresolvableObservation {
            entity_type: o.entity_hint,
            candidates: Vec::new(),
        }
    })?;
    let (key, raw_value) = rule
        .keys
        .iter()
        .find_map(|k| {
            o.raw_fields
                .get(k)
                .filter(|v| !v.is_empty())
                .map(|v| (k.clone(), v.clone()))
        })
        .ok_or_else(|| IdentityError::UnresolvableObservation {
            entity_type: o.entity_hint,
            candidates: rule.keys.clone(),
        })?;

    let normalized = normalize(&raw_value, &rule.normalization);
    let (canonical_id, via) = match rule.aliases.get(&normalized) {
        Some(id) => (id.clone(), "alias"),
        None => (
            format!("{}:{}", o.entity_hint.id_prefix(), normalized),
            "synthesized",
        ),
    };
    Ok(ResolutionOutcome {
        canonical_id,
        matched_key: key.clone(),
        lineage_note: format!("resolve: key={key} {via}"),
    })
}

/// Merge `absorb` into `keep`: edges re-point, keep's validity widens,
/// absorb retires, and both entities record the merge in their lineage. The
/// merge itself is a delta, so replaying the log reproduces the merged
/// graph.
pub fn merge_identities(
    g: &mut SubstrateGraph,
    keep: &str,
    absorb: &str,
    at: i64,
) -> Result<(), IdentityError> {
    let log_at = g.delta_log().last().map_or(at, |d| d.at.max(at));
    let mut d = GraphDelta::at(log_at);
    d.merges.push(MergeOp {
        keep: keep.to_string(),
        absorb: absorb.to_string(),
    });
    g.apply_delta(d)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{
        CanonicalEntity, CanonicalRelationship, LifecycleStage, Provenance, RelationshipType,
        TimeSpan,
    };

    fn host_rule() -> ResolutionPolicy {
        let mut rules = BTreeMap::new();
        rules.insert(
            EntityType::Host,
            TypeRule {
                keys: vec!["hostname".into(), "computer".into()],
                normalization: Normalization {
                    lowercase: true,
                    trim: true,
                    strip_suffixes: vec![".corp.local".into()],
                    strip_prefixes: vec![],
                },
                aliases: BTreeMap::new(),
            },
        );
        ResolutionPolicy { rules }
    }

    #[test]
    fn normalize_lowercase_and_strip_suffix() {
        let steps = Normalization {
            lowercase: true,
            trim: false,
            strip_suffixes: vec![".corp.local".into()],
            strip_prefixes: vec![],
        };
        assert_eq!(normalize("WS01.CORP.LOCAL", &steps), "ws01");
    }

    #[test]
    fn normalize_trim_and_lowercase() {
        let steps = Normalization {
            lowercase: true,
            trim: true,
            ..Default::default()
        };
        assert_eq!(normalize("  Alice ", &steps), "alice");
    }

    proptest::proptest! {
        #[test]
        fn normalization_is_idempotent(surface in ".{0,40}") {
            let steps = Normalization {
                lowercase: true,
                trim: true,
                strip_suffixes: vec![".corp.local".into()],
                strip_prefixes: vec!["corp\\".into()],
            };
            let once = normalize(&surface, &steps);
            proptest::prop_assert_eq!(normalize(&once, &steps), once);
        }

        #[test]
        fn resolution_is_deterministic(value in "[a-zA-Z0-9. ]{1,24}") {
            let policy = host_rule();
            let mut f = BTreeMap::new();
            f.insert("hostname".to_string(), value);
            let o = RawObservation {
                producer: "env_a",
                entity_hint: EntityType::Host,
                raw_fields: &f,
            };
            let a = resolve(&o, &policy).unwrap();
            let b = resolve(&o, &policy).unwrap();
            proptest::prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn equivalent_surface_forms_resolve_identically() {
        let policy = host_rule();
        let mut f1 = BTreeMap::new();
        f1.insert("hostname".to_string(), "WS01.corp.local".to_string());
        let mut f2 = BTreeMap::new();
        f2.insert("computer".to_string(), "ws01".to_string());
        let o1 = RawObservation {
            producer: "env_a",
            entity_hint: EntityType::Host,
            raw_fields: &f1,
        };
        let o2 = RawObservation {
            producer: "env_a",
            entity_hint: EntityType::Host,
            raw_fields: &f2,
        };
        let r1 = resolve(&o1, &policy).unwrap();
        let r2 = resolve(&o2, &policy).unwrap();
        assert_eq!(r1.canonical_id, "host:ws01");
        assert_eq!(r1.canonical_id, r2.canonical_id);
        assert_eq!(r1.matched_key, "hostname");
        assert_eq!(r2.matched_key, "computer");
    }

    #[test]
    fn alias_table_hit_wins_over_synthesis() {
        let mut policy = host_rule();
        policy
            .rules
            .get_mut(&EntityType::Host)
            .unwrap()
            .keys
            .push("dst_ip".into());
        policy
            .rules
            .get_mut(&EntityType::Host)
            .unwrap()
            .aliases
            .insert("10.0.0.5".into(), "host:ws01".into());
        let mut f = BTreeMap::new();
        f.insert("dst_ip".to_string(), "10.0.0.5".to_string());
        let o = RawObservation {
            producer: "env_a",
            entity_hint: EntityType::Host,
            raw_fields: &f,
        };
        let r = resolve(&o, &policy).unwrap();
        assert_eq!(r.canonical_id, "host:ws01");
        assert!(r.lineage_note.contains("alias"));
    }

    #[test]
    fn missing_candidates_are_unresolvable() {
        let policy = host_rule();
        let mut f = BTreeMap::new();
        f.insert("ip".to_string(), "10.0.0.5".to_string());
        let o = RawObservation {
            producer: "env_a",
            entity_hint: EntityType::Host,
            raw_fields: &f,
        };
        assert!(matches!(
            resolve(&o, &policy),
            Err(IdentityError::UnresolvableObservation { .. })
        ));
    }

    fn merge_fixture() -> SubstrateGraph {
        let mut g = SubstrateGraph::default();
        let mk = |id: &str, ty| CanonicalEntity::new(id, ty, 0).with_lineage("test", "fixture");
        g.apply_delta(
            GraphDelta::at(0)
                .upsert(mk("host:a", EntityType::Host))
                .upsert(mk("host:b", EntityType::Host))
                .upsert(mk("user:u", EntityType::User)),
        )
        .unwrap();
        for (dst, t) in [("host:a", 5), ("host:b", 6)] {
            g.insert_edge(CanonicalRelationship::new(
                "user:u",
                dst,
                RelationshipType::AuthenticatesTo,
                TimeSpan::point(t),
                Provenance::new("test", 0, TimeSpan::point(t)).with_lineage(&["test"]),
            ))
            .unwrap();
        }
        g
    }

    #[test]
    fn merge_repoints_edges_and_retires_absorbed() {
        let mut g = merge_fixture();
        merge_identities(&mut g, "host:a", "host:b", 10).unwrap();
        assert_eq!(g.edge_count(), 2, "edge multiset cardinality preserved");
        assert!(g.edges().iter().all(|e| e.dst == "host:a"));
        assert_eq!(
            g.entity("host:b").unwrap().lifecycle.state,
            LifecycleStage::Retired
        );
        let keep = g.entity("host:a").unwrap();
        assert!(keep.source_meta.iter().any(|l| l.note.contains("host:b")));
    }

    #[test]
    fn merging_across_types_is_rejected() {
        let mut g = merge_fixture();
        let err = merge_identities(&mut g, "host:a", "user:u", 10);
        assert!(matches!(
            err,
            Err(IdentityError::Graph(GraphError::MergeTypeMismatch { .. }))
        ));
    }

    #[test]
    fn replay_after_merge_reproduces_merged_graph() {
        let mut g = merge_fixture();
        merge_identities(&mut g, "host:a", "host:b", 10).unwrap();
        let replayed = g.snapshot_at(i64::MAX);
        assert!(replayed.structurally_equal(&g));
    }
}
