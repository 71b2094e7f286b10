//! The substrate multigraph: canonical entities and typed relationships
//! behind an immutable delta log.
//!
//! Every mutation goes through [`SubstrateGraph::apply_delta`]; replaying the
//! log from the empty graph reproduces the live graph bit-for-bit, which is
//! what makes snapshots, audits, and the JSONL export/import trivial.
//! Writers are serialized by `&mut self`; reads are plain `&self` and safe to
//! run concurrently against a snapshot.

pub mod entity;
pub mod relation;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use entity::{
    validate_entity, AttributeKind, AttributeSchema, AttributeValue, CanonicalEntity, EntityType,
    EntityViolation, LifecycleError, LifecycleStage, LifecycleState, LifecycleTransition,
    SourceLineage, Validity,
};
pub use relation::{CanonicalRelationship, Provenance, RelationshipType, TimeSpan};

/// Schema version tag the shipped adapters declare compatibility with.
pub const SCHEMA_VERSION: &str = "csts-1";

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("signature violation: {rel} does not admit ({src_type} -> {dst_type})")]
    SignatureViolation {
        rel: RelationshipType,
        src_type: EntityType,
        dst_type: EntityType,
    },
    #[error("temporal misalignment: edge time [{start},{end}] outside validity intersection of {src} and {dst}")]
    TemporalMisalignment {
        src: String,
        dst: String,
        start: i64,
        end: i64,
    },
    #[error("entity {id} violates invariants: {details}")]
    EntityInvalid { id: String, details: String },
    #[error("entity type mismatch for {id}: {existing} vs {incoming}")]
    EntityTypeMismatch {
        id: String,
        existing: EntityType,
        incoming: EntityType,
    },
    #[error("out-of-order delta at {at} (log head at {head})")]
    OutOfOrderDelta { at: i64, head: i64 },
    #[error("confidence {0} outside [0,1]")]
    ConfidenceOutOfRange(f64),
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error("merge type mismatch: {keep} is {keep_type}, {absorb} is {absorb_type}")]
    MergeTypeMismatch {
        keep: String,
        keep_type: EntityType,
        absorb: String,
        absorb_type: EntityType,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed delta line {line}: {source}")]
    MalformedDelta {
        line: usize,
        source: serde_json::Error,
    },
}

/// Explicit lifecycle transition carried inside a delta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionOp {
    pub entity_id: String,
    pub to: LifecycleStage,
    pub at: i64,
}

/// Identity merge carried inside a delta, so that replay reproduces merges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeOp {
    pub keep: String,
    pub absorb: String,
}

/// One atomic graph update. Either every element passes the invariants or
/// the whole delta is rejected and the graph is untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDelta {
    pub at: i64,
    #[serde(rename = "entities", default, skip_serializing_if = "Vec::is_empty")]
    pub entity_upserts: Vec<CanonicalEntity>,
    #[serde(rename = "transitions", default, skip_serializing_if = "Vec::is_empty")]
    pub lifecycle_transitions: Vec<TransitionOp>,
    #[serde(rename = "edges", default, skip_serializing_if = "Vec::is_empty")]
    pub edge_inserts: Vec<CanonicalRelationship>,
    #[serde(rename = "merges", default, skip_serializing_if = "Vec::is_empty")]
    pub merges: Vec<MergeOp>,
}

impl GraphDelta {
    pub fn at(at: i64) -> GraphDelta {
        GraphDelta {
            at,
            entity_upserts: Vec::new(),
            lifecycle_transitions: Vec::new(),
            edge_inserts: Vec::new(),
            merges: Vec::new(),
        }
    }

    pub fn upsert(mut self, e: CanonicalEntity) -> GraphDelta {
        self.entity_upserts.push(e);
        self
    }

    pub fn edge(mut self, r: CanonicalRelationship) -> GraphDelta {
        self.edge_inserts.push(r);
        self
    }
}

/// Bounded typed neighborhood returned by [`SubstrateGraph::neighborhood`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub focal: String,
    pub nodes: BTreeSet<String>,
    pub edges: Vec<CanonicalRelationship>,
}

/// Time-indexed attributed multigraph with an immutable delta log.
#[derive(Debug, Clone)]
pub struct SubstrateGraph {
    pub schema_version: String,
    pub schema: AttributeSchema,
    entities: BTreeMap<String, CanonicalEntity>,
    edges: Vec<CanonicalRelationship>,
    delta_log: Vec<GraphDelta>,
    out_index: HashMap<String, Vec<usize>>,
    in_index: HashMap<String, Vec<usize>>,
}

impl Default for SubstrateGraph {
    fn default() -> Self {
        Self::new(AttributeSchema::builtin())
    }
}

impl SubstrateGraph {
    pub fn new(schema: AttributeSchema) -> SubstrateGraph {
        SubstrateGraph {
            schema_version: SCHEMA_VERSION.to_string(),
            schema,
            entities: BTreeMap::new(),
            edges: Vec::new(),
            delta_log: Vec::new(),
            out_index: HashMap::new(),
            in_index: HashMap::new(),
        }
    }

    pub fn entity(&self, id: &str) -> Option<&CanonicalEntity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &CanonicalEntity> {
        self.entities.values()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn edges(&self) -> &[CanonicalRelationship] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn delta_log(&self) -> &[GraphDelta] {
        &self.delta_log
    }

    pub fn out_edges(&self, id: &str) -> impl Iterator<Item = &CanonicalRelationship> {
        self.out_index
            .get(id)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    pub fn in_edges(&self, id: &str) -> impl Iterator<Item = &CanonicalRelationship> {
        self.in_index
            .get(id)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    fn log_head(&self) -> Option<i64> {
        self.delta_log.last().map(|d| d.at)
    }

    /// Append one edge behind its own delta. The delta timestamp never runs
    /// backwards even when the edge's event time predates the log head.
    pub fn insert_edge(&mut self, r: CanonicalRelationship) -> Result<(), GraphError> {
        let at = self.log_head().map_or(r.time.start, |h| h.max(r.time.start));
        self.apply_delta(GraphDelta::at(at).edge(r))
    }

    /// Append one lifecycle transition behind its own delta.
    pub fn transition_lifecycle(
        &mut self,
        entity_id: &str,
        to: LifecycleStage,
        at: i64,
    ) -> Result<(), GraphError> {
        let log_at = self.log_head().map_or(at, |h| h.max(at));
        let mut d = GraphDelta::at(log_at);
        d.lifecycle_transitions.push(TransitionOp {
            entity_id: entity_id.to_string(),
            to,
            at,
        });
        self.apply_delta(d)
    }

    /// Validate and apply one delta atomically.
    pub fn apply_delta(&mut self, d: GraphDelta) -> Result<(), GraphError> {
        if let Some(head) = self.log_head() {
            if d.at < head {
                return Err(GraphError::OutOfOrderDelta { at: d.at, head });
            }
        }

        // Stage entity state without touching the live graph, so a failing
        // element later in the delta leaves everything unchanged.
        let mut staged: BTreeMap<String, CanonicalEntity> = BTreeMap::new();
        for e in &d.entity_upserts {
            let violations = validate_entity(e, &self.schema);
            if !violations.is_empty() {
                let details = violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ");
                return Err(GraphError::EntityInvalid {
                    id: e.id.clone(),
                    details,
                });
            }
            let merged = match staged.get(&e.id).or_else(|| self.entities.get(&e.id)) {
                None => e.clone(),
                Some(existing) => {
                    if existing.entity_type != e.entity_type {
                        return Err(GraphError::EntityTypeMismatch {
                            id: e.id.clone(),
                            existing: existing.entity_type,
                            incoming: e.entity_type,
                        });
                    }
                    upsert_into(existing, e)
                }
            };
            staged.insert(merged.id.clone(), merged);
        }

        for t in &d.lifecycle_transitions {
            let cur = staged
                .get(&t.entity_id)
                .or_else(|| self.entities.get(&t.entity_id))
                .cloned()
                .ok_or_else(|| GraphError::UnknownEntity(t.entity_id.clone()))?;
            let mut next = cur;
            next.lifecycle.transition(t.to, t.at)?;
            staged.insert(t.entity_id.clone(), next);
        }

        let lookup = |id: &str| -> Option<&CanonicalEntity> {
            staged.get(id).or_else(|| self.entities.get(id))
        };

        for r in &d.edge_inserts {
            let src = lookup(&r.src).ok_or_else(|| GraphError::UnknownEntity(r.src.clone()))?;
            let dst = lookup(&r.dst).ok_or_else(|| GraphError::UnknownEntity(r.dst.clone()))?;
            if !r.rel_type.admits(src.entity_type, dst.entity_type) {
                return Err(GraphError::SignatureViolation {
                    rel: r.rel_type,
                    src_type: src.entity_type,
                    dst_type: dst.entity_type,
                });
            }
            let fits = src.validity.contains_span(r.time.start, r.time.end)
                && dst.validity.contains_span(r.time.start, r.time.end);
            if !fits {
                return Err(GraphError::TemporalMisalignment {
                    src: r.src.clone(),
                    dst: r.dst.clone(),
                    start: r.time.start,
                    end: r.time.end,
                });
            }
            if !(0.0..=1.0).contains(&r.provenance.confidence) {
                return Err(GraphError::ConfidenceOutOfRange(r.provenance.confidence));
            }
        }

        for m in &d.merges {
            let keep = lookup(&m.keep).ok_or_else(|| GraphError::UnknownEntity(m.keep.clone()))?;
            let absorb =
                lookup(&m.absorb).ok_or_else(|| GraphError::UnknownEntity(m.absorb.clone()))?;
            if keep.entity_type != absorb.entity_type {
                return Err(GraphError::MergeTypeMismatch {
                    keep: m.keep.clone(),
                    keep_type: keep.entity_type,
                    absorb: m.absorb.clone(),
                    absorb_type: absorb.entity_type,
                });
            }
        }

        // Commit.
        for (id, e) in staged {
            self.entities.insert(id, e);
        }
        for r in &d.edge_inserts {
            let idx = self.edges.len();
            self.out_index.entry(r.src.clone()).or_default().push(idx);
            self.in_index.entry(r.dst.clone()).or_default().push(idx);
            self.edges.push(r.clone());
        }
        for m in &d.merges {
            self.commit_merge(m, d.at);
        }
        self.delta_log.push(d);
        Ok(())
    }

    /// Re-point edges, widen the kept validity, retire the absorbed entity,
    /// and stamp the merge into both entities' lineage. Validation already
    /// happened in `apply_delta`.
    fn commit_merge(&mut self, m: &MergeOp, at: i64) {
        let absorb_validity = self.entities[&m.absorb].validity;
        {
            let keep = self.entities.get_mut(&m.keep).expect("validated");
            keep.validity = keep.validity.union(&absorb_validity);
            keep.source_meta.push(SourceLineage {
                source_system: "identity".to_string(),
                note: format!("merge: absorbed {}", m.absorb),
            });
        }
        {
            let absorb = self.entities.get_mut(&m.absorb).expect("validated");
            absorb.source_meta.push(SourceLineage {
                source_system: "identity".to_string(),
                note: format!("merge: absorbed into {}", m.keep),
            });
            absorb
                .lifecycle
                .retire(at)
                .expect("retire from any live stage");
        }
        for e in &mut self.edges {
            if e.src == m.absorb {
                e.src = m.keep.clone();
            }
            if e.dst == m.absorb {
                e.dst = m.keep.clone();
            }
        }
        self.rebuild_indexes();
    }

    fn rebuild_indexes(&mut self) {
        self.out_index.clear();
        self.in_index.clear();
        for (idx, e) in self.edges.iter().enumerate() {
            self.out_index.entry(e.src.clone()).or_default().push(idx);
            self.in_index.entry(e.dst.clone()).or_default().push(idx);
        }
    }

    /// Graph state at time `t`: replay every delta with `at <= t` from the
    /// empty graph.
    pub fn snapshot_at(&self, t: i64) -> SubstrateGraph {
        let mut g = SubstrateGraph::new(self.schema.clone());
        g.schema_version = self.schema_version.clone();
        for d in self.delta_log.iter().filter(|d| d.at <= t) {
            g.apply_delta(d.clone())
                .expect("replaying accepted deltas cannot fail");
        }
        g
    }

    /// Deep structural equality over schema, entities, edges, and delta log.
    /// Derived indexes are ignored.
    pub fn structurally_equal(&self, other: &SubstrateGraph) -> bool {
        self.schema_version == other.schema_version
            && self.schema == other.schema
            && self.entities == other.entities
            && self.edges == other.edges
            && self.delta_log == other.delta_log
    }

    /// Bounded typed neighborhood around a focal entity.
    ///
    /// Expansion is breadth-first over edges whose time lies inside `window`
    /// (and whose type passes `type_filter`), following both edge
    /// directions. Node admission is deterministic: per hop, candidates are
    /// taken in canonical-id order until `max_nodes`. The result is the
    /// induced subgraph over the admitted nodes.
    pub fn neighborhood(
        &self,
        focal: &str,
        hops: u8,
        window: TimeSpan,
        type_filter: Option<&BTreeSet<RelationshipType>>,
        max_nodes: usize,
    ) -> Result<Subgraph, GraphError> {
        if !self.entities.contains_key(focal) {
            return Err(GraphError::UnknownEntity(focal.to_string()));
        }
        let qualifies = |e: &CanonicalRelationship| -> bool {
            window.contains(&e.time) && type_filter.map_or(true, |f| f.contains(&e.rel_type))
        };

        let mut nodes: BTreeSet<String> = BTreeSet::new();
        nodes.insert(focal.to_string());
        let mut frontier: Vec<String> = vec![focal.to_string()];
        for _ in 0..hops {
            let mut candidates: BTreeSet<String> = BTreeSet::new();
            for id in &frontier {
                for e in self.out_edges(id).filter(|e| qualifies(e)) {
                    candidates.insert(e.dst.clone());
                }
                for e in self.in_edges(id).filter(|e| qualifies(e)) {
                    candidates.insert(e.src.clone());
                }
            }
            let mut next = Vec::new();
            for c in candidates {
                if nodes.len() >= max_nodes {
                    break;
                }
                if nodes.insert(c.clone()) {
                    next.push(c);
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }

        let edges = self
            .edges
            .iter()
            .filter(|e| qualifies(e) && nodes.contains(&e.src) && nodes.contains(&e.dst))
            .cloned()
            .collect();
        Ok(Subgraph {
            focal: focal.to_string(),
            nodes,
            edges,
        })
    }

    /// Serialize the delta log, one JSON object per line.
    pub fn export_jsonl<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        for d in &self.delta_log {
            let line = serde_json::to_string(d).expect("delta serializes");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn export_jsonl_path(&self, path: &Path) -> Result<(), GraphError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.export_jsonl(&mut f)
    }

    /// Rebuild a graph by replaying an exported delta log.
    pub fn import_jsonl<Rd: BufRead>(r: Rd, schema: AttributeSchema) -> Result<SubstrateGraph, GraphError> {
        let mut g = SubstrateGraph::new(schema);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let d: GraphDelta = serde_json::from_str(&line)
                .map_err(|source| GraphError::MalformedDelta { line: i + 1, source })?;
            g.apply_delta(d)?;
        }
        Ok(g)
    }

    pub fn import_jsonl_path(path: &Path, schema: AttributeSchema) -> Result<SubstrateGraph, GraphError> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::import_jsonl(f, schema)
    }
}

/// Upsert semantics for an already-known entity: attributes overwrite per
/// key, unseen lineage entries append, validity widens, lifecycle stays with
/// the stored entity (transitions only move through explicit ops).
fn upsert_into(existing: &CanonicalEntity, incoming: &CanonicalEntity) -> CanonicalEntity {
    let mut merged = existing.clone();
    for (k, v) in &incoming.attributes {
        merged.attributes.insert(k.clone(), v.clone());
    }
    for lin in &incoming.source_meta {
        if !merged.source_meta.contains(lin) {
            merged.source_meta.push(lin.clone());
        }
    }
    merged.validity = merged.validity.union(&incoming.validity);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ent(id: &str, ty: EntityType, start: i64) -> CanonicalEntity {
        CanonicalEntity::new(id, ty, start).with_lineage("test", "fixture")
    }

    fn edge(src: &str, dst: &str, rel: RelationshipType, t: i64) -> CanonicalRelationship {
        CanonicalRelationship::new(
            src,
            dst,
            rel,
            TimeSpan::point(t),
            Provenance::new("test", 0, TimeSpan::point(t)).with_lineage(&["test"]),
        )
    }

    fn seeded() -> SubstrateGraph {
        let mut g = SubstrateGraph::default();
        g.apply_delta(
            GraphDelta::at(0)
                .upsert(ent("user:u1", EntityType::User, 0))
                .upsert(ent("host:h1", EntityType::Host, 0))
                .upsert(ent("host:h2", EntityType::Host, 0))
                .upsert(ent("host:h3", EntityType::Host, 0)),
        )
        .unwrap();
        g
    }

    #[test]
    fn insert_edge_with_unconstrained_intersection() {
        let mut g = seeded();
        g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 50))
            .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.delta_log().len(), 2);
    }

    #[test]
    fn edge_outside_validity_intersection_is_rejected() {
        let mut g = SubstrateGraph::default();
        let mut src = ent("user:u1", EntityType::User, 0);
        src.validity = Validity::closed(0, 100);
        let mut dst = ent("host:h1", EntityType::Host, 60);
        dst.validity = Validity::closed(60, 100);
        g.apply_delta(GraphDelta::at(0).upsert(src).upsert(dst)).unwrap();
        let err = g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 50));
        assert!(matches!(err, Err(GraphError::TemporalMisalignment { .. })));
    }

    #[test]
    fn signature_violation_is_rejected() {
        let mut g = seeded();
        g.apply_delta(GraphDelta::at(0).upsert(ent("proc:p1", EntityType::Process, 0)))
            .unwrap();
        let err = g.insert_edge(edge("proc:p1", "host:h1", RelationshipType::AuthenticatesTo, 5));
        assert!(matches!(err, Err(GraphError::SignatureViolation { .. })));
    }

    #[test]
    fn unknown_endpoint_is_rejected() {
        let mut g = seeded();
        let err = g.insert_edge(edge("user:ghost", "host:h1", RelationshipType::AuthenticatesTo, 5));
        assert!(matches!(err, Err(GraphError::UnknownEntity(id)) if id == "user:ghost"));
    }

    #[test]
    fn empty_delta_only_grows_the_log() {
        let mut g = seeded();
        let (v, e, logs) = (g.entity_count(), g.edge_count(), g.delta_log().len());
        g.apply_delta(GraphDelta::at(10)).unwrap();
        assert_eq!(g.entity_count(), v);
        assert_eq!(g.edge_count(), e);
        assert_eq!(g.delta_log().len(), logs + 1);
    }

    #[test]
    fn counting_delta() {
        let mut g = seeded();
        let d = GraphDelta::at(5)
            .upsert(ent("user:u2", EntityType::User, 0))
            .upsert(ent("host:h4", EntityType::Host, 0))
            .edge(edge("user:u2", "host:h4", RelationshipType::AuthenticatesTo, 5));
        g.apply_delta(d).unwrap();
        assert_eq!(g.entity_count(), 6);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn one_bad_element_rejects_the_whole_delta() {
        let mut g = seeded();
        let before = g.clone();
        let mut d = GraphDelta::at(5);
        for h in ["h1", "h2", "h3"] {
            d = d.edge(edge("user:u1", &format!("host:{h}"), RelationshipType::AuthenticatesTo, 5));
        }
        d = d
            .edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 6))
            .edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 7))
            // invalid: Process -> Host under AUTHENTICATES_TO
            .upsert(ent("proc:p1", EntityType::Process, 0))
            .edge(edge("proc:p1", "host:h1", RelationshipType::AuthenticatesTo, 5));
        assert!(g.apply_delta(d).is_err());
        assert!(g.structurally_equal(&before));
    }

    #[test]
    fn out_of_order_delta_is_rejected() {
        let mut g = seeded();
        g.apply_delta(GraphDelta::at(100)).unwrap();
        let err = g.apply_delta(GraphDelta::at(99));
        assert!(matches!(err, Err(GraphError::OutOfOrderDelta { .. })));
        // equal timestamps are allowed; log order resolves them
        g.apply_delta(GraphDelta::at(100)).unwrap();
    }

    #[test]
    fn parallel_edges_are_preserved() {
        let mut g = seeded();
        g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 5))
            .unwrap();
        g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 9))
            .unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn snapshot_before_first_delta_is_empty() {
        let g = seeded();
        let s = g.snapshot_at(-1);
        assert_eq!(s.entity_count(), 0);
        assert_eq!(s.edge_count(), 0);
    }

    #[test]
    fn snapshot_after_last_delta_equals_live() {
        let mut g = seeded();
        g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 5))
            .unwrap();
        let s = g.snapshot_at(i64::MAX);
        assert!(s.structurally_equal(&g));
    }

    #[test]
    fn snapshot_filters_by_delta_time() {
        // deltas at 10, 20, 30; snapshot_at(25) must contain exactly 10 and 20
        let mut g = SubstrateGraph::default();
        g.apply_delta(GraphDelta::at(10).upsert(ent("user:u1", EntityType::User, 0)))
            .unwrap();
        g.apply_delta(GraphDelta::at(20).upsert(ent("host:h1", EntityType::Host, 0)))
            .unwrap();
        g.apply_delta(
            GraphDelta::at(30).edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 25)),
        )
        .unwrap();

        let snap = g.snapshot_at(25);
        // independent rebuild from the filtered delta list
        let mut oracle = SubstrateGraph::new(g.schema.clone());
        for d in g.delta_log().iter().filter(|d| d.at <= 25) {
            oracle.apply_delta(d.clone()).unwrap();
        }
        assert!(snap.structurally_equal(&oracle));
        assert_eq!(snap.entity_count(), 2);
        assert_eq!(snap.edge_count(), 0);
    }

    #[test]
    fn lifecycle_ops_route_through_deltas() {
        let mut g = seeded();
        g.transition_lifecycle("user:u1", LifecycleStage::Dormant, 50)
            .unwrap();
        assert_eq!(
            g.entity("user:u1").unwrap().lifecycle.state,
            LifecycleStage::Dormant
        );
        let err = g.transition_lifecycle("user:u1", LifecycleStage::Created, 60);
        assert!(matches!(err, Err(GraphError::Lifecycle(_))));
    }

    #[test]
    fn star_neighborhood() {
        let mut g = seeded();
        for (i, h) in ["h1", "h2", "h3"].iter().enumerate() {
            g.insert_edge(edge(
                "user:u1",
                &format!("host:{h}"),
                RelationshipType::AuthenticatesTo,
                5 + i as i64,
            ))
            .unwrap();
        }
        let nb = g
            .neighborhood("user:u1", 1, TimeSpan::span(0, 100), None, 16)
            .unwrap();
        assert_eq!(nb.nodes.len(), 4);
        assert_eq!(nb.edges.len(), 3);

        // deterministic truncation keeps focal + lexicographically smallest
        let nb2 = g
            .neighborhood("user:u1", 1, TimeSpan::span(0, 100), None, 2)
            .unwrap();
        let want: BTreeSet<String> = ["user:u1", "host:h1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(nb2.nodes, want);
        assert_eq!(nb2.edges.len(), 1);
    }

    #[test]
    fn chain_neighborhood_respects_type_filter() {
        let mut g = seeded();
        g.apply_delta(GraphDelta::at(0).upsert(ent("proc:p1", EntityType::Process, 0)))
            .unwrap();
        g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 5))
            .unwrap();
        g.insert_edge(edge("host:h1", "proc:p1", RelationshipType::Executes, 6))
            .unwrap();
        let filter: BTreeSet<RelationshipType> =
            [RelationshipType::AuthenticatesTo].into_iter().collect();

        let nb = g
            .neighborhood("user:u1", 2, TimeSpan::span(0, 100), Some(&filter), 16)
            .unwrap();

        // brute-force BFS oracle on the 3-node graph
        let mut oracle_nodes: BTreeSet<String> = BTreeSet::new();
        oracle_nodes.insert("user:u1".into());
        for _ in 0..2 {
            let reach: Vec<String> = g
                .edges()
                .iter()
                .filter(|e| e.rel_type == RelationshipType::AuthenticatesTo)
                .flat_map(|e| {
                    let mut v = Vec::new();
                    if oracle_nodes.contains(&e.src) {
                        v.push(e.dst.clone());
                    }
                    if oracle_nodes.contains(&e.dst) {
                        v.push(e.src.clone());
                    }
                    v
                })
                .collect();
            for r in reach {
                oracle_nodes.insert(r);
            }
        }
        assert_eq!(nb.nodes, oracle_nodes);
        assert_eq!(nb.edges.len(), 1);
        assert_eq!(nb.edges[0].rel_type, RelationshipType::AuthenticatesTo);
    }

    #[test]
    fn jsonl_round_trip_is_lossless() {
        let mut g = seeded();
        g.insert_edge(
            edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 5)
                .with_attr("event_id", AttributeValue::Str("e1".into())),
        )
        .unwrap();
        g.transition_lifecycle("user:u1", LifecycleStage::Dormant, 50)
            .unwrap();

        let mut buf = Vec::new();
        g.export_jsonl(&mut buf).unwrap();
        let g2 =
            SubstrateGraph::import_jsonl(std::io::Cursor::new(&buf), g.schema.clone()).unwrap();
        assert!(g.structurally_equal(&g2));

        let mut buf2 = Vec::new();
        g2.export_jsonl(&mut buf2).unwrap();
        assert_eq!(buf, buf2, "re-export is byte identical");
    }
}
