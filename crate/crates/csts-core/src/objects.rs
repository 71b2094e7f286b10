//! Learning objects: bounded, time-supported views over canonical entities
//! and relationships, used as model-consumption units.
//!
//! The construction operator maps a focal query (entity, interaction, or
//! motif template), a support interval, and a construction policy onto one
//! of four object classes. View transforms re-present an object without
//! changing what it is about; `validate_view` enforces the five validity
//! constraints and `apply_view` refuses to emit an inadmissible result.
//! Pairing policies turn object collections into positive / negative /
//! hard-negative pairs for downstream contrastive consumers; no encoder is
//! trained here.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{
    CanonicalRelationship, EntityType, Provenance, RelationshipType, SubstrateGraph, TimeSpan,
};
use crate::util::fingerprint;

#[derive(Debug, thiserror::Error)]
pub enum ObjectError {
    #[error("unknown focal {0}")]
    UnknownFocal(String),
    #[error("empty support: no qualifying edges in the query interval")]
    EmptySupport,
    #[error("insufficient objects for pairing (need at least 2)")]
    InsufficientObjects,
    #[error("inadmissible view: {0:?}")]
    InvalidView(Vec<ViewViolation>),
}

/// The four object classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    EntityState,
    InteractionState,
    SubgraphState,
    MotifState,
}

/// Presentation modalities an object exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Tabular,
    Temporal,
    Graph,
    Provenance,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Tabular,
        Modality::Temporal,
        Modality::Graph,
        Modality::Provenance,
    ];
}

/// Focalization: what the object is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Focal {
    Entity { id: String },
    Edge {
        src: String,
        dst: String,
        rel_type: RelationshipType,
        at: i64,
    },
    Motif {
        template: String,
        rel_type: RelationshipType,
        center: String,
    },
}

impl Focal {
    /// The relationship type that defines this focal, if any; used by the
    /// semantic-admissibility proxy.
    pub fn defining_rel(&self) -> Option<RelationshipType> {
        match self {
            Focal::Entity { .. } => None,
            Focal::Edge { rel_type, .. } => Some(*rel_type),
            Focal::Motif { rel_type, .. } => Some(*rel_type),
        }
    }

    pub fn entity_ids(&self) -> Vec<&str> {
        match self {
            Focal::Entity { id } => vec![id],
            Focal::Edge { src, dst, .. } => vec![src, dst],
            Focal::Motif { center, .. } => vec![center],
        }
    }
}

/// Typed local pattern with side constraints: a center fanning out over one
/// relationship type to distinct targets within a bounded duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifTemplate {
    pub name: String,
    pub rel_type: RelationshipType,
    pub src_type: EntityType,
    pub dst_type: EntityType,
    /// Minimum qualifying edge count (rate floor).
    pub min_fanout: usize,
    /// Minimum distinct targets.
    pub min_distinct_targets: usize,
    /// Maximum span of the matched edge set, seconds.
    pub max_duration_s: i64,
}

impl MotifTemplate {
    /// The ransomware-style pattern used in fixtures: one process writing
    /// many distinct files inside a short burst.
    pub fn write_cascade(min_files: usize, max_duration_s: i64) -> MotifTemplate {
        MotifTemplate {
            name: "write_cascade".into(),
            rel_type: RelationshipType::Writes,
            src_type: EntityType::Process,
            dst_type: EntityType::File,
            min_fanout: min_files,
            min_distinct_targets: min_files,
            max_duration_s,
        }
    }

    /// Fan-out authentication burst.
    pub fn auth_fanout(min_hosts: usize, max_duration_s: i64) -> MotifTemplate {
        MotifTemplate {
            name: "auth_fanout".into(),
            rel_type: RelationshipType::AuthenticatesTo,
            src_type: EntityType::User,
            dst_type: EntityType::Host,
            min_fanout: min_hosts,
            min_distinct_targets: min_hosts,
            max_duration_s,
        }
    }
}

/// Focal query handed to the construction operator.
#[derive(Debug, Clone, PartialEq)]
pub enum FocalQuery {
    Entity(String),
    Edge {
        src: String,
        dst: String,
        rel_type: RelationshipType,
        at: i64,
    },
    Motif(MotifTemplate),
}

/// Construction policy: hop depth, neighborhood bound, admissible types,
/// exposed modalities, and a confidence floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionPolicy {
    pub hops: u8,
    pub max_nodes: usize,
    pub rel_types: Option<BTreeSet<RelationshipType>>,
    pub entity_types: Option<BTreeSet<EntityType>>,
    pub modalities: BTreeSet<Modality>,
    pub min_confidence: f64,
}

impl Default for ConstructionPolicy {
    fn default() -> Self {
        ConstructionPolicy {
            hops: 1,
            max_nodes: 64,
            rel_types: None,
            entity_types: None,
            modalities: Modality::ALL.into_iter().collect(),
            min_confidence: 0.0,
        }
    }
}

/// A bounded learning object over canonical primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningObject {
    pub class: ObjectClass,
    pub focal: Focal,
    pub entities: BTreeMap<String, EntityType>,
    pub edges: Vec<CanonicalRelationship>,
    pub support: TimeSpan,
    pub features: BTreeMap<String, f64>,
    pub provenance: Vec<Provenance>,
    pub modalities: BTreeSet<Modality>,
}

impl LearningObject {
    /// Content hash of the canonical serialization.
    pub fn fingerprint(&self) -> String {
        fingerprint(serde_json::to_string(self).expect("object serializes").as_bytes())
    }

    /// Degree-style tabular summary (shared by X_o and the pairing
    /// distance). Edge-type composition is kept separate on purpose.
    pub fn summary_vector(&self) -> Vec<f64> {
        let distinct_src: BTreeSet<&str> = self.edges.iter().map(|e| e.src.as_str()).collect();
        let distinct_dst: BTreeSet<&str> = self.edges.iter().map(|e| e.dst.as_str()).collect();
        let mut fanout: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for e in &self.edges {
            fanout.entry(e.src.as_str()).or_default().insert(e.dst.as_str());
        }
        let max_fanout = fanout.values().map(|s| s.len()).max().unwrap_or(0);
        vec![
            self.edges.len() as f64,
            self.entities.len() as f64,
            distinct_src.len() as f64,
            distinct_dst.len() as f64,
            max_fanout as f64,
        ]
    }

    /// Normalized edge-type composition over the full relationship
    /// vocabulary.
    pub fn edge_type_histogram(&self) -> Vec<f64> {
        let mut hist = vec![0.0f64; RelationshipType::ALL.len()];
        for e in &self.edges {
            let i = RelationshipType::ALL
                .iter()
                .position(|r| *r == e.rel_type)
                .expect("closed enumeration");
            hist[i] += 1.0;
        }
        let total: f64 = hist.iter().sum();
        if total > 0.0 {
            for h in &mut hist {
                *h /= total;
            }
        }
        hist
    }

    /// Structural containment against the source graph: entities and edges
    /// are drawn from the graph, endpoints are inside the object, and edge
    /// times sit inside the support interval.
    pub fn containment_holds(&self, g: &SubstrateGraph) -> bool {
        let entities_ok = self
            .entities
            .iter()
            .all(|(id, ty)| g.entity(id).map_or(false, |e| e.entity_type == *ty));
        let edges_ok = self.edges.iter().all(|e| {
            self.entities.contains_key(&e.src)
                && self.entities.contains_key(&e.dst)
                && self.support.contains(&e.time)
                && g.edges().contains(e)
        });
        entities_ok && edges_ok
    }
}

fn summary_map(edges: &[CanonicalRelationship], entities: usize) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    let distinct_dst: BTreeSet<&str> = edges.iter().map(|e| e.dst.as_str()).collect();
    let distinct_src: BTreeSet<&str> = edges.iter().map(|e| e.src.as_str()).collect();
    m.insert("edge_count".into(), edges.len() as f64);
    m.insert("entity_count".into(), entities as f64);
    m.insert("distinct_src".into(), distinct_src.len() as f64);
    m.insert("distinct_dst".into(), distinct_dst.len() as f64);
    for r in RelationshipType::ALL {
        let c = edges.iter().filter(|e| e.rel_type == r).count();
        if c > 0 {
            m.insert(format!("count_{}", r.as_str()), c as f64);
        }
    }
    m
}

fn policy_admits(e: &CanonicalRelationship, policy: &ConstructionPolicy) -> bool {
    policy.rel_types.as_ref().map_or(true, |s| s.contains(&e.rel_type))
        && e.provenance.confidence >= policy.min_confidence
}

fn collect_object(
    g: &SubstrateGraph,
    class: ObjectClass,
    focal: Focal,
    support: TimeSpan,
    node_ids: BTreeSet<String>,
    edges: Vec<CanonicalRelationship>,
    policy: &ConstructionPolicy,
) -> LearningObject {
    // deterministic truncation: focal entities always stay, the rest are
    // admitted in canonical-id order up to the bound
    let focal_ids: BTreeSet<String> =
        focal.entity_ids().iter().map(|s| s.to_string()).collect();
    let mut kept: BTreeSet<String> = focal_ids.clone();
    for id in &node_ids {
        if kept.len() >= policy.max_nodes.max(focal_ids.len()) {
            break;
        }
        if let Some(admit) = g.entity(id) {
            if policy
                .entity_types
                .as_ref()
                .map_or(true, |s| s.contains(&admit.entity_type))
                || focal_ids.contains(id)
            {
                kept.insert(id.clone());
            }
        }
    }
    let edges: Vec<CanonicalRelationship> = edges
        .into_iter()
        .filter(|e| kept.contains(&e.src) && kept.contains(&e.dst))
        .collect();

    let entities: BTreeMap<String, EntityType> = kept
        .iter()
        .filter_map(|id| g.entity(id).map(|e| (id.clone(), e.entity_type)))
        .collect();
    let features = if policy.modalities.contains(&Modality::Tabular) {
        summary_map(&edges, entities.len())
    } else {
        BTreeMap::new()
    };
    let mut provenance: Vec<Provenance> = Vec::new();
    for e in &edges {
        if !provenance.contains(&e.provenance) {
            provenance.push(e.provenance.clone());
        }
    }
    LearningObject {
        class,
        focal,
        entities,
        edges,
        support,
        features,
        provenance,
        modalities: policy.modalities.clone(),
    }
}

/// The construction operator: map (graph, focal query, support interval,
/// policy) to a learning object. Pure in its inputs.
pub fn construct(
    g: &SubstrateGraph,
    q: &FocalQuery,
    support: TimeSpan,
    policy: &ConstructionPolicy,
) -> Result<LearningObject, ObjectError> {
    match q {
        FocalQuery::Entity(id) => {
            if g.entity(id).is_none() {
                return Err(ObjectError::UnknownFocal(id.clone()));
            }
            let focal = Focal::Entity { id: id.clone() };
            if policy.hops == 0 {
                return Ok(collect_object(
                    g,
                    ObjectClass::EntityState,
                    focal,
                    support,
                    [id.clone()].into_iter().collect(),
                    Vec::new(),
                    policy,
                ));
            }
            let nb = g
                .neighborhood(id, policy.hops, support, policy.rel_types.as_ref(), policy.max_nodes)
                .map_err(|_| ObjectError::UnknownFocal(id.clone()))?;
            let edges = nb.edges.into_iter().filter(|e| policy_admits(e, policy)).collect();
            Ok(collect_object(
                g,
                ObjectClass::SubgraphState,
                focal,
                support,
                nb.nodes,
                edges,
                policy,
            ))
        }
        FocalQuery::Edge { src, dst, rel_type, at } => {
            let focal_edge = g
                .edges()
                .iter()
                .find(|e| {
                    e.src == *src && e.dst == *dst && e.rel_type == *rel_type && e.time.start == *at
                })
                .cloned()
                .ok_or_else(|| {
                    ObjectError::UnknownFocal(format!("{src} -[{rel_type}]-> {dst} @ {at}"))
                })?;
            let mut nodes: BTreeSet<String> = BTreeSet::new();
            let mut edges: Vec<CanonicalRelationship> = vec![focal_edge.clone()];
            for endpoint in [src, dst] {
                let nb = g
                    .neighborhood(endpoint, 1, support, policy.rel_types.as_ref(), policy.max_nodes)
                    .map_err(|_| ObjectError::UnknownFocal(endpoint.clone()))?;
                nodes.extend(nb.nodes);
                for e in nb.edges {
                    if policy_admits(&e, policy) && !edges.contains(&e) {
                        edges.push(e);
                    }
                }
            }
            let focal = Focal::Edge {
                src: src.clone(),
                dst: dst.clone(),
                rel_type: *rel_type,
                at: *at,
            };
            Ok(collect_object(
                g,
                ObjectClass::InteractionState,
                focal,
                support,
                nodes,
                edges,
                policy,
            ))
        }
        FocalQuery::Motif(template) => {
            let bindings = find_motifs(g, template, support);
            let binding = bindings.into_iter().next().ok_or(ObjectError::EmptySupport)?;
            let mut nodes: BTreeSet<String> = binding.targets.iter().cloned().collect();
            nodes.insert(binding.center.clone());
            let focal = Focal::Motif {
                template: template.name.clone(),
                rel_type: template.rel_type,
                center: binding.center.clone(),
            };
            Ok(collect_object(
                g,
                ObjectClass::MotifState,
                focal,
                support,
                nodes,
                binding.edges,
                policy,
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Motif matching
// ---------------------------------------------------------------------------

/// One motif instantiation: the earliest maximal qualifying edge window of
/// a center.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifBinding {
    pub center: String,
    pub targets: BTreeSet<String>,
    pub edges: Vec<CanonicalRelationship>,
}

fn motif_candidate_edges<'g>(
    g: &'g SubstrateGraph,
    template: &MotifTemplate,
    window: TimeSpan,
) -> BTreeMap<&'g str, Vec<&'g CanonicalRelationship>> {
    let mut by_center: BTreeMap<&str, Vec<&CanonicalRelationship>> = BTreeMap::new();
    for e in g.edges() {
        if e.rel_type != template.rel_type || !window.contains(&e.time) {
            continue;
        }
        let types_ok = g.entity(&e.src).map_or(false, |s| s.entity_type == template.src_type)
            && g.entity(&e.dst).map_or(false, |d| d.entity_type == template.dst_type);
        if types_ok {
            by_center.entry(e.src.as_str()).or_default().push(e);
        }
    }
    for edges in by_center.values_mut() {
        edges.sort_by(|a, b| (a.time.start, &a.dst).cmp(&(b.time.start, &b.dst)));
    }
    by_center
}

fn binding_from_range(
    center: &str,
    edges: &[&CanonicalRelationship],
) -> MotifBinding {
    MotifBinding {
        center: center.to_string(),
        targets: edges.iter().map(|e| e.dst.clone()).collect(),
        edges: edges.iter().map(|e| (*e).clone()).collect(),
    }
}

/// Enumerate motif bindings: per center, slide over its time-sorted
/// qualifying edges and fire at the earliest end index whose maximal
/// duration-bounded window satisfies the side constraints.
pub fn find_motifs(
    g: &SubstrateGraph,
    template: &MotifTemplate,
    window: TimeSpan,
) -> Vec<MotifBinding> {
    let mut bindings = Vec::new();
    for (center, edges) in motif_candidate_edges(g, template, window) {
        let mut lo = 0usize;
        for hi in 0..edges.len() {
            while edges[hi].time.start - edges[lo].time.start > template.max_duration_s {
                lo += 1;
            }
            let slice = &edges[lo..=hi];
            let distinct: BTreeSet<&str> = slice.iter().map(|e| e.dst.as_str()).collect();
            if slice.len() >= template.min_fanout
                && distinct.len() >= template.min_distinct_targets
            {
                bindings.push(binding_from_range(center, slice));
                break;
            }
        }
    }
    bindings
}

/// Independent quadratic enumeration over all contiguous index ranges.
/// Reference implementation for soundness/completeness checks at desk
/// scale.
pub fn find_motifs_bruteforce(
    g: &SubstrateGraph,
    template: &MotifTemplate,
    window: TimeSpan,
) -> Vec<MotifBinding> {
    let mut bindings = Vec::new();
    for (center, edges) in motif_candidate_edges(g, template, window) {
        'ends: for hi in 0..edges.len() {
            // smallest start index keeping the span within the duration cap
            let mut lo = 0;
            while edges[hi].time.start - edges[lo].time.start > template.max_duration_s {
                lo += 1;
            }
            let slice = &edges[lo..=hi];
            let distinct: BTreeSet<&str> = slice.iter().map(|e| e.dst.as_str()).collect();
            if slice.len() >= template.min_fanout
                && distinct.len() >= template.min_distinct_targets
            {
                bindings.push(binding_from_range(center, slice));
                break 'ends;
            }
        }
    }
    bindings
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

/// Admissible view transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewTransform {
    AttributeMask { attributes: Vec<String> },
    NeighborhoodSubsample { keep_nodes: usize },
    TemporalOffset { start: i64, end: i64 },
    SourceOmission { source_system: String },
    ModalityProjection { keep: BTreeSet<Modality> },
    ConfidencePrune { min_confidence: f64 },
}

impl ViewTransform {
    pub fn kind(&self) -> &'static str {
        match self {
            ViewTransform::AttributeMask { .. } => "attribute-mask",
            ViewTransform::NeighborhoodSubsample { .. } => "neighborhood-subsample",
            ViewTransform::TemporalOffset { .. } => "temporal-offset",
            ViewTransform::SourceOmission { .. } => "source-omission",
            ViewTransform::ModalityProjection { .. } => "modality-projection",
            ViewTransform::ConfidencePrune { .. } => "confidence-prune",
        }
    }
}

/// A transformed presentation of a learning object, carrying the source
/// fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewedObject {
    pub object: LearningObject,
    pub derived_from: String,
    pub transform: String,
    pub masked_attributes: BTreeSet<String>,
}

/// Violations of the five view-validity constraints. Violations are data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewViolation {
    /// (1) focal identity must remain unchanged
    FocalChanged,
    /// (2) every retained edge must stay signature-valid
    SignatureInvalid,
    /// (3) support must be the original interval or a sub-interval
    /// containing all retained edge times
    TemporalIncoherent,
    /// (4) provenance must remain recoverable on every retained element
    ProvenanceLost,
    /// (5) semantic admissibility proxy: the focal's defining relationship
    /// type must survive when the original carried it
    FocalRelationDropped,
    /// candidate does not declare the original as its source
    DerivedFromMismatch,
}

/// Check the five validity constraints of a candidate view against its
/// original.
pub fn validate_view(original: &LearningObject, candidate: &ViewedObject) -> Vec<ViewViolation> {
    let mut violations = Vec::new();
    if candidate.derived_from != original.fingerprint() {
        violations.push(ViewViolation::DerivedFromMismatch);
    }
    // (1) focal identity
    if candidate.object.focal != original.focal {
        violations.push(ViewViolation::FocalChanged);
    }
    // (2) relational validity under the fixed signature table
    let sig_ok = candidate.object.edges.iter().all(|e| {
        match (
            candidate.object.entities.get(&e.src),
            candidate.object.entities.get(&e.dst),
        ) {
            (Some(s), Some(d)) => e.rel_type.admits(*s, *d),
            _ => false,
        }
    });
    if !sig_ok {
        violations.push(ViewViolation::SignatureInvalid);
    }
    // (3) temporal consistency
    let support_ok = original.support.contains(&candidate.object.support)
        && candidate
            .object
            .edges
            .iter()
            .all(|e| candidate.object.support.contains(&e.time));
    if !support_ok {
        violations.push(ViewViolation::TemporalIncoherent);
    }
    // (4) provenance traceability
    let prov_ok = candidate
        .object
        .edges
        .iter()
        .all(|e| !e.provenance.lineage.is_empty());
    if !prov_ok {
        violations.push(ViewViolation::ProvenanceLost);
    }
    // (5) semantic admissibility proxy
    if let Some(rel) = original.focal.defining_rel() {
        let original_had = original.edges.iter().any(|e| e.rel_type == rel);
        let candidate_has = candidate.object.edges.iter().any(|e| e.rel_type == rel);
        if original_had && !candidate_has {
            violations.push(ViewViolation::FocalRelationDropped);
        }
    }
    violations
}

/// Apply a view transform. Deterministic per seed; an inadmissible result
/// is an error, never silently emitted.
pub fn apply_view(
    o: &LearningObject,
    v: &ViewTransform,
    seed: u64,
) -> Result<ViewedObject, ObjectError> {
    use rand::prelude::*;
    let mut obj = o.clone();
    let mut masked: BTreeSet<String> = BTreeSet::new();
    match v {
        ViewTransform::AttributeMask { attributes } => {
            for a in attributes {
                if obj.features.remove(a).is_some() {
                    masked.insert(a.clone());
                }
            }
        }
        ViewTransform::NeighborhoodSubsample { keep_nodes } => {
            let focal_ids: BTreeSet<String> =
                o.focal.entity_ids().iter().map(|s| s.to_string()).collect();
            let mut others: Vec<String> = obj
                .entities
                .keys()
                .filter(|id| !focal_ids.contains(*id))
                .cloned()
                .collect();
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(crate::util::subseed(seed, "subsample"));
            others.shuffle(&mut rng);
            let keep: BTreeSet<String> = focal_ids
                .into_iter()
                .chain(others.into_iter().take(keep_nodes.saturating_sub(1)))
                .collect();
            obj.entities.retain(|id, _| keep.contains(id));
            obj.edges.retain(|e| keep.contains(&e.src) && keep.contains(&e.dst));
        }
        ViewTransform::TemporalOffset { start, end } => {
            obj.support = TimeSpan::span(*start, *end);
            obj.edges.retain(|e| obj.support.contains(&e.time));
        }
        ViewTransform::SourceOmission { source_system } => {
            obj.edges.retain(|e| e.provenance.source_system != *source_system);
            obj.provenance.retain(|p| p.source_system != *source_system);
        }
        ViewTransform::ModalityProjection { keep } => {
            obj.modalities = keep.clone();
            if !keep.contains(&Modality::Tabular) {
                obj.features.clear();
            }
        }
        ViewTransform::ConfidencePrune { min_confidence } => {
            obj.edges.retain(|e| e.provenance.confidence >= *min_confidence);
        }
    }
    if !obj.features.is_empty() {
        obj.features = summary_map(&obj.edges, obj.entities.len());
        for a in &masked {
            obj.features.remove(a);
        }
    }
    let candidate = ViewedObject {
        object: obj,
        derived_from: o.fingerprint(),
        transform: v.kind().to_string(),
        masked_attributes: masked,
    };
    let violations = validate_view(o, &candidate);
    if violations.is_empty() {
        Ok(candidate)
    } else {
        Err(ObjectError::InvalidView(violations))
    }
}

// ---------------------------------------------------------------------------
// Pairing policies
// ---------------------------------------------------------------------------

/// Flat pairing input: fingerprints, focal key, summary vectors, type
/// composition, and an optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCandidate {
    pub fingerprint: String,
    pub derived_from: Option<String>,
    pub focal_key: String,
    pub support: TimeSpan,
    pub summary: Vec<f64>,
    pub edge_type_hist: Vec<f64>,
    pub label: Option<u8>,
}

impl PairCandidate {
    pub fn from_object(o: &LearningObject, label: Option<u8>) -> PairCandidate {
        PairCandidate {
            fingerprint: o.fingerprint(),
            derived_from: None,
            focal_key: format!("{:?}", o.focal),
            support: o.support,
            summary: o.summary_vector(),
            edge_type_hist: o.edge_type_histogram(),
            label,
        }
    }

    pub fn from_view(v: &ViewedObject, label: Option<u8>) -> PairCandidate {
        PairCandidate {
            derived_from: Some(v.derived_from.clone()),
            ..PairCandidate::from_object(&v.object, label)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPolicy {
    Positive,
    Negative,
    HardNegative,
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn negative_pairs(objects: &[PairCandidate]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..objects.len() {
        for j in (i + 1)..objects.len() {
            let (a, b) = (&objects[i], &objects[j]);
            if a.focal_key == b.focal_key {
                continue;
            }
            match (a.label, b.label) {
                (Some(la), Some(lb)) if la == lb => continue,
                _ => pairs.push((i, j)),
            }
        }
    }
    pairs
}

/// Enumerate pairs under a policy.
///
/// Positives are view pairs sharing a source object, or same-focal objects
/// over adjacent support windows. Negatives need distinct focals and, when
/// labels are present, different labels. Hard negatives are the negatives
/// whose degree-summary distance sits in the bottom decile while their
/// edge-type composition distance is above the median.
pub fn pair_policy(
    objects: &[PairCandidate],
    policy: PairPolicy,
) -> Result<Vec<(usize, usize)>, ObjectError> {
    if objects.len() < 2 {
        return Err(ObjectError::InsufficientObjects);
    }
    match policy {
        PairPolicy::Positive => {
            let mut pairs = Vec::new();
            for i in 0..objects.len() {
                for j in (i + 1)..objects.len() {
                    let (a, b) = (&objects[i], &objects[j]);
                    let shared_source = matches!(
                        (&a.derived_from, &b.derived_from),
                        (Some(x), Some(y)) if x == y
                    );
                    let adjacent = a.focal_key == b.focal_key
                        && (a.support.end == b.support.start || b.support.end == a.support.start);
                    if shared_source || adjacent {
                        pairs.push((i, j));
                    }
                }
            }
            Ok(pairs)
        }
        PairPolicy::Negative => Ok(negative_pairs(objects)),
        PairPolicy::HardNegative => {
            let negatives = negative_pairs(objects);
            if negatives.is_empty() {
                return Ok(Vec::new());
            }
            let tab: Vec<f64> = negatives
                .iter()
                .map(|(i, j)| l2(&objects[*i].summary, &objects[*j].summary))
                .collect();
            let hist: Vec<f64> = negatives
                .iter()
                .map(|(i, j)| l1(&objects[*i].edge_type_hist, &objects[*j].edge_type_hist))
                .collect();
            let tab_cut = crate::eval::quantile(&tab, 0.10);
            let hist_cut = crate::eval::quantile(&hist, 0.50);
            Ok(negatives
                .into_iter()
                .zip(tab.iter().zip(&hist))
                .filter(|(_, (t, h))| **t <= tab_cut && **h > hist_cut)
                .map(|(p, _)| p)
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{CanonicalEntity, GraphDelta, Provenance};

    fn entity(id: &str, ty: EntityType) -> CanonicalEntity {
        CanonicalEntity::new(id, ty, 0).with_lineage("test", "fixture")
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

    fn write_burst_graph(n_files: usize) -> SubstrateGraph {
        let mut g = SubstrateGraph::default();
        let mut d = GraphDelta::at(0).upsert(entity("proc:enc", EntityType::Process));
        for i in 0..n_files {
            d = d.upsert(entity(&format!("file:f{i:02}"), EntityType::File));
        }
        g.apply_delta(d).unwrap();
        for i in 0..n_files {
            g.insert_edge(edge(
                "proc:enc",
                &format!("file:f{i:02}"),
                RelationshipType::Writes,
                10 + i as i64 * 20,
            ))
            .unwrap();
        }
        g
    }

    #[test]
    fn entity_query_on_isolated_node() {
        let mut g = SubstrateGraph::default();
        g.apply_delta(GraphDelta::at(0).upsert(entity("host:h1", EntityType::Host)))
            .unwrap();
        let policy = ConstructionPolicy {
            hops: 0,
            ..Default::default()
        };
        let o = construct(
            &g,
            &FocalQuery::Entity("host:h1".into()),
            TimeSpan::span(0, 100),
            &policy,
        )
        .unwrap();
        assert_eq!(o.class, ObjectClass::EntityState);
        assert_eq!(o.entities.len(), 1);
        assert!(o.edges.is_empty());
    }

    fn interaction_fixture() -> (SubstrateGraph, FocalQuery) {
        let mut g = SubstrateGraph::default();
        g.apply_delta(
            GraphDelta::at(0)
                .upsert(entity("user:u1", EntityType::User))
                .upsert(entity("host:h1", EntityType::Host))
                .upsert(entity("host:h2", EntityType::Host))
                .upsert(entity("proc:p1", EntityType::Process)),
        )
        .unwrap();
        g.insert_edge(edge("user:u1", "host:h1", RelationshipType::AuthenticatesTo, 10))
            .unwrap();
        g.insert_edge(edge("user:u1", "host:h2", RelationshipType::AuthenticatesTo, 20))
            .unwrap();
        g.insert_edge(edge("host:h1", "proc:p1", RelationshipType::Executes, 30))
            .unwrap();
        let q = FocalQuery::Edge {
            src: "user:u1".into(),
            dst: "host:h1".into(),
            rel_type: RelationshipType::AuthenticatesTo,
            at: 10,
        };
        (g, q)
    }

    #[test]
    fn interaction_query_includes_both_endpoint_contexts() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        assert_eq!(o.class, ObjectClass::InteractionState);
        assert!(o.entities.contains_key("user:u1"));
        assert!(o.entities.contains_key("host:h1"));
        // one-hop context of both endpoints
        assert!(o.entities.contains_key("host:h2"));
        assert!(o.entities.contains_key("proc:p1"));
        assert!(o.containment_holds(&g));
    }

    #[test]
    fn motif_query_binds_the_write_cascade() {
        let g = write_burst_graph(12);
        let template = MotifTemplate::write_cascade(10, 300);
        let o = construct(
            &g,
            &FocalQuery::Motif(template),
            TimeSpan::span(0, 1000),
            &ConstructionPolicy {
                max_nodes: 64,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(o.class, ObjectClass::MotifState);
        // 300s window over 20s-spaced writes holds 16 files, but at the
        // earliest qualifying end index it binds the first 10 plus center
        assert!(o.entities.len() >= 11);
        assert!(o.containment_holds(&g));
    }

    #[test]
    fn motif_without_support_is_empty_support() {
        let g = write_burst_graph(3);
        let template = MotifTemplate::write_cascade(10, 300);
        let err = construct(
            &g,
            &FocalQuery::Motif(template),
            TimeSpan::span(0, 1000),
            &ConstructionPolicy::default(),
        );
        assert!(matches!(err, Err(ObjectError::EmptySupport)));
    }

    #[test]
    fn motif_enumeration_matches_bruteforce_on_burst() {
        let g = write_burst_graph(12);
        let template = MotifTemplate::write_cascade(10, 300);
        let w = TimeSpan::span(0, 1000);
        let fast = find_motifs(&g, &template, w);
        let slow = find_motifs_bruteforce(&g, &template, w);
        assert_eq!(fast, slow);
        assert_eq!(fast.len(), 1);
        assert_eq!(fast[0].targets.len(), 10);
    }

    #[test]
    fn construction_is_deterministic() {
        let (g, q) = interaction_fixture();
        let p = ConstructionPolicy::default();
        let a = construct(&g, &q, TimeSpan::span(0, 100), &p).unwrap();
        let b = construct(&g, &q, TimeSpan::span(0, 100), &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    // --- views ---

    #[test]
    fn attribute_mask_preserves_structure() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        let v = apply_view(
            &o,
            &ViewTransform::AttributeMask {
                attributes: vec!["distinct_src".into()],
            },
            1,
        )
        .unwrap();
        assert_eq!(v.object.entities, o.entities);
        assert_eq!(v.object.edges, o.edges);
        assert!(!v.object.features.contains_key("distinct_src"));
        assert!(v.masked_attributes.contains("distinct_src"));
    }

    #[test]
    fn subsample_always_retains_focal() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        for seed in 0..10 {
            let v = apply_view(&o, &ViewTransform::NeighborhoodSubsample { keep_nodes: 3 }, seed)
                .unwrap();
            assert!(v.object.entities.contains_key("user:u1"));
            assert!(v.object.entities.contains_key("host:h1"));
        }
    }

    #[test]
    fn modality_projection_to_graph_only() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        let keep: BTreeSet<Modality> = [Modality::Graph].into_iter().collect();
        let v = apply_view(&o, &ViewTransform::ModalityProjection { keep }, 1).unwrap();
        assert!(v.object.features.is_empty(), "tabular summaries dropped");
        assert_eq!(v.object.edges, o.edges, "structure intact");
    }

    #[test]
    fn temporal_offset_to_covering_subinterval_is_valid() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        let v = apply_view(&o, &ViewTransform::TemporalOffset { start: 5, end: 50 }, 1).unwrap();
        assert!(validate_view(&o, &v).is_empty());
    }

    #[test]
    fn confidence_prune_that_drops_focal_relation_is_refused() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        // every edge has confidence 1.0; pruning above that removes all
        let err = apply_view(&o, &ViewTransform::ConfidencePrune { min_confidence: 1.5 }, 1);
        match err {
            Err(ObjectError::InvalidView(v)) => {
                assert!(v.contains(&ViewViolation::FocalRelationDropped))
            }
            other => panic!("expected invalid view, got {other:?}"),
        }
    }

    /// One hand-built candidate per constraint, violating exactly that
    /// constraint.
    #[test]
    fn each_constraint_has_a_dedicated_violation_fixture() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        let base = ViewedObject {
            object: o.clone(),
            derived_from: o.fingerprint(),
            transform: "fixture".into(),
            masked_attributes: BTreeSet::new(),
        };
        assert!(validate_view(&o, &base).is_empty());

        // (1) focal swapped to a different entity
        let mut v1 = base.clone();
        v1.object.focal = Focal::Entity { id: "host:h2".into() };
        assert_eq!(validate_view(&o, &v1), vec![ViewViolation::FocalChanged]);

        // (2) an edge is retyped so the signature no longer admits it
        let mut v2 = base.clone();
        v2.object.edges[0].rel_type = RelationshipType::Spawns;
        let viol2 = validate_view(&o, &v2);
        assert!(viol2.contains(&ViewViolation::SignatureInvalid), "{viol2:?}");

        // (3) support shrunk below a retained edge's time
        let mut v3 = base.clone();
        v3.object.support = TimeSpan::span(0, 5);
        assert_eq!(validate_view(&o, &v3), vec![ViewViolation::TemporalIncoherent]);

        // (4) lineage stripped from a retained edge
        let mut v4 = base.clone();
        v4.object.edges[0].provenance.lineage.clear();
        assert_eq!(validate_view(&o, &v4), vec![ViewViolation::ProvenanceLost]);

        // (5) every focal-typed edge dropped while others remain
        let mut v5 = base.clone();
        v5.object
            .edges
            .retain(|e| e.rel_type != RelationshipType::AuthenticatesTo);
        assert_eq!(validate_view(&o, &v5), vec![ViewViolation::FocalRelationDropped]);
    }

    // --- pairing ---

    #[test]
    fn two_views_of_one_object_are_one_positive_pair() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        let v1 = apply_view(
            &o,
            &ViewTransform::AttributeMask { attributes: vec!["distinct_src".into()] },
            1,
        )
        .unwrap();
        let v2 = apply_view(
            &o,
            &ViewTransform::AttributeMask { attributes: vec!["distinct_dst".into()] },
            2,
        )
        .unwrap();
        let cands = vec![
            PairCandidate::from_view(&v1, None),
            PairCandidate::from_view(&v2, None),
        ];
        let pairs = pair_policy(&cands, PairPolicy::Positive).unwrap();
        assert_eq!(pairs, vec![(0, 1)]);
    }

    #[test]
    fn single_object_cannot_pair() {
        let (g, q) = interaction_fixture();
        let o = construct(&g, &q, TimeSpan::span(0, 100), &ConstructionPolicy::default()).unwrap();
        let cands = vec![PairCandidate::from_object(&o, None)];
        assert!(matches!(
            pair_policy(&cands, PairPolicy::Negative),
            Err(ObjectError::InsufficientObjects)
        ));
    }

    fn synthetic_candidate(
        key: &str,
        summary: Vec<f64>,
        hist: Vec<f64>,
        label: u8,
    ) -> PairCandidate {
        PairCandidate {
            fingerprint: key.to_string(),
            derived_from: None,
            focal_key: key.to_string(),
            support: TimeSpan::span(0, 100),
            summary,
            edge_type_hist: hist,
            label: Some(label),
        }
    }

    #[test]
    fn planted_lookalike_pair_is_recovered_as_hard_negative() {
        // 20 objects; index 0 and 1 share degree stats but have disjoint
        // edge-type mixes, everything else is either far in summary space
        // or similar in composition
        let mut cands = Vec::new();
        cands.push(synthetic_candidate(
            "planted-a",
            vec![10.0, 11.0, 5.0, 5.0, 3.0],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            0,
        ));
        cands.push(synthetic_candidate(
            "planted-b",
            vec![10.0, 11.0, 5.0, 5.0, 3.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            1,
        ));
        for i in 0..18 {
            let scale = 30.0 + 10.0 * i as f64;
            cands.push(synthetic_candidate(
                &format!("bg-{i}"),
                vec![scale, scale + 1.0, scale / 2.0, scale / 2.0, 3.0],
                vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                (i % 2) as u8,
            ));
        }
        let hard = pair_policy(&cands, PairPolicy::HardNegative).unwrap();
        assert!(
            hard.contains(&(0, 1)),
            "planted pair must surface, got {hard:?}"
        );
    }
}
