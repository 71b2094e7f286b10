//! Canonical entities: closed type set, typed attribute maps, validity
//! intervals, source lineage, and the linear lifecycle machine.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed set of canonical entity types. Unknown names are rejected at parse
/// time; there is deliberately no `Other` escape hatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    Host,
    User,
    Process,
    File,
    NetworkFlow,
    CloudResource,
    Credential,
    ExternalEntity,
}

impl EntityType {
    pub const ALL: [EntityType; 8] = [
        EntityType::Host,
        EntityType::User,
        EntityType::Process,
        EntityType::File,
        EntityType::NetworkFlow,
        EntityType::CloudResource,
        EntityType::Credential,
        EntityType::ExternalEntity,
    ];

    pub fn parse(name: &str) -> Option<EntityType> {
        Self::ALL.iter().copied().find(|t| t.as_str() == name)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityType::Host => "Host",
            EntityType::User => "User",
            EntityType::Process => "Process",
            EntityType::File => "File",
            EntityType::NetworkFlow => "NetworkFlow",
            EntityType::CloudResource => "CloudResource",
            EntityType::Credential => "Credential",
            EntityType::ExternalEntity => "ExternalEntity",
        }
    }

    /// Canonical-id prefix, e.g. `host:` for [`EntityType::Host`].
    pub fn id_prefix(&self) -> &'static str {
        match self {
            EntityType::Host => "host",
            EntityType::User => "user",
            EntityType::Process => "proc",
            EntityType::File => "file",
            EntityType::NetworkFlow => "flow",
            EntityType::CloudResource => "cloud",
            EntityType::Credential => "cred",
            EntityType::ExternalEntity => "ext",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typed attribute scalar. The closed scalar set keeps attribute schemas
/// checkable and the JSONL export lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeValue {
    Str(String),
    Int(i64),
    Float(f64),
    Timestamp(i64),
    Bool(bool),
}

impl AttributeValue {
    pub fn kind(&self) -> AttributeKind {
        match self {
            AttributeValue::Str(_) => AttributeKind::Str,
            AttributeValue::Int(_) => AttributeKind::Int,
            AttributeValue::Float(_) => AttributeKind::Float,
            AttributeValue::Timestamp(_) => AttributeKind::Timestamp,
            AttributeValue::Bool(_) => AttributeKind::Bool,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttributeValue::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// Declared scalar kind for one attribute slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Str,
    Int,
    Float,
    Timestamp,
    Bool,
}

/// Attribute contract per entity type: which attribute names are admitted
/// and with which scalar kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub per_type: BTreeMap<EntityType, BTreeMap<String, AttributeKind>>,
}

impl AttributeSchema {
    /// The schema used by the shipped adapters and the benchmark generator.
    pub fn builtin() -> AttributeSchema {
        let mut per_type: BTreeMap<EntityType, BTreeMap<String, AttributeKind>> = BTreeMap::new();
        let mut host = BTreeMap::new();
        host.insert("community".to_string(), AttributeKind::Str);
        per_type.insert(EntityType::Host, host);
        let mut user = BTreeMap::new();
        user.insert("community".to_string(), AttributeKind::Str);
        user.insert("logon_count".to_string(), AttributeKind::Int);
        per_type.insert(EntityType::User, user);
        let mut proc = BTreeMap::new();
        proc.insert("image".to_string(), AttributeKind::Str);
        per_type.insert(EntityType::Process, proc);
        let mut file = BTreeMap::new();
        file.insert("path".to_string(), AttributeKind::Str);
        per_type.insert(EntityType::File, file);
        let mut ext = BTreeMap::new();
        ext.insert("addr".to_string(), AttributeKind::Str);
        per_type.insert(EntityType::ExternalEntity, ext);
        AttributeSchema { per_type }
    }

    pub fn declared_kind(&self, ty: EntityType, name: &str) -> Option<AttributeKind> {
        self.per_type.get(&ty).and_then(|m| m.get(name)).copied()
    }
}

/// Temporal validity interval; `end = None` means the entity is still live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub start: i64,
    pub end: Option<i64>,
}

impl Validity {
    pub fn open(start: i64) -> Validity {
        Validity { start, end: None }
    }

    pub fn closed(start: i64, end: i64) -> Validity {
        Validity {
            start,
            end: Some(end),
        }
    }

    pub fn is_inverted(&self) -> bool {
        matches!(self.end, Some(end) if end < self.start)
    }

    /// Containment of `[start, end]` treating an open end as +inf.
    pub fn contains_span(&self, start: i64, end: i64) -> bool {
        start >= self.start && self.end.map_or(true, |e| end <= e)
    }

    /// Union of two intervals, used when identities merge.
    pub fn union(&self, other: &Validity) -> Validity {
        let start = self.start.min(other.start);
        let end = match (self.end, other.end) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        Validity { start, end }
    }
}

/// One provenance entry on an entity: which system observed it and through
/// which step it entered the substrate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceLineage {
    pub source_system: String,
    pub note: String,
}

/// Lifecycle stages form a strictly forward chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LifecycleStage {
    Created,
    Active,
    Dormant,
    Retired,
}

impl LifecycleStage {
    pub fn successor(&self) -> Option<LifecycleStage> {
        match self {
            LifecycleStage::Created => Some(LifecycleStage::Active),
            LifecycleStage::Active => Some(LifecycleStage::Dormant),
            LifecycleStage::Dormant => Some(LifecycleStage::Retired),
            LifecycleStage::Retired => None,
        }
    }
}

/// A recorded transition. Entries are append-only; nothing ever mutates or
/// removes one once it is in the list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleTransition {
    pub from: LifecycleStage,
    pub to: LifecycleStage,
    pub at: i64,
}

/// Lifecycle state machine: current stage plus the immutable transition log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleState {
    pub state: LifecycleStage,
    pub transitions: Vec<LifecycleTransition>,
}

/// Reasons a lifecycle transition is refused.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LifecycleError {
    #[error("illegal lifecycle transition {from:?} -> {to:?}")]
    IllegalTransition {
        from: LifecycleStage,
        to: LifecycleStage,
    },
    #[error("stale transition timestamp {at} (last transition at {last})")]
    StaleTimestamp { at: i64, last: i64 },
}

impl LifecycleState {
    pub fn new() -> LifecycleState {
        LifecycleState {
            state: LifecycleStage::Created,
            transitions: Vec::new(),
        }
    }

    /// Created -> Active immediately, as adapters do on first sight.
    pub fn activated(at: i64) -> LifecycleState {
        LifecycleState {
            state: LifecycleStage::Active,
            transitions: vec![LifecycleTransition {
                from: LifecycleStage::Created,
                to: LifecycleStage::Active,
                at,
            }],
        }
    }

    fn last_at(&self) -> Option<i64> {
        self.transitions.last().map(|t| t.at)
    }

    /// Append a transition if `to` is the immediate successor in the chain.
    pub fn transition(&mut self, to: LifecycleStage, at: i64) -> Result<(), LifecycleError> {
        if self.state.successor() != Some(to) {
            return Err(LifecycleError::IllegalTransition {
                from: self.state,
                to,
            });
        }
        if let Some(last) = self.last_at() {
            if at < last {
                return Err(LifecycleError::StaleTimestamp { at, last });
            }
        }
        self.transitions.push(LifecycleTransition {
            from: self.state,
            to,
            at,
        });
        self.state = to;
        Ok(())
    }

    /// Walk the chain forward to Retired, recording every hop at `at`.
    pub fn retire(&mut self, at: i64) -> Result<(), LifecycleError> {
        while self.state != LifecycleStage::Retired {
            let next = self.state.successor().expect("non-retired has successor");
            self.transition(next, at)?;
        }
        Ok(())
    }
}

impl Default for LifecycleState {
    fn default() -> Self {
        Self::new()
    }
}

/// A persistent canonical entity node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalEntity {
    pub id: String,
    pub entity_type: EntityType,
    pub attributes: BTreeMap<String, AttributeValue>,
    pub source_meta: Vec<SourceLineage>,
    pub validity: Validity,
    pub lifecycle: LifecycleState,
}

impl CanonicalEntity {
    /// Minimal live entity as adapters emit it.
    pub fn new(id: impl Into<String>, entity_type: EntityType, at: i64) -> CanonicalEntity {
        CanonicalEntity {
            id: id.into(),
            entity_type,
            attributes: BTreeMap::new(),
            source_meta: Vec::new(),
            validity: Validity::open(at),
            lifecycle: LifecycleState::activated(at),
        }
    }

    pub fn with_attr(mut self, name: &str, value: AttributeValue) -> CanonicalEntity {
        self.attributes.insert(name.to_string(), value);
        self
    }

    pub fn with_lineage(mut self, source_system: &str, note: &str) -> CanonicalEntity {
        self.source_meta.push(SourceLineage {
            source_system: source_system.to_string(),
            note: note.to_string(),
        });
        self
    }
}

/// One entity-invariant violation. Violations are data, not failures: a
/// validator returns the full list rather than stopping at the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityViolation {
    EmptyId,
    InvertedValidityInterval,
    UnknownAttribute(String),
    AttributeTypeMismatch(String),
    MissingProvenance,
}

impl fmt::Display for EntityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityViolation::EmptyId => write!(f, "empty id"),
            EntityViolation::InvertedValidityInterval => write!(f, "inverted validity interval"),
            EntityViolation::UnknownAttribute(n) => write!(f, "unknown attribute {n}"),
            EntityViolation::AttributeTypeMismatch(n) => write!(f, "type mismatch on {n}"),
            EntityViolation::MissingProvenance => write!(f, "missing provenance"),
        }
    }
}

/// Check an entity against the structural invariants and the attribute
/// contract for its type. Empty result means the entity is admissible.
pub fn validate_entity(e: &CanonicalEntity, schema: &AttributeSchema) -> Vec<EntityViolation> {
    let mut violations = Vec::new();
    if e.id.is_empty() {
        violations.push(EntityViolation::EmptyId);
    }
    if e.validity.is_inverted() {
        violations.push(EntityViolation::InvertedValidityInterval);
    }
    for (name, value) in &e.attributes {
        match schema.declared_kind(e.entity_type, name) {
            None => violations.push(EntityViolation::UnknownAttribute(name.clone())),
            Some(kind) if kind != value.kind() => {
                violations.push(EntityViolation::AttributeTypeMismatch(name.clone()))
            }
            Some(_) => {}
        }
    }
    if e.source_meta.is_empty() {
        violations.push(EntityViolation::MissingProvenance);
    }
    violations
}
