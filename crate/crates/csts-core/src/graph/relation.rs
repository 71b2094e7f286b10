//! Typed directed relationships with fixed domain/codomain signatures and
//! full per-edge provenance.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::entity::{AttributeValue, EntityType};

/// Closed set of relationship types. `signature()` gives the admitted
/// source/target entity classes, consulted on every edge insert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelationshipType {
    AuthenticatesTo,
    Executes,
    ConnectsTo,
    Reads,
    Writes,
    Modifies,
    Spawns,
    Owns,
    AssociatedWith,
}

use EntityType as E;
use RelationshipType as R;

/// Domain/codomain table. An empty slice means "any entity type" and is used
/// only by the deliberately untyped ASSOCIATED_WITH.
pub struct Signature {
    pub sources: &'static [EntityType],
    pub targets: &'static [EntityType],
}

impl RelationshipType {
    pub const ALL: [RelationshipType; 9] = [
        R::AuthenticatesTo,
        R::Executes,
        R::ConnectsTo,
        R::Reads,
        R::Writes,
        R::Modifies,
        R::Spawns,
        R::Owns,
        R::AssociatedWith,
    ];

    pub fn signature(&self) -> Signature {
        match self {
            R::AuthenticatesTo => Signature {
                sources: &[E::User, E::Credential],
                targets: &[E::Host],
            },
            R::Executes => Signature {
                sources: &[E::User, E::Host],
                targets: &[E::Process],
            },
            R::Spawns => Signature {
                sources: &[E::Process],
                targets: &[E::Process],
            },
            R::ConnectsTo => Signature {
                sources: &[E::Host, E::Process],
                targets: &[E::Host, E::ExternalEntity],
            },
            R::Reads | R::Writes | R::Modifies => Signature {
                sources: &[E::Process],
                targets: &[E::File],
            },
            R::Owns => Signature {
                sources: &[E::User],
                targets: &[E::Credential, E::CloudResource, E::Host],
            },
            R::AssociatedWith => Signature {
                sources: &[],
                targets: &[],
            },
        }
    }

    /// Does this relationship admit the given (source, target) typing?
    pub fn admits(&self, src: EntityType, dst: EntityType) -> bool {
        let sig = self.signature();
        let src_ok = sig.sources.is_empty() || sig.sources.contains(&src);
        let dst_ok = sig.targets.is_empty() || sig.targets.contains(&dst);
        src_ok && dst_ok
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            R::AuthenticatesTo => "AUTHENTICATES_TO",
            R::Executes => "EXECUTES",
            R::ConnectsTo => "CONNECTS_TO",
            R::Reads => "READS",
            R::Writes => "WRITES",
            R::Modifies => "MODIFIES",
            R::Spawns => "SPAWNS",
            R::Owns => "OWNS",
            R::AssociatedWith => "ASSOCIATED_WITH",
        }
    }

    pub fn parse(name: &str) -> Option<RelationshipType> {
        Self::ALL.iter().copied().find(|r| r.as_str() == name)
    }
}

impl fmt::Display for RelationshipType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Event timestamp or closed interval; a point event has `start == end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start: i64,
    pub end: i64,
}

impl TimeSpan {
    pub fn point(t: i64) -> TimeSpan {
        TimeSpan { start: t, end: t }
    }

    pub fn span(start: i64, end: i64) -> TimeSpan {
        TimeSpan { start, end }
    }

    pub fn contains(&self, other: &TimeSpan) -> bool {
        other.start >= self.start && other.end <= self.end
    }
}

/// Per-edge provenance: producing system, the three time semantics carried
/// as ingestion time plus valid time, a confidence score, and the ordered
/// transformation lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_system: String,
    pub ingestion_time: i64,
    pub valid_time: TimeSpan,
    pub confidence: f64,
    pub lineage: Vec<String>,
}

impl Provenance {
    pub fn new(source_system: &str, ingestion_time: i64, valid_time: TimeSpan) -> Provenance {
        Provenance {
            source_system: source_system.to_string(),
            ingestion_time,
            valid_time,
            confidence: 1.0,
            lineage: Vec::new(),
        }
    }

    pub fn with_lineage(mut self, steps: &[&str]) -> Provenance {
        self.lineage = steps.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// A typed directed edge between canonical entities. Direction is semantic
/// and never normalized; parallel edges are first-class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalRelationship {
    pub src: String,
    pub dst: String,
    pub rel_type: RelationshipType,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, AttributeValue>,
    pub time: TimeSpan,
    pub provenance: Provenance,
}

impl CanonicalRelationship {
    pub fn new(
        src: impl Into<String>,
        dst: impl Into<String>,
        rel_type: RelationshipType,
        time: TimeSpan,
        provenance: Provenance,
    ) -> CanonicalRelationship {
        CanonicalRelationship {
            src: src.into(),
            dst: dst.into(),
            rel_type,
            attributes: BTreeMap::new(),
            time,
            provenance,
        }
    }

    pub fn with_attr(mut self, name: &str, value: AttributeValue) -> CanonicalRelationship {
        self.attributes.insert(name.to_string(), value);
        self
    }

    /// Key used by novelty/rarity history lookups.
    pub fn key(&self) -> (String, String, RelationshipType) {
        (self.src.clone(), self.dst.clone(), self.rel_type)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn authenticates_to_is_user_or_credential_to_host() {
        assert!(R::AuthenticatesTo.admits(E::User, E::Host));
        assert!(R::AuthenticatesTo.admits(E::Credential, E::Host));
        assert!(!R::AuthenticatesTo.admits(E::Process, E::Host));
        assert!(!R::AuthenticatesTo.admits(E::User, E::File));
    }

    #[test]
    fn associated_with_admits_anything() {
        for s in E::ALL {
            for d in E::ALL {
                assert!(R::AssociatedWith.admits(s, d));
            }
        }
    }

    #[test]
    fn rel_type_round_trips_through_name() {
        for r in R::ALL {
            assert_eq!(R::parse(r.as_str()), Some(r));
        }
        assert_eq!(R::parse("PRIV_ESCALATES"), None);
    }

    #[test]
    fn timespan_containment() {
        let outer = TimeSpan::span(0, 100);
        assert!(outer.contains(&TimeSpan::point(50)));
        assert!(outer.contains(&TimeSpan::span(0, 100)));
        assert!(!outer.contains(&TimeSpan::span(50, 101)));
    }
}
