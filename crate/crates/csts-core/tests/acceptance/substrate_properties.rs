//! Randomized substrate invariants backing criterion 6. Each property runs
//! under its own proptest runner; `run_all` returns the total number of
//! randomized cases executed.

use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use csts_core::graph::{
    CanonicalEntity, CanonicalRelationship, EntityType, GraphDelta, GraphError, LifecycleStage,
    LifecycleState, Provenance, RelationshipType, SubstrateGraph, TimeSpan, Validity,
};

const UNIVERSE: [(&str, EntityType); 15] = [
    ("user:u0", EntityType::User),
    ("user:u1", EntityType::User),
    ("user:u2", EntityType::User),
    ("host:h0", EntityType::Host),
    ("host:h1", EntityType::Host),
    ("host:h2", EntityType::Host),
    ("proc:p0", EntityType::Process),
    ("proc:p1", EntityType::Process),
    ("file:f0", EntityType::File),
    ("file:f1", EntityType::File),
    ("ext:e0", EntityType::ExternalEntity),
    ("ext:e1", EntityType::ExternalEntity),
    ("cred:c0", EntityType::Credential),
    ("cloud:r0", EntityType::CloudResource),
    ("flow:n0", EntityType::NetworkFlow),
];

fn rel(idx: usize) -> RelationshipType {
    RelationshipType::ALL[idx % RelationshipType::ALL.len()]
}

fn entity(idx: usize) -> CanonicalEntity {
    let (id, ty) = UNIVERSE[idx % UNIVERSE.len()];
    CanonicalEntity::new(id, ty, 0).with_lineage("prop", "universe")
}

fn edge(rel_idx: usize, src_idx: usize, dst_idx: usize, t: i64) -> CanonicalRelationship {
    let (src, _) = UNIVERSE[src_idx % UNIVERSE.len()];
    let (dst, _) = UNIVERSE[dst_idx % UNIVERSE.len()];
    CanonicalRelationship::new(
        src,
        dst,
        rel(rel_idx),
        TimeSpan::point(t),
        Provenance::new("prop", 0, TimeSpan::point(t)).with_lineage(&["prop"]),
    )
}

fn full_graph() -> SubstrateGraph {
    let mut g = SubstrateGraph::default();
    let mut d = GraphDelta::at(0);
    for i in 0..UNIVERSE.len() {
        d = d.upsert(entity(i));
    }
    g.apply_delta(d).expect("universe is valid");
    g
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

/// Replaying the accepted delta log from the empty graph reproduces the
/// live graph under deep structural equality.
fn replay_determinism(counter: &AtomicUsize) {
    let op = (0usize..40, 0usize..15, 0usize..15, 0i64..500, prop::bool::ANY);
    let strategy = proptest::collection::vec(op, 0..12);
    runner(1_500)
        .run(&strategy, |ops| {
            counter.fetch_add(1, Ordering::Relaxed);
            let mut g = full_graph();
            for (rel_idx, src, dst, t, as_batch) in ops {
                let at = g.delta_log().last().map_or(t, |d| d.at.max(t));
                let e = edge(rel_idx, src, dst, t);
                let result = if as_batch {
                    g.apply_delta(GraphDelta::at(at).edge(e))
                } else {
                    g.insert_edge(e)
                };
                let _ = result; // rejected elements simply do not enter the log
            }
            let replayed = g.snapshot_at(i64::MAX);
            prop_assert!(replayed.structurally_equal(&g));

            // explicit fold over the accepted log
            let mut folded = SubstrateGraph::default();
            for d in g.delta_log() {
                folded.apply_delta(d.clone()).expect("accepted deltas replay");
            }
            prop_assert!(folded.structurally_equal(&g));
            Ok(())
        })
        .expect("replay determinism");
}

/// No accepted edge violates its relationship signature, and the accept /
/// reject decision matches the signature table exactly.
fn signature_soundness(counter: &AtomicUsize) {
    let strategy = (0usize..9, 0usize..15, 0usize..15, 0i64..500);
    runner(2_500)
        .run(&strategy, |(rel_idx, src, dst, t)| {
            counter.fetch_add(1, Ordering::Relaxed);
            let mut g = full_graph();
            let e = edge(rel_idx, src, dst, t);
            let src_ty = UNIVERSE[src % UNIVERSE.len()].1;
            let dst_ty = UNIVERSE[dst % UNIVERSE.len()].1;
            let admitted = rel(rel_idx).admits(src_ty, dst_ty);
            match g.insert_edge(e) {
                Ok(()) => prop_assert!(admitted),
                Err(GraphError::SignatureViolation { .. }) => prop_assert!(!admitted),
                Err(other) => prop_assert!(false, "unexpected error {other}"),
            }
            for stored in g.edges() {
                let s = g.entity(&stored.src).expect("endpoint exists").entity_type;
                let d = g.entity(&stored.dst).expect("endpoint exists").entity_type;
                prop_assert!(stored.rel_type.admits(s, d));
            }
            Ok(())
        })
        .expect("signature soundness");
}

/// Every stored edge's time lies inside the validity intersection of its
/// endpoints, and the accept/reject decision matches containment.
fn temporal_containment(counter: &AtomicUsize) {
    let interval = (0i64..200, prop::option::of(0i64..200));
    let strategy = (interval.clone(), interval, 0i64..250, 0i64..50);
    runner(2_000)
        .run(&strategy, |((s1, e1), (s2, e2), a, len)| {
            counter.fetch_add(1, Ordering::Relaxed);
            let mut g = SubstrateGraph::default();
            let mut user = CanonicalEntity::new("user:u", EntityType::User, s1)
                .with_lineage("prop", "fixture");
            user.validity = Validity {
                start: s1,
                end: e1.map(|e| s1.max(e)),
            };
            let mut host = CanonicalEntity::new("host:h", EntityType::Host, s2)
                .with_lineage("prop", "fixture");
            host.validity = Validity {
                start: s2,
                end: e2.map(|e| s2.max(e)),
            };
            let contained = user.validity.contains_span(a, a + len)
                && host.validity.contains_span(a, a + len);
            g.apply_delta(GraphDelta::at(0).upsert(user).upsert(host))
                .expect("entities valid");
            let e = CanonicalRelationship::new(
                "user:u",
                "host:h",
                RelationshipType::AuthenticatesTo,
                TimeSpan::span(a, a + len),
                Provenance::new("prop", 0, TimeSpan::span(a, a + len)).with_lineage(&["prop"]),
            );
            match g.insert_edge(e) {
                Ok(()) => prop_assert!(contained),
                Err(GraphError::TemporalMisalignment { .. }) => prop_assert!(!contained),
                Err(other) => prop_assert!(false, "unexpected error {other}"),
            }
            for stored in g.edges() {
                let su = g.entity(&stored.src).expect("src").validity;
                let sd = g.entity(&stored.dst).expect("dst").validity;
                prop_assert!(su.contains_span(stored.time.start, stored.time.end));
                prop_assert!(sd.contains_span(stored.time.start, stored.time.end));
            }
            Ok(())
        })
        .expect("temporal containment");
}

/// Transition logs are prefix-respecting walks of the forward chain with
/// non-decreasing timestamps, no matter what sequence is requested.
fn lifecycle_monotonicity(counter: &AtomicUsize) {
    let stages = [
        LifecycleStage::Created,
        LifecycleStage::Active,
        LifecycleStage::Dormant,
        LifecycleStage::Retired,
    ];
    let strategy = proptest::collection::vec((0usize..4, 0i64..100), 0..12);
    runner(2_000)
        .run(&strategy, |requests| {
            counter.fetch_add(1, Ordering::Relaxed);
            let mut lc = LifecycleState::new();
            for (stage_idx, at) in requests {
                let _ = lc.transition(stages[stage_idx], at);
            }
            let chain = [
                (LifecycleStage::Created, LifecycleStage::Active),
                (LifecycleStage::Active, LifecycleStage::Dormant),
                (LifecycleStage::Dormant, LifecycleStage::Retired),
            ];
            for (i, t) in lc.transitions.iter().enumerate() {
                prop_assert_eq!((t.from, t.to), chain[i]);
            }
            prop_assert!(lc.transitions.windows(2).all(|w| w[0].at <= w[1].at));
            Ok(())
        })
        .expect("lifecycle monotonicity");
}

/// Inserting the same (src, dst, type) at two distinct timestamps keeps
/// both edges.
fn parallel_edge_preservation(counter: &AtomicUsize) {
    let strategy = (0usize..9, 0usize..15, 0usize..15, 0i64..200, 1i64..200);
    runner(1_000)
        .run(&strategy, |(rel_idx, src, dst, t1, gap)| {
            counter.fetch_add(1, Ordering::Relaxed);
            let mut g = full_graph();
            let first = g.insert_edge(edge(rel_idx, src, dst, t1));
            if first.is_ok() {
                g.insert_edge(edge(rel_idx, src, dst, t1 + gap))
                    .expect("same signature, open validity");
                prop_assert_eq!(g.edge_count(), 2);
                let key = g.edges()[0].key();
                prop_assert_eq!(g.edges()[1].key(), key);
            }
            Ok(())
        })
        .expect("parallel edge preservation");
}

/// Merges preserve the edge multiset cardinality and replay losslessly.
fn merge_conservation(counter: &AtomicUsize) {
    let edges = proptest::collection::vec((0usize..9, 0usize..15, 0usize..15, 0i64..300), 0..20);
    let strategy = (edges, 0usize..15, 0usize..15);
    runner(1_000)
        .run(&strategy, |(edges, keep_idx, absorb_idx)| {
            counter.fetch_add(1, Ordering::Relaxed);
            let mut g = full_graph();
            for (rel_idx, src, dst, t) in edges {
                let _ = g.insert_edge(edge(rel_idx, src, dst, t));
            }
            let (keep, keep_ty) = UNIVERSE[keep_idx % UNIVERSE.len()];
            let (absorb, absorb_ty) = UNIVERSE[absorb_idx % UNIVERSE.len()];
            let before = g.edge_count();
            let merged = csts_core::identity::merge_identities(&mut g, keep, absorb, 1_000);
            if keep == absorb || keep_ty != absorb_ty {
                // self-merges retire the entity but must still conserve
                // edges; cross-type merges are rejected outright
                if keep_ty != absorb_ty {
                    prop_assert!(merged.is_err());
                    return Ok(());
                }
            }
            prop_assert!(merged.is_ok());
            prop_assert_eq!(g.edge_count(), before);
            prop_assert_eq!(
                g.entity(absorb).expect("still present").lifecycle.state,
                LifecycleStage::Retired
            );
            let replayed = g.snapshot_at(i64::MAX);
            prop_assert!(replayed.structurally_equal(&g));
            Ok(())
        })
        .expect("merge conservation");
}

/// Run every property; returns the number of randomized cases executed.
pub fn run_all() -> usize {
    let counter = AtomicUsize::new(0);
    replay_determinism(&counter);
    signature_soundness(&counter);
    temporal_containment(&counter);
    lifecycle_monotonicity(&counter);
    parallel_edge_preservation(&counter);
    merge_conservation(&counter);
    counter.load(Ordering::Relaxed)
}
