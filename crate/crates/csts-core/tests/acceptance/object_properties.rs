//! Learning-object checks backing criterion 7: construction containment on
//! randomized graphs, motif equality against brute-force enumeration at
//! desk scale, one fixture per view-validity constraint, and the planted
//! hard-negative recovery.

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use csts_core::graph::{
    CanonicalEntity, CanonicalRelationship, EntityType, GraphDelta, Provenance, RelationshipType,
    SubstrateGraph, TimeSpan,
};
use csts_core::objects::{
    apply_view, construct, find_motifs, find_motifs_bruteforce, pair_policy, validate_view,
    ConstructionPolicy, Focal, FocalQuery, MotifTemplate, ObjectError, PairCandidate, PairPolicy,
    ViewTransform, ViewViolation, ViewedObject,
};

fn entity(id: &str, ty: EntityType) -> CanonicalEntity {
    CanonicalEntity::new(id, ty, 0).with_lineage("prop", "fixture")
}

fn edge(src: &str, dst: &str, rel: RelationshipType, t: i64) -> CanonicalRelationship {
    CanonicalRelationship::new(
        src,
        dst,
        rel,
        TimeSpan::point(t),
        Provenance::new("prop", 0, TimeSpan::point(t)).with_lineage(&["prop"]),
    )
}

/// Random auth/exec graph over a small fixed universe.
fn build_graph(edges: &[(usize, usize, i64)]) -> SubstrateGraph {
    let mut g = SubstrateGraph::default();
    let mut d = GraphDelta::at(0);
    for u in 0..4 {
        d = d.upsert(entity(&format!("user:u{u}"), EntityType::User));
    }
    for h in 0..5 {
        d = d.upsert(entity(&format!("host:h{h}"), EntityType::Host));
    }
    g.apply_delta(d).unwrap();
    for (u, h, t) in edges {
        g.insert_edge(edge(
            &format!("user:u{}", u % 4),
            &format!("host:h{}", h % 5),
            RelationshipType::AuthenticatesTo,
            *t,
        ))
        .unwrap();
    }
    g
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

/// Construction containment invariants hold on randomized graphs for
/// entity, subgraph, and interaction queries.
fn construction_containment() {
    let edges = proptest::collection::vec((0usize..4, 0usize..5, 0i64..400), 1..30);
    let strategy = (edges, 0usize..4, 0u8..3, 1usize..12, 0i64..200, 1i64..300);
    runner(400)
        .run(&strategy, |(edges, focal_u, hops, max_nodes, t0, len)| {
            let g = build_graph(&edges);
            let support = TimeSpan::span(t0, t0 + len);
            let policy = ConstructionPolicy {
                hops,
                max_nodes,
                ..Default::default()
            };
            let focal = format!("user:u{focal_u}");
            let o = construct(&g, &FocalQuery::Entity(focal), support, &policy)
                .expect("entity focal always exists");
            prop_assert!(o.containment_holds(&g), "containment violated");
            prop_assert!(o.entities.len() <= max_nodes.max(1));

            // interaction query on the first edge inside the support window
            if let Some(e) = g.edges().iter().find(|e| support.contains(&e.time)) {
                let q = FocalQuery::Edge {
                    src: e.src.clone(),
                    dst: e.dst.clone(),
                    rel_type: e.rel_type,
                    at: e.time.start,
                };
                let o = construct(&g, &q, support, &policy).expect("edge exists");
                prop_assert!(o.containment_holds(&g));
            }
            Ok(())
        })
        .expect("construction containment");
}

/// Motif bindings equal brute-force enumeration on graphs of at most 50
/// edges.
fn motif_bruteforce_equality() {
    let edges = proptest::collection::vec((0usize..3, 0usize..12, 0i64..600), 1..50);
    let strategy = (edges, 2usize..6, 30i64..300);
    runner(400)
        .run(&strategy, |(edges, min_targets, duration)| {
            let mut g = SubstrateGraph::default();
            let mut d = GraphDelta::at(0);
            for p in 0..3 {
                d = d.upsert(entity(&format!("proc:p{p}"), EntityType::Process));
            }
            for f in 0..12 {
                d = d.upsert(entity(&format!("file:f{f:02}"), EntityType::File));
            }
            g.apply_delta(d).unwrap();
            for (p, f, t) in &edges {
                g.insert_edge(edge(
                    &format!("proc:p{}", p % 3),
                    &format!("file:f{:02}", f % 12),
                    RelationshipType::Writes,
                    *t,
                ))
                .unwrap();
            }
            let template = MotifTemplate::write_cascade(min_targets, duration);
            let window = TimeSpan::span(0, 600);
            prop_assert_eq!(
                find_motifs(&g, &template, window),
                find_motifs_bruteforce(&g, &template, window)
            );
            Ok(())
        })
        .expect("motif equality");
}

/// Every admissible transform yields a valid view on a well-formed object.
fn view_closure() {
    let strategy = (0usize..6, 1usize..8, any::<u64>());
    runner(200)
        .run(&strategy, |(kind, keep, seed)| {
            let g = build_graph(&[(0, 0, 10), (0, 1, 20), (1, 0, 30), (2, 3, 40)]);
            let o = construct(
                &g,
                &FocalQuery::Entity("user:u0".into()),
                TimeSpan::span(0, 100),
                &ConstructionPolicy::default(),
            )
            .unwrap();
            let transform = match kind {
                0 => ViewTransform::AttributeMask {
                    attributes: vec!["distinct_src".into()],
                },
                1 => ViewTransform::NeighborhoodSubsample { keep_nodes: keep },
                2 => ViewTransform::TemporalOffset { start: 0, end: 100 },
                3 => ViewTransform::SourceOmission {
                    source_system: "other-producer".into(),
                },
                4 => ViewTransform::ModalityProjection {
                    keep: csts_core::objects::Modality::ALL.into_iter().collect(),
                },
                _ => ViewTransform::ConfidencePrune { min_confidence: 0.5 },
            };
            let view = apply_view(&o, &transform, seed).expect("admissible transform");
            prop_assert!(validate_view(&o, &view).is_empty());
            Ok(())
        })
        .expect("view closure");
}

/// One hand-built candidate per validity constraint, each violating exactly
/// that constraint.
fn violation_fixtures() {
    let g = build_graph(&[(0, 0, 10), (0, 1, 20)]);
    let o = construct(
        &g,
        &FocalQuery::Edge {
            src: "user:u0".into(),
            dst: "host:h0".into(),
            rel_type: RelationshipType::AuthenticatesTo,
            at: 10,
        },
        TimeSpan::span(0, 100),
        &ConstructionPolicy::default(),
    )
    .unwrap();
    let base = ViewedObject {
        object: o.clone(),
        derived_from: o.fingerprint(),
        transform: "fixture".into(),
        masked_attributes: BTreeSet::new(),
    };
    assert!(validate_view(&o, &base).is_empty());

    let mut focal_swap = base.clone();
    focal_swap.object.focal = Focal::Entity { id: "host:h1".into() };
    assert_eq!(validate_view(&o, &focal_swap), vec![ViewViolation::FocalChanged]);

    let mut retyped = base.clone();
    retyped.object.edges[0].rel_type = RelationshipType::Spawns;
    let v = validate_view(&o, &retyped);
    assert!(v.contains(&ViewViolation::SignatureInvalid), "{v:?}");

    let mut shrunk = base.clone();
    shrunk.object.support = TimeSpan::span(0, 5);
    assert_eq!(validate_view(&o, &shrunk), vec![ViewViolation::TemporalIncoherent]);

    let mut stripped = base.clone();
    stripped.object.edges[0].provenance.lineage.clear();
    assert_eq!(validate_view(&o, &stripped), vec![ViewViolation::ProvenanceLost]);

    let mut dropped = base.clone();
    dropped
        .object
        .edges
        .retain(|e| e.rel_type != RelationshipType::AuthenticatesTo);
    assert_eq!(
        validate_view(&o, &dropped),
        vec![ViewViolation::FocalRelationDropped]
    );

    // and the error path refuses to emit an inadmissible view at all
    let err = apply_view(&o, &ViewTransform::ConfidencePrune { min_confidence: 2.0 }, 7);
    assert!(matches!(err, Err(ObjectError::InvalidView(_))));
}

/// Planted look-alike pair (same degree stats, different edge-type mix)
/// surfaces among the hard negatives of a 20-object fixture.
fn hard_negative_recovery() {
    let mk = |key: &str, summary: Vec<f64>, hist: Vec<f64>, label: u8| PairCandidate {
        fingerprint: key.to_string(),
        derived_from: None,
        focal_key: key.to_string(),
        support: TimeSpan::span(0, 100),
        summary,
        edge_type_hist: hist,
        label: Some(label),
    };
    let mut cands = vec![
        mk(
            "planted-a",
            vec![12.0, 13.0, 6.0, 6.0, 4.0],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            0,
        ),
        mk(
            "planted-b",
            vec![12.0, 13.0, 6.0, 6.0, 4.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            1,
        ),
    ];
    for i in 0..18 {
        let scale = 40.0 + 12.0 * i as f64;
        cands.push(mk(
            &format!("bg-{i}"),
            vec![scale, scale + 1.0, scale / 2.0, scale / 2.0, 5.0],
            vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            (i % 2) as u8,
        ));
    }
    let hard = pair_policy(&cands, PairPolicy::HardNegative).expect("enough objects");
    assert!(hard.contains(&(0, 1)), "planted pair missing from {hard:?}");
}

pub fn run_all() {
    construction_containment();
    motif_bruteforce_equality();
    view_closure();
    violation_fixtures();
    hard_negative_recovery();
}
