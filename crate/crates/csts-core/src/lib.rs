//! Canonical security telemetry substrate (CSTS).
//!
//! Heterogeneous security telemetry is mapped through thin adapters into a
//! time-indexed, typed, provenance-preserving entity-relational multigraph.
//! On top of the substrate this crate ships the full portability-evaluation
//! harness: a two-environment synthetic benchmark with lateral-movement and
//! zero-day injection, raw-schema perturbation levels, event-centric and
//! substrate-based feature pipelines over shared tumbling windows, a fixed
//! logistic evaluator with transfer / robustness / orientation reports, a
//! train-only quantile viability protocol, and the learning-object / view
//! calculus for model-consumption units.
//!
//! The crate is organized around the substrate boundary:
//!
//! - [`graph`] — canonical entities, typed relationships, delta log, replay
//! - [`identity`] — deterministic resolution, normalization, merges
//! - [`adapter`] — raw telemetry parsing and alias-aware canonicalization
//! - [`synth`] — seeded benchmark generator (EnvA/EnvB, LM/ZDT, fixtures)
//! - [`perturb`] — P0–P3 raw-schema perturbations
//! - [`window`] — tumbling windows, train histories, both feature pipelines
//! - [`eval`] — metrics, classifier, transfer/orientation/viability reports
//! - [`objects`] — learning objects, views, pairing policies, motifs
//! - [`pipeline`] — file-level experiment driver used by the CLI
//!
//! With the default `parallel` feature, window featurization and bootstrap
//! resampling fan out over rayon; outputs are byte-identical to the
//! sequential fallback because every random draw is keyed by index, not by
//! worker.

pub mod adapter;
pub mod config;
pub mod eval;
pub mod graph;
pub mod identity;
pub mod objects;
pub mod perturb;
pub mod pipeline;
pub mod synth;
pub mod util;
pub mod window;

pub use config::ExperimentConfig;
pub use graph::SubstrateGraph;
