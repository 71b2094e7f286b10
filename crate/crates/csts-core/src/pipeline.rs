//! File-level experiment driver: generate, perturb, ingest, featurize,
//! evaluate, diagnose, and run the viability protocol, all under one output
//! directory with one governing seed.
//!
//! Every stage is idempotent given identical inputs, every output byte is
//! independent of wall clock, locale, and worker count, and each stage
//! fails with a `MissingArtifact` error naming the file a prerequisite
//! stage would have produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adapter::{adapter_for, ingest_file, policy_for, RawFormat};
use crate::config::ExperimentConfig;
use crate::eval::{
    evaluate_model, orientation_diagnostic, run_transfer, train_classifier, viability_protocol,
    EvalError, EvalReport, OrientationReport, PipelineMatrices, ViabilityReport,
};
use crate::graph::{AttributeSchema, SubstrateGraph};
use crate::perturb::{perturb_file, Level};
use crate::synth::{generate_divergence_fixture, generate_env, Task, WindowLabel};
use crate::window::{
    baseline_features, csts_features_lm, csts_features_zdt, BaselineBinding, Channel,
    FeatureError, FeatureMatrix, FeatureRow, SplitDescriptor, TrainHistory, WindowIndexer,
};

/// Everything `repro` produces, plus wall-clock stage timings (timings are
/// returned in memory only and never written into artifacts).
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub lm_transfer: Vec<EvalReport>,
    pub lm_robustness: Vec<EvalReport>,
    pub zdt_transfer: Vec<EvalReport>,
    pub orientation: OrientationReport,
    pub viability_divergent: ViabilityReport,
    pub viability_control: ViabilityReport,
    pub stage_seconds: BTreeMap<String, f64>,
}

/// Window ranges shared by every pipeline: history fitting, classifier
/// training rows, and evaluation rows, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRanges {
    pub n_windows: usize,
    pub history: Vec<i64>,
    pub train: Vec<i64>,
    pub eval: Vec<i64>,
}

impl SplitRanges {
    pub fn from_config(cfg: &ExperimentConfig) -> SplitRanges {
        let n = (cfg.duration_hours as usize * 60) / cfg.window_minutes as usize;
        let h_end = (n as f64 * cfg.history_fraction).floor() as i64;
        let t_end = (n as f64 * cfg.train_fraction).floor() as i64;
        SplitRanges {
            n_windows: n,
            history: (0..h_end).collect(),
            train: (h_end..t_end).collect(),
            eval: (t_end..n as i64).collect(),
        }
    }
}

pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    fp: String,
}

fn write(path: &Path, contents: &str) -> Result<(), EvalError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn require(path: PathBuf) -> Result<PathBuf, EvalError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(EvalError::MissingArtifact(path))
    }
}

fn task_dir_name(task: Task) -> &'static str {
    match task {
        Task::Lm => "lm",
        Task::Zdt => "zdt",
    }
}

impl Pipeline {
    pub fn new(cfg: ExperimentConfig, out: impl Into<PathBuf>) -> Pipeline {
        let fp = cfg.fingerprint();
        Pipeline {
            cfg,
            out: out.into(),
            fp,
        }
    }

    fn indexer(&self) -> WindowIndexer {
        WindowIndexer::new(self.cfg.window_minutes)
    }

    fn raw_csv(&self, task: Task, env: &str) -> PathBuf {
        self.out.join(format!("raw/{}/{env}.csv", task_dir_name(task)))
    }

    fn labels_path(&self, task: Task, env: &str) -> PathBuf {
        self.out
            .join(format!("raw/{}/{env}.labels.jsonl", task_dir_name(task)))
    }

    fn perturbed_csv(&self, level: Level) -> PathBuf {
        self.out.join(format!("perturbed/lm/env_b.{level}.csv"))
    }

    fn graph_path(&self, task: &str, name: &str) -> PathBuf {
        self.out.join(format!("graphs/{task}/{name}.graph.jsonl"))
    }

    fn features_path(&self, task: &str, name: &str) -> PathBuf {
        self.out.join(format!("features/{task}/{name}.csv"))
    }

    fn reports_dir(&self) -> PathBuf {
        self.out.join("reports")
    }

    fn tables_dir(&self) -> PathBuf {
        self.out.join("reports/tables")
    }

    // -----------------------------------------------------------------
    // synth
    // -----------------------------------------------------------------

    /// Generate both environments for every configured task plus the
    /// producer-divergence fixtures.
    pub fn synth(&self) -> Result<(), EvalError> {
        write(&self.out.join("config.json"), &self.cfg.to_json())?;
        for task in self.cfg.tasks.clone() {
            let (profile_a, profile_b, inj_a, inj_b) = match task {
                Task::Lm => (
                    &self.cfg.env_a_lm,
                    &self.cfg.env_b_lm,
                    &self.cfg.lm_injection_a,
                    &self.cfg.lm_injection_b,
                ),
                Task::Zdt => (
                    &self.cfg.env_a_zdt,
                    &self.cfg.env_b_zdt,
                    &self.cfg.zdt_injection_a,
                    &self.cfg.zdt_injection_b,
                ),
            };
            for (profile, inj, env) in [(profile_a, inj_a, "env_a"), (profile_b, inj_b, "env_b")] {
                let generated =
                    generate_env(profile, inj, self.cfg.duration_hours, self.cfg.window_minutes)
                        .map_err(|e| {
                            EvalError::DegenerateClass(format!("generation failed: {e}"))
                        })?;
                write(&self.raw_csv(task, env), &generated.telemetry_csv)?;
                write(&self.labels_path(task, env), &generated.labels_jsonl())?;
            }
        }
        let fixture = generate_divergence_fixture(&self.cfg.viability.divergence);
        write(&self.out.join("raw/viability/train.csv"), &fixture.train_csv)?;
        write(
            &self.out.join("raw/viability/divergent.csv"),
            &fixture.divergent_csv,
        )?;
        write(&self.out.join("raw/viability/control.csv"), &fixture.control_csv)?;
        Ok(())
    }

    // -----------------------------------------------------------------
    // perturb
    // -----------------------------------------------------------------

    /// Apply the configured perturbation levels to the EnvB LM file.
    pub fn perturb(&self) -> Result<(), EvalError> {
        let input = require(self.raw_csv(Task::Lm, "env_b"))?;
        for level_name in &self.cfg.perturbation_levels {
            let level = Level::parse(level_name)
                .map_err(|e| EvalError::DegenerateClass(e.to_string()))?;
            if level == Level::P0 {
                continue;
            }
            let out = self.perturbed_csv(level);
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent)?;
            }
            perturb_file(&input, &out, level)
                .map_err(|e| EvalError::DegenerateClass(format!("perturb: {e}")))?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // ingest
    // -----------------------------------------------------------------

    fn ingest_one(&self, raw: &Path, flavor: &str, task: &str, name: &str) -> Result<(), EvalError> {
        let spec = adapter_for(flavor)
            .ok_or_else(|| EvalError::DegenerateClass(format!("unknown adapter {flavor}")))?;
        let policy = policy_for(flavor);
        let (g, report) = ingest_file(raw, RawFormat::Csv, &spec, &policy)
            .map_err(|e| EvalError::DegenerateClass(format!("ingest: {e}")))?;
        let gp = self.graph_path(task, name);
        if let Some(parent) = gp.parent() {
            std::fs::create_dir_all(parent)?;
        }
        g.export_jsonl_path(&gp)
            .map_err(|e| EvalError::DegenerateClass(format!("export: {e}")))?;
        write(
            &self.out.join(format!("graphs/{task}/{name}.ingest.json")),
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
        Ok(())
    }

    /// Canonicalize every staged raw file into graph JSONL plus an ingest
    /// report.
    pub fn ingest(&self) -> Result<(), EvalError> {
        for task in self.cfg.tasks.clone() {
            let td = task_dir_name(task);
            let raw_a = require(self.raw_csv(task, "env_a"))?;
            self.ingest_one(&raw_a, "env_a", td, "env_a")?;
            match task {
                Task::Lm => {
                    for level_name in &self.cfg.perturbation_levels {
                        let level = Level::parse(level_name)
                            .map_err(|e| EvalError::DegenerateClass(e.to_string()))?;
                        let raw = if level == Level::P0 {
                            require(self.raw_csv(task, "env_b"))?
                        } else {
                            require(self.perturbed_csv(level))?
                        };
                        self.ingest_one(&raw, "env_b", td, &format!("env_b.{level}"))?;
                    }
                }
                Task::Zdt => {
                    let raw_b = require(self.raw_csv(task, "env_b"))?;
                    self.ingest_one(&raw_b, "env_b", td, "env_b")?;
                }
            }
        }
        for name in ["train", "divergent", "control"] {
            let raw = require(self.out.join(format!("raw/viability/{name}.csv")))?;
            self.ingest_one(&raw, "env_a", "viability", name)?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------
    // features
    // -----------------------------------------------------------------

    fn load_labels(&self, task: Task, env: &str) -> Result<Vec<WindowLabel>, EvalError> {
        let path = require(self.labels_path(task, env))?;
        let text = std::fs::read_to_string(path)?;
        let mut labels = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            labels.push(
                serde_json::from_str(line)
                    .map_err(|e| EvalError::DegenerateClass(format!("labels: {e}")))?,
            );
        }
        Ok(labels)
    }

    fn load_graph(&self, task: &str, name: &str) -> Result<SubstrateGraph, EvalError> {
        let path = require(self.graph_path(task, name))?;
        SubstrateGraph::import_jsonl_path(&path, AttributeSchema::builtin())
            .map_err(|e| EvalError::DegenerateClass(format!("graph import: {e}")))
    }

    fn store_matrix(&self, task: &str, name: &str, m: &FeatureMatrix) -> Result<(), EvalError> {
        write(&self.features_path(task, name), &m.to_csv())?;
        write(
            &self.out.join(format!("features/{task}/{name}.sidecar.json")),
            &matrix_sidecar(m),
        )?;
        Ok(())
    }

    fn store_failure(&self, task: &str, name: &str, err: &FeatureError) -> Result<(), EvalError> {
        let marker = serde_json::json!({
            "schema_failure": err.to_string(),
            "missing_column": match err {
                FeatureError::MissingColumn(c) => Some(c.clone()),
                _ => None,
            },
        });
        write(
            &self.out.join(format!("features/{task}/{name}.schema_failure.json")),
            &serde_json::to_string_pretty(&marker).expect("marker serializes"),
        )?;
        Ok(())
    }

    fn history_descriptor(&self, env: &str, task: Task, ranges: &SplitRanges) -> SplitDescriptor {
        SplitDescriptor {
            producer: env.to_string(),
            task: task.as_str().to_string(),
            window_ids: ranges.history.clone(),
        }
    }

    fn split_fp(&self, env: &str, task: Task, windows: &[i64]) -> String {
        SplitDescriptor {
            producer: env.to_string(),
            task: task.as_str().to_string(),
            window_ids: windows.to_vec(),
        }
        .fingerprint()
    }

    fn csts_matrix(
        &self,
        task: Task,
        g: &SubstrateGraph,
        env: &str,
        windows: &[i64],
        labels: &[WindowLabel],
        ranges: &SplitRanges,
    ) -> Result<FeatureMatrix, EvalError> {
        let idx = self.indexer();
        let desc = self.history_descriptor(env, task, ranges);
        let hist = TrainHistory::fit(g, &idx, &desc);
        let split_fp = self.split_fp(env, task, windows);
        let m = match task {
            Task::Lm => csts_features_lm(g, &idx, windows, &hist, &desc, labels, env, &split_fp)?,
            Task::Zdt => csts_features_zdt(g, &idx, windows, &hist, &desc, labels, env, &split_fp)?,
        };
        Ok(m)
    }

    /// Build all feature matrices for the configured tasks. Baseline
    /// schema failures on perturbed inputs become failure markers instead
    /// of matrices.
    pub fn features(&self) -> Result<(), EvalError> {
        let ranges = SplitRanges::from_config(&self.cfg);
        let idx = self.indexer();
        let binding = BaselineBinding::default();
        for task in self.cfg.tasks.clone() {
            let td = task_dir_name(task);
            let labels_a = self.load_labels(task, "env_a")?;
            let labels_b = self.load_labels(task, "env_b")?;

            // baseline over raw files
            let raw_a = require(self.raw_csv(task, "env_a"))?;
            for (name, windows) in [
                ("baseline.env_a.train", &ranges.train),
                ("baseline.env_a.test", &ranges.eval),
            ] {
                let m = baseline_features(
                    &raw_a,
                    &binding,
                    &idx,
                    windows,
                    &labels_a,
                    "env_a",
                    task.as_str(),
                    &self.split_fp("env_a", task, windows),
                )?;
                self.store_matrix(td, name, &m)?;
            }
            let b_levels: Vec<Level> = match task {
                Task::Lm => self
                    .cfg
                    .perturbation_levels
                    .iter()
                    .map(|l| Level::parse(l).expect("validated in perturb stage"))
                    .collect(),
                Task::Zdt => vec![Level::P0],
            };
            for level in &b_levels {
                let raw_b = if *level == Level::P0 {
                    require(self.raw_csv(task, "env_b"))?
                } else {
                    require(self.perturbed_csv(*level))?
                };
                let name = format!("baseline.env_b.{level}.test");
                match baseline_features(
                    &raw_b,
                    &binding,
                    &idx,
                    &ranges.eval,
                    &labels_b,
                    "env_b",
                    task.as_str(),
                    &self.split_fp("env_b", task, &ranges.eval),
                ) {
                    Ok(m) => self.store_matrix(td, &name, &m)?,
                    Err(e @ FeatureError::MissingColumn(_)) => self.store_failure(td, &name, &e)?,
                    Err(e) => return Err(e.into()),
                }
            }

            // substrate pipeline over canonical graphs
            let g_a = self.load_graph(td, "env_a")?;
            for (name, windows) in [
                ("csts.env_a.train", &ranges.train),
                ("csts.env_a.test", &ranges.eval),
            ] {
                let m = self.csts_matrix(task, &g_a, "env_a", windows, &labels_a, &ranges)?;
                self.store_matrix(td, name, &m)?;
            }
            match task {
                Task::Lm => {
                    for level in &b_levels {
                        let g_b = self.load_graph(td, &format!("env_b.{level}"))?;
                        let m =
                            self.csts_matrix(task, &g_b, "env_b", &ranges.eval, &labels_b, &ranges)?;
                        self.store_matrix(td, &format!("csts.env_b.{level}.test"), &m)?;
                    }
                }
                Task::Zdt => {
                    let g_b = self.load_graph(td, "env_b")?;
                    let m = self.csts_matrix(task, &g_b, "env_b", &ranges.eval, &labels_b, &ranges)?;
                    self.store_matrix(td, "csts.env_b.P0.test", &m)?;
                }
            }
        }
        Ok(())
    }

    fn load_matrix(&self, task: &str, name: &str) -> Result<FeatureMatrix, FeatureError> {
        let marker = self
            .out
            .join(format!("features/{task}/{name}.schema_failure.json"));
        if marker.exists() {
            let text = std::fs::read_to_string(&marker)?;
            let v: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
            let col = v["missing_column"].as_str().unwrap_or("unknown").to_string();
            return Err(FeatureError::MissingColumn(col));
        }
        let csv_path = self.features_path(task, name);
        let sidecar_path = self.out.join(format!("features/{task}/{name}.sidecar.json"));
        load_matrix_files(&csv_path, &sidecar_path)
    }

    fn require_matrix(&self, task: &str, name: &str) -> Result<FeatureMatrix, EvalError> {
        self.load_matrix(task, name).map_err(|e| match e {
            FeatureError::Io(_) => {
                EvalError::MissingArtifact(self.features_path(task, name))
            }
            other => EvalError::Feature(other),
        })
    }

    /// Load a matrix, keeping a recorded schema failure as a value the
    /// transfer runner can turn into a zero row. Only a genuinely absent
    /// artifact is an error.
    fn matrix_or_failure(
        &self,
        task: &str,
        name: &str,
    ) -> Result<Result<FeatureMatrix, FeatureError>, EvalError> {
        match self.load_matrix(task, name) {
            Ok(m) => Ok(Ok(m)),
            Err(e @ FeatureError::MissingColumn(_)) => Ok(Err(e)),
            Err(FeatureError::Io(_)) => {
                Err(EvalError::MissingArtifact(self.features_path(task, name)))
            }
            Err(e) => Err(e.into()),
        }
    }

    // -----------------------------------------------------------------
    // eval
    // -----------------------------------------------------------------

    /// Transfer evaluation for one task: the four {method} x {setting}
    /// cells, written as CSV and JSON.
    pub fn eval_task(&self, task: Task) -> Result<Vec<EvalReport>, EvalError> {
        let td = task_dir_name(task);
        let baseline = PipelineMatrices {
            train: self.matrix_or_failure(td, "baseline.env_a.train")?,
            test_in: self.matrix_or_failure(td, "baseline.env_a.test")?,
            test_cross: self.matrix_or_failure(td, "baseline.env_b.P0.test")?,
        };
        let csts = PipelineMatrices {
            train: Ok(self.require_matrix(td, "csts.env_a.train")?),
            test_in: Ok(self.require_matrix(td, "csts.env_a.test")?),
            test_cross: Ok(self.require_matrix(td, "csts.env_b.P0.test")?),
        };
        let reports = run_transfer(task.as_str(), baseline, csts, &self.cfg.classifier, &self.fp)?;

        let table = render_transfer_csv(&reports);
        write(&self.tables_dir().join(format!("{td}_transfer.csv")), &table)?;
        write(
            &self.reports_dir().join(format!("{td}_transfer.json")),
            &serde_json::to_string_pretty(&reports).expect("reports serialize"),
        )?;
        Ok(reports)
    }

    /// Robustness evaluation (LM): EnvA-trained models scored against the
    /// EnvB evaluation split at every perturbation level.
    pub fn eval_robustness(&self) -> Result<Vec<EvalReport>, EvalError> {
        let td = "lm";
        let levels: Vec<Level> = self
            .cfg
            .perturbation_levels
            .iter()
            .map(|l| Level::parse(l).expect("validated earlier"))
            .collect();

        let baseline_train = self.require_matrix(td, "baseline.env_a.train")?;
        let baseline_model = train_classifier(&baseline_train, &self.cfg.classifier)?;
        let csts_train = self.require_matrix(td, "csts.env_a.train")?;
        let csts_model = train_classifier(&csts_train, &self.cfg.classifier)?;

        let mut reports = Vec::new();
        for level in &levels {
            for (method, train, model) in [
                ("baseline", &baseline_train, &baseline_model),
                ("csts", &csts_train, &csts_model),
            ] {
                let name = format!("{method}.env_b.{level}.test");
                match self.load_matrix(td, &name) {
                    Ok(test) => reports.push(evaluate_model(
                        model,
                        train,
                        &test,
                        &self.cfg.classifier,
                        "LM",
                        "EnvA->EnvB",
                        method,
                        level.as_str(),
                        &self.fp,
                    )),
                    Err(FeatureError::MissingColumn(_)) => reports.push(EvalReport::schema_failure(
                        "LM",
                        "EnvA->EnvB",
                        method,
                        level.as_str(),
                        &self.fp,
                    )),
                    Err(FeatureError::Io(_)) => {
                        return Err(EvalError::MissingArtifact(self.features_path(td, &name)))
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }

        let mut table = String::from(EvalReport::ROBUSTNESS_CSV_HEADER);
        table.push('\n');
        for r in &reports {
            table.push_str(&r.robustness_csv_row());
            table.push('\n');
        }
        write(&self.tables_dir().join("lm_robustness.csv"), &table)?;
        write(
            &self.reports_dir().join("lm_robustness.json"),
            &serde_json::to_string_pretty(&reports).expect("reports serialize"),
        )?;
        Ok(reports)
    }

    /// Orientation diagnostic for the substrate ZDT pipeline under
    /// transfer.
    pub fn diagnose(&self, task: Task) -> Result<OrientationReport, EvalError> {
        let td = task_dir_name(task);
        let train = self.require_matrix(td, "csts.env_a.train")?;
        let test_b = self.require_matrix(td, "csts.env_b.P0.test")?;
        let model = train_classifier(&train, &self.cfg.classifier)?;
        let scores = model.margins(&test_b);
        let report = orientation_diagnostic(&model, &train, &test_b, &scores, &self.fp)?;
        write(
            &self.tables_dir().join("orientation.json"),
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
        Ok(report)
    }

    /// Producer-divergence viability: train producer vs divergent test
    /// producer, plus the i.i.d. control.
    pub fn viability(&self) -> Result<(ViabilityReport, ViabilityReport), EvalError> {
        let idx = self.indexer();
        let train = self.load_graph("viability", "train")?;
        let divergent = self.load_graph("viability", "divergent")?;
        let control = self.load_graph("viability", "control")?;
        let q = self.cfg.viability.quantile;
        let gate = self.cfg.viability.gate;
        let dv = viability_protocol(&train, &divergent, &idx, q, gate, &Channel::ALL, &self.fp);
        let cv = viability_protocol(&train, &control, &idx, q, gate, &Channel::ALL, &self.fp);
        let bundle = serde_json::json!({ "divergent": dv, "control": cv });
        write(
            &self.tables_dir().join("viability.json"),
            &serde_json::to_string_pretty(&bundle).expect("bundle serializes"),
        )?;
        Ok((dv, cv))
    }

    /// The full run: every stage in order, producing the table analogues.
    pub fn repro(&self) -> Result<RunSummary, EvalError> {
        let mut stage_seconds = BTreeMap::new();
        let mut clock = |name: &str, start: Instant| {
            stage_seconds.insert(name.to_string(), start.elapsed().as_secs_f64());
        };

        let t = Instant::now();
        self.synth()?;
        clock("synth", t);
        let t = Instant::now();
        self.perturb()?;
        clock("perturb", t);
        let t = Instant::now();
        self.ingest()?;
        clock("ingest", t);
        let t = Instant::now();
        self.features()?;
        clock("features", t);

        let t = Instant::now();
        let lm_transfer = self.eval_task(Task::Lm)?;
        let lm_robustness = self.eval_robustness()?;
        clock("eval_lm", t);
        let t = Instant::now();
        let zdt_transfer = self.eval_task(Task::Zdt)?;
        clock("eval_zdt", t);
        let t = Instant::now();
        let orientation = self.diagnose(Task::Zdt)?;
        clock("diagnose", t);
        let t = Instant::now();
        let (viability_divergent, viability_control) = self.viability()?;
        clock("viability", t);

        Ok(RunSummary {
            lm_transfer,
            lm_robustness,
            zdt_transfer,
            orientation,
            viability_divergent,
            viability_control,
            stage_seconds,
        })
    }
}

fn render_transfer_csv(reports: &[EvalReport]) -> String {
    let mut table = String::from(EvalReport::TRANSFER_CSV_HEADER);
    table.push('\n');
    for r in reports {
        table.push_str(&r.transfer_csv_row());
        table.push('\n');
    }
    table
}

// ---------------------------------------------------------------------------
// Matrix persistence
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct Sidecar {
    pipeline: String,
    task: String,
    env: String,
    split_fingerprint: String,
    history_fingerprint: String,
    feature_names: Vec<String>,
    window_partition: Vec<i64>,
    rows: usize,
}

fn matrix_sidecar(m: &FeatureMatrix) -> String {
    serde_json::to_string_pretty(&Sidecar {
        pipeline: m.pipeline.clone(),
        task: m.task.clone(),
        env: m.env.clone(),
        split_fingerprint: m.split_fingerprint.clone(),
        history_fingerprint: m.history_fingerprint.clone(),
        feature_names: m.feature_names.clone(),
        window_partition: m.window_partition.clone(),
        rows: m.rows.len(),
    })
    .expect("sidecar serializes")
}

fn load_matrix_files(csv_path: &Path, sidecar_path: &Path) -> Result<FeatureMatrix, FeatureError> {
    let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)
        .map_err(|_| FeatureError::MissingColumn("sidecar".to_string()))?;
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let window_id: i64 = record[0].parse().unwrap_or(0);
        let actor = if record[3].is_empty() {
            None
        } else {
            Some(record[3].to_string())
        };
        let label: u8 = record[4].parse().unwrap_or(0);
        let features: Vec<f64> = (5..record.len())
            .map(|i| record[i].parse().unwrap_or(0.0))
            .collect();
        rows.push(FeatureRow {
            window_id,
            actor,
            features,
            label,
        });
    }
    Ok(FeatureMatrix {
        pipeline: sidecar.pipeline,
        task: sidecar.task,
        env: sidecar.env,
        feature_names: sidecar.feature_names,
        rows,
        window_partition: sidecar.window_partition,
        split_fingerprint: sidecar.split_fingerprint,
        history_fingerprint: sidecar.history_fingerprint,
    })
}
