//! `csts` command-line front end: staged experiment commands plus the full
//! `repro` run.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/artifact error, 3
//! viability-gate failure (kept distinct so CI can tell gate misses from
//! bugs).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use csts_core::adapter::{adapter_for, ingest_file, policy_for, AdapterSpec, RawFormat};
use csts_core::eval::EvalError;
use csts_core::graph::SubstrateGraph;
use csts_core::identity::ResolutionPolicy;
use csts_core::perturb::{perturb_file, Level};
use csts_core::pipeline::Pipeline;
use csts_core::synth::Task;
use csts_core::window::{Channel, WindowIndexer};
use csts_core::ExperimentConfig;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_GATE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "csts",
    about = "Canonical security telemetry substrate: benchmark, ingest, and portability evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the two-environment benchmark and viability fixtures.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply a schema-perturbation level to one telemetry file.
    Perturb {
        #[arg(long)]
        level: String,
        #[arg(long, name = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Canonicalize one raw telemetry file into graph JSONL.
    Ingest {
        #[arg(long, name = "in")]
        input: PathBuf,
        /// Built-in adapter name (env_a, env_b) or a JSON spec path.
        #[arg(long)]
        adapter: String,
        /// Optional resolution policy JSON path (defaults to the adapter's
        /// shipped policy).
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build feature matrices for the configured tasks from staged
    /// artifacts.
    Features {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Transfer (and, for LM, robustness) evaluation for one task.
    Eval {
        #[arg(long)]
        task: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Orientation-stability diagnostic for one task.
    Diagnose {
        #[arg(long, default_value = "zdt")]
        task: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Producer-divergence viability protocol (exit 3 when not viable).
    Viability {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override the staged train producer graph.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Override the staged test producer graph.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Full run: synth, perturb, ingest, features, eval, diagnose,
    /// viability; emits the table analogues under reports/tables/.
    Repro {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &Option<PathBuf>, seed: Option<u64>) -> Result<ExperimentConfig, String> {
    let mut cfg = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| format!("config {}: {e}", p.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| format!("config parse: {e}"))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = seed {
        cfg = ExperimentConfig::with_seed(seed);
    }
    Ok(cfg)
}

fn parse_task(name: &str) -> Result<Task, String> {
    match name.to_ascii_lowercase().as_str() {
        "lm" => Ok(Task::Lm),
        "zdt" => Ok(Task::Zdt),
        other => Err(format!("unknown task {other} (expected lm or zdt)")),
    }
}

fn data_err(e: impl std::fmt::Display) -> u8 {
    eprintln!("error: {e}");
    EXIT_DATA
}

fn usage_err(e: impl std::fmt::Display) -> u8 {
    eprintln!("usage error: {e}");
    EXIT_USAGE
}

fn run() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version print to stdout and succeed; real parse errors
            // are usage errors
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };

    match cli.command {
        Command::Synth { config, out, seed } => {
            let cfg = match load_config(&config, seed) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            match Pipeline::new(cfg, out).synth() {
                Ok(()) => EXIT_OK,
                Err(e) => data_err(e),
            }
        }
        Command::Perturb { level, input, out } => {
            let level = match Level::parse(&level) {
                Ok(l) => l,
                Err(e) => return usage_err(e),
            };
            match perturb_file(&input, &out, level) {
                Ok(()) => EXIT_OK,
                Err(e) => data_err(e),
            }
        }
        Command::Ingest {
            input,
            adapter,
            policy,
            out,
            report,
        } => match cmd_ingest(&input, &adapter, &policy, &out, &report) {
            Ok(()) => EXIT_OK,
            Err(e) => data_err(e),
        },
        Command::Features { config, out, seed } => {
            let cfg = match load_config(&config, seed) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            match Pipeline::new(cfg, out).features() {
                Ok(()) => EXIT_OK,
                Err(e) => data_err(e),
            }
        }
        Command::Eval {
            task,
            config,
            out,
            seed,
        } => {
            let cfg = match load_config(&config, seed) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            let task = match parse_task(&task) {
                Ok(t) => t,
                Err(e) => return usage_err(e),
            };
            let p = Pipeline::new(cfg, out);
            let result = p.eval_task(task).and_then(|_| {
                if task == Task::Lm {
                    p.eval_robustness().map(|_| ())
                } else {
                    Ok(())
                }
            });
            match result {
                Ok(()) => EXIT_OK,
                Err(EvalError::ViabilityGateFailure { .. }) => EXIT_GATE,
                Err(e) => data_err(e),
            }
        }
        Command::Diagnose {
            task,
            config,
            out,
            seed,
        } => {
            let cfg = match load_config(&config, seed) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            let task = match parse_task(&task) {
                Ok(t) => t,
                Err(e) => return usage_err(e),
            };
            match Pipeline::new(cfg, out).diagnose(task) {
                Ok(report) => {
                    println!(
                        "orientation: {} sign disagreement(s), auroc {:.3}, inverted {:.3}, polarity_inverted {}",
                        report.n_sign_disagreements,
                        report.auroc,
                        report.auroc_inverted,
                        report.polarity_inverted
                    );
                    EXIT_OK
                }
                Err(EvalError::ViabilityGateFailure { .. }) => EXIT_GATE,
                Err(e) => data_err(e),
            }
        }
        Command::Viability {
            config,
            out,
            train,
            test,
            seed,
        } => {
            let cfg = match load_config(&config, seed) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            match cmd_viability(cfg, &out, &train, &test) {
                Ok(true) => EXIT_OK,
                Ok(false) => EXIT_GATE,
                Err(e) => data_err(e),
            }
        }
        Command::Repro { config, out, seed } => {
            let cfg = match load_config(&config, seed) {
                Ok(c) => c,
                Err(e) => return usage_err(e),
            };
            match Pipeline::new(cfg, out).repro() {
                Ok(summary) => {
                    for r in summary.lm_transfer.iter().chain(&summary.zdt_transfer) {
                        println!(
                            "{} {} {}: f1@0.5 {:.3}, auroc {:.3}, best-f1 {:.3} [{}]",
                            r.task, r.setting, r.method, r.f1_at_05, r.auroc, r.best_f1, r.status
                        );
                    }
                    println!(
                        "viability: divergent {} ({}/{} above tau), control {}/{} above tau",
                        summary.viability_divergent.verdict,
                        summary.viability_divergent.test.above_threshold,
                        summary.viability_divergent.test.n_windows,
                        summary.viability_control.test.above_threshold,
                        summary.viability_control.test.n_windows,
                    );
                    EXIT_OK
                }
                Err(EvalError::ViabilityGateFailure { .. }) => EXIT_GATE,
                Err(e) => data_err(e),
            }
        }
    }
}

fn cmd_ingest(
    input: &PathBuf,
    adapter: &str,
    policy: &Option<PathBuf>,
    out: &PathBuf,
    report_path: &Option<PathBuf>,
) -> Result<(), String> {
    let spec: AdapterSpec = match adapter_for(adapter) {
        Some(s) => s,
        None => {
            let text =
                std::fs::read_to_string(adapter).map_err(|e| format!("adapter {adapter}: {e}"))?;
            AdapterSpec::from_json(&text).map_err(|e| e.to_string())?
        }
    };
    let policy: ResolutionPolicy = match policy {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| format!("policy {}: {e}", p.display()))?;
            ResolutionPolicy::from_json(&text).map_err(|e| e.to_string())?
        }
        None => policy_for(&spec.name),
    };
    let format = RawFormat::from_path(input).map_err(|e| e.to_string())?;
    let (g, report) = ingest_file(input, format, &spec, &policy).map_err(|e| e.to_string())?;
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).map_err(|e| e.to_string())?;
    }
    g.export_jsonl_path(out).map_err(|e| e.to_string())?;
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    match report_path {
        Some(p) => std::fs::write(p, report_json).map_err(|e| e.to_string())?,
        None => println!("{report_json}"),
    }
    Ok(())
}

fn cmd_viability(
    cfg: ExperimentConfig,
    out: &PathBuf,
    train: &Option<PathBuf>,
    test: &Option<PathBuf>,
) -> Result<bool, String> {
    let report = match (train, test) {
        (Some(train), Some(test)) => {
            let schema = csts_core::graph::AttributeSchema::builtin();
            let tg = SubstrateGraph::import_jsonl_path(train, schema.clone())
                .map_err(|e| e.to_string())?;
            let eg =
                SubstrateGraph::import_jsonl_path(test, schema).map_err(|e| e.to_string())?;
            let idx = WindowIndexer::new(cfg.window_minutes);
            let report = csts_core::eval::viability_protocol(
                &tg,
                &eg,
                &idx,
                cfg.viability.quantile,
                cfg.viability.gate,
                &Channel::ALL,
                &cfg.fingerprint(),
            );
            let bundle = serde_json::json!({ "divergent": report });
            let table = out.join("reports/tables/viability.json");
            if let Some(parent) = table.parent() {
                std::fs::create_dir_all(parent).map_err(|e| e.to_string())?;
            }
            std::fs::write(
                &table,
                serde_json::to_string_pretty(&bundle).expect("bundle serializes"),
            )
            .map_err(|e| e.to_string())?;
            report
        }
        _ => Pipeline::new(cfg, out)
            .viability()
            .map_err(|e| e.to_string())?
            .0,
    };
    println!(
        "viability: {} ({} of {} test windows above train threshold {:.3})",
        report.verdict, report.test.above_threshold, report.test.n_windows, report.train_threshold
    );
    Ok(report.viable())
}

fn main() -> ExitCode {
    ExitCode::from(run())
}
