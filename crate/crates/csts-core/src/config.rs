//! Experiment configuration: one seed governs the full run, and the config
//! is echoed into every report for provenance.

use serde::{Deserialize, Serialize};

use crate::eval::ClassifierSpec;
use crate::synth::{DivergenceSpec, EnvProfile, InjectionSpec, NamingScheme, Task, ZdtStyle};
use crate::util::short_fingerprint;

/// Viability protocol settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViabilitySettings {
    pub quantile: f64,
    /// Minimum test positives for a "viable" verdict.
    pub gate: usize,
    pub divergence: DivergenceSpec,
}

/// Full experiment configuration consumed by `repro` and the staged
/// commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub duration_hours: u32,
    pub window_minutes: u32,
    /// Fraction of the timeline (by window order) covered by the training
    /// split; the remainder is the evaluation range.
    pub train_fraction: f64,
    /// Leading fraction of the timeline reserved for history fitting.
    /// Classifier training rows come from [history, train) windows, so
    /// novelty features on them are computed against disjoint earlier
    /// windows.
    pub history_fraction: f64,
    pub tasks: Vec<Task>,
    pub perturbation_levels: Vec<String>,
    pub env_a_lm: EnvProfile,
    pub env_b_lm: EnvProfile,
    pub env_a_zdt: EnvProfile,
    pub env_b_zdt: EnvProfile,
    pub lm_injection_a: InjectionSpec,
    pub lm_injection_b: InjectionSpec,
    pub zdt_injection_a: InjectionSpec,
    pub zdt_injection_b: InjectionSpec,
    pub classifier: ClassifierSpec,
    pub viability: ViabilitySettings,
}

impl ExperimentConfig {
    /// The shipped default configuration (seed 42, 14 simulated days,
    /// 30-minute windows).
    pub fn default_seed_42() -> ExperimentConfig {
        let seed = 42;
        ExperimentConfig::with_seed(seed)
    }

    pub fn with_seed(seed: u64) -> ExperimentConfig {
        let env_a_lm = EnvProfile {
            name: "env_a".to_string(),
            n_users: 40,
            n_hosts: 30,
            n_communities: 5,
            benign_rate_per_hour: 0.5,
            benign_diversity: 0.02,
            exec_prob: 0.35,
            batch_users: 0,
            batch_burst_logons: (6, 14),
            batch_interval_hours: 5.0,
            flow_day_rate: 1.2,
            flow_night_rate: 1.2,
            flow_off_rate: 1.2,
            flow_fresh_prob: 0.05,
            profile_endpoints_per_host: 6,
            endpoint_pool: 240,
            naming: NamingScheme::CorpLocal,
            schema_flavor: "env_a".to_string(),
            seed,
        };
        let env_b_lm = EnvProfile {
            name: "env_b".to_string(),
            n_users: 80,
            n_hosts: 70,
            n_communities: 8,
            benign_rate_per_hour: 1.6,
            benign_diversity: 0.10,
            exec_prob: 0.35,
            batch_users: 12,
            batch_burst_logons: (6, 14),
            batch_interval_hours: 5.0,
            flow_day_rate: 8.0,
            flow_night_rate: 0.3,
            flow_off_rate: 2.0,
            flow_fresh_prob: 0.5,
            profile_endpoints_per_host: 12,
            endpoint_pool: 4000,
            naming: NamingScheme::EnvbExample,
            schema_flavor: "env_b".to_string(),
            seed: seed.wrapping_add(1),
        };
        let env_a_zdt = EnvProfile {
            seed: seed.wrapping_add(2),
            ..env_a_lm.clone()
        };
        let env_b_zdt = EnvProfile {
            seed: seed.wrapping_add(3),
            ..env_b_lm.clone()
        };

        let lm_injection_a = InjectionSpec {
            task: Task::Lm,
            n_campaigns: 36,
            chain_length: 8,
            dwell_minutes: 25,
            target_window_positive_rate: 0.0,
            zdt_style: ZdtStyle::Burst { endpoints: 25 },
            night_windows_only: false,
        };
        let lm_injection_b = InjectionSpec {
            n_campaigns: 36,
            ..lm_injection_a.clone()
        };
        let zdt_injection_a = InjectionSpec {
            task: Task::Zdt,
            n_campaigns: 0,
            chain_length: 0,
            dwell_minutes: 0,
            target_window_positive_rate: 0.07,
            zdt_style: ZdtStyle::Burst { endpoints: 25 },
            night_windows_only: false,
        };
        let zdt_injection_b = InjectionSpec {
            zdt_style: ZdtStyle::Beacon {
                endpoints: 4,
                repeats: 6,
            },
            night_windows_only: true,
            ..zdt_injection_a.clone()
        };

        ExperimentConfig {
            seed,
            duration_hours: 336,
            window_minutes: 30,
            train_fraction: 0.7,
            history_fraction: 0.4,
            tasks: vec![Task::Lm, Task::Zdt],
            perturbation_levels: vec!["P0".into(), "P1".into(), "P2".into(), "P3".into()],
            env_a_lm,
            env_b_lm,
            env_a_zdt,
            env_b_zdt,
            lm_injection_a,
            lm_injection_b,
            zdt_injection_a,
            zdt_injection_b,
            classifier: ClassifierSpec::default(),
            viability: ViabilitySettings {
                quantile: 0.40,
                gate: 5,
                divergence: DivergenceSpec {
                    seed: seed.wrapping_add(4),
                    ..DivergenceSpec::default()
                },
            },
        }
    }

    pub fn from_json(json: &str) -> Result<ExperimentConfig, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Short content fingerprint embedded into every report.
    pub fn fingerprint(&self) -> String {
        short_fingerprint(self.to_json().as_bytes())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::default_seed_42()
    }
}
