//! Seeded two-environment benchmark generator.
//!
//! Produces vendor-flavored raw telemetry plus ground-truth window labels
//! for two tasks: lateral-movement chains injected into benign enterprise
//! authentication activity (LM), and window-labeled zero-day flow anomalies
//! (ZDT). EnvB realizes the domain shift along three axes:
//!
//! - identifier surfaces use a disjoint naming scheme, so raw-string overlap
//!   with EnvA is zero while the canonical role structure stays comparable;
//! - benign authentication is both denser and more diverse, and EnvB adds
//!   automation accounts whose scripted bursts overlap the attack range of
//!   raw per-actor counts;
//! - benign flow volume follows a strong diurnal curve with heavy ephemeral
//!   endpoint churn, while ZDT campaigns run off-hours, which reverses the
//!   class-conditional direction of volume-style flow statistics.
//!
//! A third fixture family drives the producer-divergence viability
//! protocol: a token stream whose test producer reuses only the hottest
//! tokens of the train producer's vocabulary.
//!
//! Everything is deterministic per seed; independent draws come from
//! per-purpose ChaCha substreams.

use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};
use serde::{Deserialize, Serialize};

use crate::util::subseed;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible injection: {0}")]
    InfeasibleInjection(String),
}

/// Detection task the injection targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Task {
    Lm,
    Zdt,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Lm => "LM",
            Task::Zdt => "ZDT",
        }
    }
}

/// Identifier surface-form family. The two schemes share no raw strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamingScheme {
    CorpLocal,
    EnvbExample,
}

/// Environment profile: population sizes, role communities, benign process
/// parameters, shift knobs, naming, schema flavor, and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvProfile {
    pub name: String,
    pub n_users: usize,
    pub n_hosts: usize,
    pub n_communities: usize,
    /// Benign authentications per user per hour.
    pub benign_rate_per_hour: f64,
    /// Probability a benign authentication leaves the user's community.
    pub benign_diversity: f64,
    /// Probability a benign session also records a process execution.
    pub exec_prob: f64,
    /// Automation accounts (EnvB shift axis); zero disables.
    pub batch_users: usize,
    /// Logons per automation burst, inclusive range.
    pub batch_burst_logons: (u32, u32),
    /// Mean hours between bursts per automation account.
    pub batch_interval_hours: f64,
    /// Benign flows per host per hour by daypart (business/night/shoulder).
    pub flow_day_rate: f64,
    pub flow_night_rate: f64,
    pub flow_off_rate: f64,
    /// Probability a benign flow goes to a fresh ephemeral endpoint rather
    /// than one of the host's profile endpoints.
    pub flow_fresh_prob: f64,
    pub profile_endpoints_per_host: usize,
    pub endpoint_pool: usize,
    pub naming: NamingScheme,
    pub schema_flavor: String,
    pub seed: u64,
}

/// Campaign shape for ZDT injection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZdtStyle {
    /// One host opens flows to many distinct fresh endpoints inside a
    /// ten-minute burst.
    Burst { endpoints: usize },
    /// One host beacons repeatedly to a few fresh endpoints across the
    /// window.
    Beacon { endpoints: usize, repeats: usize },
}

/// Injection specification for one environment and task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub task: Task,
    /// LM campaign count; ZDT derives its count from the target rate.
    pub n_campaigns: usize,
    pub chain_length: usize,
    pub dwell_minutes: u32,
    /// Target fraction of positive windows for ZDT.
    pub target_window_positive_rate: f64,
    pub zdt_style: ZdtStyle,
    /// Restrict ZDT campaigns to off-hours windows (EnvB).
    pub night_windows_only: bool,
}

/// Ground-truth label for one window, serialized one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub window_start: i64,
    pub task: String,
    pub label: u8,
    pub event_ids: Vec<String>,
}

/// One generated environment: the raw flavor file plus window labels.
#[derive(Debug, Clone)]
pub struct GeneratedEnv {
    pub telemetry_csv: String,
    pub labels: Vec<WindowLabel>,
    pub n_windows: usize,
    pub positive_windows: usize,
}

impl GeneratedEnv {
    pub fn labels_jsonl(&self) -> String {
        let mut out = String::new();
        for l in &self.labels {
            out.push_str(&serde_json::to_string(l).expect("label serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Logon,
    Exec,
    Spawn,
    Read,
    Write,
    Conn,
}

impl Kind {
    fn label(&self) -> &'static str {
        match self {
            Kind::Logon => "logon",
            Kind::Exec => "exec",
            Kind::Spawn => "spawn",
            Kind::Read => "read",
            Kind::Write => "write",
            Kind::Conn => "conn",
        }
    }
}

/// Internal draft of one raw record, in surface forms.
#[derive(Debug, Clone, Default)]
pub(crate) struct EventDraft {
    t: i64,
    kind: Option<Kind>,
    user: String,
    src_host: String,
    dst_host: String,
    proc: String,
    parent_proc: String,
    file: String,
    dst_ip: String,
    port: String,
    logon_type: String,
    user_comm: String,
    host_comm: String,
    session: String,
    injected: bool,
}

impl EventDraft {
    fn at(t: i64, kind: Kind) -> EventDraft {
        EventDraft {
            t,
            kind: Some(kind),
            ..Default::default()
        }
    }
}

// ---------------------------------------------------------------------------
// Surface naming
// ---------------------------------------------------------------------------

const FIRST_NAMES: &[&str] = &[
    "alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan", "judy", "mallory",
    "niaj", "olivia", "peggy", "rupert", "sybil", "trent", "victor", "wendy", "yves",
];

const BENIGN_PROCS: &[&str] = &[
    "outlook.exe",
    "chrome.exe",
    "excel.exe",
    "teams.exe",
    "update.exe",
    "winword.exe",
    "explorer.exe",
    "onedrive.exe",
    "sqlwriter.exe",
    "pwsh.exe",
];

const ATTACK_PROCS: &[&str] = &["pwsh.exe", "wmiprvse.exe", "mstsc.exe"];

impl EnvProfile {
    fn user_surface(&self, i: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => {
                format!("CORP\\{}{:02}", FIRST_NAMES[i % FIRST_NAMES.len()], i / FIRST_NAMES.len())
            }
            NamingScheme::EnvbExample => format!("u{}@envb.example", 1000 + i),
        }
    }

    fn batch_user_surface(&self, i: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => format!("CORP\\svc-{i:02}"),
            NamingScheme::EnvbExample => format!("svc-{i:02}@envb.example"),
        }
    }

    fn host_surface(&self, i: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => format!("WS{:02}.corp.local", i + 1),
            NamingScheme::EnvbExample => format!("srv-{:03}.envb.example", i + 1),
        }
    }

    fn community_label(&self, k: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => format!("ou-{k}"),
            NamingScheme::EnvbExample => format!("dept-{k}"),
        }
    }

    fn proc_surface(&self, image: &str) -> String {
        match self.naming {
            NamingScheme::CorpLocal => image.to_string(),
            NamingScheme::EnvbExample => format!("/opt/app/bin/{}", image.trim_end_matches(".exe")),
        }
    }

    fn profile_endpoint(&self, i: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => format!("203.0.{}.{}", i / 250, 1 + i % 250),
            NamingScheme::EnvbExample => format!("172.20.{}.{}", i / 250, 1 + i % 250),
        }
    }

    fn ephemeral_endpoint(&self, i: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => format!("198.18.{}.{}", (i / 250) % 250, 1 + i % 250),
            NamingScheme::EnvbExample => format!("100.64.{}.{}", (i / 250) % 250, 1 + i % 250),
        }
    }

    fn attack_endpoint(&self, i: usize) -> String {
        match self.naming {
            NamingScheme::CorpLocal => format!("192.168.{}.{}", i / 250, 1 + i % 250),
            NamingScheme::EnvbExample => format!("10.66.{}.{}", i / 250, 1 + i % 250),
        }
    }

    fn user_community(&self, i: usize) -> usize {
        i % self.n_communities
    }

    fn host_community(&self, i: usize) -> usize {
        i % self.n_communities
    }

    fn community_hosts(&self, k: usize) -> Vec<usize> {
        (0..self.n_hosts).filter(|h| self.host_community(*h) == k).collect()
    }

    fn hosts_outside_community(&self, k: usize) -> Vec<usize> {
        (0..self.n_hosts).filter(|h| self.host_community(*h) != k).collect()
    }
}

fn hour_of_day(t: i64) -> u32 {
    ((t / 3600) % 24) as u32
}

fn flow_rate_at(profile: &EnvProfile, t: i64) -> f64 {
    match hour_of_day(t) {
        8..=17 => profile.flow_day_rate,
        0..=5 => profile.flow_night_rate,
        _ => profile.flow_off_rate,
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

// ---------------------------------------------------------------------------
// Benign streams
// ---------------------------------------------------------------------------

fn benign_lm(profile: &EnvProfile, duration_s: i64, out: &mut Vec<EventDraft>) {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(profile.seed, "benign-lm"));
    let hours = duration_s as f64 / 3600.0;
    let zipf_proc = |rng: &mut ChaCha8Rng| -> String {
        let z = Zipf::new(BENIGN_PROCS.len() as u64, 1.1).expect("zipf");
        let idx = z.sample(rng) as usize - 1;
        BENIGN_PROCS[idx].to_string()
    };
    for u in 0..profile.n_users {
        let comm = profile.user_community(u);
        let community_hosts = profile.community_hosts(comm);
        let n = poisson_count(&mut rng, profile.benign_rate_per_hour * hours);
        for _ in 0..n {
            let t = rng.gen_range(0..duration_s.max(1));
            let host = if rng.gen_bool(profile.benign_diversity) {
                rng.gen_range(0..profile.n_hosts)
            } else {
                community_hosts[rng.gen_range(0..community_hosts.len())]
            };
            let mut ev = EventDraft::at(t, Kind::Logon);
            ev.user = profile.user_surface(u);
            ev.dst_host = profile.host_surface(host);
            ev.logon_type = if rng.gen_bool(0.7) { "network" } else { "interactive" }.to_string();
            ev.user_comm = profile.community_label(comm);
            ev.host_comm = profile.community_label(profile.host_community(host));
            ev.session = format!("s{:08x}", rng.gen::<u32>());
            out.push(ev);

            if rng.gen_bool(profile.exec_prob) {
                let mut ex = EventDraft::at(t + rng.gen_range(5..120), Kind::Exec);
                ex.user = profile.user_surface(u);
                ex.src_host = profile.host_surface(host);
                ex.proc = profile.proc_surface(&zipf_proc(&mut rng));
                ex.user_comm = profile.community_label(comm);
                out.push(ex);
            }
        }
    }
}

/// Scripted automation accounts: bursts of repeated logon+exec against one
/// or two designated in-community hosts.
fn batch_lm(profile: &EnvProfile, duration_s: i64, out: &mut Vec<EventDraft>) {
    if profile.batch_users == 0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(profile.seed, "batch-lm"));
    for b in 0..profile.batch_users {
        let comm = b % profile.n_communities;
        let community_hosts = profile.community_hosts(comm);
        let d1 = community_hosts[rng.gen_range(0..community_hosts.len())];
        let d2 = community_hosts[rng.gen_range(0..community_hosts.len())];
        let script = profile.proc_surface(if b % 2 == 0 { "backup_sync.exe" } else { "inventory_agent.exe" });

        let mut t = (rng.gen_range(0.0..profile.batch_interval_hours * 3600.0)) as i64;
        while t < duration_s {
            let (lo, hi) = profile.batch_burst_logons;
            let logons = rng.gen_range(lo..=hi);
            let mut bt = t;
            for j in 0..logons {
                let host = if j % 2 == 0 { d1 } else { d2 };
                let mut ev = EventDraft::at(bt, Kind::Logon);
                ev.user = profile.batch_user_surface(b);
                ev.dst_host = profile.host_surface(host);
                ev.logon_type = "service".to_string();
                ev.user_comm = profile.community_label(comm);
                ev.host_comm = profile.community_label(profile.host_community(host));
                ev.session = format!("s{:08x}", rng.gen::<u32>());
                out.push(ev);
                let mut ex = EventDraft::at(bt + rng.gen_range(1..10), Kind::Exec);
                ex.user = profile.batch_user_surface(b);
                ex.src_host = profile.host_surface(host);
                ex.proc = script.clone();
                ex.user_comm = profile.community_label(comm);
                out.push(ex);
                bt += rng.gen_range(5..40);
            }
            let gap_h = -profile.batch_interval_hours * rng.gen::<f64>().max(1e-9).ln();
            t += (gap_h * 3600.0) as i64 + 60;
        }
    }
}

fn benign_flows(profile: &EnvProfile, duration_s: i64, out: &mut Vec<EventDraft>) {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(profile.seed, "benign-flows"));
    let mut fresh_counter: usize = 0;
    let ports = ["443", "80", "8443", "53"];
    let hours = (duration_s + 3599) / 3600;
    for h in 0..profile.n_hosts {
        let profile_eps: Vec<String> = {
            let mut v = Vec::with_capacity(profile.profile_endpoints_per_host);
            for _ in 0..profile.profile_endpoints_per_host {
                v.push(profile.profile_endpoint(rng.gen_range(0..profile.endpoint_pool)));
            }
            v
        };
        for hour in 0..hours {
            let base = hour * 3600;
            let rate = flow_rate_at(profile, base);
            let n = poisson_count(&mut rng, rate);
            for _ in 0..n {
                let t = base + rng.gen_range(0..3600);
                if t >= duration_s {
                    continue;
                }
                let dst = if rng.gen_bool(profile.flow_fresh_prob) {
                    fresh_counter += 1;
                    profile.ephemeral_endpoint(fresh_counter * 7 + rng.gen_range(0..7))
                } else {
                    profile_eps[rng.gen_range(0..profile_eps.len())].clone()
                };
                let mut ev = EventDraft::at(t, Kind::Conn);
                ev.src_host = profile.host_surface(h);
                ev.dst_ip = dst;
                ev.port = ports[rng.gen_range(0..ports.len())].to_string();
                out.push(ev);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

/// Insert lateral-movement chains: per campaign, one compromised user
/// authenticates to `chain_length` pairwise-distinct out-of-community hosts
/// within the dwell interval, with a process execution per hop.
pub(crate) fn inject_lateral_movement(
    out: &mut Vec<EventDraft>,
    profile: &EnvProfile,
    inj: &InjectionSpec,
    duration_s: i64,
    window_s: i64,
) -> Result<(), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(profile.seed, "inject-lm"));
    let dwell_s = inj.dwell_minutes as i64 * 60;
    if dwell_s > duration_s {
        return Err(SynthError::InfeasibleInjection(format!(
            "dwell {}min exceeds duration",
            inj.dwell_minutes
        )));
    }
    // campaigns land in pairwise-distinct windows; when the dwell fits a
    // window the whole chain is placed inside it
    let n_windows = (duration_s / window_s.max(1)).max(1) as usize;
    if inj.n_campaigns > n_windows {
        return Err(SynthError::InfeasibleInjection(format!(
            "{} campaigns need distinct windows, have {n_windows}",
            inj.n_campaigns
        )));
    }
    let mut candidates: Vec<usize> = (0..n_windows).collect();
    let mut chosen = Vec::with_capacity(inj.n_campaigns);
    for _ in 0..inj.n_campaigns {
        let pick = rng.gen_range(0..candidates.len());
        chosen.push(candidates.swap_remove(pick));
    }
    chosen.sort_unstable();

    for w in chosen {
        let u = rng.gen_range(0..profile.n_users);
        let comm = profile.user_community(u);
        let mut outside = profile.hosts_outside_community(comm);
        if outside.len() < inj.chain_length + 1 {
            return Err(SynthError::InfeasibleInjection(format!(
                "need {} hosts outside community {comm}, have {}",
                inj.chain_length + 1,
                outside.len()
            )));
        }
        let wstart = w as i64 * window_s;
        let slack = window_s - dwell_s;
        let start = if slack > 60 {
            wstart + rng.gen_range(0..slack - 60)
        } else {
            (wstart).min((duration_s - dwell_s).max(0))
        };
        let mut hop_times: Vec<i64> = (0..inj.chain_length)
            .map(|_| start + rng.gen_range(0..(dwell_s - 60).max(1)))
            .collect();
        hop_times.sort_unstable();

        // pairwise-distinct chain hosts
        let mut chain_hosts = Vec::with_capacity(inj.chain_length);
        for _ in 0..inj.chain_length {
            let pick = rng.gen_range(0..outside.len());
            chain_hosts.push(outside.swap_remove(pick));
        }

        for (k, t) in hop_times.iter().enumerate() {
            let host = chain_hosts[k];
            let mut ev = EventDraft::at(*t, Kind::Logon);
            ev.user = profile.user_surface(u);
            ev.dst_host = profile.host_surface(host);
            ev.logon_type = "network".to_string();
            ev.user_comm = profile.community_label(comm);
            ev.host_comm = profile.community_label(profile.host_community(host));
            ev.session = format!("s{:08x}", rng.gen::<u32>());
            ev.injected = true;
            out.push(ev);

            let mut ex = EventDraft::at(t + rng.gen_range(5..60), Kind::Exec);
            ex.user = profile.user_surface(u);
            ex.src_host = profile.host_surface(host);
            ex.proc = profile.proc_surface(ATTACK_PROCS[rng.gen_range(0..ATTACK_PROCS.len())]);
            ex.user_comm = profile.community_label(comm);
            ex.injected = true;
            out.push(ex);
        }
    }
    Ok(())
}

fn night_window(w: usize, window_s: i64) -> bool {
    hour_of_day(w as i64 * window_s) < 6
}

/// Insert ZDT flow campaigns into distinct windows so the realized positive
/// rate equals `round(target * n_windows) / n_windows`.
fn inject_zdt(
    out: &mut Vec<EventDraft>,
    profile: &EnvProfile,
    inj: &InjectionSpec,
    duration_s: i64,
    window_s: i64,
) -> Result<(), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(profile.seed, "inject-zdt"));
    let n_windows = (duration_s / window_s) as usize;
    let n_pos = (inj.target_window_positive_rate * n_windows as f64).round() as usize;
    if n_pos == 0 {
        return Ok(());
    }
    let mut candidates: Vec<usize> = (0..n_windows)
        .filter(|w| !inj.night_windows_only || night_window(*w, window_s))
        .collect();
    if candidates.len() < n_pos {
        return Err(SynthError::InfeasibleInjection(format!(
            "{n_pos} campaigns need {n_pos} candidate windows, have {}",
            candidates.len()
        )));
    }
    let mut chosen = Vec::with_capacity(n_pos);
    for _ in 0..n_pos {
        let pick = rng.gen_range(0..candidates.len());
        chosen.push(candidates.swap_remove(pick));
    }
    chosen.sort_unstable();

    let mut attack_counter = 0usize;
    for w in chosen {
        let wstart = w as i64 * window_s;
        let host = rng.gen_range(0..profile.n_hosts);
        match inj.zdt_style {
            ZdtStyle::Burst { endpoints } => {
                let burst_start = wstart + rng.gen_range(120..window_s / 3);
                for _ in 0..endpoints {
                    attack_counter += 1;
                    let mut ev =
                        EventDraft::at(burst_start + rng.gen_range(0..600), Kind::Conn);
                    ev.src_host = profile.host_surface(host);
                    ev.dst_ip = profile.attack_endpoint(attack_counter);
                    ev.port = "443".to_string();
                    ev.injected = true;
                    out.push(ev);
                }
            }
            ZdtStyle::Beacon { endpoints, repeats } => {
                let eps: Vec<String> = (0..endpoints)
                    .map(|_| {
                        attack_counter += 1;
                        profile.attack_endpoint(attack_counter)
                    })
                    .collect();
                for ep in &eps {
                    for _ in 0..repeats {
                        let mut ev =
                            EventDraft::at(wstart + rng.gen_range(0..window_s), Kind::Conn);
                        ev.src_host = profile.host_surface(host);
                        ev.dst_ip = ep.clone();
                        ev.port = "443".to_string();
                        ev.injected = true;
                        out.push(ev);
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

const ENV_A_HEADER: &str =
    "event_id,ts,event,user,src_host,dst_host,proc,parent_proc,file,dst_ip,port,logon_type,ou,host_ou";
const ENV_B_HEADER: &str =
    "event_id,ts,event,user,src_host,dst_host,process_path,dst_ip,remote_port,logon_kind,dept,host_dept,session_id";

fn csv_row(flavor: &str, id: &str, ev: &EventDraft) -> String {
    let kind = ev.kind.expect("drafted event has kind").label();
    match flavor {
        "env_b" => format!(
            "{id},{},{kind},{},{},{},{},{},{},{},{},{},{}",
            ev.t,
            ev.user,
            ev.src_host,
            ev.dst_host,
            ev.proc,
            ev.dst_ip,
            ev.port,
            ev.logon_type,
            ev.user_comm,
            ev.host_comm,
            ev.session
        ),
        _ => format!(
            "{id},{},{kind},{},{},{},{},{},{},{},{},{},{},{}",
            ev.t,
            ev.user,
            ev.src_host,
            ev.dst_host,
            ev.proc,
            ev.parent_proc,
            ev.file,
            ev.dst_ip,
            ev.port,
            ev.logon_type,
            ev.user_comm,
            ev.host_comm
        ),
    }
}

fn render(
    profile: &EnvProfile,
    task: Task,
    mut events: Vec<EventDraft>,
    duration_s: i64,
    window_s: i64,
) -> GeneratedEnv {
    events.sort_by_key(|e| e.t);
    let header = match profile.schema_flavor.as_str() {
        "env_b" => ENV_B_HEADER,
        _ => ENV_A_HEADER,
    };
    let mut csv = String::with_capacity(events.len() * 96);
    csv.push_str(header);
    csv.push('\n');

    let n_windows = (duration_s / window_s).max(0) as usize;
    let mut per_window: Vec<Vec<String>> = vec![Vec::new(); n_windows];
    for (i, ev) in events.iter().enumerate() {
        let id = format!("e{i:07}");
        let _ = writeln!(csv, "{}", csv_row(&profile.schema_flavor, &id, ev));
        if ev.injected {
            let w = (ev.t / window_s) as usize;
            if w < n_windows {
                per_window[w].push(id);
            }
        }
    }

    let labels: Vec<WindowLabel> = (0..n_windows)
        .map(|w| WindowLabel {
            window_start: w as i64 * window_s,
            task: task.as_str().to_string(),
            label: u8::from(!per_window[w].is_empty()),
            event_ids: std::mem::take(&mut per_window[w]),
        })
        .collect();
    let positive_windows = labels.iter().filter(|l| l.label == 1).count();
    GeneratedEnv {
        telemetry_csv: csv,
        labels,
        n_windows,
        positive_windows,
    }
}

/// Generate one environment for one task: benign activity, injected
/// campaigns, flavor-file serialization, and derived window labels.
/// Deterministic per `(profile, inj, duration)`.
pub fn generate_env(
    profile: &EnvProfile,
    inj: &InjectionSpec,
    duration_hours: u32,
    window_minutes: u32,
) -> Result<GeneratedEnv, SynthError> {
    let duration_s = duration_hours as i64 * 3600;
    let window_s = window_minutes as i64 * 60;
    let mut events = Vec::new();
    if duration_s > 0 {
        match inj.task {
            Task::Lm => {
                benign_lm(profile, duration_s, &mut events);
                batch_lm(profile, duration_s, &mut events);
                inject_lateral_movement(&mut events, profile, inj, duration_s, window_s)?;
            }
            Task::Zdt => {
                benign_flows(profile, duration_s, &mut events);
                inject_zdt(&mut events, profile, inj, duration_s, window_s)?;
            }
        }
    }
    Ok(render(profile, inj.task, events, duration_s, window_s))
}

// ---------------------------------------------------------------------------
// Producer-divergence fixtures
// ---------------------------------------------------------------------------

/// Parameters for the viability fixture family: a train producer with a
/// Zipf token profile per channel, a divergent test producer reusing only
/// the hottest tokens, and an i.i.d. control producer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSpec {
    pub train_hours: u32,
    pub divergent_hours: u32,
    pub control_hours: u32,
    /// Mean tokens per channel per hour for the train/control producers.
    pub rate_per_hour: f64,
    /// Rate multiplier for the divergent producer (denser reuse).
    pub divergent_rate_factor: f64,
    pub proc_vocab: usize,
    pub file_vocab: usize,
    pub net_vocab: usize,
    pub zipf_exponent: f64,
    /// Divergent producer draws uniformly from the top-k of each vocabulary.
    pub divergent_top_k: usize,
    pub seed: u64,
}

impl Default for DivergenceSpec {
    fn default() -> Self {
        DivergenceSpec {
            train_hours: 168,
            divergent_hours: 8,
            control_hours: 168,
            rate_per_hour: 60.0,
            divergent_rate_factor: 2.0,
            proc_vocab: 120,
            file_vocab: 250,
            net_vocab: 180,
            zipf_exponent: 1.15,
            divergent_top_k: 5,
            seed: 42,
        }
    }
}

fn fixture_profile(seed: u64) -> EnvProfile {
    EnvProfile {
        name: "producer".to_string(),
        n_users: 6,
        n_hosts: 12,
        n_communities: 2,
        benign_rate_per_hour: 0.0,
        benign_diversity: 0.0,
        exec_prob: 0.0,
        batch_users: 0,
        batch_burst_logons: (0, 0),
        batch_interval_hours: 1.0,
        flow_day_rate: 0.0,
        flow_night_rate: 0.0,
        flow_off_rate: 0.0,
        flow_fresh_prob: 0.0,
        profile_endpoints_per_host: 1,
        endpoint_pool: 16,
        naming: NamingScheme::CorpLocal,
        schema_flavor: "env_a".to_string(),
        seed,
    }
}

#[derive(Debug, Clone, Copy)]
enum TokenDraw {
    Zipf,
    TopK(usize),
}

fn token_stream(
    spec: &DivergenceSpec,
    profile: &EnvProfile,
    hours: u32,
    rate: f64,
    draw: TokenDraw,
    stream_tag: &str,
) -> Vec<EventDraft> {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(spec.seed, stream_tag));
    let mut events = Vec::new();
    let channels: [(Kind, usize); 3] = [
        (Kind::Exec, spec.proc_vocab),
        (Kind::Write, spec.file_vocab),
        (Kind::Conn, spec.net_vocab),
    ];
    for hour in 0..hours as i64 {
        for (kind, vocab) in channels {
            let n = poisson_count(&mut rng, rate);
            for _ in 0..n {
                let t = hour * 3600 + rng.gen_range(0..3600);
                let token_idx = match draw {
                    TokenDraw::Zipf => {
                        let z = Zipf::new(vocab as u64, spec.zipf_exponent).expect("zipf");
                        z.sample(&mut rng) as usize - 1
                    }
                    TokenDraw::TopK(k) => rng.gen_range(0..k.min(vocab)),
                };
                let channel_kind = match kind {
                    // alternate edge types within each channel so the
                    // process channel carries EXECUTES and SPAWNS and the
                    // file channel carries WRITES and READS
                    Kind::Exec if token_idx % 3 == 2 => Kind::Spawn,
                    Kind::Write if token_idx % 2 == 1 => Kind::Read,
                    k => k,
                };
                let mut ev = EventDraft::at(t, channel_kind);
                match channel_kind {
                    Kind::Exec => {
                        ev.user = profile.user_surface(token_idx % profile.n_users);
                        ev.proc = format!("svc_{token_idx:03}.exe");
                    }
                    Kind::Spawn => {
                        ev.parent_proc = "launcherd.exe".to_string();
                        ev.proc = format!("svc_{token_idx:03}.exe");
                    }
                    Kind::Write | Kind::Read => {
                        ev.proc = format!("svc_{:03}.exe", token_idx % spec.proc_vocab);
                        ev.file = format!("c:\\data\\obj_{token_idx:04}.bin");
                    }
                    Kind::Conn => {
                        ev.src_host = profile.host_surface(token_idx % profile.n_hosts);
                        ev.dst_ip = profile.profile_endpoint(token_idx);
                        ev.port = "443".to_string();
                    }
                    Kind::Logon => unreachable!("fixture channels"),
                }
                events.push(ev);
            }
        }
    }
    events
}

/// The three viability fixture files (train producer, divergent test
/// producer, i.i.d. control producer), all in the EnvA flavor.
pub struct DivergenceFixture {
    pub train_csv: String,
    pub divergent_csv: String,
    pub control_csv: String,
}

pub fn generate_divergence_fixture(spec: &DivergenceSpec) -> DivergenceFixture {
    let profile = fixture_profile(spec.seed);
    let window_s = 1800;
    let train = token_stream(
        spec,
        &profile,
        spec.train_hours,
        spec.rate_per_hour,
        TokenDraw::Zipf,
        "producer-train",
    );
    let divergent = token_stream(
        spec,
        &profile,
        spec.divergent_hours,
        spec.rate_per_hour * spec.divergent_rate_factor,
        TokenDraw::TopK(spec.divergent_top_k),
        "producer-divergent",
    );
    let control = token_stream(
        spec,
        &profile,
        spec.control_hours,
        spec.rate_per_hour,
        TokenDraw::Zipf,
        "producer-control",
    );
    let wrap = |events: Vec<EventDraft>, hours: u32| {
        render(&profile, Task::Zdt, events, hours as i64 * 3600, window_s).telemetry_csv
    };
    DivergenceFixture {
        train_csv: wrap(train, spec.train_hours),
        divergent_csv: wrap(divergent, spec.divergent_hours),
        control_csv: wrap(control, spec.control_hours),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn lm_pair() -> (EnvProfile, InjectionSpec) {
        let cfg = ExperimentConfig::default();
        (cfg.env_a_lm, cfg.lm_injection_a)
    }

    #[test]
    fn zero_duration_is_empty() {
        let (profile, inj) = lm_pair();
        let g = generate_env(&profile, &inj, 0, 30).unwrap();
        assert_eq!(g.telemetry_csv.lines().count(), 1, "header only");
        assert!(g.labels.is_empty());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let (profile, inj) = lm_pair();
        let g1 = generate_env(&profile, &inj, 48, 30).unwrap();
        let g2 = generate_env(&profile, &inj, 48, 30).unwrap();
        assert_eq!(g1.telemetry_csv, g2.telemetry_csv);
        assert_eq!(g1.labels_jsonl(), g2.labels_jsonl());
    }

    #[test]
    fn chain_hosts_are_distinct_and_out_of_community_within_dwell() {
        let (profile, inj) = lm_pair();
        let mut events = Vec::new();
        inject_lateral_movement(&mut events, &profile, &inj, 48 * 3600, 1800).unwrap();
        assert_eq!(events.len(), inj.n_campaigns * inj.chain_length * 2);

        // group by campaign order: every chain_length consecutive logons
        let logons: Vec<&EventDraft> = events
            .iter()
            .filter(|e| e.kind == Some(Kind::Logon))
            .collect();
        for chain in logons.chunks(inj.chain_length) {
            let hosts: std::collections::BTreeSet<&str> =
                chain.iter().map(|e| e.dst_host.as_str()).collect();
            assert_eq!(hosts.len(), inj.chain_length, "pairwise distinct hosts");
            let lo = chain.iter().map(|e| e.t).min().unwrap();
            let hi = chain.iter().map(|e| e.t).max().unwrap();
            assert!(hi - lo <= inj.dwell_minutes as i64 * 60, "inside dwell");
            for e in chain {
                assert_ne!(e.user_comm, e.host_comm, "out of community");
            }
        }
    }

    #[test]
    fn infeasible_chain_is_rejected() {
        let (mut profile, mut inj) = lm_pair();
        profile.n_hosts = 4;
        profile.n_communities = 1;
        inj.chain_length = 10;
        let mut events = Vec::new();
        // every host is in the user's community, so nothing is outside it
        let err = inject_lateral_movement(&mut events, &profile, &inj, 48 * 3600, 1800);
        assert!(matches!(err, Err(SynthError::InfeasibleInjection(_))));
    }

    #[test]
    fn zdt_positive_rate_lands_in_band() {
        let cfg = ExperimentConfig::default();
        // ~2000 windows at 30 minutes = 1000 hours
        let g = generate_env(&cfg.env_a_zdt, &cfg.zdt_injection_a, 1000, 30).unwrap();
        let rate = g.positive_windows as f64 / g.n_windows as f64;
        assert_eq!(g.n_windows, 2000);
        assert!((0.06..=0.08).contains(&rate), "rate {rate}");
    }

    #[test]
    fn surface_forms_do_not_overlap_across_envs() {
        let cfg = ExperimentConfig::default();
        let a = generate_env(&cfg.env_a_lm, &cfg.lm_injection_a, 24, 30).unwrap();
        let b = generate_env(&cfg.env_b_lm, &cfg.lm_injection_b, 24, 30).unwrap();
        let tokens = |csv: &str| -> std::collections::BTreeSet<String> {
            csv.lines()
                .skip(1)
                .flat_map(|l| l.split(','))
                .filter(|v| v.contains('\\') || v.contains('.') || v.contains('@'))
                .map(|v| v.to_string())
                .collect()
        };
        let overlap: Vec<String> = tokens(&a.telemetry_csv)
            .intersection(&tokens(&b.telemetry_csv))
            .cloned()
            .collect();
        assert!(overlap.is_empty(), "shared surfaces: {overlap:?}");
    }

    #[test]
    fn envb_benign_out_of_community_rate_exceeds_enva() {
        let cfg = ExperimentConfig::default();
        let rate = |profile: &EnvProfile, inj: &InjectionSpec| -> f64 {
            let mut events = Vec::new();
            benign_lm(profile, 96 * 3600, &mut events);
            let _ = inj;
            let logons: Vec<&EventDraft> = events
                .iter()
                .filter(|e| e.kind == Some(Kind::Logon))
                .collect();
            let out = logons.iter().filter(|e| e.user_comm != e.host_comm).count();
            out as f64 / logons.len() as f64
        };
        let ra = rate(&cfg.env_a_lm, &cfg.lm_injection_a);
        let rb = rate(&cfg.env_b_lm, &cfg.lm_injection_b);
        assert!(rb > ra + 0.03, "EnvB diversity {rb} vs EnvA {ra}");
    }

    #[test]
    fn divergence_fixture_is_deterministic() {
        let spec = DivergenceSpec {
            train_hours: 4,
            control_hours: 4,
            divergent_hours: 2,
            ..Default::default()
        };
        let f1 = generate_divergence_fixture(&spec);
        let f2 = generate_divergence_fixture(&spec);
        assert_eq!(f1.train_csv, f2.train_csv);
        assert_eq!(f1.divergent_csv, f2.divergent_csv);
        assert_eq!(f1.control_csv, f2.control_csv);
    }
}
