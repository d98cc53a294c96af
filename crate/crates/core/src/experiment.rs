//! Config-driven experiment runs: one TOML file describes the topology,
//! workload, congestion control and seed range; results land as CSV and JSON
//! in an output directory.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::{build_fat_tree, link_delay_for_rtt, FatTreeTopology, RoutingKind, RoutingPolicy};
use crate::metrics::{self, CcdfPoint, FlowRecord, RunSummary};
use crate::models::{
    dctcp_throughput_upper, fastflow_throughput, rr_swift_throughput_numeric, swift_throughput, tcp_throughput, to_gbps, FastFlowParams,
    ModelParams, SolverConfig,
};
use crate::net::{run_network, CwndSample, NetConfig, NetReport};
use crate::scenarios::{self, Scenario, ScenarioConfig, ScenarioKind};
use crate::sim::SimTime;
use crate::transport::{Cca, HistoryPolicy, SwiftConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub radix_k: u32,
    #[serde(default = "default_link_speed")]
    pub link_speed_bps: u64,
    /// Empty-network inter-pod RTT; link delays are calibrated to it.
    #[serde(default = "default_base_rtt")]
    pub base_rtt: SimTime,
    /// Switch port buffer. Unset: unbounded for model verification, one BDP otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_capacity_bytes: Option<u64>,
    /// Host NIC buffer. Unset: unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host_queue_capacity_bytes: Option<u64>,
}

fn default_link_speed() -> u64 {
    100_000_000_000
}

fn default_base_rtt() -> SimTime {
    SimTime::from_us(14)
}

impl TopologyConfig {
    pub fn new(radix_k: u32) -> Self {
        TopologyConfig {
            radix_k,
            link_speed_bps: default_link_speed(),
            base_rtt: default_base_rtt(),
            queue_capacity_bytes: None,
            host_queue_capacity_bytes: None,
        }
    }

    pub fn bdp_bytes(&self) -> u64 {
        (self.base_rtt.as_secs_f64() * self.link_speed_bps as f64 / 8.0).round() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingConfig {
    #[serde(default = "default_routing")]
    pub kind: RoutingKind,
    /// Quantum for adaptive routing. Unset: an eighth of the switch buffer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive_quantum_bytes: Option<u64>,
}

fn default_routing() -> RoutingKind {
    RoutingKind::RoundRobinSpray
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig { kind: default_routing(), adaptive_quantum_bytes: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// One event-trace file per seed.
    pub trace: bool,
    /// Per-ACK cwnd and delay series of tracked flows.
    pub cwnd_series: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub scenario: ScenarioConfig,
    pub cca: Cca,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub routing: RoutingConfig,
    #[serde(default)]
    pub swift: SwiftConfig,
    /// Seeds per run set. Unset: 100 for model verification, 20 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u32>,
    #[serde(default)]
    pub seed_base: u64,
    /// Simulated-time limit of each run.
    #[serde(default = "default_deadline")]
    pub deadline: SimTime,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_deadline() -> SimTime {
    SimTime::from_ms(1_000)
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig, cca: Cca, radix_k: u32) -> Self {
        ExperimentConfig {
            name: default_name(),
            scenario,
            cca,
            topology: TopologyConfig::new(radix_k),
            routing: RoutingConfig::default(),
            swift: SwiftConfig::default(),
            runs: None,
            seed_base: 0,
            deadline: default_deadline(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn is_model_verification(&self) -> bool {
        matches!(self.scenario.kind, ScenarioKind::ModelVerification { .. })
    }

    /// Validates every field and fills in the defaults that depend on others.
    pub fn prepare(&self) -> Result<Experiment> {
        self.scenario.validate()?;
        self.cca.validate().map_err(Error::Config)?;
        self.swift.validate().map_err(Error::Config)?;
        let runs = self.runs.unwrap_or(if self.is_model_verification() { 100 } else { 20 });
        if runs == 0 {
            return Err(Error::config("runs must be >= 1"));
        }
        if self.deadline == SimTime::ZERO {
            return Err(Error::config("deadline must be > 0"));
        }
        let t = &self.topology;
        let link_delay = link_delay_for_rtt(t.base_rtt, t.link_speed_bps, self.swift.mss, self.swift.ack_bytes)?;
        let queue_capacity_bytes = match t.queue_capacity_bytes {
            Some(0) => return Err(Error::config("queue_capacity_bytes must be > 0")),
            Some(c) => c,
            None if self.is_model_verification() => u64::MAX,
            None => t.bdp_bytes(),
        };
        let host_queue_capacity_bytes = match t.host_queue_capacity_bytes {
            Some(0) => return Err(Error::config("host_queue_capacity_bytes must be > 0")),
            Some(c) => c,
            None => u64::MAX,
        };
        let routing = self.scenario.forced_routing().unwrap_or(self.routing.kind);
        let adaptive_quantum_bytes = match self.routing.adaptive_quantum_bytes {
            Some(0) => return Err(Error::config("adaptive_quantum_bytes must be > 0")),
            Some(q) => q,
            None if queue_capacity_bytes == u64::MAX => t.bdp_bytes() / 8,
            None => (queue_capacity_bytes / 8).max(1),
        };
        let topology = build_fat_tree(t.radix_k, t.link_speed_bps, link_delay, queue_capacity_bytes, host_queue_capacity_bytes)?;
        if let ScenarioKind::Incast { fan_in } = self.scenario.kind {
            if fan_in >= topology.host_count() {
                return Err(Error::config(format!(
                    "fan_in {fan_in} needs more than the {} hosts of a radix-{} tree",
                    topology.host_count(),
                    t.radix_k
                )));
            }
        }
        Ok(Experiment {
            config: self.clone(),
            resolved: Resolved {
                runs,
                seeds: (0..runs as u64).map(|i| self.seed_base + i).collect(),
                link_delay,
                queue_capacity_bytes,
                host_queue_capacity_bytes,
                routing,
                adaptive_quantum_bytes,
                host_count: topology.host_count(),
            },
            topology,
        })
    }
}

/// Effective values of everything the config leaves implicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub runs: u32,
    pub seeds: Vec<u64>,
    pub link_delay: SimTime,
    pub queue_capacity_bytes: u64,
    pub host_queue_capacity_bytes: u64,
    pub routing: RoutingKind,
    pub adaptive_quantum_bytes: u64,
    pub host_count: u32,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    pub topology: FatTreeTopology,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub scenario: Scenario,
    pub fingerprint: String,
    pub report: NetReport,
    pub records: Vec<FlowRecord>,
    /// Absent when no flow completed before the deadline.
    pub summary: Option<RunSummary>,
}

#[derive(Clone, Debug)]
pub struct RunSet {
    pub runs: Vec<SeedRun>,
    pub records: Vec<FlowRecord>,
    pub pooled: RunSummary,
    pub ccdf: Vec<CcdfPoint>,
}

impl RunSet {
    /// Mean over seeds of each run's mean flow throughput, in bits/s.
    pub fn mean_of_run_means(&self) -> f64 {
        let means: Vec<f64> = self.runs.iter().filter_map(|r| r.summary.as_ref()).map(|s| s.mean_throughput_bps).collect();
        means.iter().sum::<f64>() / means.len().max(1) as f64
    }
}

impl Experiment {
    pub fn net_config(&self, seed: u64) -> NetConfig {
        NetConfig {
            routing: RoutingPolicy {
                kind: self.resolved.routing,
                adaptive_quantum_bytes: self.resolved.adaptive_quantum_bytes,
            },
            swift: self.config.swift.clone(),
            seed,
            deadline: self.config.deadline,
            record_cwnd: self.config.output.cwnd_series,
        }
    }

    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        scenarios::generate(&self.config.scenario, &self.topology, self.config.cca, self.config.topology.base_rtt, seed)
    }

    /// One seed, start to finish, with invariant checks on the result.
    pub fn run_seed(&self, seed: u64, trace: Option<Box<dyn Write + Send>>) -> Result<SeedRun> {
        let scenario = self.scenario(seed)?;
        let mut topo = self.topology.clone();
        scenario.apply(&mut topo);
        let report = run_network(&topo, &scenario.flows, &self.net_config(seed), trace);
        self.check_invariants(seed, &report)?;
        let fingerprint = metrics::fingerprint(&scenario);
        let records: Vec<FlowRecord> = report.flows.iter().map(|o| FlowRecord::from_outcome(seed, o)).collect();
        let summary = metrics::summarize(&records, Some(seed), 1, fingerprint.clone()).ok();
        Ok(SeedRun { seed, scenario, fingerprint, report, records, summary })
    }

    fn check_invariants(&self, seed: u64, report: &NetReport) -> Result<()> {
        let fail = |m: String| Err(Error::Invariant(format!("seed {seed}: {m}")));
        if !report.packets.holds() {
            return fail(format!("packet conservation broken: {:?}", report.packets));
        }
        if report.hop_violations > 0 {
            return fail(format!("{} packets took a non-shortest path", report.hop_violations));
        }
        for f in report.flows.iter().filter(|f| !f.elephant) {
            if let Some(w) = f.min_cwnd_seen.filter(|&w| w < self.config.swift.min_cwnd) {
                return fail(format!("flow {} cwnd fell to {w}", f.id.0));
            }
            if f.end.is_some() && f.bytes_delivered != f.size_bytes {
                return fail(format!("flow {} completed with {} of {} bytes", f.id.0, f.bytes_delivered, f.size_bytes));
            }
        }
        Ok(())
    }

    /// Runs every seed, at most `jobs` at a time. Results are ordered by seed
    /// whatever order the runs finish in.
    pub fn run(&self, jobs: usize, trace_dir: Option<&Path>) -> Result<RunSet> {
        if let Some(dir) = trace_dir {
            fs::create_dir_all(dir)?;
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let runs: Vec<SeedRun> = pool.install(|| {
            self.resolved
                .seeds
                .par_iter()
                .map(|&seed| {
                    let trace: Option<Box<dyn Write + Send>> = match trace_dir {
                        Some(dir) => Some(Box::new(BufWriter::new(File::create(dir.join(format!("seed-{seed}.log")))?))),
                        None => None,
                    };
                    self.run_seed(seed, trace)
                })
                .collect::<Result<_>>()
        })?;
        let records = metrics::pool(runs.iter().map(|r| r.records.clone()));
        let fingerprint = metrics::fingerprint(&runs.iter().map(|r| &r.fingerprint).collect::<Vec<_>>());
        let pooled = metrics::summarize(&records, None, runs.len() as u32, fingerprint)?;
        let ccdf = metrics::ccdf(&records);
        Ok(RunSet { runs, records, pooled, ccdf })
    }
}

#[derive(Serialize)]
struct RunManifestEntry<'a> {
    seed: u64,
    fingerprint: &'a str,
    events_processed: u64,
    final_time: SimTime,
    all_completed: bool,
    packets: &'a crate::net::Conservation,
    duplicate_acks: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    resolved: &'a Resolved,
    runs: Vec<RunManifestEntry<'a>>,
}

#[derive(Serialize)]
struct CwndRow {
    seed: u64,
    flow: u32,
    time_ns: f64,
    cwnd: f64,
    latest_delay_ns: f64,
    effective_delay_ns: f64,
    target_ns: f64,
}

impl CwndRow {
    fn new(seed: u64, s: &CwndSample) -> Self {
        CwndRow {
            seed,
            flow: s.flow,
            time_ns: s.time_ns,
            cwnd: s.cwnd,
            latest_delay_ns: s.latest_delay_ns,
            effective_delay_ns: s.effective_delay_ns,
            target_ns: s.target_ns,
        }
    }
}

/// Writes `flows.csv`, `summary.csv`, `ccdf.csv`, `manifest.json`,
/// `scenarios.json` and, when enabled, `cwnd.csv` into `dir`.
pub fn write_run_set(dir: &Path, exp: &Experiment, set: &RunSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    metrics::write_flows_csv(File::create(dir.join("flows.csv"))?, &set.records)?;
    let per_seed: Vec<(String, &RunSummary)> = set
        .runs
        .iter()
        .filter_map(|r| r.summary.as_ref().map(|s| (format!("seed-{}", r.seed), s)))
        .collect();
    let rows = per_seed
        .iter()
        .map(|(k, s)| (k.as_str(), *s))
        .chain(std::iter::once(("pooled", &set.pooled)));
    metrics::write_summaries_csv(File::create(dir.join("summary.csv"))?, rows)?;
    metrics::write_ccdf_csv(File::create(dir.join("ccdf.csv"))?, [("pooled", set.ccdf.as_slice())])?;

    let manifest = Manifest {
        tool: "spraysim",
        version: env!("CARGO_PKG_VERSION"),
        config: &exp.config,
        resolved: &exp.resolved,
        runs: set
            .runs
            .iter()
            .map(|r| RunManifestEntry {
                seed: r.seed,
                fingerprint: &r.fingerprint,
                events_processed: r.report.events_processed,
                final_time: r.report.final_time,
                all_completed: r.report.all_completed,
                packets: &r.report.packets,
                duplicate_acks: r.report.duplicate_acks,
            })
            .collect(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    let scenarios: Vec<&Scenario> = set.runs.iter().map(|r| &r.scenario).collect();
    write_json(&dir.join("scenarios.json"), &scenarios)?;

    if exp.config.output.cwnd_series {
        let mut w = csv::Writer::from_writer(File::create(dir.join("cwnd.csv"))?);
        for r in &set.runs {
            for s in &r.report.cwnd_samples {
                w.serialize(CwndRow::new(r.seed, s))?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Prepares, runs and writes one experiment.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, jobs: usize) -> Result<RunSet> {
    let exp = cfg.prepare()?;
    let trace_dir: Option<PathBuf> = cfg.output.trace.then(|| dir.join("traces"));
    let set = exp.run(jobs, trace_dir.as_deref())?;
    write_run_set(dir, &exp, &set)?;
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Constant MSwift history size.
    HistorySize,
    /// `alpha` of a window-based or bounded-window history.
    Alpha,
    /// `max_size` of a bounded-window history.
    K,
    RadixK,
    ElephantCount,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "history_size" | "history-size" => SweepAxis::HistorySize,
            "alpha" => SweepAxis::Alpha,
            "k" | "K" => SweepAxis::K,
            "radix_k" | "radix-k" | "radix" => SweepAxis::RadixK,
            "elephant_count" | "elephant-count" | "elephants" => SweepAxis::ElephantCount,
            other => {
                return Err(Error::config(format!(
                    "unknown sweep axis {other:?}; expected history_size, alpha, k, radix_k or elephant_count"
                )))
            }
        })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::HistorySize => "history_size",
            SweepAxis::Alpha => "alpha",
            SweepAxis::K => "k",
            SweepAxis::RadixK => "radix_k",
            SweepAxis::ElephantCount => "elephant_count",
        })
    }
}

fn as_count(axis: SweepAxis, value: f64) -> Result<u32> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u32)
    } else {
        Err(Error::config(format!("{axis} takes non-negative integers, got {value}")))
    }
}

/// Returns `cfg` with one axis set to `value`.
pub fn apply_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut out = cfg.clone();
    let mismatch = |what: &str| Err(Error::config(format!("sweep axis {axis} needs {what}")));
    match axis {
        SweepAxis::HistorySize => match cfg.cca {
            Cca::MSwift { .. } => {
                let size = as_count(axis, value)?;
                out.cca = Cca::MSwift { history: HistoryPolicy::Constant { size } };
            }
            _ => return mismatch("an mswift cca"),
        },
        SweepAxis::Alpha => match cfg.cca {
            Cca::MSwift { history: HistoryPolicy::WindowBased { .. } } => {
                out.cca = Cca::MSwift { history: HistoryPolicy::WindowBased { alpha: value } };
            }
            Cca::MSwift { history: HistoryPolicy::BoundedWindow { max_size, .. } } => {
                out.cca = Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha: value, max_size } };
            }
            _ => return mismatch("an mswift cca with a window-based history"),
        },
        SweepAxis::K => match cfg.cca {
            Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha, .. } } => {
                let max_size = as_count(axis, value)?;
                out.cca = Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha, max_size } };
            }
            _ => return mismatch("an mswift cca with a bounded-window history"),
        },
        SweepAxis::RadixK => out.topology.radix_k = as_count(axis, value)?,
        SweepAxis::ElephantCount => match cfg.scenario.kind {
            ScenarioKind::Permutation { .. } => {
                out.scenario.kind = ScenarioKind::Permutation { elephant_count: as_count(axis, value)? };
            }
            _ => return mismatch("a permutation scenario"),
        },
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub key: String,
    pub experiment: Experiment,
    pub set: RunSet,
}

/// One run set per value; every value is validated before anything runs.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64], jobs: usize) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let prepared: Vec<(f64, Experiment)> = values
        .iter()
        .map(|&v| Ok((v, apply_axis(cfg, axis, v)?.prepare()?)))
        .collect::<Result<_>>()?;
    prepared
        .into_iter()
        .map(|(value, experiment)| {
            let set = experiment.run(jobs, None)?;
            Ok(SweepPoint { value, key: format!("{axis}={value}"), experiment, set })
        })
        .collect()
}

/// Per-value subdirectories plus a combined `summary.csv` and `ccdf.csv`.
pub fn write_sweep(dir: &Path, points: &[SweepPoint]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for p in points {
        write_run_set(&dir.join(&p.key), &p.experiment, &p.set)?;
    }
    metrics::write_summaries_csv(
        File::create(dir.join("summary.csv"))?,
        points.iter().map(|p| (p.key.as_str(), &p.set.pooled)),
    )?;
    metrics::write_ccdf_csv(
        File::create(dir.join("ccdf.csv"))?,
        points.iter().map(|p| (p.key.as_str(), p.set.ccdf.as_slice())),
    )?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelCompareRow {
    pub radix_k: u32,
    pub paths: u32,
    pub q: f64,
    pub runs: u32,
    pub simulated_bps: f64,
    pub model: &'static str,
    pub model_bps: f64,
    pub relative_error: f64,
}

/// Model parameters matching a model-verification experiment at one radix.
pub fn model_params_for(cfg: &ExperimentConfig, radix_k: u32) -> Result<ModelParams> {
    let ScenarioKind::ModelVerification { delay_factor } = cfg.scenario.kind else {
        return Err(Error::config("model comparison needs a model_verification scenario"));
    };
    let half = (radix_k / 2) as f64;
    let s = &cfg.swift;
    // Inter-pod flows cross six links.
    let topology_scaling = SimTime(s.hop_scaling.as_ps() * 6);
    Ok(ModelParams {
        q: 1.0 / (half * half),
        mss_bytes: s.mss,
        t_short: cfg.topology.base_rtt,
        t_long: cfg.topology.base_rtt.mul_f64(delay_factor),
        ai: s.ai,
        max_mdf: s.max_mdf,
        beta: s.beta,
        target_base: s.base_target + topology_scaling,
        fs_range: s.fs_range,
        fs_min_cwnd: s.fs_min_cwnd,
        fs_max_cwnd: s.fs_max_cwnd,
    })
}

/// Model throughput in bits/s: the Swift closed form for Swift, the
/// reordering-resilient solver otherwise.
pub fn model_rate_bps(cca: Cca, p: &ModelParams) -> Result<(&'static str, f64)> {
    Ok(match cca {
        Cca::Swift => ("swift", swift_throughput(p)? * 8.0),
        _ => ("rr_swift", rr_swift_throughput_numeric(p, &SolverConfig::default())?.rate * 8.0),
    })
}

pub fn model_compare(cfg: &ExperimentConfig, radices: &[u32], jobs: usize) -> Result<Vec<ModelCompareRow>> {
    if radices.is_empty() {
        return Err(Error::config("model comparison needs at least one radix"));
    }
    let prepared: Vec<(u32, Experiment, ModelParams)> = radices
        .iter()
        .map(|&k| {
            let mut c = cfg.clone();
            c.topology.radix_k = k;
            Ok((k, c.prepare()?, model_params_for(&c, k)?))
        })
        .collect::<Result<_>>()?;
    prepared
        .into_iter()
        .map(|(k, exp, params)| {
            let (model, model_bps) = model_rate_bps(cfg.cca, &params)?;
            let set = exp.run(jobs, None)?;
            let simulated_bps = set.mean_of_run_means();
            Ok(ModelCompareRow {
                radix_k: k,
                paths: (k / 2) * (k / 2),
                q: params.q,
                runs: exp.resolved.runs,
                simulated_bps,
                model,
                model_bps,
                relative_error: (simulated_bps - model_bps) / model_bps,
            })
        })
        .collect()
}

pub fn write_model_compare(path: &Path, rows: &[ModelCompareRow]) -> Result<()> {
    write_csv_rows(path, rows)
}

/// One point of the throughput-versus-path-count curves, rates in Gbps.
/// A model outside its domain at this point leaves its column empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub paths: u32,
    pub q: f64,
    pub tcp_gbps: Option<f64>,
    pub dctcp_upper_gbps: Option<f64>,
    pub swift_gbps: Option<f64>,
    pub fastflow_gbps: Option<f64>,
    pub rr_swift_gbps: Option<f64>,
}

/// Evaluates every model at each path count with the curve parameter set.
pub fn model_curves(path_counts: &[u32]) -> Result<Vec<CurveRow>> {
    if path_counts.is_empty() || path_counts.contains(&0) {
        return Err(Error::config("curves need at least one path count, all >= 1"));
    }
    Ok(path_counts
        .iter()
        .map(|&n| {
            let p = ModelParams::curve_defaults(1.0 / n as f64);
            let tcp = tcp_throughput(&p).ok().map(to_gbps);
            CurveRow {
                paths: n,
                q: p.q,
                tcp_gbps: tcp,
                dctcp_upper_gbps: dctcp_throughput_upper(&p, true).ok().map(|b| to_gbps(b.rate)),
                swift_gbps: swift_throughput(&p).ok().map(to_gbps),
                fastflow_gbps: fastflow_throughput(&p, &FastFlowParams::default()).ok().map(to_gbps),
                rr_swift_gbps: rr_swift_throughput_numeric(&p, &SolverConfig::default()).ok().map(|s| to_gbps(s.rate)),
            }
        })
        .collect())
}

pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario]
kind = "permutation"
elephant_count = 0
flow_size_bytes = 100000

[cca]
kind = "mswift"
history = { kind = "bounded_window", alpha = 0.5, max_size = 10 }

[topology]
radix_k = 4
"#;

    #[test]
    fn minimal_config_parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.topology.radix_k, 4);
        assert_eq!(cfg.routing.kind, RoutingKind::RoundRobinSpray);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn missing_required_field_is_a_config_error() {
        let without_topology = MINIMAL.replace("[topology]\nradix_k = 4\n", "");
        assert!(ExperimentConfig::from_toml_str(&without_topology).unwrap_err().is_config());
        let unknown = format!("{MINIMAL}bogus = 1\n");
        assert!(ExperimentConfig::from_toml_str(&unknown).unwrap_err().is_config());
    }

    #[test]
    fn defaults_resolve_by_scenario() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let exp = cfg.prepare().unwrap();
        assert_eq!(exp.resolved.runs, 20);
        assert_eq!(exp.resolved.queue_capacity_bytes, 175_000);
        assert_eq!(exp.resolved.adaptive_quantum_bytes, 175_000 / 8);
        assert_eq!(exp.resolved.seeds, (0..20).collect::<Vec<_>>());

        let mv = ExperimentConfig::new(
            ScenarioConfig::new(ScenarioKind::ModelVerification { delay_factor: 2.0 }),
            Cca::Swift,
            6,
        );
        let exp = mv.prepare().unwrap();
        assert_eq!(exp.resolved.runs, 100);
        assert_eq!(exp.resolved.queue_capacity_bytes, u64::MAX);

        let sp = ExperimentConfig::new(ScenarioConfig::new(ScenarioKind::SinglePathPermutation), Cca::Swift, 4);
        assert_eq!(sp.prepare().unwrap().resolved.routing, RoutingKind::SinglePath);
    }

    #[test]
    fn invalid_values_fail_before_running() {
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.topology.radix_k = 5;
        assert!(cfg.prepare().unwrap_err().is_config());
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.swift.max_mdf = 1.5;
        assert!(cfg.prepare().unwrap_err().is_config());
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.scenario.kind = ScenarioKind::Incast { fan_in: 16 };
        assert!(cfg.prepare().unwrap_err().is_config());
    }

    #[test]
    fn sweep_axes_check_applicability() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let c = apply_axis(&cfg, SweepAxis::K, 20.0).unwrap();
        assert_eq!(c.cca, Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 20 } });
        let c = apply_axis(&cfg, SweepAxis::HistorySize, 5.0).unwrap();
        assert_eq!(c.cca, Cca::MSwift { history: HistoryPolicy::Constant { size: 5 } });
        assert!(apply_axis(&cfg, SweepAxis::K, 2.5).is_err());
        let mut swift = cfg.clone();
        swift.cca = Cca::Swift;
        assert!(apply_axis(&swift, SweepAxis::Alpha, 0.5).unwrap_err().is_config());
        assert!(sweep(&cfg, SweepAxis::K, &[], 1).unwrap_err().is_config());
        assert!("radix".parse::<SweepAxis>().is_ok());
        assert!("nope".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn model_compare_rejects_other_scenarios() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert!(model_compare(&cfg, &[6], 1).unwrap_err().is_config());
    }

    #[test]
    fn model_params_follow_the_topology() {
        let mv = ExperimentConfig::new(
            ScenarioConfig::new(ScenarioKind::ModelVerification { delay_factor: 2.0 }),
            Cca::Swift,
            6,
        );
        let p = model_params_for(&mv, 10).unwrap();
        assert_eq!(p.q, 1.0 / 25.0);
        assert_eq!(p.t_long, SimTime::from_us(28));
        assert_eq!(p.target_base, SimTime::from_ns(15_800));
    }
}
