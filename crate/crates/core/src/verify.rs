//! Built-in acceptance checks.
//!
//! Each check runs a fixed, desk-scale experiment (or a pure model
//! evaluation) and compares it against a stated tolerance. The test suite
//! and the `verify` subcommand share these definitions.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::experiment::{model_compare, write_run_set, ExperimentConfig, ModelCompareRow, RunSet};
use crate::fabric::RoutingKind;
use crate::metrics::CcdfPoint;
use crate::models::{
    fastflow_throughput, rr_swift_throughput_numeric, sawtooth_oracle, swift_throughput, tcp_throughput,
    DecreaseSchedule, FastFlowParams, ModelParams, SolverConfig,
};
use crate::net::run_network;
use crate::scenarios::{ScenarioConfig, ScenarioKind};
use crate::sim::{RngStream, SimTime};
use crate::transport::{history_size, median, Cca, HistoryPolicy};

pub const SQRT_LAW_EXACT_TOL: f64 = 1e-3;
pub const SQRT_LAW_NUMERIC_TOL: f64 = 0.03;
pub const ORACLE_TOL: f64 = 0.05;
pub const DEGENERATE_TOL: f64 = 1e-6;
pub const MODEL_FIT_TOL: f64 = 0.20;
pub const MODEL_RATIO_TOL: f64 = 0.10;
pub const RANDOM_SPRAY_TOL: f64 = 0.30;
pub const PERMUTATION_P99_GAIN: f64 = 0.10;
pub const PERMUTATION_THROUGHPUT_GAIN: f64 = 0.05;
pub const INCAST_CONSTANT_PENALTY: f64 = 0.10;
pub const PARITY_TOL: f64 = 0.05;

/// Radices of the model-fit experiments (9, 16 and 25 paths).
pub const MODEL_RADICES: [u32; 3] = [6, 8, 10];
/// Flow-scaling ranges tried when fitting the model; the constants are not
/// known exactly, so any value up to the default is admissible.
pub const FS_RANGE_GRID_NS: [u64; 3] = [0, 2_600, 5_200];
pub const DESK_RADIX: u32 = 6;
pub const DESK_FLOW_BYTES: u64 = 2_000_000;
pub const DESK_INCAST_FAN_IN: u32 = 20;
pub const CONSTANT_HISTORY_SIZES: [u32; 4] = [5, 10, 20, 40];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "square-root law of the closed forms" },
    Criterion { id: 2, name: "sawtooth oracle matches tcp and swift laws" },
    Criterion { id: 3, name: "reordering-resilient solver degenerates to swift" },
    Criterion { id: 4, name: "swift round-robin simulation fits the model" },
    Criterion { id: 5, name: "random spraying stays near the round-robin model" },
    Criterion { id: 6, name: "lswift beats swift but stays below the uncongested rate" },
    Criterion { id: 7, name: "mswift beats lswift on permutation with elephants" },
    Criterion { id: 8, name: "constant history hurts incast" },
    Criterion { id: 9, name: "bounded-window history matches lswift on incast" },
    Criterion { id: 10, name: "mswift matches swift on single-path routing" },
    Criterion { id: 11, name: "property suites" },
];

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {}: {} | {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Seeds simulated in parallel.
    pub jobs: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { jobs: std::thread::available_parallelism().map_or(1, |n| n.get()) }
    }
}

/// Runs one criterion. A simulation error counts as a failure, with the
/// error in the detail.
pub fn check(id: u8, opts: &VerifyOptions) -> Result<Outcome> {
    let criterion = CRITERIA
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::config(format!("no acceptance criterion {id}; valid ids are 1-{}", CRITERIA.len())))?;
    let start = Instant::now();
    let result = match id {
        1 => sqrt_law(),
        2 => oracle_equivalence(),
        3 => degenerate_solver(),
        4 => model_fit(opts),
        5 => random_spray_fit(opts),
        6 => lswift_recovery(opts),
        7 => permutation_gain(opts),
        8 => constant_history_incast(opts),
        9 => bounded_history_incast(opts),
        10 => single_path_parity(opts),
        _ => properties(opts),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    Ok(Outcome { id, name: criterion.name, passed, detail, elapsed: start.elapsed() })
}

pub fn run_all(opts: &VerifyOptions) -> Vec<Outcome> {
    CRITERIA.iter().map(|c| check(c.id, opts).expect("listed criterion")).collect()
}

type Verdict = Result<(bool, String)>;

fn relative(a: f64, b: f64) -> f64 {
    (a - b) / b
}

/// `max/min - 1` of a set of positive values.
fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    max / min - 1.0
}

fn sqrt_law() -> Verdict {
    let exact_qs = [1e-4, 1e-3, 1e-2];
    let numeric_qs = [1e-4, 1e-3];
    let scaled = |qs: &[f64], f: &dyn Fn(&ModelParams) -> Result<f64>| -> Result<Vec<f64>> {
        qs.iter().map(|&q| Ok(f(&ModelParams::curve_defaults(q))? * q.sqrt())).collect()
    };
    let tcp = spread(&scaled(&exact_qs, &|p| Ok(tcp_throughput(p)?))?);
    let swift = spread(&scaled(&exact_qs, &|p| Ok(swift_throughput(p)?))?);
    let fastflow = spread(&scaled(&numeric_qs, &|p| Ok(fastflow_throughput(p, &FastFlowParams::default())?))?);
    let solver = spread(&scaled(&numeric_qs, &|p| Ok(rr_swift_throughput_numeric(p, &SolverConfig::default())?.rate))?);
    let passed = tcp <= SQRT_LAW_EXACT_TOL
        && swift <= SQRT_LAW_EXACT_TOL
        && fastflow <= SQRT_LAW_NUMERIC_TOL
        && solver <= SQRT_LAW_NUMERIC_TOL;
    Ok((
        passed,
        format!(
            "spread of rate*sqrt(q): tcp {tcp:.2e}, swift {swift:.2e} (limit {SQRT_LAW_EXACT_TOL:.0e}); \
             fastflow {:.2}%, rr_swift {:.2}% (limit {:.0}%)",
            fastflow * 100.0,
            solver * 100.0,
            SQRT_LAW_NUMERIC_TOL * 100.0
        ),
    ))
}

fn oracle_rtts(n: u64) -> f64 {
    (200.0 * (n as f64).sqrt()).max(2_000.0)
}

fn oracle_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for n in [100u64, 1_000, 10_000] {
        let p = ModelParams::curve_defaults(1.0 / n as f64);
        let unit = p.unit_rate();
        let tcp = tcp_throughput(&p)? / unit;
        let halving = sawtooth_oracle(1.0, |w| w * 0.5, DecreaseSchedule::EveryN(n), oracle_rtts(n)).rate;
        let swift = swift_throughput(&p)? / unit;
        let capped = sawtooth_oracle(p.ai, |w| w * (1.0 - p.max_mdf), DecreaseSchedule::EveryN(n), oracle_rtts(n)).rate;
        let (e_tcp, e_swift) = (relative(halving, tcp).abs(), relative(capped, swift).abs());
        worst = worst.max(e_tcp).max(e_swift);
        notes.push(format!("n={n} tcp {:.2}% swift {:.2}%", e_tcp * 100.0, e_swift * 100.0));
    }
    Ok((worst <= ORACLE_TOL, notes.join(", ")))
}

fn degenerate_solver() -> Verdict {
    let mut worst: f64 = 0.0;
    for q in [1e-4, 1e-3, 1e-2, 1.0 / 16.0] {
        // A very long congested RTT makes the decrease hit its cap; no flow scaling.
        let p = ModelParams {
            fs_range: SimTime::ZERO,
            t_long: SimTime::from_us(10_000),
            ..ModelParams::curve_defaults(q)
        };
        let numeric = rr_swift_throughput_numeric(&p, &SolverConfig::default())?.rate;
        worst = worst.max(relative(numeric, swift_throughput(&p)?).abs());
    }
    Ok((worst <= DEGENERATE_TOL, format!("largest relative gap {worst:.1e} (limit {DEGENERATE_TOL:.0e})")))
}

/// Single-flow model verification with one slow core path.
pub fn model_verification_config(cca: Cca, radix_k: u32, routing: RoutingKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ScenarioConfig::new(ScenarioKind::ModelVerification { delay_factor: 2.0 }), cca, radix_k);
    cfg.routing.kind = routing;
    cfg
}

/// Radix-6 permutation with six elephants under random packet spraying.
pub fn permutation_config(cca: Cca) -> ExperimentConfig {
    let mut sc = ScenarioConfig::new(ScenarioKind::Permutation { elephant_count: 6 });
    sc.flow_size_bytes = DESK_FLOW_BYTES;
    let mut cfg = ExperimentConfig::new(sc, cca, DESK_RADIX);
    cfg.routing.kind = RoutingKind::RandomSpray;
    cfg
}

/// 20-to-1 incast at radix 6 under random packet spraying.
pub fn incast_config(cca: Cca) -> ExperimentConfig {
    let mut sc = ScenarioConfig::new(ScenarioKind::Incast { fan_in: DESK_INCAST_FAN_IN });
    sc.flow_size_bytes = DESK_FLOW_BYTES;
    let mut cfg = ExperimentConfig::new(sc, cca, DESK_RADIX);
    cfg.routing.kind = RoutingKind::RandomSpray;
    cfg
}

/// Radix-6 permutation without elephants, every flow pinned to one path.
pub fn single_path_config(cca: Cca) -> ExperimentConfig {
    let mut sc = ScenarioConfig::new(ScenarioKind::SinglePathPermutation);
    sc.flow_size_bytes = DESK_FLOW_BYTES;
    ExperimentConfig::new(sc, cca, DESK_RADIX)
}

pub fn bounded_window() -> Cca {
    Cca::MSwift { history: HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 } }
}

fn fit_rows(rows: &[ModelCompareRow]) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in rows {
        ok &= r.relative_error.abs() <= MODEL_FIT_TOL;
        notes.push(format!(
            "k={} sim {:.2}G model {:.2}G ({:+.1}%)",
            r.radix_k,
            r.simulated_bps / 1e9,
            r.model_bps / 1e9,
            r.relative_error * 100.0
        ));
    }
    for w in rows.windows(2) {
        let sim = w[1].simulated_bps / w[0].simulated_bps;
        let model = w[1].model_bps / w[0].model_bps;
        let err = relative(sim, model);
        ok &= err.abs() <= MODEL_RATIO_TOL;
        notes.push(format!("ratio k{}/k{} sim {sim:.3} model {model:.3} ({:+.1}%)", w[1].radix_k, w[0].radix_k, err * 100.0));
    }
    (ok, notes.join(", "))
}

fn model_fit(opts: &VerifyOptions) -> Verdict {
    let mut attempts = Vec::new();
    for fs_ns in FS_RANGE_GRID_NS {
        let mut cfg = model_verification_config(Cca::Swift, MODEL_RADICES[0], RoutingKind::RoundRobinSpray);
        cfg.swift.fs_range = SimTime::from_ns(fs_ns);
        let rows = model_compare(&cfg, &MODEL_RADICES, opts.jobs)?;
        let (ok, detail) = fit_rows(&rows);
        if ok {
            return Ok((true, format!("fs_range {fs_ns}ns: {detail}")));
        }
        attempts.push(format!("fs_range {fs_ns}ns: {detail}"));
    }
    Ok((false, attempts.join("; ")))
}

fn random_spray_fit(opts: &VerifyOptions) -> Verdict {
    let cfg = model_verification_config(Cca::Swift, MODEL_RADICES[0], RoutingKind::RandomSpray);
    let rows = model_compare(&cfg, &MODEL_RADICES, opts.jobs)?;
    let mut ok = rows.iter().all(|r| r.relative_error.abs() <= RANDOM_SPRAY_TOL);
    // Radices ascend, so q descends and throughput must ascend.
    ok &= rows.windows(2).all(|w| w[1].simulated_bps > w[0].simulated_bps);
    let notes: Vec<String> = rows
        .iter()
        .map(|r| format!("q=1/{} sim {:.2}G model {:.2}G ({:+.1}%)", r.paths, r.simulated_bps / 1e9, r.model_bps / 1e9, r.relative_error * 100.0))
        .collect();
    Ok((ok, notes.join(", ")))
}

/// Mean throughput of the model-verification flows with the slow path removed.
fn uncongested_rate(cfg: &ExperimentConfig) -> Result<f64> {
    let exp = cfg.prepare()?;
    let mut total = 0.0;
    for &seed in &exp.resolved.seeds {
        let scenario = exp.scenario(seed)?;
        let report = run_network(&exp.topology, &scenario.flows, &exp.net_config(seed), None);
        let flow = report.flows.first().ok_or_else(|| Error::Invariant("scenario has no flow".into()))?;
        let fct = flow.end.ok_or_else(|| Error::Invariant(format!("seed {seed}: uncongested flow did not finish")))? - flow.start;
        total += flow.bytes_delivered as f64 * 8.0 / fct.as_secs_f64();
    }
    Ok(total / exp.resolved.seeds.len() as f64)
}

fn lswift_recovery(opts: &VerifyOptions) -> Verdict {
    let k = 10;
    let swift_cfg = model_verification_config(Cca::Swift, k, RoutingKind::RoundRobinSpray);
    let swift = swift_cfg.prepare()?.run(opts.jobs, None)?.mean_of_run_means();
    let lswift = model_verification_config(Cca::LSwift, k, RoutingKind::RoundRobinSpray)
        .prepare()?
        .run(opts.jobs, None)?
        .mean_of_run_means();
    let clean = uncongested_rate(&swift_cfg)?;
    Ok((
        lswift > swift && swift < clean && lswift < clean,
        format!("k={k}: swift {:.2}G, lswift {:.2}G, uncongested {:.2}G", swift / 1e9, lswift / 1e9, clean / 1e9),
    ))
}

fn run_set(cfg: &ExperimentConfig, opts: &VerifyOptions) -> Result<RunSet> {
    cfg.prepare()?.run(opts.jobs, None)
}

fn us(t: SimTime) -> f64 {
    t.as_us_f64()
}

fn permutation_gain(opts: &VerifyOptions) -> Verdict {
    let l = run_set(&permutation_config(Cca::LSwift), opts)?.pooled;
    let m = run_set(&permutation_config(bounded_window()), opts)?.pooled;
    let p99_gain = 1.0 - us(m.fct_p99) / us(l.fct_p99);
    let thr_gain = relative(m.mean_throughput_bps, l.mean_throughput_bps);
    Ok((
        p99_gain >= PERMUTATION_P99_GAIN && thr_gain >= PERMUTATION_THROUGHPUT_GAIN,
        format!(
            "p99 lswift {:.0}us mswift {:.0}us ({:+.1}% better), throughput lswift {:.2}G mswift {:.2}G ({:+.1}%)",
            us(l.fct_p99),
            us(m.fct_p99),
            p99_gain * 100.0,
            l.mean_throughput_bps / 1e9,
            m.mean_throughput_bps / 1e9,
            thr_gain * 100.0
        ),
    ))
}

fn constant_history_incast(opts: &VerifyOptions) -> Verdict {
    let base = us(run_set(&incast_config(Cca::LSwift), opts)?.pooled.fct_p99);
    let mut penalties = Vec::new();
    for size in CONSTANT_HISTORY_SIZES {
        let cca = Cca::MSwift { history: HistoryPolicy::Constant { size } };
        let p99 = us(run_set(&incast_config(cca), opts)?.pooled.fct_p99);
        penalties.push((size, p99, p99 / base - 1.0));
    }
    let at_ten = penalties.iter().find(|(s, _, _)| *s == 10).map_or(0.0, |p| p.2);
    let monotone = penalties.windows(2).all(|w| w[1].1 >= w[0].1);
    let notes: Vec<String> = penalties.iter().map(|(s, p, d)| format!("const{s} {p:.0}us ({:+.1}%)", d * 100.0)).collect();
    Ok((
        at_ten > INCAST_CONSTANT_PENALTY && monotone,
        format!("lswift p99 {base:.0}us; {}; monotone {monotone}", notes.join(", ")),
    ))
}

fn bounded_history_incast(opts: &VerifyOptions) -> Verdict {
    let l = us(run_set(&incast_config(Cca::LSwift), opts)?.pooled.fct_p99);
    let m = us(run_set(&incast_config(bounded_window()), opts)?.pooled.fct_p99);
    let gap = relative(m, l);
    Ok((gap.abs() <= PARITY_TOL, format!("p99 lswift {l:.0}us, bounded window {m:.0}us ({:+.1}%)", gap * 100.0)))
}

fn single_path_parity(opts: &VerifyOptions) -> Verdict {
    let s = run_set(&single_path_config(Cca::Swift), opts)?.pooled;
    let m = run_set(&single_path_config(bounded_window()), opts)?.pooled;
    let thr = relative(m.mean_throughput_bps, s.mean_throughput_bps);
    let p99 = relative(us(m.fct_p99), us(s.fct_p99));
    Ok((
        thr.abs() <= PARITY_TOL && p99.abs() <= PARITY_TOL,
        format!(
            "throughput swift {:.2}G mswift {:.2}G ({:+.1}%), p99 swift {:.0}us mswift {:.0}us ({:+.1}%)",
            s.mean_throughput_bps / 1e9,
            m.mean_throughput_bps / 1e9,
            thr * 100.0,
            us(s.fct_p99),
            us(m.fct_p99),
            p99 * 100.0
        ),
    ))
}

/// Small versions of every scenario kind, used by the property checks.
pub fn smoke_configs() -> Vec<ExperimentConfig> {
    let small = |kind: ScenarioKind, cca: Cca, routing: RoutingKind| {
        let mut sc = ScenarioConfig::new(kind);
        sc.flow_size_bytes = 200_000;
        let mut cfg = ExperimentConfig::new(sc, cca, 4);
        cfg.routing.kind = routing;
        cfg.runs = Some(4);
        cfg
    };
    vec![
        small(ScenarioKind::Permutation { elephant_count: 2 }, bounded_window(), RoutingKind::RandomSpray),
        small(ScenarioKind::Permutation { elephant_count: 1 }, Cca::Swift, RoutingKind::Adaptive),
        small(ScenarioKind::Incast { fan_in: 6 }, Cca::LSwift, RoutingKind::RoundRobinSpray),
        small(ScenarioKind::SinglePathPermutation, Cca::Swift, RoutingKind::SinglePath),
        small(ScenarioKind::ModelVerification { delay_factor: 2.0 }, Cca::LSwift, RoutingKind::RoundRobinSpray),
    ]
}

fn read_dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)?
        .map(|e| {
            let e = e?;
            Ok((e.file_name().to_string_lossy().into_owned(), fs::read(e.path())?))
        })
        .collect::<Result<_>>()?;
    files.sort();
    Ok(files)
}

/// Runs `cfg` twice into scratch directories and compares every output byte.
fn outputs_identical(cfg: &ExperimentConfig, opts: &VerifyOptions) -> Result<bool> {
    let scratch = std::env::temp_dir().join(format!("spraysim-determinism-{}", std::process::id()));
    let mut outputs = Vec::new();
    for (i, jobs) in [1, opts.jobs.max(2)].into_iter().enumerate() {
        let dir = scratch.join(i.to_string());
        let exp = cfg.prepare()?;
        let set = exp.run(jobs, None)?;
        write_run_set(&dir, &exp, &set)?;
        outputs.push(read_dir_bytes(&dir)?);
    }
    let _ = fs::remove_dir_all(&scratch);
    Ok(!outputs[0].is_empty() && outputs[0] == outputs[1])
}

fn ccdf_monotone(points: &[CcdfPoint]) -> bool {
    points.windows(2).all(|w| w[1].fct > w[0].fct && w[1].fraction_above <= w[0].fraction_above)
        && points.iter().all(|p| (0.0..=1.0).contains(&p.fraction_above))
}

fn median_oracle(samples: &[u64]) -> u64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        // Floor of the mean of the two middle values, without overflow.
        ((sorted[n / 2 - 1] as u128 + sorted[n / 2] as u128) / 2) as u64
    }
}

fn properties(opts: &VerifyOptions) -> Verdict {
    let mut failures = Vec::new();

    let configs = smoke_configs();
    if !outputs_identical(&configs[0], opts)? {
        failures.push("outputs differ between identical runs".to_string());
    }

    let mut runs = 0;
    for cfg in &configs {
        let exp = cfg.prepare()?;
        // `run_seed` rejects conservation, path-length and cwnd violations.
        let set = exp.run(opts.jobs, None)?;
        for r in &set.runs {
            runs += 1;
            if !r.report.packets.holds() {
                failures.push(format!("{} seed {}: packets not conserved", cfg.scenario.label(), r.seed));
            }
            let low = r.report.flows.iter().filter_map(|f| f.min_cwnd_seen).fold(f64::INFINITY, f64::min);
            if low < cfg.swift.min_cwnd {
                failures.push(format!("{} seed {}: cwnd fell to {low}", cfg.scenario.label(), r.seed));
            }
        }
        if !ccdf_monotone(&set.ccdf) {
            failures.push(format!("{}: ccdf not monotone", cfg.scenario.label()));
        }
    }

    let mut rng = RngStream::new(0x5eed, 7);
    for i in 0..10_000 {
        let len = 1 + rng.index(64);
        let samples: Vec<u64> = (0..len).map(|_| rng.below(1 << 40)).collect();
        let times: Vec<SimTime> = samples.iter().map(|&s| SimTime(s)).collect();
        if median(&times) != Some(SimTime(median_oracle(&samples))) {
            failures.push(format!("median mismatch on history {i}"));
            break;
        }
    }

    let table: [(HistoryPolicy, f64, usize); 7] = [
        (HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 }, 30.0, 10),
        (HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 }, 2.0, 3),
        (HistoryPolicy::BoundedWindow { alpha: 0.5, max_size: 10 }, 16.0, 8),
        (HistoryPolicy::WindowBased { alpha: 0.5 }, 41.0, 21),
        (HistoryPolicy::WindowBased { alpha: 0.5 }, 1.0, 3),
        (HistoryPolicy::Constant { size: 10 }, 500.0, 10),
        (HistoryPolicy::LatestOnly, 500.0, 1),
    ];
    for (policy, w, expected) in table {
        let got = history_size(policy, w);
        if got != expected {
            failures.push(format!("history size {policy:?} at W={w}: {got}, expected {expected}"));
        }
    }

    let passed = failures.is_empty();
    let detail = if passed {
        format!("determinism, conservation and cwnd floor over {runs} runs, 10000 median histories, history table, ccdf")
    } else {
        failures.join("; ")
    };
    Ok((passed, detail))
}
