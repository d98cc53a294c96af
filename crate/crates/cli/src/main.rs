use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spraysim::experiment::{
    model_compare, model_curves, run_to_dir, sweep, write_csv_rows, write_model_compare, write_sweep,
    ExperimentConfig, SweepAxis,
};
use spraysim::verify::{self, VerifyOptions, MODEL_RADICES};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Path counts of the default model curves: the square numbers of fat trees up to radix 32.
const CURVE_PATHS: [u32; 8] = [4, 9, 16, 25, 64, 100, 144, 256];

#[derive(Parser)]
#[command(name = "spraysim", version, about = "Datacenter congestion-control simulator and throughput models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Overrides the config's first seed.
    #[arg(long)]
    seed_base: Option<u64>,
    /// Seeds simulated in parallel.
    #[arg(long, short, default_value_t = default_jobs())]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of one experiment.
    Run {
        #[command(flatten)]
        common: Common,
        /// Write one event trace per seed under `traces/`.
        #[arg(long)]
        trace: bool,
        /// Write the cwnd and delay series of tracked flows.
        #[arg(long)]
        cwnd_series: bool,
    },
    /// Repeat an experiment for each value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// history_size, alpha, k, radix_k or elephant_count.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Compare a model-verification experiment with the analytical model across radices.
    ModelCompare {
        #[command(flatten)]
        common: Common,
        /// Fat-tree radices to simulate.
        #[arg(long, value_delimiter = ',', default_values_t = MODEL_RADICES)]
        values: Vec<u32>,
    },
    /// Evaluate the closed-form and numerical models over path counts.
    Curves {
        /// Output CSV file.
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = CURVE_PATHS)]
        values: Vec<u32>,
    },
    /// Dump the fat tree of a config as JSON.
    Topology {
        #[arg(long, short)]
        config: PathBuf,
        /// Output JSON file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the built-in acceptance checks.
    Verify {
        #[arg(long, short, default_value_t = default_jobs())]
        jobs: usize,
        /// Only these criteria (1-11).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn default_jobs() -> usize {
    VerifyOptions::default().jobs
}

fn load(common: &Common) -> spraysim::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed_base {
        cfg.seed_base = seed;
    }
    // Surface config errors before any output exists.
    cfg.prepare()?;
    Ok(cfg)
}

fn execute(command: Command) -> spraysim::Result<bool> {
    match command {
        Command::Run { common, trace, cwnd_series } => {
            let mut cfg = load(&common)?;
            cfg.output.trace |= trace;
            cfg.output.cwnd_series |= cwnd_series;
            let set = run_to_dir(&cfg, &common.out, common.jobs)?;
            let p = &set.pooled;
            println!(
                "{}: {} runs, {}/{} flows completed, mean {:.2} Gbps, p99 FCT {:.1} us",
                cfg.name,
                p.runs,
                p.completed,
                p.flows,
                p.mean_throughput_bps / 1e9,
                p.fct_p99.as_us_f64()
            );
        }
        Command::Sweep { common, axis, values } => {
            let cfg = load(&common)?;
            let points = sweep(&cfg, axis, &values, common.jobs)?;
            write_sweep(&common.out, &points)?;
            for p in &points {
                println!(
                    "{}: mean {:.2} Gbps, p99 FCT {:.1} us",
                    p.key,
                    p.set.pooled.mean_throughput_bps / 1e9,
                    p.set.pooled.fct_p99.as_us_f64()
                );
            }
        }
        Command::ModelCompare { common, values } => {
            let cfg = load(&common)?;
            let rows = model_compare(&cfg, &values, common.jobs)?;
            write_model_compare(&common.out.join("model_compare.csv"), &rows)?;
            for r in &rows {
                println!(
                    "k={} paths={} simulated {:.2} Gbps, {} model {:.2} Gbps, error {:+.1}%",
                    r.radix_k,
                    r.paths,
                    r.simulated_bps / 1e9,
                    r.model,
                    r.model_bps / 1e9,
                    r.relative_error * 100.0
                );
            }
        }
        Command::Curves { out, values } => {
            write_csv_rows(&out, &model_curves(&values)?)?;
        }
        Command::Topology { config, out } => {
            let exp = ExperimentConfig::load(&config)?.prepare()?;
            let json = exp.topology.to_json()?;
            match out {
                Some(path) => write_file(&path, &json)?,
                None => println!("{json}"),
            }
        }
        Command::Verify { jobs, only } => {
            let opts = VerifyOptions { jobs };
            let outcomes = if only.is_empty() {
                verify::run_all(&opts)
            } else {
                only.iter().map(|&id| verify::check(id, &opts)).collect::<spraysim::Result<_>>()?
            };
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn write_file(path: &Path, text: &str) -> spraysim::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_RUNTIME })
        }
    }
}

