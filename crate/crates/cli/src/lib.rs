//! Command-line runner: resolve a config, run one computation, write
//! `result.csv` and `report.md` into the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod payoff;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::commands::{compute, Outcome};
use crate::config::{CommandKind, Overrides, RunConfig};
use crate::error::{config_err, CliError};

#[derive(Debug, Parser)]
#[command(name = "ambigil", version, about = "Exact sub-linear expectation experiments on lattice models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; see docs/config.md.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for result.csv and report.md.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core, 1 runs the sequential engine.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Largest DP state count allowed before the run stops with exit code 3.
    #[arg(long)]
    pub state_cap: Option<u64>,
    /// Model file, overriding the config.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upper and lower expectation of a payoff of the terminal sum.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        payoff: Option<String>,
    },
    /// Exact capacities of window events, with optional Monte Carlo cross-checks.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Exponential inequality sweep or converse rate table.
    BoundsVerify {
        #[command(flatten)]
        common: Common,
        /// `domination` or `converse`.
        #[arg(long)]
        check: Option<String>,
        #[arg(long)]
        cases: Option<usize>,
    },
    /// G-normal tails, or lattice sums against them when `--n` is given.
    Gnormal {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        sigma_lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        sigma_hi: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Iterated-logarithm condition checks and finite-window experiments.
    Lil {
        #[command(flatten)]
        common: Common,
        /// `conditions`, `upper` or `lower`.
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps: Vec<f64>,
        /// `upper-mean`, `lower-mean` or `none`.
        #[arg(long)]
        center: Option<String>,
    },
    /// Borel-Cantelli product identity on event families.
    Bc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        families: Option<usize>,
        #[arg(long)]
        max_horizon: Option<usize>,
    },
    /// Report-only probes: `cluster`, `continuity` or `conjecture`.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: Option<String>,
        /// Window ends for the cluster probe.
        #[arg(long = "end", value_delimiter = ',')]
        end: Vec<usize>,
    },
}

/// Params map built from the flags that were given.
#[derive(Default)]
struct Params(Map<String, Value>);

impl Params {
    fn set<T: Serialize>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.0.insert(key.to_string(), serde_json::to_value(v).expect("flag serializes"));
        }
    }

    /// One value stays a scalar; several become a list.
    fn list<T: Serialize>(&mut self, key: &str, v: Vec<T>) {
        match v.len() {
            0 => {}
            1 => self.set(key, v.into_iter().next()),
            _ => self.set(key, Some(v)),
        }
    }

    fn nested(&mut self, outer: &str, inner: Params) {
        if !inner.0.is_empty() {
            self.0.insert(outer.to_string(), Value::Object(inner.0));
        }
    }
}

impl Command {
    fn split(self) -> (CommandKind, Common, Map<String, Value>) {
        let mut p = Params::default();
        let (kind, common) = match self {
            Command::Eval { common, payoff } => {
                p.set("payoff", payoff);
                (CommandKind::Eval, common)
            }
            Command::Capacity { common, strategy, replications } => {
                let mut mc = Params::default();
                mc.set("strategy", strategy);
                mc.set("replications", replications);
                p.nested("mc", mc);
                (CommandKind::Capacity, common)
            }
            Command::BoundsVerify { common, check, cases } => {
                p.set("check", check);
                p.set("cases", cases);
                (CommandKind::BoundsVerify, common)
            }
            Command::Gnormal { common, sigma_lo, sigma_hi, x, n, h } => {
                p.set("sigma_lo", sigma_lo);
                p.set("sigma_hi", sigma_hi);
                p.list("x", x);
                p.list("n", n);
                p.set("h", h);
                (CommandKind::Gnormal, common)
            }
            Command::Lil { common, experiment, eps, center } => {
                p.set("experiment", experiment);
                p.list("eps", eps);
                p.set("center", center);
                (CommandKind::Lil, common)
            }
            Command::Bc { common, families, max_horizon } => {
                p.set("families", families);
                p.set("max_horizon", max_horizon);
                (CommandKind::Bc, common)
            }
            Command::Probe { common, kind, end } => {
                p.set("kind", kind);
                p.list("N", end);
                (CommandKind::Probe, common)
            }
        };
        (kind, common, p.0)
    }
}

/// Files written by a successful run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub report: PathBuf,
    pub outcome: Outcome,
}

/// Resolve, compute, then write both files. Nothing is written unless the
/// computation succeeds.
pub fn execute(kind: CommandKind, common: &Common, params: Map<String, Value>) -> Result<RunOutput, CliError> {
    let over = Overrides {
        model: common.model.clone(),
        seed: common.seed,
        workers: common.workers,
        state_cap: common.state_cap,
        params,
    };
    let cfg = RunConfig::resolve(kind, common.config.as_deref(), over)?;
    if common.out.exists() && !common.out.is_dir() {
        return Err(config_err(format!("output path {} is not a directory", common.out.display())));
    }
    let start = Instant::now();
    let outcome = ambigil_core::with_workers(cfg.workers, || compute(&cfg))?;
    let report = report::render(&cfg, &outcome, start.elapsed());
    write_outputs(&common.out, &outcome, &report)
}

fn write_outputs(dir: &Path, outcome: &Outcome, report: &str) -> Result<RunOutput, CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let csv = dir.join("result.csv");
    let md = dir.join("report.md");
    std::fs::write(&csv, outcome.table.to_csv()).map_err(io(&csv))?;
    std::fs::write(&md, report).map_err(io(&md))?;
    Ok(RunOutput { csv, report: md, outcome: outcome.clone() })
}

/// Parse `args` (program name first), run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if matches!(e.kind(), ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand) {
                let names: Vec<&str> = CommandKind::ALL.iter().map(|c| c.name()).collect();
                eprintln!("error: unknown or missing command; valid commands are: {}", names.join(", "));
            } else {
                let _ = e.print();
            }
            return code;
        }
    };
    let (kind, common, params) = cli.command.split();
    match execute(kind, &common, params) {
        Ok(out) => {
            eprintln!("wrote {} and {}", out.csv.display(), out.report.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
