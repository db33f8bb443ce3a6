mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use cgrg_core::verify::Suite;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cgrg", version, about = "Coloured random geometric graphs: sampling, measures, rate functions and checks")]
struct Cli {
    /// Worker threads for replica loops (default: all cores).
    #[arg(long, global = true, env = "CGRG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key by dotted path, e.g. `--set params.d=3`. Repeatable; later wins.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one graph and write it as JSON.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write an `i j` edge list.
        #[arg(long)]
        edge_list: Option<PathBuf>,
    },
    /// Empirical measures of a sample file, after consistency checks.
    Measure {
        sample: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a rate function.
    Rate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(subcommand)]
        kind: RateKind,
    },
    /// Run the replica experiment described by the config and write CSV tables.
    Experiment {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a named verification suite; exits 3 if any check fails.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Replica count, overriding the suite default.
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum RateKind {
    /// Pair/neighbourhood rate at (ϖ, μ).
    J {
        #[arg(long, required_unless_present = "typical")]
        varpi: Option<String>,
        #[arg(long, required_unless_present = "typical")]
        mu: Option<String>,
        /// Evaluate at the typical measures of the configured model.
        #[arg(long)]
        typical: bool,
    },
    /// Colour/pair rate at (ω, ϖ).
    I {
        #[arg(long, required_unless_present = "typical")]
        omega: Option<String>,
        #[arg(long, required_unless_present = "typical")]
        varpi: Option<String>,
        #[arg(long)]
        typical: bool,
    },
    /// Degree-distribution rate; `--delta` is a file, an inline JSON weight
    /// array or `poisson:λ`.
    Eta1 {
        #[arg(long)]
        delta: String,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Isolated-fraction rate.
    Xi1 {
        #[arg(long)]
        y: f64,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Edges-per-vertex rate.
    Zeta {
        #[arg(long)]
        x: f64,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite {s:?}; expected one of {}", names.join(", "))
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // a second build only fails if a pool exists already, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Generate { cfg, out, edge_list } => commands::generate(&cfg.load()?, &out, edge_list.as_deref()),
        Command::Measure { sample, out } => commands::measure(&sample, out.as_deref()),
        Command::Rate { cfg, kind } => commands::rate(&cfg.load()?, &kind),
        Command::Experiment { cfg, out_dir } => commands::experiment(&cfg.load()?, &out_dir),
        Command::Verify { suite, cfg, replicas, out } => commands::verify(suite, &cfg.load()?, replicas, out.as_deref()),
        Command::Config { cfg } => commands::print_json(&cfg.load()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
