use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rieszlab::optimizer::Depth;
use rieszlab_cli::{cmd_report, cmd_solve, cmd_sweep, write_json, CliError, ExperimentConfig, SetSource};

#[derive(Parser)]
#[command(name = "rieszlab", version, about = "Minimal Riesz energy experiments on fractals, segments and their unions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single N.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
    },
    /// Solve a range of N, reusing the cache, and write trace.csv,
    /// trace.json and summary.json.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Re-solve N values that are already cached.
        #[arg(long)]
        force: bool,
    },
    /// Summarize trace files; with component traces of a union, predict the
    /// split fractions.
    Report {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in set, used when no configuration file is given.
    #[arg(long, default_value = "example-union")]
    preset: String,
    #[arg(long)]
    s: Option<f64>,
    /// Fractal address depth: a positive integer or `auto`.
    #[arg(long)]
    depth: Option<Depth>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let s = self
                    .s
                    .ok_or_else(|| CliError::Validation("--s is required without --config".into()))?;
                ExperimentConfig::new(SetSource::Preset(self.preset.clone()), s)
            }
        };
        if let Some(s) = self.s {
            config.s = s;
        }
        if let Some(depth) = self.depth {
            config.search.depth = depth;
        }
        if let Some(r) = self.restarts {
            config.search.restarts = r;
        }
        if let Some(seed) = self.seed {
            config.search.seed = seed;
        }
        config.deterministic |= self.deterministic;
        if self.cache.is_some() {
            config.cache = self.cache.clone();
        }
        if self.out.is_some() {
            config.out = self.out.clone();
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { common, n } => {
            let config = common.resolve()?;
            let out = cmd_solve(&config, n)?;
            println!(
                "N={} E={} G={} N1={} N2={} status={}",
                out.n,
                out.energy,
                out.g,
                out.n1,
                out.n2,
                out.status.as_str()
            );
        }
        Command::Sweep {
            common,
            n_min,
            n_max,
            force,
        } => {
            let mut config = common.resolve()?;
            if let Some(n) = n_min {
                config.n_min = n;
            }
            if let Some(n) = n_max {
                config.n_max = n;
            }
            let (summary, files) = cmd_sweep(&config, force)?;
            println!(
                "solved {} N, reused {}, stabilized {}; wrote {}",
                summary.solved.len(),
                summary.reused.len(),
                summary.stabilized.len(),
                files.csv.display()
            );
        }
        Command::Report { traces, out } => {
            let report = cmd_report(&traces)?;
            match out {
                Some(path) => write_json(&path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
