use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divlab::CountAlgo;
use divlab_cli::{run_experiment, CliError, ExperimentConfig, ExperimentKind, RunOptions};

/// Experiments on the error terms of the Dirichlet–Piltz divisor problem.
#[derive(Parser)]
#[command(name = "divlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration file.
    Run {
        config: PathBuf,
        /// Replace corrupt cached tables instead of failing.
        #[arg(long)]
        rebuild_cache: bool,
        /// Print the parsed configuration and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Build (or load) a cached d_k table.
    Sieve(Flags),
    /// Evaluate Δ_k at the given points.
    Delta(Flags),
    /// Truncation error of the Voronoï series.
    Voronoi(Flags),
    /// Normalised moments ∫ Δ_k^m.
    Moments(Flags),
    /// Fourth moments over [X − H, X + H] and interval averages.
    ShortInterval(Flags),
    /// Count tuples with nearly cancelling root sums.
    Count(Flags),
    /// Scan for large values of Δ_k.
    Omega(Flags),
    /// Short-interval divisor sums.
    Shiu(Flags),
}

#[derive(Args, Clone)]
struct Flags {
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    l: Option<u32>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Windows δ = N^{-p}.
    #[arg(long, value_delimiter = ',')]
    delta_power: Vec<f64>,
    #[arg(long)]
    limit: Option<u64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, value_parser = parse_algo)]
    algo: Option<CountAlgo>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rebuild_cache: bool,
    /// Print the configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

fn parse_algo(s: &str) -> Result<CountAlgo, String> {
    match s {
        "naive" => Ok(CountAlgo::Naive),
        "sorted-window" => Ok(CountAlgo::SortedWindow),
        _ => Err(format!("unknown algorithm `{s}` (naive, sorted-window)")),
    }
}

impl Flags {
    fn into_config(self, kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind);
        if let Some(seed) = self.seed {
            c.experiment.seed = seed;
        }
        let p = &mut c.params;
        p.k = self.k;
        p.m = self.m;
        p.l = self.l;
        p.x = self.x;
        p.h = self.h;
        p.n = self.n;
        p.delta = self.delta;
        p.delta_power = self.delta_power;
        p.limit = self.limit;
        p.order = self.order;
        p.samples = self.samples;
        p.top = self.top;
        p.algo = self.algo;
        p.budget = self.budget;
        if let Some(dir) = self.cache_dir {
            c.paths.cache_dir = dir;
        }
        if let Some(out) = self.out {
            c.paths.out = out;
        }
        c
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (config, opts, dump) = match cli.command {
        Command::Run {
            config,
            rebuild_cache,
            dump_config,
        } => match ExperimentConfig::load(&config) {
            Ok(c) => (c, RunOptions { rebuild_cache }, dump_config),
            Err(e) => return fail(&CliError::Validation(e)),
        },
        other => {
            let (kind, flags) = match other {
                Command::Sieve(f) => (ExperimentKind::Sieve, f),
                Command::Delta(f) => (ExperimentKind::Delta, f),
                Command::Voronoi(f) => (ExperimentKind::Voronoi, f),
                Command::Moments(f) => (ExperimentKind::Moments, f),
                Command::ShortInterval(f) => (ExperimentKind::ShortInterval, f),
                Command::Count(f) => (ExperimentKind::Count, f),
                Command::Omega(f) => (ExperimentKind::Omega, f),
                Command::Shiu(f) => (ExperimentKind::Shiu, f),
                Command::Run { .. } => unreachable!(),
            };
            let opts = RunOptions {
                rebuild_cache: flags.rebuild_cache,
            };
            let dump = flags.dump_config;
            (flags.into_config(kind), opts, dump)
        }
    };
    if dump {
        print!("{}", config.to_toml());
        return ExitCode::SUCCESS;
    }
    match run_experiment(&config, opts) {
        Ok(outcome) => {
            for p in &outcome.csv_paths {
                println!("{}", p.display());
            }
            println!("{}", outcome.json_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
