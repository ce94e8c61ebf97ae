//! `bubbletree` command-line interface.

mod config;
mod kappa;
mod output;
mod regress;
mod simulate;
mod uncertainty;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Key, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] bubbletree::Error),
    #[error("config key `{key}` = `{value}`: {reason}")]
    Config { key: String, value: String, reason: String },
    #[error("{}:{line}: {reason}", path.display())]
    ConfigFile { path: PathBuf, line: usize, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot start {threads} worker threads: {reason}")]
    Threads { threads: usize, reason: String },
}

fn keys_help(keys: &[Key]) -> String {
    let mut out = String::from("Config keys (key = default: description):\n");
    for k in keys {
        let _ = writeln!(out, "  {} = {}: {}", k.name, k.default, k.help);
    }
    out
}

#[derive(Parser)]
#[command(name = "bubbletree", version, about = "Binary-tree price model, bubble ratio estimation and the uncertainty product")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed for random draws
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Directory for output files
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Flat `key = value` config file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the tree and compare the ensemble with closed forms
    #[command(after_long_help = keys_help(simulate::KEYS))]
    Simulate(SimulateArgs),
    /// Estimate kappa per ticker under each benchmark mode
    #[command(after_long_help = keys_help(kappa::KEYS))]
    Kappa(KappaArgs),
    /// Cross-sectional regressions of kappa
    #[command(after_long_help = keys_help(regress::KEYS))]
    Regress(RegressArgs),
    /// Commutator check and uncertainty products of densities
    #[command(after_long_help = keys_help(uncertainty::KEYS))]
    Uncertainty(UncertaintyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n_steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dividend: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    paths: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sample_paths: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    checkpoints: Option<String>,
}

#[derive(Args)]
struct KappaArgs {
    #[arg(long, allow_hyphen_values = true)]
    prices: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    universe: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    modes: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    returns: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mad_center: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    density_points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    bandwidth: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cap_date: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    book_date: Option<String>,
}

#[derive(Args)]
struct RegressArgs {
    #[arg(long, allow_hyphen_values = true)]
    universe: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    prices: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    specs: Option<String>,
    /// Regress ln(kappa) on tickers with kappa > 0
    #[arg(long)]
    log_kappa: bool,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    returns: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cap_date: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    book_date: Option<String>,
}

#[derive(Args)]
struct UncertaintyArgs {
    #[arg(long, allow_hyphen_values = true)]
    densities: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    density_csv: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    commutator_paths: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    commutator_steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    commutator_tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    commutator_mu: Option<String>,
}

type Flags = Vec<(&'static str, Option<String>)>;

fn flags(cmd: Command) -> (&'static str, &'static [Key], Flags) {
    match cmd {
        Command::Simulate(a) => (
            "simulate",
            simulate::KEYS,
            vec![
                ("sigma", a.sigma),
                ("mu", a.mu),
                ("nu", a.nu),
                ("tau", a.tau),
                ("n_steps", a.n_steps),
                ("s0", a.s0),
                ("dividend", a.dividend),
                ("paths", a.paths),
                ("sample_paths", a.sample_paths),
                ("checkpoints", a.checkpoints),
            ],
        ),
        Command::Kappa(a) => (
            "kappa",
            kappa::KEYS,
            vec![
                ("prices", a.prices),
                ("universe", a.universe),
                ("modes", a.modes),
                ("start", a.start),
                ("end", a.end),
                ("returns", a.returns),
                ("mad_center", a.mad_center),
                ("density_points", a.density_points),
                ("bandwidth", a.bandwidth),
                ("cap_date", a.cap_date),
                ("book_date", a.book_date),
            ],
        ),
        Command::Regress(a) => (
            "regress",
            regress::KEYS,
            vec![
                ("universe", a.universe),
                ("kappa", a.kappa),
                ("prices", a.prices),
                ("specs", a.specs),
                ("log_kappa", a.log_kappa.then(|| "true".to_owned())),
                ("start", a.start),
                ("end", a.end),
                ("returns", a.returns),
                ("cap_date", a.cap_date),
                ("book_date", a.book_date),
            ],
        ),
        Command::Uncertainty(a) => (
            "uncertainty",
            uncertainty::KEYS,
            vec![
                ("densities", a.densities),
                ("density_csv", a.density_csv),
                ("points", a.points),
                ("commutator_paths", a.commutator_paths),
                ("commutator_steps", a.commutator_steps),
                ("commutator_tau", a.commutator_tau),
                ("commutator_mu", a.commutator_mu),
            ],
        ),
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(threads) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Threads {
                threads,
                reason: e.to_string(),
            })?;
    }
    let (name, keys, mut flags) = flags(cli.command);
    flags.push(("seed", cli.common.seed));
    let settings = Settings::resolve(name, keys, cli.common.config.as_deref(), flags)?;
    let out = &cli.common.out_dir;
    match settings.command() {
        "simulate" => simulate::run(&settings, out),
        "kappa" => kappa::run(&settings, out),
        "regress" => regress::run(&settings, out),
        _ => uncertainty::run(&settings, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
