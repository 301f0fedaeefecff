//! `unfold`: deterministic experiment runner emitting CSV reports.

mod experiments;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use experiments::{Context, Options, Registry};
use settings::Settings;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Invalid invocation or configuration; exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "unfold", version, about = "Unrolled change/nuisance decomposition experiments")]
struct Cli {
    /// Seed for every generated instance and initialisation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the CSV report and any extra files (stdout otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `name = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set iterations=10`.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ParamsArg {
    /// Fitted parameter file written by `unfold fit`.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Changed vs unchanged patch SVE per solver step.
    SvePrior(ParamsArg),
    /// Normalised mismatch scores and step ratios.
    Contraction {
        #[command(flatten)]
        params: ParamsArg,
        /// Comma-separated scores r^1..r^K to analyse instead of running the solver.
        #[arg(long, value_delimiter = ',')]
        replay: Option<Vec<f64>>,
        /// Use zero operators and bypassed memory instead of a parameter file.
        #[arg(long)]
        null_params: bool,
    },
    /// Eight-way on/off ablation of gating, alignment and regulariser.
    Ablation,
    /// Fit and evaluate for K = 0..=k_max.
    KSweep {
        /// Add a wall-time column (not reproducible across runs).
        #[arg(long)]
        timing: bool,
    },
    /// Regulariser hyperparameter sweep around a baseline.
    Sensitivity(ParamsArg),
    /// Fit parameters; writes params.txt and the loss curve.
    Fit,
    /// Write one synthetic instance as tensor files.
    Gen,
    /// Run the fast invariant suite.
    Check,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SvePrior(_) => "sve-prior",
            Command::Contraction { .. } => "contraction",
            Command::Ablation => "ablation",
            Command::KSweep { .. } => "k-sweep",
            Command::Sensitivity(_) => "sensitivity",
            Command::Fit => "fit",
            Command::Gen => "gen",
            Command::Check => "check",
        }
    }

    fn options(&self) -> Options {
        let mut o = Options::default();
        match self {
            Command::SvePrior(p) | Command::Sensitivity(p) => o.params = p.params.clone(),
            Command::Contraction { params, replay, null_params } => {
                o.params = params.params.clone();
                o.replay = replay.clone();
                o.null_params = *null_params;
            }
            Command::KSweep { timing } => o.timing = *timing,
            _ => {}
        }
        o
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
    Other(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        if let Some(u) = e.downcast_ref::<UsageError>() {
            return Failure::Usage(u.0.clone());
        }
        match e.downcast_ref::<unfold_core::Error>() {
            Some(unfold_core::Error::Divergence { .. } | unfold_core::Error::NonFinite { .. }) => {
                Failure::Numerical(e.to_string())
            }
            Some(unfold_core::Error::Config(_) | unfold_core::Error::Format(_)) => Failure::Usage(e.to_string()),
            _ => Failure::Other(format!("{e:#}")),
        }
    }
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    let mut settings = Settings::load(cli.config.as_deref(), cli.seed)?;
    for s in &cli.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--set expects NAME=VALUE, got '{s}'")))?;
        settings.set(k.trim(), v.trim())?;
    }
    let registry = Registry::default();
    let name = cli.command.name();
    let experiment = registry
        .get(name)
        .ok_or_else(|| {
            let known: Vec<&str> = registry.names().copied().collect();
            UsageError(format!("no experiment registered as '{name}' (known: {})", known.join(", ")))
        })?;
    let options = cli.command.options();
    if experiment.needs_seed(&options) {
        settings.require_seed()?;
    }
    let ctx = Context {
        settings,
        out: cli.out.clone(),
        options,
    };
    let report = experiment.run(&ctx)?;
    let seed = ctx.settings.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
    let csv = format!(
        "# unfold {VERSION} command={name} seed={seed} config={}\n{}",
        ctx.settings.hash(),
        report.csv
    );
    match &ctx.out {
        Some(dir) => {
            let io = |e: std::io::Error| Failure::Other(format!("cannot write to {}: {e}", dir.display()));
            std::fs::create_dir_all(dir).map_err(io)?;
            std::fs::write(dir.join(format!("{name}.csv")), csv).map_err(io)?;
            for (file, bytes) in &report.files {
                std::fs::write(dir.join(file), bytes).map_err(io)?;
            }
        }
        None => print!("{csv}"),
    }
    Ok(!report.failed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("unfold: one or more checks failed");
            ExitCode::from(2)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("unfold: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("unfold: numerical failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Other(m)) => {
            eprintln!("unfold: {m}");
            ExitCode::from(1)
        }
    }
}
