//! `quadps`: gap evaluation, grid sweeps, spectral flow, truncation studies and
//! localized states from the command line.

mod config;
mod run;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadps::models::{LatticeModelSpec, ModelKind};
use quadps::sweep::FlowOperator;
use quadps::GapKind;

use config::{Command, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit status 2.
    Validation(String),
    /// Solver or numerical failure; exit status 3.
    Numerical(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<quadps::Error> for CliError {
    fn from(e: quadps::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "quadps", version, about = "Quadratic and Clifford pseudospectra of Hermitian observables")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// ssh, ssh-path, class-d-chain, chern2d, explicit, or example:NAME.
    #[arg(long)]
    model: Option<String>,
    /// Model description, JSON or `key = value` lines.
    #[arg(long, value_name = "FILE")]
    model_file: Option<PathBuf>,
    /// Model parameter override, e.g. `--set size_x=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Matrix file for an explicit model, one per observable in order.
    #[arg(long = "matrix", value_name = "FILE")]
    matrices: Vec<PathBuf>,
}

#[derive(Args, Clone)]
struct Common {
    /// Probe point, comma separated, in unscaled units.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative accuracy of iterative solves (overrides QUADPS_ACCURACY).
    #[arg(long)]
    accuracy: Option<f64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Gap at a single probe point.
    Gap {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: Option<GapKind>,
        /// Both gaps and the commutator bound.
        #[arg(long)]
        both: bool,
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Gap over a grid of probe points; writes gap.csv, gap.pgm, gap.json.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        /// Axes as `name=min:max[:count]`, comma separated (x, y, z, E or an index).
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        kind: Option<GapKind>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Threshold for the ε-pseudospectrum summary and pruning.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Skip cells certified above ε by the Lipschitz bound.
        #[arg(long)]
        pruning: bool,
    },
    /// Spectra along a model path; writes flow.csv, flow.json.
    Flow {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        /// quadratic, localizer or reduced.
        #[arg(long)]
        operator: Option<FlowOperator>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Localized states for one or more κ; writes states.json and per-κ CSVs.
    States {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        kappa: Vec<f64>,
    },
    /// Truncated gaps with certificates for a ladder of radii.
    Truncate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Also compute the untruncated gap.
        #[arg(long)]
        reference: bool,
    },
    /// List the built-in models.
    Examples {
        #[arg(long)]
        json: bool,
    },
    /// Run a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn model_spec(args: &ModelArgs) -> Result<LatticeModelSpec, CliError> {
    let mut spec = if let Some(path) = &args.model_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            LatticeModelSpec::from_json(&text)?
        } else {
            LatticeModelSpec::from_key_values(&text)?
        }
    } else if let Some(name) = &args.model {
        LatticeModelSpec::from_name(name)?
    } else if !args.matrices.is_empty() {
        LatticeModelSpec::new(ModelKind::Explicit)
    } else {
        return Err(CliError::validation("a model is required (--model, --model-file or --matrix)"));
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        spec.set(k.trim(), v.trim())?;
    }
    spec.explicit_matrices.extend(args.matrices.iter().cloned());
    Ok(spec)
}

fn base_config(model: &ModelArgs, common: &Common, command: Command) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(model_spec(model)?, command);
    cfg.lambda = common.lambda.clone();
    cfg.output = common.out.clone();
    cfg.accuracy = common.accuracy;
    Ok(cfg)
}

fn to_config(sub: Sub) -> Result<Option<RunConfig>, CliError> {
    let cfg = match sub {
        Sub::Gap {
            model,
            common,
            kind,
            both,
            kappa,
        } => {
            let mut c = base_config(&model, &common, Command::Gap)?;
            c.kind = kind;
            c.both = both;
            c.kappa = kappa;
            c
        }
        Sub::Sweep {
            model,
            common,
            grid,
            kind,
            kappa,
            epsilon,
            pruning,
        } => {
            let mut c = base_config(&model, &common, Command::Sweep)?;
            c.grid = Some(grid);
            c.kind = kind;
            c.kappa = kappa;
            c.epsilon = epsilon;
            c.pruning = pruning;
            c
        }
        Sub::Flow {
            model,
            common,
            operator,
            samples,
        } => {
            let mut c = base_config(&model, &common, Command::Flow)?;
            c.operator = operator;
            c.samples = samples;
            c
        }
        Sub::States { model, common, kappa } => {
            let mut c = base_config(&model, &common, Command::States)?;
            c.kappas = kappa;
            c
        }
        Sub::Truncate {
            model,
            common,
            rho,
            kappa,
            reference,
        } => {
            let mut c = base_config(&model, &common, Command::Truncate)?;
            c.rhos = rho;
            c.kappa = kappa;
            c.reference = reference;
            c
        }
        Sub::Examples { json } => {
            // a closed pipe (`quadps examples | head`) is not an error
            let _ = writeln!(std::io::stdout(), "{}", run::examples_listing(json));
            return Ok(None);
        }
        Sub::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::validation(format!("cannot read {}: {e}", config.display())))?;
            RunConfig::from_json(&text)?
        }
    };
    Ok(Some(cfg))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(e.to_string()))?;
    }
    let Some(cfg) = to_config(cli.command)? else {
        return Ok(());
    };
    let outcome = run::run(&cfg)?;
    let _ = writeln!(std::io::stdout(), "{}", outcome.summary);
    for f in &outcome.files {
        log::info!("wrote {}", f.display());
    }
    if outcome.partial {
        return Err(CliError::Numerical("sweep finished with failed cells; outputs are marked partial".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quadps: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
