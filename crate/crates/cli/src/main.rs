mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Family, Mode, Overrides, OUT_ENV};

const EXIT_HELP: &str = "\
Exit codes:
  0  success, all gates passed
  1  invalid configuration or command line
  2  I/O failure
  3  a statistical gate failed
  4  any other runtime error

Output goes to --out, else the config's `output`, else $RESTIR_OUT_DIR/<mode>,
else ./restir-out/<mode>. The resolved config is written there as config.json.";

#[derive(Parser)]
#[command(name = "restir", version, about = "Reservoir resampling renderer and experiments", after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a frame sequence and write PPM, PFM and sample-id maps.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<RenderKind>,
    },
    /// Covariance, duplicate and MSE statistics over a rendered ensemble.
    Metrics {
        #[command(flatten)]
        common: Common,
    },
    /// Experiments on analytic one-dimensional targets.
    Testbed {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderKind {
    Di,
    Path,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Unbiasedness,
    TwoPixel,
    Chain,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Gate(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Io(_) => 2,
            Failure::Gate(_) => 3,
            Failure::Other(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::Gate(m) => write!(f, "gate failed: {m}"),
            Failure::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<restir_core::Error> for Failure {
    fn from(e: restir_core::Error) -> Self {
        use restir_core::Error as E;
        match e {
            E::Config { .. } | E::Scene(_) | E::Json(_) => Failure::Config(e.to_string()),
            E::Io(_) | E::ImageFormat { .. } | E::DimensionMismatch(..) => Failure::Io(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let (common, family, mode) = match cli.command {
        Command::Render { common, mode } => (
            common,
            Family::Render,
            mode.map(|m| match m {
                RenderKind::Di => Mode::RenderDi,
                RenderKind::Path => Mode::RenderPath,
            }),
        ),
        Command::Metrics { common } => (common, Family::Metrics, None),
        Command::Testbed { common, experiment } => (
            common,
            Family::Testbed,
            experiment.map(|e| match e {
                Experiment::Unbiasedness => Mode::TestbedUnbiasedness,
                Experiment::TwoPixel => Mode::TestbedTwoPixel,
                Experiment::Chain => Mode::TestbedChain,
            }),
        ),
    };
    let over = Overrides {
        mode,
        seed: common.seed,
        threads: common.threads,
        out: common.out,
    };
    let env_root = std::env::var_os(OUT_ENV).map(PathBuf::from);
    let cfg = config::load(common.config.as_deref())?.resolve(family, &over, env_root)?;
    if common.print_config {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        // a closed pipe on stdout is not an error worth reporting
        let _ = writeln!(std::io::stdout(), "{text}");
        return Ok(());
    }
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    run::run(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("restir: {f}");
            ExitCode::from(f.code())
        }
    }
}
