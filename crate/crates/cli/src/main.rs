use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fexbar_cli::config::{load, resolve, ExperimentKind};
use fexbar_cli::{run, CliError};

#[derive(Parser)]
#[command(name = "fexbar", version, about = "FeFET crossbar weight-cell experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved config before running
    #[arg(long, global = true)]
    echo_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the experiment named in the config
    Run,
    /// Capacitor P-V loop under a triangle drive
    Hysteresis,
    /// Program/erase transient of one FeFET
    ProgramErase,
    /// Program window versus FeCap area
    AreaSweep,
    /// Current-voltage curves of one weight cell per code
    CellIv,
    /// Program, read back and infer a small crossbar
    Weights,
    /// Train float networks and save their weights
    Train,
    /// Quantized accuracy with optimized windows
    QuantizeEval,
    /// Accuracy under conductance noise
    NoiseMc,
    /// Hardware-aware regularization selection
    HwReg,
}

impl Command {
    fn kind(self) -> Option<ExperimentKind> {
        Some(match self {
            Self::Run => return None,
            Self::Hysteresis => ExperimentKind::Hysteresis,
            Self::ProgramErase => ExperimentKind::ProgramErase,
            Self::AreaSweep => ExperimentKind::AreaSweep,
            Self::CellIv => ExperimentKind::CellIv,
            Self::Weights => ExperimentKind::Weights,
            Self::Train => ExperimentKind::Train,
            Self::QuantizeEval => ExperimentKind::QuantizeEval,
            Self::NoiseMc => ExperimentKind::NoiseMc,
            Self::HwReg => ExperimentKind::HwReg,
        })
    }
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let kind = cli.command.kind();
    let cfg = match &cli.config {
        Some(path) => load(path, kind, cli.seed)?,
        None => resolve(toml::Table::new(), kind, cli.seed)?,
    };
    if cli.echo_config {
        print!("{}", cfg.to_toml());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    run(&cfg, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
