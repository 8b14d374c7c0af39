//! `binsparx` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 configuration or input error,
//! 4 I/O or parse error, 5 validation failure, 6 solver non-convergence.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use binsparx::config::RunConfig;
use binsparx::devices::WirePreset;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "binsparx",
    version,
    about = "Crossbar non-ideality simulator with BinSparX sparsification"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Precedence is flag > file > default.
#[derive(Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Enable or disable BinSparX sparsification.
    #[arg(long, global = true, value_enum)]
    binsparx: Option<Toggle>,
    /// Disable every non-ideality (ideal counting path).
    #[arg(long, global = true)]
    ideal: bool,
    /// BL/SL routing metal layer.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Device ON current in amperes.
    #[arg(long, global = true)]
    ion: Option<f64>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Count non-convergent columns instead of aborting.
    #[arg(long, global = true)]
    best_effort: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true, env = "BINSPARX_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    M3,
    M4,
    M6,
}

impl From<Preset> for WirePreset {
    fn from(p: Preset) -> Self {
        match p {
            Preset::M3 => WirePreset::M3,
            Preset::M4 => WirePreset::M4,
            Preset::M6 => WirePreset::M6,
        }
    }
}

/// Dataset location: a CSV file, or an IDX image/label pair.
#[derive(Args, Clone)]
pub struct DataArgs {
    /// CSV dataset with rows `label,f1,f2,...`.
    #[arg(long, conflicts_with_all = ["images", "labels"])]
    dataset: Option<PathBuf>,
    /// IDX image file (pixels >= 128 map to +1).
    #[arg(long, requires = "labels")]
    images: Option<PathBuf>,
    /// IDX label file.
    #[arg(long, requires = "images")]
    labels: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the fast column solver with the dense nodal oracle.
    ValidateSolver {
        /// Random columns per (preset, ON current) case.
        #[arg(long, default_value_t = 1000)]
        columns: usize,
    },
    /// Ideal partial-sum histograms with BinSparX off and on.
    Profile {
        /// Model manifest; without it a uniform random workload is profiled.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Random (tile, activation) pairs for the synthetic workload
        /// [default: run.trials].
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Normalized deviation versus ON-cell count, x = 1..=n.
    Sweep {
        /// Trials per x [default: run.trials].
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run a model over a dataset on the simulated arrays.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Apply static weight sparsification and write the tile mapping.
    Sparsify {
        #[arg(long)]
        model: PathBuf,
        /// Random inputs per layer used to verify exactness.
        #[arg(long, default_value_t = 64)]
        probes: usize,
    },
}

impl Common {
    fn run_config(&self) -> binsparx::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(t) = self.binsparx {
            cfg.binsparx.enabled = matches!(t, Toggle::On);
        }
        if self.ideal {
            cfg.run.ideal = true;
        }
        if let Some(p) = self.preset {
            cfg.wire.preset = p.into();
            cfg.wire.r_bl_per_cell = None;
            cfg.wire.r_sl_per_cell = None;
        }
        if let Some(i) = self.ion {
            cfg.device.i_on = i;
            cfg.device.i_hrs = None;
            cfg.device.i_off = None;
        }
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if self.best_effort {
            cfg.solver.best_effort = true;
        }
        if let Some(t) = self.threads {
            cfg.run.threads = t;
        }
        if let Some(d) = &self.output_dir {
            cfg.run.output_dir = d.clone();
        }
        let cfg = cfg.resolved();
        // surface bad values before any work starts
        cfg.engine_config()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli
        .common
        .run_config()
        .map_err(commands::Failure::from)
        .and_then(|cfg| {
            binsparx::par::configure_threads(cfg.run.threads)
                .map_err(|e| commands::Failure::Core(binsparx::Error::Config(e)))?;
            match cli.command {
                Command::ValidateSolver { columns } => {
                    commands::validate_solver(&cfg, &cli.common, columns)
                }
                Command::Profile { model, data, pairs } => {
                    commands::profile(&cfg, model.as_deref(), &data, pairs)
                }
                Command::Sweep { trials } => commands::sweep(&cfg, trials),
                Command::Infer { model, data } => commands::infer(&cfg, &model, &data),
                Command::Sparsify { model, probes } => commands::sparsify(&cfg, &model, probes),
            }
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
