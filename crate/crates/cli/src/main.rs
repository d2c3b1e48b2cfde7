mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigArgs, GridDefaults, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "phasecat", version, about = "Catastrophe families, scattering transforms and phase reconstruction")]
struct Cli {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Norms of the Laguerre family members.
    Family {
        /// Comma-separated family indices.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Scattering matrix of a potential CSV (x,q).
    Forward {
        potential: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Potential recovered from a scattering JSON file.
    Invert {
        scattering: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Bound-state accumulation experiment.
    Accumulate {
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        e_inf: f64,
        /// Peak modulus of the optional Gaussian reflection coefficient.
        #[arg(long, requires = "refl_width")]
        refl_amplitude: Option<f64>,
        #[arg(long, requires = "refl_amplitude")]
        refl_width: Option<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Phase, correction terms and (U, V) of a potential CSV.
    Uv {
        potential: PathBuf,
        /// Also report the residual of the Born-series representation of q.
        #[arg(long)]
        representation_order: Option<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

const FAMILY_GRID: GridDefaults = GridDefaults {
    x_min: -40.0,
    x_max: 40.0,
    grid_n: 16384,
};
const SCATTERING_GRID: GridDefaults = GridDefaults {
    x_min: -8.0,
    x_max: 8.0,
    grid_n: 256,
};
// accumulate samples [0, 40/e_inf); only grid_n is taken from here
const ACCUMULATION_GRID: GridDefaults = GridDefaults {
    x_min: 0.0,
    x_max: 40.0,
    grid_n: 8192,
};

fn resolve(file: &Option<PathBuf>, flags: ConfigArgs, grid: GridDefaults) -> phasecat::Result<RunConfig> {
    let base = match file {
        Some(path) => ConfigArgs::read(path)?,
        None => ConfigArgs::default(),
    };
    RunConfig::resolve(flags.over(base), grid)
}

fn run(cli: Cli) -> phasecat::Result<Vec<PathBuf>> {
    match cli.command {
        Command::Family { n, cfg } => commands::family(&n, &resolve(&cli.config, cfg, FAMILY_GRID)?),
        Command::Forward { potential, cfg } => {
            commands::forward(&potential, &resolve(&cli.config, cfg, SCATTERING_GRID)?)
        }
        Command::Invert { scattering, cfg } => {
            commands::invert(&scattering, &resolve(&cli.config, cfg, SCATTERING_GRID)?)
        }
        Command::Accumulate {
            n_max,
            e_inf,
            refl_amplitude,
            refl_width,
            cfg,
        } => {
            let cfg = resolve(&cli.config, cfg, ACCUMULATION_GRID)?;
            commands::accumulate(n_max, e_inf, refl_amplitude.zip(refl_width), &cfg)
        }
        Command::Uv {
            potential,
            representation_order,
            cfg,
        } => commands::uv(&potential, representation_order, &resolve(&cli.config, cfg, SCATTERING_GRID)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
