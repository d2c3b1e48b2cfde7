use std::path::{Path, PathBuf};

use clap::Args;
use phasecat::{Error, Result};
use serde::{Deserialize, Serialize};

/// Settings shared by every subcommand. Every field may come from the
/// TOML config file or a flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigArgs {
    /// Left end of the x-grid.
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    /// Right end of the x-grid (periodic image, not sampled).
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Number of x samples (power of two).
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Half-width of the staggered k-grid.
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Number of k samples (even; k = 0 is never sampled).
    #[arg(long)]
    pub n_k: Option<usize>,
    #[arg(long)]
    pub ode_tol: Option<f64>,
    /// Threshold on |sin φ| below which (U, V) are masked.
    #[arg(long)]
    pub singular_tol: Option<f64>,
    /// Largest accepted relative residual of the Marchenko solves.
    #[arg(long)]
    pub marchenko_tol: Option<f64>,
    /// Output directory.
    #[arg(long = "out")]
    pub output_dir: Option<PathBuf>,
    /// Reserved; every computation is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))
    }

    /// `self` with unset fields taken from `base`.
    pub fn over(self, base: Self) -> Self {
        Self {
            x_min: self.x_min.or(base.x_min),
            x_max: self.x_max.or(base.x_max),
            grid_n: self.grid_n.or(base.grid_n),
            k_max: self.k_max.or(base.k_max),
            n_k: self.n_k.or(base.n_k),
            ode_tol: self.ode_tol.or(base.ode_tol),
            singular_tol: self.singular_tol.or(base.singular_tol),
            marchenko_tol: self.marchenko_tol.or(base.marchenko_tol),
            output_dir: self.output_dir.or(base.output_dir),
            seed: self.seed.or(base.seed),
        }
    }
}

/// Grid defaults differ per command; the rest are common.
#[derive(Debug, Clone, Copy)]
pub struct GridDefaults {
    pub x_min: f64,
    pub x_max: f64,
    pub grid_n: usize,
}

/// The fully resolved configuration, echoed into every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub grid_n: usize,
    pub k_max: f64,
    pub n_k: usize,
    pub ode_tol: f64,
    pub singular_tol: f64,
    pub marchenko_tol: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(args: ConfigArgs, grid: GridDefaults) -> Result<Self> {
        let cfg = Self {
            x_min: args.x_min.unwrap_or(grid.x_min),
            x_max: args.x_max.unwrap_or(grid.x_max),
            grid_n: args.grid_n.unwrap_or(grid.grid_n),
            k_max: args.k_max.unwrap_or(16.0),
            n_k: args.n_k.unwrap_or(1024),
            ode_tol: args.ode_tol.unwrap_or(1e-10),
            singular_tol: args.singular_tol.unwrap_or(phasecat::phase_reconstruction::SINGULAR_TOL),
            marchenko_tol: args
                .marchenko_tol
                .unwrap_or(phasecat::inverse_scattering::RESIDUAL_LIMIT),
            output_dir: args.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            seed: args.seed.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ode_tol", self.ode_tol),
            ("singular_tol", self.singular_tol),
            ("marchenko_tol", self.marchenko_tol),
            ("k_max", self.k_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_k == 0 || !self.n_k.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "n_k must be even and positive (the staggered grid excludes k = 0), got {}",
                self.n_k
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<phasecat::GridSpec64> {
        phasecat::GridSpec64::new(self.x_min, self.x_max, self.grid_n)
    }
}
