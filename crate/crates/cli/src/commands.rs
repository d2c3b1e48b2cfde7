use std::path::{Path, PathBuf};

use phasecat::catastrophe_family::{family_report, laguerre_closed_form, CatastropheReport};
use phasecat::forward_scattering::{scattering_matrix, staggered_k_grid, Potential, ScatteringData, ScatteringFile};
use phasecat::grid_fourier::spectral_derivative;
use phasecat::inverse_scattering::{
    accumulation_experiment, build_omega, recover_potential, solve_marchenko, AccumulationSetup, ReflectionProfile,
};
use phasecat::phase_reconstruction::{bound_report, q_representation_residual, BoundReport, PhaseSystem};
use phasecat::{Error, FamilyParams64, Result};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{write_atomic, write_json};

#[derive(Serialize)]
struct FamilyOutput<'a> {
    config: &'a RunConfig,
    report: CatastropheReport<f64>,
}

/// Norm report over the family plus `f_n`, `f_n'` samples per member.
pub fn family(n_list: &[usize], cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.grid()?;
    let report = family_report(n_list, &spec)?;
    let mut written = Vec::new();
    for &n in n_list {
        let f = laguerre_closed_form(&FamilyParams64::new(n, spec)?)?;
        let df = spectral_derivative(f.values(), spec.spacing());
        let path = cfg.output_dir.join(format!("family_n{n}.csv"));
        write_atomic(&path, |w| {
            writeln!(w, "x,f,df")?;
            for (j, (v, d)) in f.values().iter().zip(&df).enumerate() {
                writeln!(w, "{},{:e},{:e}", spec.x(j), v.re, d.re)?;
            }
            Ok(())
        })?;
        written.push(path);
    }
    let path = cfg.output_dir.join("family_report.json");
    write_json(&path, &FamilyOutput { config: cfg, report })?;
    written.push(path);
    Ok(written)
}

fn read_potential(path: &Path) -> Result<Potential<f64>> {
    let file = std::fs::File::open(path)?;
    Potential::read_csv(file).map_err(|e| match e {
        Error::Validation(m) => Error::validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Serialize)]
struct ForwardSummary<'a> {
    config: &'a RunConfig,
    potential: String,
    n_bound_states: usize,
    unitarity_error: f64,
    conjugate_symmetry_error: f64,
}

/// Scattering data of a potential file.
pub fn forward(potential: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let q = read_potential(potential)?;
    let k = staggered_k_grid(cfg.k_max, cfg.n_k)?;
    let sd = scattering_matrix(&q, &k)?;
    let data = cfg.output_dir.join("scattering.json");
    write_json(&data, &sd.to_file())?;
    let summary = cfg.output_dir.join("forward_summary.json");
    write_json(
        &summary,
        &ForwardSummary {
            config: cfg,
            potential: potential.display().to_string(),
            n_bound_states: sd.bound_states().len(),
            unitarity_error: sd.unitarity_error(),
            conjugate_symmetry_error: sd.conjugate_symmetry_error(),
        },
    )?;
    Ok(vec![data, summary])
}

#[derive(Serialize)]
struct InvertSummary<'a> {
    config: &'a RunConfig,
    scattering: String,
    t_max: f64,
    max_residual: f64,
    max_condition: f64,
    max_kernel_imag: f64,
}

/// Potential recovered from a scattering file.
pub fn invert(scattering: &Path, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let file: ScatteringFile = serde_json::from_reader(std::fs::File::open(scattering)?)
        .map_err(|e| Error::validation(format!("{}: {e}", scattering.display())))?;
    let spec = cfg.grid()?;
    let csv = cfg.output_dir.join("potential.csv");
    let summary_path = cfg.output_dir.join("invert_summary.json");
    let (q, summary) = if file.k.is_empty() && file.bound_states.is_empty() {
        // no data at all: the zero potential
        let summary = InvertSummary {
            config: cfg,
            scattering: scattering.display().to_string(),
            t_max: 0.0,
            max_residual: 0.0,
            max_condition: 1.0,
            max_kernel_imag: 0.0,
        };
        (Potential::zero(spec), summary)
    } else {
        let sd = ScatteringData::<f64>::from_file(file)?;
        let mk = build_omega(&sd, 2.0 * spec.x_min())?;
        let tk = solve_marchenko(&mk, &spec)?;
        if tk.max_residual() > cfg.marchenko_tol {
            return Err(Error::numerical(format!(
                "Marchenko residual {:.3e} exceeds marchenko_tol {:.3e}",
                tk.max_residual(),
                cfg.marchenko_tol
            )));
        }
        let summary = InvertSummary {
            config: cfg,
            scattering: scattering.display().to_string(),
            t_max: mk.t_max(),
            max_residual: tk.max_residual(),
            max_condition: tk.max_condition(),
            max_kernel_imag: mk.max_imag(),
        };
        (recover_potential(&tk)?, summary)
    };
    write_atomic(&csv, |w| q.write_csv(w))?;
    write_json(&summary_path, &summary)?;
    Ok(vec![csv, summary_path])
}

#[derive(Serialize)]
struct AccumulateOutput<'a> {
    config: &'a RunConfig,
    setup: AccumulationSetup<f64>,
    report: CatastropheReport<f64>,
}

/// Ladder lengths 1, 2, 4, … up to `n_max`.
pub fn doubling_ladder(n_max: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|n| *n <= n_max)
        .collect()
}

pub fn accumulate(
    n_max: usize,
    e_inf: f64,
    reflection: Option<(f64, f64)>,
    cfg: &RunConfig,
) -> Result<Vec<PathBuf>> {
    if n_max == 0 {
        return Err(Error::validation("n_max must be at least 1"));
    }
    // the half-line grid [0, extent/e_inf) is set by e_inf; only grid_n applies
    let mut setup = AccumulationSetup::new(e_inf);
    setup.n_x = cfg.grid_n;
    if let Some((amplitude, width)) = reflection {
        setup = setup.with_profile(ReflectionProfile {
            amplitude,
            width,
            k_max: cfg.k_max,
            n_k: cfg.n_k,
        });
    }
    let report = accumulation_experiment(&doubling_ladder(n_max), &setup)?;
    let path = cfg.output_dir.join("accumulate_report.json");
    write_json(
        &path,
        &AccumulateOutput {
            config: cfg,
            setup,
            report,
        },
    )?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct BornScaling {
    sup_i12: f64,
    sup_i21: f64,
}

#[derive(Serialize)]
struct UvOutput<'a> {
    config: &'a RunConfig,
    potential: String,
    phase_system: PhaseSystem<f64>,
    bound_report: BoundReport<f64>,
    uv_bound_ratio: f64,
    born_scaling: BornScaling,
    representation_residual: Option<f64>,
}

/// Phase system of a potential file.
pub fn uv(potential: &Path, representation_order: Option<usize>, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let q = read_potential(potential)?;
    let k = staggered_k_grid(cfg.k_max, cfg.n_k)?;
    let sd = scattering_matrix(&q, &k)?;
    let ps = PhaseSystem::build(&q, &sd, cfg.singular_tol)?;
    let br = bound_report(&q, &k, &ps.i12, &ps.i21)?;
    let born_scaling = BornScaling {
        sup_i12: ps.i12.iter().map(|z| z.norm()).fold(0.0, f64::max),
        sup_i21: ps.i21.iter().map(|z| z.norm()).fold(0.0, f64::max),
    };
    let representation_residual = match representation_order {
        Some(order) => Some(q_representation_residual(&q, &k, order, cfg.singular_tol)?),
        None => None,
    };
    let path = cfg.output_dir.join("phase_system.json");
    write_json(
        &path,
        &UvOutput {
            config: cfg,
            potential: potential.display().to_string(),
            uv_bound_ratio: ps.uv_bound_ratio(),
            phase_system: ps,
            bound_report: br,
            born_scaling,
            representation_residual,
        },
    )?;
    Ok(vec![path])
}
