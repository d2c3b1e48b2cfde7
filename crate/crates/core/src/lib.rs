//! Numerical toolkit for phase-driven gradient blow-up.
//!
//! * [`grid_fourier`]: sampled functions, Fourier transforms, norms, phase.
//! * [`catastrophe_family`]: the Blaschke-phase family with fixed spectral
//!   modulus and its Laguerre closed form.
//! * [`forward_scattering`]: Jost solutions, scattering matrix, bound
//!   states, Born series and the dispersion formula for the transmission.
//! * [`inverse_scattering`]: Marchenko kernel, Nyström solve, potential
//!   recovery and the eigenvalue-accumulation experiment.
//! * [`phase_reconstruction`]: recovering the potential's transform from
//!   the scattering phase.
//!
//! Everything is generic over [`Real`]; the `*64` aliases below fix `f64`,
//! which is what the tolerances are calibrated for.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catastrophe_family;
pub mod error;
pub mod forward_scattering;
pub mod grid_fourier;
pub mod inverse_scattering;
pub mod phase_reconstruction;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{cis, wrap_angle, Real};

pub type GridSpec64 = grid_fourier::GridSpec<f64>;
pub type GridFunction64 = grid_fourier::GridFunction<f64>;
pub type SpectralFunction64 = grid_fourier::SpectralFunction<f64>;
pub type NormReport64 = grid_fourier::NormReport<f64>;
pub type CatastropheReport64 = catastrophe_family::CatastropheReport<f64>;
pub type FamilyParams64 = catastrophe_family::FamilyParams<f64>;
pub type Potential64 = forward_scattering::Potential<f64>;
pub type ScatteringData64 = forward_scattering::ScatteringData<f64>;
pub type MarchenkoKernel64 = inverse_scattering::MarchenkoKernel<f64>;
pub type TriangularKernel64 = inverse_scattering::TriangularKernel<f64>;
pub type AccumulationSetup64 = inverse_scattering::AccumulationSetup<f64>;
pub type PhaseSystem64 = phase_reconstruction::PhaseSystem<f64>;
pub type BoundReport64 = phase_reconstruction::BoundReport<f64>;
