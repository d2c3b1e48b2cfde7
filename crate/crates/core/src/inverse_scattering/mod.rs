//! Marchenko inversion: the kernel `Ω₊` from scattering data, the
//! triangular kernel `B₊`, the recovered potential, and the
//! eigenvalue-accumulation experiment.

mod accumulation;
mod kernel;
mod marchenko;
mod quadrature;

pub use accumulation::{
    accumulation_experiment, accumulation_ladder, first_approximation, AccumulationSetup, FirstApproximation,
    ReflectionProfile,
};
pub use kernel::{build_omega, MarchenkoKernel, EDGE_REFLECTION_TOL, KERNEL_CUTOFF, NOISE_LIMIT};
pub use marchenko::{
    recover_potential, solve_marchenko, KernelRow, TriangularKernel, CONDITION_LIMIT, RESIDUAL_LIMIT,
};
pub use quadrature::{composite_gauss, gauss_legendre};
