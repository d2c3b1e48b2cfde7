//! One-dimensional scattering for `-f'' + q f = k² f`: Jost solutions,
//! the scattering matrix, bound states, the Born series and the dispersion
//! formula for the transmission coefficient.

mod born;
mod bound;
mod dispersion;
mod jost;
mod matrix;
mod potential;

pub use born::{born_orders, born_series, Reflection, MAX_BORN_ORDER};
pub use bound::{bound_states, norming_constant, BoundState, KAPPA_TOL};
pub use dispersion::{dispersion_s11, principal_value};
pub use jost::{jost_solve, ode_residual, wronskian, JostSolution, Side, BLOWUP_LIMIT};
pub use matrix::{
    jost_relation_check, scatter_at, scattering_matrix, staggered_k_grid, PointScattering, ScatteringData,
    ScatteringFile, AGREEMENT_FAIL, AGREEMENT_WARN, INVARIANT_TOL,
};
pub use potential::{gaussian, sech2_ladder, square_well, Potential, SUPPORT_ATOL, SUPPORT_FRACTION};
