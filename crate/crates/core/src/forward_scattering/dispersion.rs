use num_complex::Complex;
use rayon::prelude::*;

use super::bound::BoundState;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Transmission coefficient from the reflection modulus and the discrete
/// spectrum:
///
/// ```text
///   s11(k) = √(1-|R|²) · exp( (1/2πi) PV∫ ln(1-|R(k')|²)/(k'-k) dk' )
///            · ∏_j (k + iκ_j)/(k - iκ_j)
/// ```
///
/// The square root is the half-residue of the `k + i0` limit; the
/// principal value contributes only a phase.
///
/// The integrand is singular at `k' = 0` whenever `|R(0)| = 1`; see
/// [`low_energy_scale`] for how that is handled.
///
/// `k_grid` must be uniform and ascending. The integral is truncated to the
/// grid, so `|R|` should be negligible at its ends.
pub fn dispersion_s11<T: Real>(
    refl_modulus: &[T],
    bound_states: &[BoundState<T>],
    k_grid: &[T],
) -> Result<Vec<Complex<T>>> {
    let n = k_grid.len();
    if refl_modulus.len() != n {
        return Err(Error::validation("reflection modulus and k-grid lengths differ"));
    }
    if n < 3 {
        return Err(Error::validation("dispersion needs at least three k samples"));
    }
    if let Some(i) = refl_modulus.iter().position(|r| !(*r >= T::zero() && *r < T::one())) {
        return Err(Error::validation(format!(
            "|s12| = {} at k = {} is outside [0, 1)",
            refl_modulus[i], k_grid[i]
        )));
    }
    let dk = k_grid[1] - k_grid[0];
    if !(dk > T::zero())
        || k_grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dk).abs() > T::lit(1e-9) * dk)
    {
        return Err(Error::validation("dispersion needs a uniform ascending k-grid"));
    }
    let beta = low_energy_scale(refl_modulus, k_grid);
    let g: Vec<T> = refl_modulus
        .iter()
        .zip(k_grid)
        .map(|(r, k)| (T::one() - *r * *r).ln() - model_log_modulus(*k, beta))
        .collect();
    let pv = principal_value(&g, k_grid);
    Ok((0..n)
        .map(|m| {
            let k = k_grid[m];
            let modulus = (T::one() - refl_modulus[m] * refl_modulus[m]).sqrt();
            let model = if beta > T::zero() {
                Complex::new(k, T::zero()) / Complex::new(k, beta)
            } else {
                Complex::new(T::one(), T::zero())
            };
            let phase = -pv[m] / T::two_pi() + model.arg();
            let blaschke = bound_states
                .iter()
                .fold(Complex::new(T::one(), T::zero()), |acc, b| {
                    acc * (Complex::new(k, b.kappa) / Complex::new(k, -b.kappa))
                });
            crate::scalar::cis(phase) * modulus * blaschke
        })
        .collect())
}

/// Generic reflection data have `|R(0)| = 1`, which makes `ln(1-|R|²)`
/// logarithmically singular at the origin. The model `T₀ = k/(k+iβ)` has
/// the same singularity, is analytic and zero-free in the upper half plane
/// and tends to 1, so it is its own dispersion integral; only the regular
/// remainder `ln(1-|R|²) - ln|T₀|²` is integrated numerically. `β` is fitted
/// at the sample closest to `k = 0`.
fn low_energy_scale<T: Real>(refl_modulus: &[T], k_grid: &[T]) -> T {
    let m = (0..k_grid.len())
        .min_by(|&a, &b| {
            k_grid[a]
                .abs()
                .partial_cmp(&k_grid[b].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let r2 = refl_modulus[m] * refl_modulus[m];
    (k_grid[m] * k_grid[m] * r2 / (T::one() - r2)).sqrt()
}

fn model_log_modulus<T: Real>(k: T, beta: T) -> T {
    if beta == T::zero() {
        return T::zero();
    }
    (k * k / (k * k + beta * beta)).ln()
}

/// `PV∫ g(k')/(k'-k_i) dk'` over the cells of a uniform grid.
///
/// The regular part `(g(k') - g(k_i))/(k'-k_i)` is summed with the midpoint
/// rule (its value at `k' = k_i` is `g'(k_i)`), and `g(k_i)` times the
/// exact principal value of `1/(k'-k_i)` over the covered interval is added.
pub fn principal_value<T: Real>(g: &[T], k: &[T]) -> Vec<T> {
    let n = k.len();
    let h = k[1] - k[0];
    let a = k[0] - h / T::lit(2.0);
    let b = k[n - 1] + h / T::lit(2.0);
    let deriv = |i: usize| -> T {
        if i == 0 {
            (g[1] - g[0]) / h
        } else if i == n - 1 {
            (g[n - 1] - g[n - 2]) / h
        } else {
            (g[i + 1] - g[i - 1]) / (T::lit(2.0) * h)
        }
    };
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = deriv(i);
            for j in 0..n {
                if j != i {
                    acc = acc + (g[j] - g[i]) / (k[j] - k[i]);
                }
            }
            acc * h + g[i] * ((b - k[i]) / (k[i] - a)).ln()
        })
        .collect()
}
