use num_complex::Complex;
use rayon::prelude::*;

use super::quadrature::UniformTable;
use crate::error::{Error, Result};
use crate::forward_scattering::{BoundState, ScatteringData};
use crate::scalar::{cis, Real};

/// Largest `|s21|` tolerated at the ends of the k-grid.
pub const EDGE_REFLECTION_TOL: f64 = 1e-4;

/// The kernel is cut off where it stays below this.
pub const KERNEL_CUTOFF: f64 = 1e-10;

/// Largest tolerated level of `A₊` far out in the alias-free range. Above
/// it the data are too coarse in `k` (or too noisy) to invert.
pub const NOISE_LIMIT: f64 = 1e-8;

/// The Marchenko input `Ω₊(t) = A₊(t) + Σ_j M_j e^{-κ_j t}`, where
/// `A₊(t) = (1/2π) ∫ s21(k) e^{ikt} dk` is evaluated as a direct sum over
/// the k-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarchenkoKernel<T> {
    table: UniformTable<T>,
    omega_plus: Vec<T>,
    bound_states: Vec<BoundState<T>>,
    max_imag: T,
}

impl<T: Real> MarchenkoKernel<T> {
    /// Kernel of reflectionless data: `A₊ ≡ 0`. The table starts at `t_min`
    /// and ends once the exponentials are below [`KERNEL_CUTOFF`].
    pub fn from_bound_states(bound_states: &[BoundState<T>], t_min: T) -> Result<Self> {
        check_bound_states(bound_states)?;
        let t_end = bound_cutoff(bound_states, t_min);
        let dt = T::lit(0.05);
        let n = ((t_end - t_min) / dt).ceil().to_usize().unwrap_or(0).max(8) + 1;
        let table = UniformTable {
            t0: t_min,
            dt,
            values: vec![T::zero(); n],
        };
        Ok(Self::assemble(table, bound_states.to_vec(), T::zero()))
    }

    fn assemble(table: UniformTable<T>, bound_states: Vec<BoundState<T>>, max_imag: T) -> Self {
        let omega_plus = (0..table.values.len())
            .map(|j| table.values[j] + bound_sum(&bound_states, table.t(j)))
            .collect();
        Self {
            table,
            omega_plus,
            bound_states,
            max_imag,
        }
    }

    pub fn t_grid(&self) -> Vec<T> {
        (0..self.table.values.len()).map(|j| self.table.t(j)).collect()
    }

    pub fn a_plus(&self) -> &[T] {
        &self.table.values
    }

    pub fn omega_plus(&self) -> &[T] {
        &self.omega_plus
    }

    pub fn bound_states(&self) -> &[BoundState<T>] {
        &self.bound_states
    }

    pub fn t_min(&self) -> T {
        self.table.t0
    }

    pub fn t_max(&self) -> T {
        self.table.t_max()
    }

    /// Largest imaginary part met while summing `A₊` (zero for data with
    /// exact conjugate symmetry).
    pub fn max_imag(&self) -> T {
        self.max_imag
    }

    /// `Ω₊(t)`: interpolated reflection part plus exact exponentials; zero
    /// beyond the table.
    pub fn omega(&self, t: T) -> T {
        if t > self.t_max() {
            return T::zero();
        }
        self.table.eval(t) + bound_sum(&self.bound_states, t)
    }
}

fn bound_sum<T: Real>(bs: &[BoundState<T>], t: T) -> T {
    bs.iter().map(|b| b.norming * (-b.kappa * t).exp()).sum()
}

fn check_bound_states<T: Real>(bs: &[BoundState<T>]) -> Result<()> {
    if bs.iter().any(|b| !(b.kappa > T::zero()) || !(b.norming > T::zero())) {
        return Err(Error::validation("bound states need positive kappa and norming"));
    }
    Ok(())
}

/// Where every exponential has dropped below the cutoff.
fn bound_cutoff<T: Real>(bs: &[BoundState<T>], t_min: T) -> T {
    let ln_cut = T::lit(KERNEL_CUTOFF).ln();
    bs.iter()
        .map(|b| (b.norming.ln() - ln_cut) / b.kappa)
        .fold(t_min + T::one(), |a, b| a.max(b))
}

/// Tabulates `Ω₊` on `[t_min, t_max]` from scattering data.
///
/// `t_max` is where both parts have decayed below [`KERNEL_CUTOFF`], or
/// below ten times the noise floor of `A₊` when that is higher. The
/// direct sum is periodic in `t` with period `2π/Δk`, so the whole table
/// has to fit inside `|t| < 0.9·π/Δk`.
pub fn build_omega<T: Real>(sd: &ScatteringData<T>, t_min: T) -> Result<MarchenkoKernel<T>> {
    let k = sd.k();
    let s21 = sd.s21();
    let n_k = k.len();
    if n_k < 2 {
        return Err(Error::validation("need at least two k samples"));
    }
    let tol = T::lit(EDGE_REFLECTION_TOL);
    if s21[0].norm() > tol || s21[n_k - 1].norm() > tol {
        return Err(Error::validation(format!(
            "reflection does not decay at the k-grid ends (|s21| = {}, {}); raise k_max",
            s21[0].norm(),
            s21[n_k - 1].norm()
        )));
    }
    check_bound_states(sd.bound_states())?;
    let dk = k[1] - k[0];
    let k_max = k[n_k - 1].abs().max(k[0].abs());
    let t_cap = T::lit(0.9) * T::PI() / dk;
    if t_min.abs() >= t_cap {
        return Err(Error::validation(format!(
            "t range starting at {t_min} aliases on this k-grid (|t| must stay below {t_cap}); refine n_k"
        )));
    }
    let dt = T::lit(0.05).min(T::PI() / (T::lit(8.0) * k_max));
    let n_max = ((t_cap - t_min) / dt).floor().to_usize().unwrap_or(0);
    let reflectionless = s21.iter().all(|v| v.norm() == T::zero());
    let weight = dk / T::two_pi();
    let samples: Vec<Complex<T>> = if reflectionless {
        vec![Complex::new(T::zero(), T::zero()); n_max + 1]
    } else {
        (0..=n_max)
            .into_par_iter()
            .map(|j| {
                let t = t_min + dt * T::from_usize_lossy(j);
                k.iter()
                    .zip(s21)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (kk, s)| acc + *s * cis(*kk * t))
                    * weight
            })
            .collect()
    };
    // Errors in the scattering data leave a floor under A₊; estimate it from
    // the far half of the alias-free range and cut above it.
    let mut far: Vec<T> = samples[n_max / 2..].iter().map(|v| v.re.abs()).collect();
    far.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let floor = far.get(far.len() / 2).copied().unwrap_or(T::zero());
    if floor > T::lit(NOISE_LIMIT) {
        return Err(Error::validation(format!(
            "reflection kernel does not decay inside the alias-free range (tail level {:.3e}); raise n_k",
            floor.to_f64_lossy()
        )));
    }
    let cutoff = T::lit(KERNEL_CUTOFF).max(T::lit(10.0) * floor);
    let bound_end = bound_cutoff(sd.bound_states(), t_min);
    // last sample where the reflection part is still above the cutoff
    let last_big = samples.iter().rposition(|v| v.re.abs() > cutoff);
    if last_big.is_some_and(|j| j + 16 > n_max) {
        return Err(Error::validation(
            "reflection kernel does not decay inside the alias-free range; raise n_k",
        ));
    }
    let a_end = last_big.map_or(t_min, |j| t_min + dt * T::from_usize_lossy(j + 16));
    let t_end = a_end.max(bound_end);
    let n = ((t_end - t_min) / dt).ceil().to_usize().unwrap_or(0).max(8);
    if n > n_max {
        return Err(Error::validation(
            "bound-state kernel does not decay inside the alias-free range; raise n_k",
        ));
    }
    let max_imag = samples[..=n].iter().fold(T::zero(), |m, v| m.max(v.im.abs()));
    let table = UniformTable {
        t0: t_min,
        dt,
        values: samples[..=n].iter().map(|v| v.re).collect(),
    };
    Ok(MarchenkoKernel::assemble(table, sd.bound_states().to_vec(), max_imag))
}
