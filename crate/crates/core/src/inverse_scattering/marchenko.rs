use rayon::prelude::*;

use super::kernel::MarchenkoKernel;
use super::quadrature::{composite_gauss, dense_solve};
use crate::error::{Error, Result};
use crate::forward_scattering::Potential;
use crate::grid_fourier::GridSpec;
use crate::scalar::Real;

/// Largest accepted 1-norm condition number of a Nyström matrix.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Largest accepted relative residual of a discretized solve.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Panel width and Gauss nodes per panel of the Nyström rule.
const PANEL: f64 = 1.0;
const NODES_PER_PANEL: usize = 8;

/// Solution of the Marchenko equation at one `x`: `B₊(x, ·)` at the
/// quadrature nodes on `[x, t_max - x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub values: Vec<T>,
    pub residual: T,
    pub condition: T,
}

/// `B₊(x, y)` for `y ≥ x` on every point of an x-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel<T> {
    spec: GridSpec<T>,
    rows: Vec<KernelRow<T>>,
    diagonal: Vec<T>,
    kernel: MarchenkoKernel<T>,
}

impl<T: Real> TriangularKernel<T> {
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn rows(&self) -> &[KernelRow<T>] {
        &self.rows
    }

    /// `B₊(x_i, x_i)`.
    pub fn diagonal(&self) -> &[T] {
        &self.diagonal
    }

    pub fn kernel(&self) -> &MarchenkoKernel<T> {
        &self.kernel
    }

    /// `B₊(x_i, y)` by Nyström interpolation,
    /// `B(x,y) = -Ω(x+y) - Σ w_j B(x,z_j) Ω(z_j+y)`.
    pub fn eval(&self, i: usize, y: T) -> T {
        let x = self.spec.x(i);
        nystrom_value(&self.kernel, &self.rows[i], x, y)
    }

    /// Largest relative residual over all rows.
    pub fn max_residual(&self) -> T {
        self.rows.iter().fold(T::zero(), |m, r| m.max(r.residual))
    }

    pub fn max_condition(&self) -> T {
        self.rows.iter().fold(T::zero(), |m, r| m.max(r.condition))
    }
}

fn nystrom_value<T: Real>(mk: &MarchenkoKernel<T>, row: &KernelRow<T>, x: T, y: T) -> T {
    let tail = row
        .nodes
        .iter()
        .zip(&row.weights)
        .zip(&row.values)
        .map(|((z, w), b)| *w * *b * mk.omega(*z + y))
        .sum::<T>();
    -mk.omega(x + y) - tail
}

/// Solves `B(x,y) + Ω(x+y) + ∫_x^∞ B(x,z) Ω(z+y) dz = 0` for every `x` of
/// `x_grid` by a Nyström method with composite Gauss–Legendre nodes and a
/// dense LU solve per `x`.
///
/// `Ω` vanishes beyond its table, so the integral stops at `t_max - x`.
pub fn solve_marchenko<T: Real>(mk: &MarchenkoKernel<T>, x_grid: &GridSpec<T>) -> Result<TriangularKernel<T>> {
    let two = T::lit(2.0);
    if two * x_grid.x_min() < mk.t_min() {
        return Err(Error::validation(format!(
            "kernel table starts at t = {} but x = {} needs Ω from t = {}",
            mk.t_min(),
            x_grid.x_min(),
            two * x_grid.x_min()
        )));
    }
    let rows: Vec<KernelRow<T>> = (0..x_grid.n_points())
        .into_par_iter()
        .map(|i| solve_row(mk, x_grid.x(i)))
        .collect::<Result<_>>()?;
    let diagonal: Vec<T> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x = x_grid.x(i);
            nystrom_value(mk, r, x, x)
        })
        .collect();
    check_rows(&rows, &diagonal);
    Ok(TriangularKernel {
        spec: *x_grid,
        rows,
        diagonal,
        kernel: mk.clone(),
    })
}

fn solve_row<T: Real>(mk: &MarchenkoKernel<T>, x: T) -> Result<KernelRow<T>> {
    let end = mk.t_max() - x;
    if end <= x {
        return Ok(KernelRow {
            nodes: Vec::new(),
            weights: Vec::new(),
            values: Vec::new(),
            residual: T::zero(),
            condition: T::one(),
        });
    }
    let (nodes, weights) = composite_gauss(x, end, T::lit(PANEL), NODES_PER_PANEL);
    let n = nodes.len();
    let omega: Vec<f64> = (0..n * n)
        .map(|ij| mk.omega(nodes[ij / n] + nodes[ij % n]).to_f64_lossy())
        .collect();
    let w: Vec<f64> = weights.iter().map(|v| v.to_f64_lossy()).collect();
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = w[c] * omega[r * n + c] + if r == c { 1.0 } else { 0.0 };
        }
    }
    let b: Vec<f64> = nodes.iter().map(|z| -mk.omega(x + *z).to_f64_lossy()).collect();
    let sol = dense_solve(n, a.clone(), b.clone()).map_err(|e| Error::numerical(format!("x = {x}: {e}")))?;
    if !(sol.condition < CONDITION_LIMIT) {
        return Err(Error::numerical(format!(
            "Marchenko system ill-conditioned at x = {x} (condition {:.3e})",
            sol.condition
        )));
    }
    let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let res = (0..n)
        .map(|r| {
            let ax: f64 = (0..n).map(|c| a[r * n + c] * sol.x[c]).sum();
            (ax - b[r]).abs()
        })
        .fold(0.0f64, f64::max);
    let residual = if b_norm > 0.0 { res / b_norm } else { res };
    if !(residual < RESIDUAL_LIMIT) {
        return Err(Error::numerical(format!(
            "Marchenko residual {residual:.3e} at x = {x}"
        )));
    }
    Ok(KernelRow {
        nodes,
        weights,
        values: sol.x.into_iter().map(T::lit).collect(),
        residual: T::lit(residual),
        condition: T::lit(sol.condition),
    })
}

/// Warns when a row has not decayed by its far end or the diagonal jumps.
fn check_rows<T: Real>(rows: &[KernelRow<T>], diagonal: &[T]) {
    for (i, r) in rows.iter().enumerate() {
        let peak = r.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if let Some(last) = r.values.last() {
            if peak > T::zero() && last.abs() > T::lit(1e-6) * peak {
                log::warn!("B(x, y) row {i} has not decayed at the end of the table ({last} vs peak {peak})");
            }
        }
    }
    for j in 2..diagonal.len().saturating_sub(1) {
        let local = (diagonal[j - 1] - diagonal[j - 2]).abs().max((diagonal[j + 1] - diagonal[j]).abs());
        let jump = (diagonal[j] - diagonal[j - 1]).abs();
        if local > T::zero() && jump > T::lit(10.0) * local {
            log::warn!("diagonal B(x, x) jumps at index {j}");
        }
    }
}

/// `q(x) = -2 d/dx B₊(x, x)`, five-point differences with one-sided
/// stencils at the two ends of the grid.
pub fn recover_potential<T: Real>(tk: &TriangularKernel<T>) -> Result<Potential<T>> {
    let d = five_point_derivative(tk.diagonal(), tk.spec().spacing());
    let q = d.into_iter().map(|v| T::lit(-2.0) * v).collect();
    Potential::without_support_check(*tk.spec(), q)
}

pub(crate) fn five_point_derivative<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    if n < 5 {
        // too short for the stencil: plain differences
        return (0..n)
            .map(|j| match n {
                0 | 1 => T::zero(),
                _ if j == 0 => (f[1] - f[0]) / h,
                _ if j == n - 1 => (f[n - 1] - f[n - 2]) / h,
                _ => (f[j + 1] - f[j - 1]) / (T::lit(2.0) * h),
            })
            .collect();
    }
    let c = |v: f64| T::lit(v);
    let h12 = c(12.0) * h;
    (0..n)
        .map(|j| {
            if j >= 2 && j + 2 < n {
                (f[j - 2] - c(8.0) * f[j - 1] + c(8.0) * f[j + 1] - f[j + 2]) / h12
            } else if j < 2 {
                let s = &f[0..5];
                if j == 0 {
                    (c(-25.0) * s[0] + c(48.0) * s[1] - c(36.0) * s[2] + c(16.0) * s[3] - c(3.0) * s[4]) / h12
                } else {
                    (c(-3.0) * s[0] - c(10.0) * s[1] + c(18.0) * s[2] - c(6.0) * s[3] + s[4]) / h12
                }
            } else {
                let s = &f[n - 5..n];
                if j == n - 1 {
                    (c(25.0) * s[4] - c(48.0) * s[3] + c(36.0) * s[2] - c(16.0) * s[1] + c(3.0) * s[0]) / h12
                } else {
                    (c(3.0) * s[4] + c(10.0) * s[3] - c(18.0) * s[2] + c(6.0) * s[1] - s[0]) / h12
                }
            }
        })
        .collect()
}
