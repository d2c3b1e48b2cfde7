use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_p`.
pub fn gauss_legendre(p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    for i in 0..p.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=p {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            // P'_p = p (x P_p - P_{p-1}) / (x² - 1)
            dp = p as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[p - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[p - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no wider than
/// `panel` and `p` nodes per panel.
pub fn composite_gauss<T: Real>(a: T, b: T, panel: T, p: usize) -> (Vec<T>, Vec<T>) {
    let (gx, gw) = gauss_legendre(p);
    let n_panels = ((b - a) / panel).ceil().to_usize().unwrap_or(1).max(1);
    let width = (b - a) / T::from_usize_lossy(n_panels);
    let mut nodes = Vec::with_capacity(n_panels * p);
    let mut weights = Vec::with_capacity(n_panels * p);
    let half = width / T::lit(2.0);
    for m in 0..n_panels {
        let mid = a + width * (T::from_usize_lossy(m) + T::lit(0.5));
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(mid + half * T::lit(*x));
            weights.push(half * T::lit(*w));
        }
    }
    (nodes, weights)
}

/// Values on a uniform table `t_j = t0 + j·dt`, read back by 8-point
/// Lagrange interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTable<T> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Real> UniformTable<T> {
    pub fn t(&self, j: usize) -> T {
        self.t0 + self.dt * T::from_usize_lossy(j)
    }

    pub fn t_max(&self) -> T {
        self.t(self.values.len() - 1)
    }

    /// Interpolated value; zero beyond the last sample (the tabulated
    /// functions have decayed there) and clamped stencils near the start.
    pub fn eval(&self, t: T) -> T {
        let n = self.values.len();
        if t > self.t_max() {
            return T::zero();
        }
        let s = (t - self.t0) / self.dt;
        let base = s.floor().to_isize().unwrap_or(0) - 3;
        let start = base.clamp(0, n as isize - 8) as usize;
        let mut acc = T::zero();
        for a in 0..8 {
            let mut w = T::one();
            for b in 0..8 {
                if a != b {
                    w = w * (s - T::from_usize_lossy(start + b))
                        / (T::from_usize_lossy(a) - T::from_usize_lossy(b));
                }
            }
            acc = acc + w * self.values[start + a];
        }
        acc
    }
}

/// Solution of a dense system together with a 1-norm condition number.
pub struct DenseSolve {
    pub x: Vec<f64>,
    pub condition: f64,
}

/// LU solve of the row-major `n×n` system `a x = b` in double precision.
pub fn dense_solve(n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<DenseSolve> {
    let m = DMatrix::from_row_slice(n, n, &a);
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lu = m.lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular Nyström matrix"))?;
    let inv_norm1 = (0..n)
        .map(|j| inv.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let x = lu
        .solve(&DVector::from_vec(b))
        .ok_or_else(|| Error::numerical("singular Nyström matrix"))?;
    Ok(DenseSolve {
        x: x.iter().copied().collect(),
        condition: norm1 * inv_norm1,
    })
}
