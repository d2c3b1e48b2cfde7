use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::grid_fourier::GridSpec;
use crate::scalar::Real;

/// Solutions whose scaled modulus `|f e^{∓ikx}|` exceeds this are treated
/// as a failed integration.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `f₊ ~ e^{ikx}` as `x → +∞`.
    Plus,
    /// `f₋ ~ e^{-ikx}` as `x → -∞`.
    Minus,
}

/// A Jost solution and its derivative sampled on the potential's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JostSolution<T> {
    k: Complex<T>,
    side: Side,
    spec: GridSpec<T>,
    values: Vec<Complex<T>>,
    derivatives: Vec<Complex<T>>,
}

impl<T: Real> JostSolution<T> {
    pub fn k(&self) -> Complex<T> {
        self.k
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn derivatives(&self) -> &[Complex<T>] {
        &self.derivatives
    }

    /// `|f e^{∓ikx} - 1|` at the normalization end.
    pub fn boundary_error(&self) -> T {
        let (j, sign) = match self.side {
            Side::Plus => (self.values.len() - 1, -T::one()),
            Side::Minus => (0, T::one()),
        };
        let x = self.spec.x(j);
        (self.values[j] * (self.k * Complex::new(T::zero(), sign * x)).exp() - T::one()).norm()
    }
}

/// `W(f, g) = f g' - f' g` at sample `j`.
pub fn wronskian<T: Real>(f: &JostSolution<T>, g: &JostSolution<T>, j: usize) -> Complex<T> {
    f.values[j] * g.derivatives[j] - f.derivatives[j] * g.values[j]
}

/// Integrates `-f'' + q f = k² f` across the grid with a fourth-order
/// Magnus scheme, starting from the exact plane wave at the side's end.
///
/// Each cell is advanced by `exp(Ω)` with
/// `Ω = [[-H²d, H], [H c̄, H²d]]`, `c̄` the Simpson average of `q - k²` and
/// `d = (q_end - q_start)/12`. The step matrix has unit determinant, so the
/// discrete Wronskian of any two solutions is conserved to rounding.
pub fn jost_solve<T: Real>(q: &Potential<T>, k: Complex<T>, side: Side) -> Result<JostSolution<T>> {
    if !(k.im >= T::zero()) {
        return Err(Error::validation(format!("Jost solutions need Im k >= 0, got {k}")));
    }
    if k.norm() == T::zero() {
        return Err(Error::validation("Jost solutions need k != 0"));
    }
    let spec = *q.spec();
    let n = spec.n_points();
    let h = spec.spacing();
    let qv = q.values();
    let i = Complex::new(T::zero(), T::one());
    let k2 = k * k;
    let mut values = vec![Complex::new(T::zero(), T::zero()); n];
    let mut derivatives = values.clone();
    let (start, sign) = match side {
        Side::Plus => (n - 1, T::one()),
        Side::Minus => (0, -T::one()),
    };
    let ks = k * sign;
    let x0 = spec.x(start);
    values[start] = (i * ks * x0).exp();
    derivatives[start] = i * ks * values[start];
    let limit = T::lit(BLOWUP_LIMIT);

    let mut step = |from: usize, to: usize, cell: usize, hh: T| {
        let (qa, qb) = (qv[from], qv[to]);
        let ca = Complex::new(qa, T::zero()) - k2;
        let cb = Complex::new(qb, T::zero()) - k2;
        let cm = Complex::new(q.midpoint(cell), T::zero()) - k2;
        let cbar = (ca + cm * T::lit(4.0) + cb) / T::lit(6.0);
        let d = (qb - qa) / T::lit(12.0);
        let alpha = Complex::new(-hh * hh * d, T::zero());
        let beta = Complex::new(hh, T::zero());
        let gamma = cbar * hh;
        let (c, sc) = cosh_sinhc(alpha * alpha + beta * gamma);
        let (f, df) = (values[from], derivatives[from]);
        values[to] = f * c + (alpha * f + beta * df) * sc;
        derivatives[to] = df * c + (gamma * f - alpha * df) * sc;
    };

    match side {
        Side::Plus => {
            for j in (0..n - 1).rev() {
                step(j + 1, j, j, -h);
            }
        }
        Side::Minus => {
            for j in 0..n - 1 {
                step(j, j + 1, j, h);
            }
        }
    }

    for (j, v) in values.iter().enumerate() {
        let scaled = *v * (-i * ks * spec.x(j)).exp();
        if !scaled.norm().is_finite() || scaled.norm() > limit {
            return Err(Error::numerical(format!(
                "Jost solution for k = {k} blew up near x = {}",
                spec.x(j)
            )));
        }
    }
    Ok(JostSolution {
        k,
        side,
        spec,
        values,
        derivatives,
    })
}

/// `(cosh s, sinh s / s)` as functions of `s²`; both are even in `s`, so
/// the branch of the square root is irrelevant.
fn cosh_sinhc<T: Real>(s2: Complex<T>) -> (Complex<T>, Complex<T>) {
    if s2.norm() < T::lit(1e-6) {
        let one = Complex::new(T::one(), T::zero());
        let c = one + s2 / T::lit(2.0) + s2 * s2 / T::lit(24.0);
        let sc = one + s2 / T::lit(6.0) + s2 * s2 / T::lit(120.0);
        return (c, sc);
    }
    let s = s2.sqrt();
    (s.cosh(), s.sinh() / s)
}

/// Largest Numerov-compact residual of `f'' = (q - k²) f`, normalized by
/// `sup|f|·max(1, |k|²)`.
pub fn ode_residual<T: Real>(q: &Potential<T>, f: &JostSolution<T>) -> T {
    let n = f.values.len();
    let h = f.spec.spacing();
    let k2 = f.k * f.k;
    let c = |j: usize| Complex::new(q.values()[j], T::zero()) - k2;
    let sup = f.values.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    if sup == T::zero() {
        return T::zero();
    }
    let mut worst = T::zero();
    for j in 1..n - 1 {
        let lhs = (f.values[j + 1] - f.values[j] * T::lit(2.0) + f.values[j - 1]) / (h * h);
        let rhs = (c(j + 1) * f.values[j + 1] + c(j) * f.values[j] * T::lit(10.0) + c(j - 1) * f.values[j - 1])
            / T::lit(12.0);
        worst = worst.max((lhs - rhs).norm());
    }
    worst / (sup * T::one().max(k2.norm()))
}
