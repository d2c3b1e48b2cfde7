use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid_fourier::{csv_err, read_columns, spec_from_samples, GridFunction, GridSpec};
use crate::scalar::Real;

/// Samples below this magnitude in the outer tenth of the box on either
/// side are set to zero; anything larger there is rejected.
pub const SUPPORT_ATOL: f64 = 1e-10;

/// Fraction of the box (centered) where the potential may be nonzero.
pub const SUPPORT_FRACTION: f64 = 0.8;

/// A real potential on a grid, vanishing near both ends of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    spec: GridSpec<T>,
    values: Vec<T>,
    m_norm: T,
}

impl<T: Real> Potential<T> {
    pub fn new(spec: GridSpec<T>, mut values: Vec<T>) -> Result<Self> {
        check_len(&spec, &values)?;
        let atol = T::lit(SUPPORT_ATOL);
        let n = values.len();
        let margin = T::lit((1.0 - SUPPORT_FRACTION) / 2.0) * spec.length();
        let (lo, hi) = (spec.x_min() + margin, spec.x_max() - margin);
        for j in 0..n {
            let x = spec.x(j);
            if x >= lo && x <= hi {
                continue;
            }
            if values[j].abs() >= atol {
                return Err(Error::validation(format!(
                    "potential is {} at x = {x}, outside the central {}% of the box; widen the box",
                    values[j],
                    SUPPORT_FRACTION * 100.0
                )));
            }
            values[j] = T::zero();
        }
        Ok(Self::assemble(spec, values))
    }

    /// Skips the support check. Used for potentials produced by
    /// reconstruction, where the grid is chosen by the solver.
    pub fn without_support_check(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        check_len(&spec, &values)?;
        Ok(Self::assemble(spec, values))
    }

    pub fn from_fn(spec: GridSpec<T>, q: impl Fn(T) -> T) -> Result<Self> {
        Self::new(spec, spec.xs().into_iter().map(q).collect())
    }

    pub fn zero(spec: GridSpec<T>) -> Self {
        Self::assemble(spec, vec![T::zero(); spec.n_points()])
    }

    /// Accepts a grid function whose imaginary parts are negligible.
    pub fn from_grid(f: &GridFunction<T>) -> Result<Self> {
        if f.imag_fraction() > T::lit(1e-12) {
            return Err(Error::validation("potential must be real"));
        }
        Self::new(*f.spec(), f.real_parts())
    }

    fn assemble(spec: GridSpec<T>, values: Vec<T>) -> Self {
        let h = spec.spacing();
        let m_norm = values
            .iter()
            .enumerate()
            .map(|(j, q)| q.abs() * (T::one() + spec.x(j).abs()))
            .sum::<T>()
            * h;
        Self { spec, values, m_norm }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `∫ |q(x)| (1 + |x|) dx`.
    pub fn m_norm(&self) -> T {
        self.m_norm
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::zero(), |m, q| m.max(q.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, q| m.min(*q))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|q| *q == T::zero())
    }

    pub fn to_grid_function(&self) -> GridFunction<T> {
        GridFunction::from_real(self.spec, self.values.clone()).expect("finite by construction")
    }

    /// `q` at the midpoint of cell `j` (between samples `j` and `j+1`) by
    /// four-point Lagrange interpolation.
    pub(crate) fn midpoint(&self, j: usize) -> T {
        let q = &self.values;
        let n = q.len();
        let s = j.saturating_sub(1).min(n - 4);
        // nodes s..s+3, evaluation at j + 1/2 in index units
        let t = T::from_usize_lossy(j) + T::lit(0.5) - T::from_usize_lossy(s);
        let mut acc = T::zero();
        for a in 0..4 {
            let mut w = T::one();
            for b in 0..4 {
                if a != b {
                    w = w * (t - T::from_usize_lossy(b))
                        / (T::from_usize_lossy(a) - T::from_usize_lossy(b));
                }
            }
            acc = acc + w * q[s + a];
        }
        acc
    }

    /// Reads the `x,q` layout.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = read_columns(reader, &["x", "q"], None)?;
        let xs: Vec<T> = rows.iter().map(|r| T::lit(r.0)).collect();
        let spec = spec_from_samples(&xs)?;
        Self::new(spec, rows.iter().map(|r| T::lit(r.1)).collect())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "q"]).map_err(csv_err)?;
        for (j, q) in self.values.iter().enumerate() {
            w.write_record([self.spec.x(j).to_string(), q.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_len<T: Real>(spec: &GridSpec<T>, values: &[T]) -> Result<()> {
    if values.len() != spec.n_points() {
        return Err(Error::validation(format!(
            "potential has {} samples, grid expects {}",
            values.len(),
            spec.n_points()
        )));
    }
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!("non-finite potential sample at index {j}")));
    }
    Ok(())
}

/// `-m(m+1) sech²(x)`, reflectionless with bound states `κ = m, …, 1`.
pub fn sech2_ladder<T: Real>(spec: GridSpec<T>, m: usize) -> Result<Potential<T>> {
    let depth = T::from_usize_lossy(m * (m + 1));
    Potential::from_fn(spec, |x| {
        let c = x.cosh();
        if c.is_finite() {
            -depth / (c * c)
        } else {
            T::zero()
        }
    })
}

/// `α e^{-x²}`.
pub fn gaussian<T: Real>(spec: GridSpec<T>, amplitude: T) -> Result<Potential<T>> {
    Potential::from_fn(spec, |x| amplitude * (-x * x).exp())
}

/// `depth` on `|x| < half_width`, zero elsewhere. The edge samples carry
/// half the depth so the trapezoid rule sees the exact area.
pub fn square_well<T: Real>(spec: GridSpec<T>, depth: T, half_width: T) -> Result<Potential<T>> {
    let h = spec.spacing();
    Potential::from_fn(spec, |x| {
        let d = x.abs() - half_width;
        if d.abs() < T::lit(1e-9) * h {
            depth / T::lit(2.0)
        } else if d < T::zero() {
            depth
        } else {
            T::zero()
        }
    })
}
