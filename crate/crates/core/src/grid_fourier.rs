//! Uniformly sampled functions on a finite interval, their Fourier
//! transforms, norms and modulus/phase decomposition.
//!
//! Transform convention:
//!
//! ```text
//!   f̃(k) = ∫ f(x) e^{-ikx} dx,        f(x) = (1/2π) ∫ f̃(k) e^{ikx} dk
//! ```
//!
//! so that `‖f‖₂ = (2π)^{-1/2} ‖f̃‖₂`. On a grid of `N` points with spacing
//! `h` both integrals become the periodic trapezoid rule, evaluated with an
//! FFT on the dual grid `k_m = 2πm/(Nh)`, `m = -N/2 .. N/2-1`.

use std::io::{Read, Write};

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cis, wrap_angle, Real};

/// Below this modulus the phase of a spectral sample is undefined and is
/// carried over from the neighbouring sample.
pub const PHASE_ATOL: f64 = 1e-12;

/// Relative end-of-box amplitude above which a transform input is
/// reported as not decaying.
pub const DECAY_WARN_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    x_min: T,
    x_max: T,
    n_points: usize,
}

impl<T: Real> GridSpec<T> {
    /// Grid of `n_points` samples `x_j = x_min + j·h`, `h = (x_max-x_min)/n_points`.
    /// The right end `x_max` is the periodic image of `x_min` and is not sampled.
    pub fn new(x_min: T, x_max: T, n_points: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::validation("grid bounds must be finite"));
        }
        if x_min >= x_max {
            return Err(Error::validation(format!(
                "grid requires x_min < x_max (got {x_min} >= {x_max})"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::validation(format!(
                "grid size must be a power of two >= 16 (got {n_points})"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn spacing(&self) -> T {
        self.length() / T::from_usize_lossy(self.n_points)
    }

    pub fn x(&self, j: usize) -> T {
        self.x_min + self.spacing() * T::from_usize_lossy(j)
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Spacing of the dual wavenumber grid, `2π / (x_max - x_min)`.
    pub fn k_spacing(&self) -> T {
        T::two_pi() / self.length()
    }

    /// Dual wavenumbers in ascending order; index `N/2` holds `k = 0`.
    pub fn dual_k(&self) -> Vec<T> {
        let dk = self.k_spacing();
        let half = (self.n_points / 2) as i64;
        (0..self.n_points as i64)
            .map(|m| dk * T::from_i64(m - half).unwrap())
            .collect()
    }

    /// Largest wavenumber magnitude on the dual grid (the Nyquist number).
    pub fn k_nyquist(&self) -> T {
        T::PI() / self.spacing()
    }
}

/// Complex samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    spec: GridSpec<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != spec.n_points() {
            return Err(Error::validation(format!(
                "grid function has {} samples, grid expects {}",
                values.len(),
                spec.n_points()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::validation(format!("non-finite sample at index {j}")));
        }
        Ok(Self { spec, values })
    }

    pub fn from_real(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        Self::new(spec, values.into_iter().map(|v| Complex::new(v, T::zero())).collect())
    }

    pub fn from_fn(spec: GridSpec<T>, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        Self::new(spec, spec.xs().into_iter().map(f).collect())
    }

    pub fn from_real_fn(spec: GridSpec<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_fn(spec, |x| Complex::new(f(x), T::zero()))
    }

    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            values: vec![Complex::new(T::zero(), T::zero()); spec.n_points()],
        }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Largest imaginary part relative to the largest modulus (0 for the
    /// zero function).
    pub fn imag_fraction(&self) -> T {
        let sup = self.max_abs();
        if sup == T::zero() {
            return T::zero();
        }
        self.values.iter().fold(T::zero(), |m, v| m.max(v.im.abs())) / sup
    }

    /// Whether both ends of the box are below `rtol · sup|f|`.
    pub fn decays_at_edges(&self, rtol: T) -> bool {
        let sup = self.max_abs();
        if sup == T::zero() {
            return true;
        }
        let n = self.values.len();
        self.values[0].norm() < rtol * sup && self.values[n - 1].norm() < rtol * sup
    }

    /// The periodic trapezoid sum `h Σ f(x_j) e^{-ik x_j}` at an arbitrary
    /// wavenumber; agrees with [`forward_transform`] on the dual grid.
    pub fn transform_at(&self, k: T) -> Complex<T> {
        let h = self.spec.spacing();
        let mut acc = Complex::new(T::zero(), T::zero());
        for (j, v) in self.values.iter().enumerate() {
            if v.re == T::zero() && v.im == T::zero() {
                continue;
            }
            acc = acc + *v * cis(-k * self.spec.x(j));
        }
        acc * h
    }

    /// Reads the `x,re,im` CSV layout (the `im` column is optional).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = read_columns(reader, &["x", "re"], Some("im"))?;
        let xs: Vec<T> = rows.iter().map(|r| T::lit(r.0)).collect();
        let spec = spec_from_samples(&xs)?;
        let values = rows
            .iter()
            .map(|r| Complex::new(T::lit(r.1), T::lit(r.2)))
            .collect();
        Self::new(spec, values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "re", "im"]).map_err(csv_err)?;
        for (j, v) in self.values.iter().enumerate() {
            w.write_record([
                self.spec.x(j).to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Modulus/phase split of spectral samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDecomposition<T> {
    pub modulus: Vec<T>,
    /// Unwrapped phase in radians.
    pub phase: Vec<T>,
    /// `true` where the modulus is at least [`PHASE_ATOL`] and the phase is
    /// meaningful.
    pub mask: Vec<bool>,
    pub winding: i64,
}

/// Sampled Fourier data on a wavenumber grid with its modulus and
/// unwrapped phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction<T> {
    k_grid: Vec<T>,
    values: Vec<Complex<T>>,
    modulus: Vec<T>,
    phase_unwrapped: Vec<T>,
    phase_mask: Vec<bool>,
    winding: i64,
    dual_of: Option<GridSpec<T>>,
}

impl<T: Real> SpectralFunction<T> {
    /// Builds a spectral function on an ascending wavenumber grid.
    /// `dual_of` names the x-grid whose FFT-dual grid `k_grid` is, if any;
    /// only such functions can be inverse transformed.
    pub fn new(k_grid: Vec<T>, values: Vec<Complex<T>>, dual_of: Option<GridSpec<T>>) -> Result<Self> {
        if k_grid.len() != values.len() {
            return Err(Error::validation(format!(
                "spectral grid has {} wavenumbers but {} samples",
                k_grid.len(),
                values.len()
            )));
        }
        if k_grid.is_empty() {
            return Err(Error::validation("empty spectral grid"));
        }
        if k_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::validation("wavenumber grid must be strictly ascending"));
        }
        if let Some(j) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::validation(format!("non-finite spectral sample at index {j}")));
        }
        if let Some(spec) = &dual_of {
            let dual = spec.dual_k();
            let tol = T::lit(1e-9) * spec.k_spacing();
            if dual.len() != k_grid.len()
                || dual.iter().zip(&k_grid).any(|(a, b)| (*a - *b).abs() > tol)
            {
                return Err(Error::validation("wavenumbers do not match the dual grid"));
            }
        }
        let dec = phase_decompose(&k_grid, &values);
        Ok(Self {
            k_grid,
            values,
            modulus: dec.modulus,
            phase_unwrapped: dec.phase,
            phase_mask: dec.mask,
            winding: dec.winding,
            dual_of,
        })
    }

    pub fn k_grid(&self) -> &[T] {
        &self.k_grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn modulus(&self) -> &[T] {
        &self.modulus
    }

    pub fn phase_unwrapped(&self) -> &[T] {
        &self.phase_unwrapped
    }

    pub fn phase_mask(&self) -> &[bool] {
        &self.phase_mask
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn dual_of(&self) -> Option<&GridSpec<T>> {
        self.dual_of.as_ref()
    }

    /// Pointwise map over `(k, value)` keeping the grid.
    pub fn map(&self, f: impl Fn(T, Complex<T>) -> Complex<T>) -> Result<Self> {
        let values = self
            .k_grid
            .iter()
            .zip(&self.values)
            .map(|(k, v)| f(*k, *v))
            .collect();
        Self::new(self.k_grid.clone(), values, self.dual_of)
    }

    /// `L²` norm over the wavenumber grid (uniform spacing assumed).
    pub fn l2(&self) -> T {
        if self.k_grid.len() < 2 {
            return T::zero();
        }
        let dk = self.k_grid[1] - self.k_grid[0];
        (self.values.iter().map(|v| v.norm_sqr()).sum::<T>() * dk).sqrt()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let rows = read_columns(reader, &["k", "re"], Some("im"))?;
        let k = rows.iter().map(|r| T::lit(r.0)).collect();
        let values = rows
            .iter()
            .map(|r| Complex::new(T::lit(r.1), T::lit(r.2)))
            .collect();
        Self::new(k, values, None)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "re", "im"]).map_err(csv_err)?;
        for (k, v) in self.k_grid.iter().zip(&self.values) {
            w.write_record([k.to_string(), v.re.to_string(), v.im.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Norms of a grid function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport<T> {
    pub l2: T,
    /// `L²` norm of the derivative.
    pub h1_seminorm: T,
    pub sup: T,
    pub sup_grad: T,
    /// `∫|f|(1+|x|)dx`.
    pub m_norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgmonCheck<T> {
    /// `sup|f|²`
    pub lhs: T,
    /// `2‖f‖₂‖f'‖₂`
    pub rhs: T,
    /// `lhs / rhs`, defined as 0 when both vanish.
    pub ratio: T,
}

fn fft_in_place<T: Real>(buf: &mut [Complex<T>], inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Approximates `f̃(k) = ∫ f(x) e^{-ikx} dx` on the dual grid.
pub fn forward_transform<T: Real>(f: &GridFunction<T>) -> Result<SpectralFunction<T>> {
    let spec = *f.spec();
    if !f.decays_at_edges(T::lit(DECAY_WARN_RTOL)) {
        log::warn!("forward_transform: input does not decay at the box edges; expect aliasing");
    }
    let n = spec.n_points();
    let h = spec.spacing();
    let mut buf = f.values().to_vec();
    fft_in_place(&mut buf, false);
    let k = spec.dual_k();
    let half = n / 2;
    let values = (0..n)
        .map(|m| {
            let p = (m + n - half) % n;
            buf[p] * cis(-k[m] * spec.x_min()) * h
        })
        .collect();
    SpectralFunction::new(k, values, Some(spec))
}

/// Inverse of [`forward_transform`]; requires `F` to live on a dual grid.
pub fn inverse_transform<T: Real>(big_f: &SpectralFunction<T>) -> Result<GridFunction<T>> {
    let spec = *big_f
        .dual_of()
        .ok_or_else(|| Error::validation("spectral function is not on the dual grid of an x-grid"))?;
    inverse_on(&spec, big_f.values())
}

/// Inverse transform of centered dual-grid samples onto `spec`.
pub(crate) fn inverse_on<T: Real>(spec: &GridSpec<T>, values: &[Complex<T>]) -> Result<GridFunction<T>> {
    let n = spec.n_points();
    if values.len() != n {
        return Err(Error::validation("spectral samples do not match the grid"));
    }
    let k = spec.dual_k();
    let half = n / 2;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for m in 0..n {
        let p = (m + n - half) % n;
        buf[p] = values[m] * cis(k[m] * spec.x_min());
    }
    fft_in_place(&mut buf, true);
    let scale = T::one() / (T::from_usize_lossy(n) * spec.spacing());
    GridFunction::new(*spec, buf.into_iter().map(|v| v * scale).collect())
}

/// Derivative of periodic uniformly spaced samples by multiplication with
/// `ik` in Fourier space. The Nyquist coefficient is dropped.
pub fn spectral_derivative<T: Real>(values: &[Complex<T>], spacing: T) -> Vec<Complex<T>> {
    let n = values.len();
    if n < 2 {
        return vec![Complex::new(T::zero(), T::zero()); n];
    }
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, false);
    let dk = T::two_pi() / (spacing * T::from_usize_lossy(n));
    for (p, v) in buf.iter_mut().enumerate() {
        let m = if p < n / 2 {
            p as i64
        } else {
            p as i64 - n as i64
        };
        if n.is_multiple_of(2) && p == n / 2 {
            *v = Complex::new(T::zero(), T::zero());
        } else {
            let k = dk * T::from_i64(m).unwrap();
            *v = *v * Complex::new(T::zero(), k);
        }
    }
    fft_in_place(&mut buf, true);
    let inv_n = T::one() / T::from_usize_lossy(n);
    buf.into_iter().map(|v| v * inv_n).collect()
}

/// Second-order central differences (one-sided at the ends); used only to
/// cross-check [`spectral_derivative`].
pub fn central_difference<T: Real>(values: &[Complex<T>], spacing: T) -> Vec<Complex<T>> {
    let n = values.len();
    let two = T::lit(2.0);
    (0..n)
        .map(|j| {
            if j == 0 {
                (values[1] - values[0]) / spacing
            } else if j == n - 1 {
                (values[n - 1] - values[n - 2]) / spacing
            } else {
                (values[j + 1] - values[j - 1]) / (two * spacing)
            }
        })
        .collect()
}

/// Norms by the periodic trapezoid rule; derivatives are spectral.
pub fn norms<T: Real>(f: &GridFunction<T>) -> NormReport<T> {
    let spec = f.spec();
    let h = spec.spacing();
    let df = spectral_derivative(f.values(), h);
    let l2 = (f.values().iter().map(|v| v.norm_sqr()).sum::<T>() * h).sqrt();
    let h1_seminorm = (df.iter().map(|v| v.norm_sqr()).sum::<T>() * h).sqrt();
    let sup = f.max_abs();
    let sup_grad = df.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let m_norm = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v.norm() * (T::one() + spec.x(j).abs()))
        .sum::<T>()
        * h;
    NormReport {
        l2,
        h1_seminorm,
        sup,
        sup_grad,
        m_norm,
    }
}

/// Compares `sup|f|²` with `2‖f‖₂‖f'‖₂`.
pub fn agmon_check<T: Real>(f: &GridFunction<T>) -> AgmonCheck<T> {
    let r = norms(f);
    let lhs = r.sup * r.sup;
    let rhs = T::lit(2.0) * r.l2 * r.h1_seminorm;
    let ratio = if rhs > T::zero() { lhs / rhs } else { T::zero() };
    AgmonCheck { lhs, rhs, ratio }
}

/// Modulus and unwrapped phase of spectral samples on an ascending grid.
///
/// Unwrapping starts at the smallest non-negative wavenumber (the `k = 0`
/// sample on a dual grid, the first positive one on a staggered grid) and
/// proceeds outward in both directions, removing `2π` jumps between
/// neighbours. Where the modulus is below [`PHASE_ATOL`] the phase is held
/// from the previous sample in scan order and the mask entry is `false`.
pub fn phase_decompose<T: Real>(k_grid: &[T], values: &[Complex<T>]) -> PhaseDecomposition<T> {
    let n = values.len();
    let atol = T::lit(PHASE_ATOL);
    let modulus: Vec<T> = values.iter().map(|v| v.norm()).collect();
    let mask: Vec<bool> = modulus.iter().map(|m| *m >= atol).collect();
    let mut phase = vec![T::zero(); n];
    if n == 0 {
        return PhaseDecomposition {
            modulus,
            phase,
            mask,
            winding: 0,
        };
    }
    let anchor = k_grid
        .iter()
        .position(|k| *k >= T::zero())
        .unwrap_or(n - 1);
    phase[anchor] = if mask[anchor] {
        values[anchor].arg()
    } else {
        T::zero()
    };
    let step = |prev: T, j: usize| -> T {
        if mask[j] {
            prev + wrap_angle(values[j].arg() - prev)
        } else {
            prev
        }
    };
    for j in anchor + 1..n {
        phase[j] = step(phase[j - 1], j);
    }
    for j in (0..anchor).rev() {
        phase[j] = step(phase[j + 1], j);
    }
    let winding = ((phase[n - 1] - phase[0]) / T::two_pi())
        .round()
        .to_i64()
        .unwrap_or(0);
    PhaseDecomposition {
        modulus,
        phase,
        mask,
        winding,
    }
}

/// Translates `f` by multiplying its transform with `e^{ik·shift}`; the
/// result samples `f(x + shift)` (periodically).
pub fn translate_via_phase<T: Real>(f: &GridFunction<T>, shift: T) -> Result<GridFunction<T>> {
    let spec = f.spec();
    if !shift.is_finite() || shift.abs() >= spec.length() / T::lit(4.0) {
        return Err(Error::validation(format!(
            "shift {shift} must be smaller than a quarter of the box"
        )));
    }
    let big_f = forward_transform(f)?;
    let shifted = big_f.map(|k, v| v * cis(k * shift))?;
    inverse_transform(&shifted)
}

pub(crate) fn spec_from_samples<T: Real>(xs: &[T]) -> Result<GridSpec<T>> {
    if xs.len() < 2 {
        return Err(Error::validation("need at least two samples"));
    }
    let h = xs[1] - xs[0];
    if !(h > T::zero()) {
        return Err(Error::validation("x column must be strictly increasing"));
    }
    let tol = T::lit(1e-6) * h;
    for (j, x) in xs.iter().enumerate() {
        if (*x - (xs[0] + h * T::from_usize_lossy(j))).abs() > tol {
            // header is line 1, first sample line 2
            return Err(Error::validation(format!(
                "line {}: x samples are not uniformly spaced",
                j + 2
            )));
        }
    }
    GridSpec::new(xs[0], xs[0] + h * T::from_usize_lossy(xs.len()), xs.len())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::validation(format!("line {}: {e}", p.line())),
        None => Error::validation(e.to_string()),
    }
}

/// Reads numeric CSV columns by header name; the optional column defaults
/// to 0. Errors carry the 1-based file line.
pub(crate) fn read_columns<R: Read>(
    reader: R,
    required: &[&str; 2],
    optional: Option<&str>,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let c0 = col(required[0])
        .ok_or_else(|| Error::validation(format!("line 1: missing column `{}`", required[0])))?;
    let c1 = col(required[1])
        .ok_or_else(|| Error::validation(format!("line 1: missing column `{}`", required[1])))?;
    let c2 = optional.and_then(col);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |c: usize| -> Result<f64> {
            let s = rec
                .get(c)
                .ok_or_else(|| Error::validation(format!("line {line}: missing field")))?;
            let v: f64 = s
                .parse()
                .map_err(|_| Error::validation(format!("line {line}: cannot parse `{s}` as a number")))?;
            if !v.is_finite() {
                return Err(Error::validation(format!("line {line}: non-finite value")));
            }
            Ok(v)
        };
        let a = field(c0)?;
        let b = field(c1)?;
        let c = match c2 {
            Some(c) if rec.get(c).is_some_and(|s| !s.is_empty()) => field(c)?,
            _ => 0.0,
        };
        out.push((a, b, c));
    }
    if out.is_empty() {
        return Err(Error::validation("no data rows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_grid(n: usize, half: f64) -> GridFunction<f64> {
        let spec = GridSpec::<f64>::new(-half, half, n).unwrap();
        GridFunction::from_real_fn(spec, |x| (-x * x / 2.0).exp()).unwrap()
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::<f64>::new(1.0, 0.0, 64).is_err());
        assert!(GridSpec::<f64>::new(0.0, 1.0, 8).is_err());
        assert!(GridSpec::<f64>::new(0.0, 1.0, 100).is_err());
        assert!(GridSpec::<f64>::new(0.0, f64::INFINITY, 64).is_err());
        let g = GridSpec::<f64>::new(-1.0, 1.0, 16).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.dual_k()[8], 0.0);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let spec = GridSpec::<f64>::new(-1.0, 1.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(GridFunction::from_real(spec, v).is_err());
    }

    #[test]
    fn gaussian_transform_matches_analytic_pair() {
        let f = gaussian_grid(4096, 20.0);
        let ft = forward_transform(&f).unwrap();
        let err = ft
            .k_grid()
            .iter()
            .zip(ft.values())
            .map(|(k, v)| (v - Complex::new((2.0 * PI).sqrt() * (-k * k / 2.0).exp(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn zero_function_transforms_to_zero() {
        let spec = GridSpec::<f64>::new(-5.0, 5.0, 64).unwrap();
        let ft = forward_transform(&GridFunction::zeros(spec)).unwrap();
        assert!(ft.values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(ft.winding(), 0);
        assert!(ft.phase_mask().iter().all(|m| !m));
        let back = inverse_transform(&ft).unwrap();
        assert!(back.values().iter().all(|v| v.norm() == 0.0));
        let r = norms(&GridFunction::zeros(spec));
        assert_eq!((r.l2, r.h1_seminorm, r.sup, r.sup_grad, r.m_norm), (0.0, 0.0, 0.0, 0.0, 0.0));
        let a = agmon_check(&GridFunction::zeros(spec));
        assert_eq!((a.lhs, a.rhs, a.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn plancherel_for_gaussian() {
        let f = gaussian_grid(4096, 20.0);
        let ft = forward_transform(&f).unwrap();
        let lhs = norms(&f).l2;
        let rhs = ft.l2() / (2.0 * PI).sqrt();
        assert!((lhs - rhs).abs() / lhs < 1e-8);
    }

    #[test]
    fn round_trip_is_identity() {
        let f = gaussian_grid(1024, 15.0);
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        let num: f64 = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = f.values().iter().map(|a| a.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-10);
    }

    #[test]
    fn lorentzian_spectrum_inverts_to_two_sided_exponential() {
        // (1/2π)∫ e^{ikx}/(1+k²) dk = e^{-|x|}/2; the 1/k² tail limits the
        // discrete inverse to O(h) accuracy near the cusp.
        let spec = GridSpec::<f64>::new(-40.0, 40.0, 8192).unwrap();
        let k = spec.dual_k();
        let vals = k.iter().map(|k| Complex::new(1.0 / (1.0 + k * k), 0.0)).collect();
        let big_f = SpectralFunction::new(k, vals, Some(spec)).unwrap();
        let f = inverse_transform(&big_f).unwrap();
        let xs = spec.xs();
        let jmax = (0..xs.len()).max_by(|&a, &b| f.values()[a].re.total_cmp(&f.values()[b].re)).unwrap();
        assert!(xs[jmax].abs() < 1e-12);
        let err = xs
            .iter()
            .zip(f.values())
            .map(|(x, v)| (v.re - 0.5 * (-x.abs()).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 5.0 * spec.spacing(), "err {err}");
        // even
        let n = xs.len();
        for j in 1..n / 2 {
            assert!((f.values()[n / 2 + j].re - f.values()[n / 2 - j].re).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_requires_dual_grid() {
        let f = SpectralFunction::new(vec![-1.0, 0.5, 2.0], vec![Complex::new(1.0, 0.0); 3], None).unwrap();
        assert!(matches!(inverse_transform(&f), Err(Error::Validation(_))));
        let spec = GridSpec::<f64>::new(-1.0, 1.0, 16).unwrap();
        assert!(SpectralFunction::new(vec![0.0; 16], vec![Complex::new(0.0, 0.0); 16], Some(spec)).is_err());
    }

    #[test]
    fn gaussian_norms() {
        let f = gaussian_grid(4096, 20.0);
        let r = norms(&f);
        assert!((r.l2 - PI.powf(0.25)).abs() < 1e-6);
        // ‖f'‖² = ∫x²e^{-x²} = √π/2
        assert!((r.h1_seminorm - (PI.sqrt() / 2.0).sqrt()).abs() < 1e-8);
        assert!((r.sup - 1.0).abs() < 1e-12);
        // sup|x e^{-x²/2}| = e^{-1/2}
        assert!((r.sup_grad - (-0.5f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn exponential_m_norm() {
        let spec = GridSpec::<f64>::new(-60.0, 60.0, 1 << 16).unwrap();
        let f = GridFunction::from_real_fn(spec, |x| (-x.abs()).exp()).unwrap();
        assert!((norms(&f).m_norm - 4.0).abs() < 1e-3);
    }

    #[test]
    fn central_difference_agrees_with_spectral_on_smooth_input() {
        let f = gaussian_grid(4096, 20.0);
        let h = f.spec().spacing();
        let a = spectral_derivative(f.values(), h);
        let b = central_difference(f.values(), h);
        let err = a.iter().zip(&b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < h * h, "err {err}");
    }

    #[test]
    fn agmon_gaussian_below_one() {
        let a = agmon_check(&gaussian_grid(2048, 20.0));
        // sup² = 1, 2‖f‖‖f'‖ = 2 π^{1/4} (√π/2)^{1/2}
        let expect = 1.0 / (2.0 * PI.powf(0.25) * (PI.sqrt() / 2.0).sqrt());
        assert!((a.ratio - expect).abs() < 1e-8);
        assert!(a.ratio < 1.0);
    }

    #[test]
    fn agmon_smoothed_exponential_is_half() {
        // e^{-|x|} saturates sup² ≤ ‖f‖‖f'‖, i.e. half of the factor-2 bound
        let spec = GridSpec::<f64>::new(-40.0, 40.0, 1 << 15).unwrap();
        let eps: f64 = 1e-2;
        let f = GridFunction::from_real_fn(spec, |x| (-(x * x + eps * eps).sqrt() + eps).exp()).unwrap();
        let a = agmon_check(&f);
        assert!((a.ratio - 0.5).abs() < 0.025, "ratio {}", a.ratio);
    }

    #[test]
    fn linear_phase_unwraps_to_line() {
        let k: Vec<f64> = (0..401).map(|j| -20.0 + 0.1 * j as f64).collect();
        let a = 1.5;
        let vals: Vec<_> = k.iter().map(|k| cis(a * k) * (-k * k / 50.0).exp()).collect();
        let f = SpectralFunction::new(k.clone(), vals, None).unwrap();
        for (kk, p) in k.iter().zip(f.phase_unwrapped()) {
            assert!((p - a * kk).abs() < 1e-9);
        }
        assert_eq!(f.winding(), ((a * 40.0) / (2.0 * PI)).round() as i64);
    }

    #[test]
    fn positive_real_spectrum_has_zero_phase() {
        let k: Vec<f64> = (0..64).map(|j| -3.2 + 0.1 * j as f64).collect();
        let vals = k.iter().map(|k| Complex::new(1.0 / (1.0 + k * k), 0.0)).collect();
        let f = SpectralFunction::new(k, vals, None).unwrap();
        assert!(f.phase_unwrapped().iter().all(|p| *p == 0.0));
        assert_eq!(f.winding(), 0);
    }

    #[test]
    fn single_blaschke_factor_winds_once() {
        // arg (i-k)/(i+k) = 2 arctan k sweeps 2π over the real line
        let k: Vec<f64> = (0..20001).map(|j| -1000.0 + 0.1 * j as f64).collect();
        let vals = k
            .iter()
            .map(|&k| (Complex::new(-k, 1.0) / Complex::new(k, 1.0)) / (1.0 + k * k))
            .collect();
        let f = SpectralFunction::new(k.clone(), vals, None).unwrap();
        assert_eq!(f.winding().abs(), 1);
        for (kk, p) in k.iter().zip(f.phase_unwrapped()) {
            assert!((p - 2.0 * kk.atan()).abs() < 1e-9);
        }
    }

    #[test]
    fn masked_phase_is_held() {
        let k: Vec<f64> = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        let vals = vec![
            cis(0.3),
            Complex::new(0.0, 0.0),
            cis(0.2),
            Complex::new(1e-14, 0.0),
            cis(0.5),
        ];
        let d = phase_decompose(&k, &vals);
        assert_eq!(d.mask, vec![true, false, true, false, true]);
        assert!((d.phase[1] - 0.2).abs() < 1e-15);
        assert!((d.phase[3] - 0.2).abs() < 1e-15);
        assert!((d.phase[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn translation_by_zero_is_identity() {
        let f = gaussian_grid(512, 15.0);
        let g = translate_via_phase(&f, 0.0).unwrap();
        let err = f.values().iter().zip(g.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn translation_moves_gaussian_left() {
        let f = gaussian_grid(1024, 20.0);
        let g = translate_via_phase(&f, 1.0).unwrap();
        let err = f
            .spec()
            .xs()
            .iter()
            .zip(g.values())
            .map(|(x, v)| (v - Complex::new((-(x + 1.0) * (x + 1.0) / 2.0).exp(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8);
        // modulus of the transform is untouched
        let a = forward_transform(&f).unwrap();
        let b = a.map(|k, v| v * cis(k)).unwrap();
        let dm = a.modulus().iter().zip(b.modulus()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dm < 1e-12);
        assert!(translate_via_phase(&f, 10.0).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let f = gaussian_grid(32, 4.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = GridFunction::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(f, g);

        let no_im = "x,re\n0,1\n0.5,2\n1.0,3\n1.5,4\n2.0,5\n2.5,6\n3.0,7\n3.5,8\n4,1\n4.5,1\n5,1\n5.5,1\n6,1\n6.5,1\n7,1\n7.5,1\n";
        let g = GridFunction::<f64>::read_csv(no_im.as_bytes()).unwrap();
        assert_eq!(g.values()[1], Complex::new(2.0, 0.0));

        let bad = "x,re\n0,1\n0.5,oops\n";
        let e = GridFunction::<f64>::read_csv(bad.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn f32_transform_smoke() {
        let spec = GridSpec::<f32>::new(-10.0, 10.0, 256).unwrap();
        let f = GridFunction::from_real_fn(spec, |x| (-x * x / 2.0).exp()).unwrap();
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        let err = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0f32, f32::max);
        assert!(err < 1e-5);
    }
}
