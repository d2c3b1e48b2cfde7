use std::io::{Read, Write};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bound::{bound_states, BoundState};
use super::jost::{jost_solve, wronskian, JostSolution, Side};
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance of the unitarity and conjugate-symmetry invariants.
pub const INVARIANT_TOL: f64 = 1e-6;

/// Integral-formula and Wronskian extractions should agree this well.
pub const AGREEMENT_WARN: f64 = 1e-4;

/// Above this disagreement the solve is rejected.
pub const AGREEMENT_FAIL: f64 = 1e-3;

/// `k_m = -k_max + (m + ½)·2k_max/n_k`: symmetric about 0 and never 0.
pub fn staggered_k_grid<T: Real>(k_max: T, n_k: usize) -> Result<Vec<T>> {
    if n_k < 2 || !n_k.is_multiple_of(2) {
        return Err(Error::validation(format!("n_k must be even and >= 2, got {n_k}")));
    }
    if !(k_max > T::zero()) || !k_max.is_finite() {
        return Err(Error::validation(format!("k_max must be positive, got {k_max}")));
    }
    let dk = T::lit(2.0) * k_max / T::from_usize_lossy(n_k);
    Ok((0..n_k)
        .map(|m| -k_max + (T::from_usize_lossy(m) + T::lit(0.5)) * dk)
        .collect())
}

/// Scattering matrix on a real k-grid plus the discrete spectrum.
///
/// `s11 = s22` is the transmission coefficient, `s12` the reflection seen
/// from the left (incoming `e^{ikx}` from `-∞`), `s21` from the right.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData<T> {
    k: Vec<T>,
    s11: Vec<Complex<T>>,
    s12: Vec<Complex<T>>,
    s21: Vec<Complex<T>>,
    s22: Vec<Complex<T>>,
    bound_states: Vec<BoundState<T>>,
}

impl<T: Real> ScatteringData<T> {
    /// Validates shapes, the k-grid and the unitarity, `|s11| ≤ 1` and
    /// conjugate-symmetry invariants (the last only at `±k` pairs present
    /// in the grid).
    pub fn new(
        k: Vec<T>,
        s11: Vec<Complex<T>>,
        s12: Vec<Complex<T>>,
        s21: Vec<Complex<T>>,
        s22: Vec<Complex<T>>,
        bound_states: Vec<BoundState<T>>,
    ) -> Result<Self> {
        let n = k.len();
        if n == 0 {
            return Err(Error::validation("empty k-grid"));
        }
        for (name, s) in [("s11", &s11), ("s12", &s12), ("s21", &s21), ("s22", &s22)] {
            if s.len() != n {
                return Err(Error::validation(format!("{name} has {} samples, k has {n}", s.len())));
            }
            if s.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::validation(format!("{name} has non-finite samples")));
            }
        }
        if k.iter().any(|k| !k.is_finite() || *k == T::zero()) {
            return Err(Error::validation("k-grid must be finite and exclude 0"));
        }
        if k.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("k-grid must be strictly ascending"));
        }
        let tol = T::lit(INVARIANT_TOL);
        for i in 0..n {
            let u1 = s11[i].norm_sqr() + s12[i].norm_sqr() - T::one();
            let u2 = s22[i].norm_sqr() + s21[i].norm_sqr() - T::one();
            if u1.abs() > tol || u2.abs() > tol {
                return Err(Error::validation(format!(
                    "unitarity violated at k = {}: |s11|²+|s12|²-1 = {u1}, |s22|²+|s21|²-1 = {u2}",
                    k[i]
                )));
            }
            if s11[i].norm() > T::one() + tol {
                return Err(Error::validation(format!("|s11| > 1 at k = {}", k[i])));
            }
        }
        let sd = Self {
            k,
            s11,
            s12,
            s21,
            s22,
            bound_states,
        };
        let asym = sd.conjugate_symmetry_error();
        if asym > tol {
            return Err(Error::validation(format!(
                "conjugate symmetry violated by {asym}"
            )));
        }
        for w in sd.bound_states.windows(2) {
            if w[0].kappa <= w[1].kappa {
                return Err(Error::validation("bound states must be ordered by decreasing kappa"));
            }
        }
        for b in &sd.bound_states {
            if !(b.kappa > T::zero()) || !(b.norming > T::zero()) {
                return Err(Error::validation("bound states need positive kappa and norming"));
            }
        }
        Ok(sd)
    }

    pub fn k(&self) -> &[T] {
        &self.k
    }

    pub fn s11(&self) -> &[Complex<T>] {
        &self.s11
    }

    pub fn s12(&self) -> &[Complex<T>] {
        &self.s12
    }

    pub fn s21(&self) -> &[Complex<T>] {
        &self.s21
    }

    pub fn s22(&self) -> &[Complex<T>] {
        &self.s22
    }

    pub fn bound_states(&self) -> &[BoundState<T>] {
        &self.bound_states
    }

    /// Largest `|s_ij(-k) - conj s_ij(k)|` over mirrored grid pairs.
    pub fn conjugate_symmetry_error(&self) -> T {
        let n = self.k.len();
        let mut worst = T::zero();
        for i in 0..n {
            let j = n - 1 - i;
            let scale = T::one().max(self.k[i].abs());
            if (self.k[i] + self.k[j]).abs() > T::lit(1e-12) * scale {
                continue;
            }
            for s in [&self.s11, &self.s12, &self.s21, &self.s22] {
                worst = worst.max((s[j] - s[i].conj()).norm());
            }
        }
        worst
    }

    /// Largest `||s11|²+|s12|² - 1|`.
    pub fn unitarity_error(&self) -> T {
        self.s11
            .iter()
            .zip(&self.s12)
            .zip(self.s22.iter().zip(&self.s21))
            .fold(T::zero(), |m, ((a, b), (c, d))| {
                m.max((a.norm_sqr() + b.norm_sqr() - T::one()).abs())
                    .max((c.norm_sqr() + d.norm_sqr() - T::one()).abs())
            })
    }

    pub fn to_file(&self) -> ScatteringFile {
        let pairs = |s: &[Complex<T>]| s.iter().map(|v| [v.re.to_f64_lossy(), v.im.to_f64_lossy()]).collect();
        ScatteringFile {
            k: self.k.iter().map(|k| k.to_f64_lossy()).collect(),
            s11: pairs(&self.s11),
            s12: pairs(&self.s12),
            s21: pairs(&self.s21),
            s22: pairs(&self.s22),
            bound_states: self
                .bound_states
                .iter()
                .map(|b| BoundState {
                    kappa: b.kappa.to_f64_lossy(),
                    norming: b.norming.to_f64_lossy(),
                })
                .collect(),
        }
    }

    pub fn from_file(f: ScatteringFile) -> Result<Self> {
        let c = |s: Vec<[f64; 2]>| s.into_iter().map(|[re, im]| Complex::new(T::lit(re), T::lit(im))).collect();
        Self::new(
            f.k.into_iter().map(T::lit).collect(),
            c(f.s11),
            c(f.s12),
            c(f.s21),
            c(f.s22),
            f.bound_states
                .into_iter()
                .map(|b| BoundState {
                    kappa: T::lit(b.kappa),
                    norming: T::lit(b.norming),
                })
                .collect(),
        )
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let f: ScatteringFile = serde_json::from_reader(reader)
            .map_err(|e| Error::validation(format!("scattering data: {e}")))?;
        Self::from_file(f)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, &self.to_file())
            .map_err(|e| Error::validation(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }
}

/// On-disk layout of [`ScatteringData`]: complex numbers as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringFile {
    pub k: Vec<f64>,
    pub s11: Vec<[f64; 2]>,
    pub s12: Vec<[f64; 2]>,
    pub s21: Vec<[f64; 2]>,
    pub s22: Vec<[f64; 2]>,
    pub bound_states: Vec<BoundState<f64>>,
}

/// Entries at one real `k` from both extraction routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointScattering<T> {
    pub s11: Complex<T>,
    pub s12: Complex<T>,
    pub s21: Complex<T>,
    /// `s21` from `-s12(-k) s11(k) / s11(-k)`.
    pub s21_symmetry: Complex<T>,
    pub s11_integral: Complex<T>,
    pub s12_integral: Complex<T>,
}

impl<T: Real> PointScattering<T> {
    pub fn disagreement(&self) -> T {
        (self.s11 - self.s11_integral)
            .norm()
            .max((self.s12 - self.s12_integral).norm())
            .max((self.s21 - self.s21_symmetry).norm())
    }
}

fn trapezoid<T: Real>(h: T, f: impl Iterator<Item = Complex<T>>) -> Complex<T> {
    // every integrand here vanishes at both ends of the box
    f.fold(Complex::new(T::zero(), T::zero()), |a, b| a + b) * h
}

/// Scattering entries at a single real `k ≠ 0`.
pub fn scatter_at<T: Real>(q: &Potential<T>, k: T) -> Result<PointScattering<T>> {
    if k == T::zero() || !k.is_finite() {
        return Err(Error::validation("scattering needs a finite k != 0"));
    }
    let kc = Complex::new(k, T::zero());
    let fp = jost_solve(q, kc, Side::Plus)?;
    let fm = jost_solve(q, kc, Side::Minus)?;
    Ok(point_from(q, k, &fp, &fm))
}

fn conj_solution<T: Real>(f: &JostSolution<T>) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    (
        f.values().iter().map(|v| v.conj()).collect(),
        f.derivatives().iter().map(|v| v.conj()).collect(),
    )
}

fn point_from<T: Real>(q: &Potential<T>, k: T, fp: &JostSolution<T>, fm: &JostSolution<T>) -> PointScattering<T> {
    let spec = q.spec();
    let n = spec.n_points();
    let mid = n / 2;
    let i = Complex::new(T::zero(), T::one());
    let two_ik = i * k * T::lit(2.0);
    // for real q and real k, f(-k) = conj f(k)
    let (fm_neg, dfm_neg) = conj_solution(fm);
    let (fp_neg, dfp_neg) = conj_solution(fp);
    let w = |a: Complex<T>, da: Complex<T>, b: Complex<T>, db: Complex<T>| a * db - da * b;

    let w_mp = wronskian(fm, fp, mid);
    let s11 = two_ik / w_mp;
    let s12 = -w(fm_neg[mid], dfm_neg[mid], fp.values()[mid], fp.derivatives()[mid]) / w_mp;
    let w_pm = wronskian(fp, fm, mid);
    let s21 = -w(fp_neg[mid], dfp_neg[mid], fm.values()[mid], fm.derivatives()[mid]) / w_pm;
    // s11(-k) = conj s11(k), s12(-k) = conj s12(k)
    let s21_symmetry = -s12.conj() * s11 / s11.conj();

    let h = spec.spacing();
    let qv = q.values();
    let a_int = trapezoid(
        h,
        (0..n).map(|j| crate::scalar::cis(-k * spec.x(j)) * qv[j] * fp.values()[j]),
    );
    let b_int = trapezoid(
        h,
        (0..n).map(|j| crate::scalar::cis(k * spec.x(j)) * qv[j] * fp.values()[j]),
    );
    let big_a = Complex::new(T::one(), T::zero()) - a_int / two_ik;
    let big_b = b_int / two_ik;
    PointScattering {
        s11,
        s12,
        s21,
        s21_symmetry,
        s11_integral: Complex::new(T::one(), T::zero()) / big_a,
        s12_integral: big_b / big_a,
    }
}

/// Full scattering data of `q` on `k_grid`, including bound states.
///
/// Reported values are the Wronskian extraction; the integral formulas and
/// the symmetry relation for `s21` serve as a cross-check.
pub fn scattering_matrix<T: Real>(q: &Potential<T>, k_grid: &[T]) -> Result<ScatteringData<T>> {
    if q.is_zero() {
        // free motion: exact data instead of rounding noise
        let n = k_grid.len();
        let one = vec![Complex::new(T::one(), T::zero()); n];
        let zero = vec![Complex::new(T::zero(), T::zero()); n];
        return ScatteringData::new(k_grid.to_vec(), one.clone(), zero.clone(), zero, one, Vec::new());
    }
    let points = k_grid
        .par_iter()
        .map(|&k| scatter_at(q, k))
        .collect::<Result<Vec<_>>>()?;
    let (worst_i, worst) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.disagreement()))
        .fold((0, T::zero()), |a, b| if b.1 > a.1 { b } else { a });
    if worst > T::lit(AGREEMENT_FAIL) {
        let p = &points[worst_i];
        log::error!(
            "scattering paths disagree at k = {}: s11 {} vs {}, s12 {} vs {}, s21 {} vs {}",
            k_grid[worst_i],
            p.s11,
            p.s11_integral,
            p.s12,
            p.s12_integral,
            p.s21,
            p.s21_symmetry
        );
        return Err(Error::numerical(format!(
            "integral and Wronskian scattering disagree by {worst} at k = {} (refine the grid)",
            k_grid[worst_i]
        )));
    }
    if worst > T::lit(AGREEMENT_WARN) {
        log::warn!("scattering paths disagree by {worst} at k = {}", k_grid[worst_i]);
    }
    let bs = bound_states(q)?;
    ScatteringData::new(
        k_grid.to_vec(),
        points.iter().map(|p| p.s11).collect(),
        points.iter().map(|p| p.s12).collect(),
        points.iter().map(|p| p.s21).collect(),
        points.iter().map(|p| p.s11).collect(),
        bs,
    )
}

/// Checks `s11 f₊(k,x) = s12 f₋(k,x) + f₋(-k,x)` on the whole grid; returns
/// the largest residual relative to `sup|f₊|`.
pub fn jost_relation_check<T: Real>(q: &Potential<T>, k: T) -> Result<T> {
    if k == T::zero() {
        return Err(Error::validation("relation check needs k != 0"));
    }
    let kc = Complex::new(k, T::zero());
    let fp = jost_solve(q, kc, Side::Plus)?;
    let fm = jost_solve(q, kc, Side::Minus)?;
    let p = point_from(q, k, &fp, &fm);
    let (fm_neg, _) = conj_solution(&fm);
    let sup = fp.values().iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let worst = fp
        .values()
        .iter()
        .zip(fm.values())
        .zip(&fm_neg)
        .fold(T::zero(), |m, ((a, b), c)| m.max((p.s11 * a - p.s12 * b - c).norm()));
    Ok(worst / sup)
}
