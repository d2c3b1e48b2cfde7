//! The transform of the potential from the transmission phase.
//!
//! With `q̂(κ) = ∫ q(x) e^{iκx} dx` (the opposite sign to
//! [`crate::grid_fourier`]), the reflection coefficients split as
//! `2ik s12 = q̂(2k) + I₁₂` and `2ik s21 = q̂(-2k) + I₂₁`, where the
//! corrections `I` collect the Born terms of order two and higher. Writing
//! `q̂(2k) = U + iV` and `φ = 2 arg s11`, the pair `(U, V)` is recovered
//! from `φ` and the `I` terms by closed-form expressions that are singular
//! where `sin φ = 0`; such samples are masked.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward_scattering::{born_orders, bound_states, dispersion_s11, Potential, Reflection, ScatteringData};
use crate::grid_fourier::central_difference;
use crate::scalar::{cis, wrap_angle, Real};

/// Default threshold on `|sin φ|` below which `(U, V)` are not evaluated.
pub const SINGULAR_TOL: f64 = 1e-8;

/// Transmission moduli below this leave the phase undefined.
pub const S11_ATOL: f64 = 1e-12;

/// Largest masked fraction accepted by [`q_representation_residual`].
pub const MAX_MASKED_FRACTION: f64 = 0.5;

/// Born-series reflection moduli are capped here before entering the
/// dispersion formula (the truncated series can exceed one near `k = 0`).
pub const BORN_MODULUS_CAP: f64 = 1.0 - 1e-6;

/// Phase `φ = 2 arg s11` on a k-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase<T> {
    pub phi: Vec<T>,
    /// `false` where `|s11|` is too small to carry a phase.
    pub mask: Vec<bool>,
    /// `(φ(0⁺) - φ(0⁻)) / 2π`, rounded.
    pub winding: i64,
}

/// `φ = 2 arg s11`, unwrapped separately on each half-line starting from
/// the outermost sample, where `s11 → 1`. Anchoring both halves at the ends
/// keeps `φ` odd; the turns of the phase then show up as the jump across
/// `k = 0`, which is what `winding` counts.
pub fn phase_from_s11<T: Real>(k: &[T], s11: &[Complex<T>]) -> Result<Phase<T>> {
    let n = k.len();
    if s11.len() != n {
        return Err(Error::validation("s11 and k-grid lengths differ"));
    }
    let atol = T::lit(S11_ATOL);
    let mask: Vec<bool> = s11.iter().map(|v| v.norm() >= atol).collect();
    let mut delta = vec![T::zero(); n];
    let first_pos = k.iter().position(|v| *v > T::zero()).unwrap_or(n);
    let mut sweep = |idx: &mut dyn Iterator<Item = usize>| {
        let mut prev: Option<T> = None;
        for j in idx {
            let cur = match (prev, mask[j]) {
                (None, true) => s11[j].arg(),
                (None, false) => T::zero(),
                (Some(p), true) => p + wrap_angle(s11[j].arg() - p),
                (Some(p), false) => p,
            };
            delta[j] = cur;
            prev = Some(cur);
        }
    };
    sweep(&mut (first_pos..n).rev());
    sweep(&mut (0..first_pos));
    let phi: Vec<T> = delta.iter().map(|d| T::lit(2.0) * *d).collect();
    let winding = if first_pos > 0 && first_pos < n {
        ((phi[first_pos] - phi[first_pos - 1]) / T::two_pi())
            .round()
            .to_i64()
            .unwrap_or(0)
    } else {
        0
    };
    Ok(Phase { phi, mask, winding })
}

/// `q̂(κ) = ∫ q e^{iκx} dx` by the trapezoid sum.
fn q_hat<T: Real>(q: &Potential<T>, kappa: T) -> Complex<T> {
    q.to_grid_function().transform_at(-kappa)
}

/// `I₁₂ = 2ik s12 - q̂(2k)` and `I₂₁ = 2ik s21 - q̂(-2k)`.
pub fn correction_terms<T: Real>(
    q: &Potential<T>,
    sd: &ScatteringData<T>,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    let k = sd.k();
    let k_abs = k.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let nyq = q.spec().k_nyquist();
    if T::lit(2.0) * k_abs > nyq {
        return Err(Error::validation(format!(
            "q̂(2k) at |k| = {k_abs} is beyond the potential grid's Nyquist number {nyq}"
        )));
    }
    let terms: Vec<(Complex<T>, Complex<T>)> = (0..k.len())
        .into_par_iter()
        .map(|m| {
            let two_ik = Complex::new(T::zero(), T::lit(2.0) * k[m]);
            let two_k = T::lit(2.0) * k[m];
            (
                two_ik * sd.s12()[m] - q_hat(q, two_k),
                two_ik * sd.s21()[m] - q_hat(q, -two_k),
            )
        })
        .collect();
    Ok(terms.into_iter().unzip())
}

/// `R₁₂, R₂₁` as the real and imaginary parts of
/// `-I₁₂ + I₂₁ cos φ + i I₁₂ sin φ`.
pub fn r_terms<T: Real>(i12: &[Complex<T>], i21: &[Complex<T>], phi: &[T]) -> (Vec<T>, Vec<T>) {
    i12.iter()
        .zip(i21)
        .zip(phi)
        .map(|((a, b), p)| {
            let z = -*a + *b * p.cos() + Complex::new(T::zero(), T::one()) * (*a * p.sin());
            (z.re, z.im)
        })
        .unzip()
}

/// Real and imaginary parts of `I₂₁ e^{iφ} - I₁₂`, the combination that
/// direct expansion of the defining relation produces.
pub fn r_terms_direct<T: Real>(i12: &[Complex<T>], i21: &[Complex<T>], phi: &[T]) -> (Vec<T>, Vec<T>) {
    i12.iter()
        .zip(i21)
        .zip(phi)
        .map(|((a, b), p)| {
            let z = *b * cis(*p) - *a;
            (z.re, z.im)
        })
        .unzip()
}

/// `(U, V)` with the `sin φ` mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvSolution<T> {
    pub u: Vec<Option<T>>,
    pub v: Vec<Option<T>>,
    /// `true` where `|sin φ| ≥ singular_tol`.
    pub mask: Vec<bool>,
}

/// ```text
///   U = ((1 + cos φ) R₁₂ + sin φ R₂₁) / sin φ
///   V = ((-1 + sin φ) R₁₂ + (1 - cos φ) R₂₁) / sin φ
/// ```
///
/// Samples with `|sin φ| < singular_tol` are masked and left empty, except
/// where `R₁₂ = R₂₁ = 0` exactly: the system is then homogeneous and
/// `U = V = 0` is reported.
pub fn solve_uv_paper<T: Real>(r12: &[T], r21: &[T], phi: &[T], singular_tol: T) -> Result<UvSolution<T>> {
    if r12.len() != phi.len() || r21.len() != phi.len() {
        return Err(Error::validation("R terms and phase lengths differ"));
    }
    if !(singular_tol > T::zero()) {
        return Err(Error::validation("singular_tol must be positive"));
    }
    let n = phi.len();
    let mut u = vec![None; n];
    let mut v = vec![None; n];
    let mut mask = vec![false; n];
    for j in 0..n {
        let (s, c) = (phi[j].sin(), phi[j].cos());
        if s.abs() >= singular_tol {
            mask[j] = true;
            let uu = ((T::one() + c) * r12[j] + s * r21[j]) / s;
            let vv = ((s - T::one()) * r12[j] + (T::one() - c) * r21[j]) / s;
            if uu.is_finite() && vv.is_finite() {
                u[j] = Some(uu);
                v[j] = Some(vv);
            } else {
                mask[j] = false;
            }
        } else if r12[j] == T::zero() && r21[j] == T::zero() {
            u[j] = Some(T::zero());
            v[j] = Some(T::zero());
        }
    }
    if n > 0 && u.iter().all(Option::is_none) {
        return Err(Error::numerical("phase degenerate everywhere"));
    }
    Ok(UvSolution { u, v, mask })
}

/// `|U + iV + I₁₂ - (U - iV + I₂₁) e^{iφ}|` wherever `(U, V)` exist.
pub fn relation_residual<T: Real>(
    u: &[Option<T>],
    v: &[Option<T>],
    i12: &[Complex<T>],
    i21: &[Complex<T>],
    phi: &[T],
) -> Vec<Option<T>> {
    (0..phi.len())
        .map(|j| match (u[j], v[j]) {
            (Some(uu), Some(vv)) => {
                let lhs = Complex::new(uu, vv) + i12[j];
                let rhs = (Complex::new(uu, -vv) + i21[j]) * cis(phi[j]);
                Some((lhs - rhs).norm())
            }
            _ => None,
        })
        .collect()
}

/// Everything the phase pipeline produces on one k-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSystem<T> {
    pub k_grid: Vec<T>,
    pub phi: Vec<T>,
    pub winding: i64,
    pub i12: Vec<Complex<T>>,
    pub i21: Vec<Complex<T>>,
    pub r12: Vec<T>,
    pub r21: Vec<T>,
    pub r12_direct: Vec<T>,
    pub r21_direct: Vec<T>,
    pub u: Vec<Option<T>>,
    pub v: Vec<Option<T>>,
    pub sin_phi_mask: Vec<bool>,
    pub singular_tol: T,
    pub residual: Vec<Option<T>>,
}

impl<T: Real> PhaseSystem<T> {
    /// Runs the pipeline on a potential and its scattering data.
    pub fn build(q: &Potential<T>, sd: &ScatteringData<T>, singular_tol: T) -> Result<Self> {
        let phase = phase_from_s11(sd.k(), sd.s11())?;
        let (i12, i21) = correction_terms(q, sd)?;
        let (r12, r21) = r_terms(&i12, &i21, &phase.phi);
        let (r12_direct, r21_direct) = r_terms_direct(&i12, &i21, &phase.phi);
        let uv = solve_uv_paper(&r12, &r21, &phase.phi, singular_tol)?;
        let residual = relation_residual(&uv.u, &uv.v, &i12, &i21, &phase.phi);
        let sin_phi_mask = uv.mask.iter().zip(&phase.mask).map(|(a, b)| *a && *b).collect();
        Ok(Self {
            k_grid: sd.k().to_vec(),
            phi: phase.phi,
            winding: phase.winding,
            i12,
            i21,
            r12,
            r21,
            r12_direct,
            r21_direct,
            u: uv.u,
            v: uv.v,
            sin_phi_mask,
            singular_tol,
            residual,
        })
    }

    /// `max |U|, |V|` over `max (|R₁₂| + |R₂₁| + |∇R₁₂| + |∇R₂₁|)`.
    pub fn uv_bound_ratio(&self) -> T {
        let n = self.k_grid.len();
        if n < 2 {
            return T::zero();
        }
        let h = self.k_grid[1] - self.k_grid[0];
        let d12 = real_derivative(&self.r12, h);
        let d21 = real_derivative(&self.r21, h);
        let rhs = (0..n).fold(T::zero(), |m, j| {
            m.max(self.r12[j].abs() + self.r21[j].abs() + d12[j].abs() + d21[j].abs())
        });
        let lhs = self
            .u
            .iter()
            .zip(&self.v)
            .filter_map(|(a, b)| Some(a.as_ref()?.abs().max(b.as_ref()?.abs())))
            .fold(T::zero(), T::max);
        ratio(lhs, rhs)
    }

    pub fn write_json<W: std::io::Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self).map_err(|e| Error::validation(e.to_string()))?;
        writeln!(writer)?;
        Ok(())
    }
}

fn real_derivative<T: Real>(v: &[T], h: T) -> Vec<T> {
    let c: Vec<Complex<T>> = v.iter().map(|x| Complex::new(*x, T::zero())).collect();
    central_difference(&c, h).into_iter().map(|z| z.re).collect()
}

fn ratio<T: Real>(lhs: T, rhs: T) -> T {
    if rhs > T::zero() {
        lhs / rhs
    } else {
        T::zero()
    }
}

/// Sup of the potential against the integrated size of the corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub lhs_sup_q: T,
    /// `∫ (|I₁₂| + |I₂₁| + |∂ₖI₁₂| + |∂ₖI₂₁|) dk`.
    pub rhs_integral: T,
    /// `lhs / rhs`, zero when both vanish.
    pub ratio: T,
}

/// Trapezoid integral over a uniform k-grid; k-derivatives are central
/// differences.
pub fn bound_report<T: Real>(
    q: &Potential<T>,
    k: &[T],
    i12: &[Complex<T>],
    i21: &[Complex<T>],
) -> Result<BoundReport<T>> {
    let n = k.len();
    if i12.len() != n || i21.len() != n {
        return Err(Error::validation("correction terms and k-grid lengths differ"));
    }
    let lhs = q.sup();
    if n < 2 {
        return Ok(BoundReport {
            lhs_sup_q: lhs,
            rhs_integral: T::zero(),
            ratio: T::zero(),
        });
    }
    let h = k[1] - k[0];
    let d12 = central_difference(i12, h);
    let d21 = central_difference(i21, h);
    let f: Vec<T> = (0..n)
        .map(|j| i12[j].norm() + i21[j].norm() + d12[j].norm() + d21[j].norm())
        .collect();
    let rhs = (f.iter().copied().sum::<T>() - (f[0] + f[n - 1]) / T::lit(2.0)) * h;
    Ok(BoundReport {
        lhs_sup_q: lhs,
        rhs_integral: rhs,
        ratio: ratio(lhs, rhs),
    })
}

/// `‖q̂ - q‖₂ / ‖q‖₂` for the candidate `q̂ = Q(q, κ₁…κ_n)` assembled
/// from the Born terms of orders `2..=max_born_order`, the bound states of
/// `q` and the phase of the dispersion-formula transmission.
///
/// `q̂` is the inverse transform `(1/π) ∫ (U + iV) e^{-2ikx} dk` over the
/// unmasked samples.
pub fn q_representation_residual<T: Real>(
    q: &Potential<T>,
    k_grid: &[T],
    max_born_order: usize,
    singular_tol: T,
) -> Result<T> {
    if max_born_order < 2 {
        return Err(Error::validation("the corrections start at Born order 2"));
    }
    let n = k_grid.len();
    let left = born_orders(q, k_grid, max_born_order, Reflection::Left)?;
    let right = born_orders(q, k_grid, max_born_order, Reflection::Right)?;
    let zero = Complex::new(T::zero(), T::zero());
    let sum_from = |orders: &[Vec<Complex<T>>], first: usize, m: usize| {
        orders[first..].iter().fold(zero, |a, o| a + o[m])
    };
    let two_ik = |m: usize| Complex::new(T::zero(), T::lit(2.0) * k_grid[m]);
    let i12: Vec<Complex<T>> = (0..n).map(|m| two_ik(m) * sum_from(&left, 1, m)).collect();
    let i21: Vec<Complex<T>> = (0..n).map(|m| two_ik(m) * sum_from(&right, 1, m)).collect();
    let cap = T::lit(BORN_MODULUS_CAP);
    let modulus: Vec<T> = (0..n).map(|m| sum_from(&left, 0, m).norm().min(cap)).collect();
    let bs = bound_states(q)?;
    let s11 = dispersion_s11(&modulus, &bs, k_grid)?;
    let phase = phase_from_s11(k_grid, &s11)?;
    let (r12, r21) = r_terms(&i12, &i21, &phase.phi);
    let uv = solve_uv_paper(&r12, &r21, &phase.phi, singular_tol)?;
    let masked = uv.u.iter().filter(|v| v.is_none()).count();
    if T::from_usize_lossy(masked) > T::lit(MAX_MASKED_FRACTION) * T::from_usize_lossy(n) {
        return Err(Error::numerical(format!(
            "{masked} of {n} samples masked by the sin φ threshold"
        )));
    }
    let dk = if n > 1 { k_grid[1] - k_grid[0] } else { T::zero() };
    let xs = q.spec().xs();
    let candidate: Vec<T> = xs
        .par_iter()
        .map(|&x| {
            let mut acc = zero;
            for m in 0..n {
                if let (Some(u), Some(v)) = (uv.u[m], uv.v[m]) {
                    acc = acc + Complex::new(u, v) * cis(T::lit(-2.0) * k_grid[m] * x);
                }
            }
            acc.re * dk / T::PI()
        })
        .collect();
    let diff: T = candidate
        .iter()
        .zip(q.values())
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<T>();
    let norm: T = q.values().iter().map(|v| *v * *v).sum();
    Ok(if norm > T::zero() { (diff / norm).sqrt() } else { diff.sqrt() })
}
