use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::jost::{jost_solve, wronskian, Side};
use super::potential::Potential;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection tolerance on `κ`.
pub const KAPPA_TOL: f64 = 1e-8;

/// Bound state at `k = iκ` (energy `-κ²`) with its norming constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundState<T> {
    pub kappa: T,
    pub norming: T,
}

/// Number of eigenvalues below `lambda` of the symmetric tridiagonal
/// matrix with constant off-diagonal `off` (Sturm sequence count).
fn count_below<T: Real>(diag: &[T], off: T, lambda: T) -> usize {
    let mut count = 0;
    let mut d = T::one();
    let tiny = T::min_positive_value().sqrt();
    for (j, a) in diag.iter().enumerate() {
        d = if j == 0 { *a - lambda } else { *a - lambda - off * off / d };
        if d == T::zero() {
            d = tiny;
        }
        if d < T::zero() {
            count += 1;
        }
    }
    count
}

/// Negative eigenvalues of the Dirichlet finite-difference operator
/// `-d²/dx² + q`, ascending.
fn fd_negative_eigenvalues<T: Real>(q: &Potential<T>) -> Vec<T> {
    let h = q.spec().spacing();
    let off = -T::one() / (h * h);
    let diag: Vec<T> = q.values().iter().map(|v| T::lit(2.0) / (h * h) + *v).collect();
    let n_neg = count_below(&diag, off, T::zero());
    let lower = q.min().min(T::zero()) - T::one();
    (0..n_neg)
        .map(|idx| {
            let (mut lo, mut hi) = (lower, T::zero());
            for _ in 0..200 {
                let mid = (lo + hi) / T::lit(2.0);
                if count_below(&diag, off, mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= T::lit(1e-13) * T::one().max(lo.abs()) {
                    break;
                }
            }
            (lo + hi) / T::lit(2.0)
        })
        .collect()
}

/// `W(f₊, f₋)` at `k = iκ`; real for real potentials and zero exactly at
/// bound states.
fn wronskian_at<T: Real>(q: &Potential<T>, kappa: T) -> Result<T> {
    let k = Complex::new(T::zero(), kappa);
    let fp = jost_solve(q, k, Side::Plus)?;
    let fm = jost_solve(q, k, Side::Minus)?;
    Ok(wronskian(&fp, &fm, q.spec().n_points() / 2).re)
}

/// Bound states ordered by decreasing `κ`.
///
/// Estimates come from a Sturm-sequence eigensolve of the discretized
/// operator; each is refined by bisection of `W(f₊, f₋)(iκ)` inside a
/// bracket that does not reach the neighbouring estimates. Bound states
/// too shallow to fit in the box are not found.
pub fn bound_states<T: Real>(q: &Potential<T>) -> Result<Vec<BoundState<T>>> {
    let estimates: Vec<T> = fd_negative_eigenvalues(q)
        .into_iter()
        .map(|e| (-e).sqrt())
        .collect();
    if estimates.is_empty() {
        return Ok(Vec::new());
    }
    let kappa_cap = (-q.min()).max(T::zero()).sqrt() + T::one();
    let floor = T::lit(1e-6);
    let mut out = Vec::with_capacity(estimates.len());
    for (i, &est) in estimates.iter().enumerate() {
        let upper = if i == 0 {
            kappa_cap
        } else {
            (estimates[i - 1] + est) / T::lit(2.0)
        };
        let lower = if i + 1 < estimates.len() {
            (estimates[i + 1] + est) / T::lit(2.0)
        } else {
            (est / T::lit(2.0)).max(floor)
        };
        let kappa = refine(q, est, lower, upper)?;
        out.push(BoundState {
            kappa,
            norming: norming_constant(q, kappa)?,
        });
    }
    Ok(out)
}

fn refine<T: Real>(q: &Potential<T>, est: T, lower: T, upper: T) -> Result<T> {
    let w_est = wronskian_at(q, est)?;
    if w_est == T::zero() {
        return Ok(est);
    }
    // grow a bracket around the estimate until W changes sign
    let mut delta = T::lit(1e-4) * T::one().max(est);
    let (mut lo, mut hi) = (est, est);
    let (mut w_lo, mut w_hi) = (w_est, w_est);
    loop {
        let a = (est - delta).max(lower);
        let b = (est + delta).min(upper);
        let wa = wronskian_at(q, a)?;
        if wa.signum() != w_est.signum() {
            (lo, hi, w_lo, w_hi) = (a, est, wa, w_est);
            break;
        }
        let wb = wronskian_at(q, b)?;
        if wb.signum() != w_est.signum() {
            (lo, hi, w_lo, w_hi) = (est, b, w_est, wb);
            break;
        }
        if a <= lower && b >= upper {
            break;
        }
        delta = delta * T::lit(2.0);
    }
    if w_lo.signum() == w_hi.signum() {
        return Err(Error::numerical(format!(
            "no sign change of the Jost Wronskian near κ ≈ {est}"
        )));
    }
    let tol = T::lit(KAPPA_TOL);
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        let wm = wronskian_at(q, mid)?;
        if wm == T::zero() {
            return Ok(mid);
        }
        if wm.signum() == w_lo.signum() {
            lo = mid;
            w_lo = wm;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

/// `M = 1 / ∫ f₊(iκ, x)² dx`, with the exponential tails beyond the box
/// added analytically.
///
/// Marching toward `-∞` at a bound state amplifies any error along the
/// growing solution, so left of the center `f₊` is replaced by the
/// proportional `f₋`, which is stable there.
pub fn norming_constant<T: Real>(q: &Potential<T>, kappa: T) -> Result<T> {
    let k = Complex::new(T::zero(), kappa);
    let fp = jost_solve(q, k, Side::Plus)?;
    let fm = jost_solve(q, k, Side::Minus)?;
    let n = q.spec().n_points();
    let mid = n / 2;
    let ratio = fp.values()[mid].re / fm.values()[mid].re;
    if !ratio.is_finite() {
        return Err(Error::numerical(format!("cannot match Jost solutions at κ = {kappa}")));
    }
    let v: Vec<T> = (0..n)
        .map(|j| {
            if j < mid {
                fm.values()[j].re * ratio
            } else {
                fp.values()[j].re
            }
        })
        .collect();
    let h = q.spec().spacing();
    let ends = v[0] * v[0] + v[n - 1] * v[n - 1];
    let inner = v.iter().map(|z| *z * *z).sum::<T>() * h - ends * h / T::lit(2.0);
    let total = inner + ends / (T::lit(2.0) * kappa);
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::numerical(format!("bad norm of bound state κ = {kappa}")));
    }
    Ok(T::one() / total)
}
