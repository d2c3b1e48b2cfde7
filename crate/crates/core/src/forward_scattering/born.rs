use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Highest Born order accepted.
pub const MAX_BORN_ORDER: usize = 6;

/// Which reflection coefficient a series expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflection {
    /// `s12`, built from the Volterra series of `f₊`.
    Left,
    /// `s21`, built from the Volterra series of `f₋`.
    Right,
}

/// Homogeneous terms `s_n(k)` of the reflection coefficient, `n = 1..=order`;
/// `result[n-1][m]` belongs to `k_grid[m]` and is of degree `n` in `q`.
///
/// The Volterra iterates `f^{(j)} = (-G)^j E` are summed into
/// `A = 1 - Σ a_j` and `B = Σ b_j`; the reflection `B/A` is then expanded
/// as a power series by `s_n = b_n + Σ_{j<n} a_j s_{n-j}`.
pub fn born_orders<T: Real>(
    q: &Potential<T>,
    k_grid: &[T],
    order: usize,
    which: Reflection,
) -> Result<Vec<Vec<Complex<T>>>> {
    if order == 0 || order > MAX_BORN_ORDER {
        return Err(Error::validation(format!(
            "Born order must be in 1..={MAX_BORN_ORDER}, got {order}"
        )));
    }
    if k_grid.iter().any(|k| *k == T::zero()) {
        return Err(Error::validation("Born series needs k != 0"));
    }
    let per_k: Vec<Vec<Complex<T>>> = k_grid
        .par_iter()
        .map(|&k| born_at(q, k, order, which))
        .collect();
    Ok((0..order)
        .map(|n| per_k.iter().map(|terms| terms[n]).collect())
        .collect())
}

/// Partial sum of the Born series for `s12` through `order`.
pub fn born_series<T: Real>(q: &Potential<T>, k_grid: &[T], order: usize) -> Result<Vec<Complex<T>>> {
    let orders = born_orders(q, k_grid, order, Reflection::Left)?;
    Ok((0..k_grid.len())
        .map(|m| orders.iter().fold(Complex::new(T::zero(), T::zero()), |a, o| a + o[m]))
        .collect())
}

fn born_at<T: Real>(q: &Potential<T>, k: T, order: usize, which: Reflection) -> Vec<Complex<T>> {
    let spec = q.spec();
    let n = spec.n_points();
    let h = spec.spacing();
    let qv = q.values();
    let xs = spec.xs();
    let zero = Complex::new(T::zero(), T::zero());
    let two_ik = Complex::new(T::zero(), T::lit(2.0) * k);
    // direction: f₊ propagates from +∞, f₋ from -∞
    let sign = match which {
        Reflection::Left => T::one(),
        Reflection::Right => -T::one(),
    };
    let plane: Vec<Complex<T>> = xs.iter().map(|&x| cis(sign * k * x)).collect();
    let (cos_kx, sin_kx): (Vec<T>, Vec<T>) = xs.iter().map(|&x| ((k * x).cos(), (k * x).sin())).unzip();

    let mut f = plane.clone();
    let mut a = Vec::with_capacity(order);
    let mut b = Vec::with_capacity(order);
    for j in 0..order {
        // a_j pairs with the incoming wave's own exponent, b_j with the other
        let mut ia = zero;
        let mut ib = zero;
        for m in 0..n {
            let w = f[m] * qv[m];
            ia = ia + plane[m].conj() * w;
            ib = ib + plane[m] * w;
        }
        a.push(ia * h / two_ik);
        b.push(ib * h / two_ik);
        if j + 1 == order {
            break;
        }
        f = volterra_step(&f, qv, &cos_kx, &sin_kx, k, h, which);
    }

    let mut s: Vec<Complex<T>> = Vec::with_capacity(order);
    for m in 0..order {
        let mut v = b[m];
        for j in 0..m {
            v = v + a[j] * s[m - 1 - j];
        }
        s.push(v);
    }
    s
}

/// One application of the Volterra operator with kernel `sin(k(x-t))/k`:
/// `-∫_x^∞ … dt` for `f₊`, `+∫_{-∞}^x … dt` for `f₋`, by cumulative
/// trapezoid sums of the cosine and sine moments.
fn volterra_step<T: Real>(
    f: &[Complex<T>],
    q: &[T],
    cos_kx: &[T],
    sin_kx: &[T],
    k: T,
    h: T,
    which: Reflection,
) -> Vec<Complex<T>> {
    let n = f.len();
    let zero = Complex::new(T::zero(), T::zero());
    let half = h / T::lit(2.0);
    let mut out = vec![zero; n];
    let gc = |m: usize| f[m] * (q[m] * cos_kx[m]);
    let gs = |m: usize| f[m] * (q[m] * sin_kx[m]);
    let mut c_acc = zero;
    let mut s_acc = zero;
    match which {
        Reflection::Left => {
            for m in (0..n).rev() {
                if m + 1 < n {
                    c_acc = c_acc + (gc(m) + gc(m + 1)) * half;
                    s_acc = s_acc + (gs(m) + gs(m + 1)) * half;
                }
                // sin(k(x-t)) = sin kx cos kt - cos kx sin kt
                out[m] = -(c_acc * sin_kx[m] - s_acc * cos_kx[m]) / k;
            }
        }
        Reflection::Right => {
            for m in 0..n {
                if m > 0 {
                    c_acc = c_acc + (gc(m) + gc(m - 1)) * half;
                    s_acc = s_acc + (gs(m) + gs(m - 1)) * half;
                }
                out[m] = (c_acc * sin_kx[m] - s_acc * cos_kx[m]) / k;
            }
        }
    }
    out
}
