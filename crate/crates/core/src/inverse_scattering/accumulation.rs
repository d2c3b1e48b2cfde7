use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::EDGE_REFLECTION_TOL;
use crate::catastrophe_family::{CatastropheReport, ReportRow};
use crate::error::{Error, Result};
use crate::forward_scattering::{dispersion_s11, staggered_k_grid, BoundState};
use crate::grid_fourier::{GridSpec, NormReport};
use crate::scalar::{cis, Real};

/// Reflection modulus `ρ(k) = amplitude · exp(-(k/width)²)` sampled on a
/// staggered grid of `n_k` points in `[-k_max, k_max]`. The same profile
/// is used for every ladder length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionProfile<T> {
    pub amplitude: T,
    pub width: T,
    pub k_max: T,
    pub n_k: usize,
}

impl<T: Real> ReflectionProfile<T> {
    fn validate(&self) -> Result<()> {
        if !(self.amplitude >= T::zero() && self.amplitude < T::one()) {
            return Err(Error::validation("reflection amplitude must lie in [0, 1)"));
        }
        if !(self.width > T::zero() && self.k_max > T::zero()) {
            return Err(Error::validation("reflection width and k_max must be positive"));
        }
        if self.modulus(self.k_max) > T::lit(EDGE_REFLECTION_TOL) {
            return Err(Error::validation("reflection profile does not decay by k_max"));
        }
        Ok(())
    }

    pub fn modulus(&self, k: T) -> T {
        let s = k / self.width;
        self.amplitude * (-s * s).exp()
    }
}

/// Parameters of the accumulation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccumulationSetup<T> {
    /// Accumulation point of the ladder `E_j = e_inf·(1 - 1/(j+1))`.
    pub e_inf: T,
    /// Samples of `q_n` on `[0, extent/e_inf)`.
    pub n_x: usize,
    pub extent: T,
    pub profile: Option<ReflectionProfile<T>>,
}

impl<T: Real> AccumulationSetup<T> {
    pub fn new(e_inf: T) -> Self {
        Self {
            e_inf,
            n_x: 8192,
            extent: T::lit(40.0),
            profile: None,
        }
    }

    pub fn with_profile(mut self, profile: ReflectionProfile<T>) -> Self {
        self.profile = Some(profile);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.e_inf > T::zero()) || !self.e_inf.is_finite() {
            return Err(Error::validation("e_inf must be positive"));
        }
        if !(self.extent > T::zero()) {
            return Err(Error::validation("extent must be positive"));
        }
        if let Some(p) = &self.profile {
            p.validate()?;
        }
        Ok(())
    }

    pub fn x_grid(&self) -> Result<GridSpec<T>> {
        GridSpec::new(T::zero(), self.extent / self.e_inf, self.n_x)
    }
}

/// Eigenvalue ladder `E_j = e_inf·(1 - 1/(j+1))`, `j = 1..=n`, with equal
/// normings `e_inf/n`, so that `Σ M_j` does not depend on `n`.
pub fn accumulation_ladder<T: Real>(n: usize, e_inf: T) -> Vec<BoundState<T>> {
    let norming = e_inf / T::from_usize_lossy(n);
    (1..=n)
        .rev()
        .map(|j| BoundState {
            kappa: e_inf * (T::one() - T::one() / T::from_usize_lossy(j + 1)),
            norming,
        })
        .collect()
}

/// First approximation `q_n(x) = 4 Ω₊'(2x)` and its derivative on the
/// experiment's x-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstApproximation<T> {
    pub spec: GridSpec<T>,
    pub q: Vec<T>,
    pub dq: Vec<T>,
}

/// Reflection samples `ρ(k) e^{2iδ(k)}`, `δ = arg s11` from the dispersion
/// formula with the ladder's bound states.
fn reflection_samples<T: Real>(
    profile: &ReflectionProfile<T>,
    bound_states: &[BoundState<T>],
) -> Result<(Vec<T>, Vec<Complex<T>>)> {
    let k = staggered_k_grid(profile.k_max, profile.n_k)?;
    let rho: Vec<T> = k.iter().map(|&kk| profile.modulus(kk)).collect();
    let s11 = dispersion_s11(&rho, bound_states, &k)?;
    let s21 = rho
        .iter()
        .zip(&s11)
        .map(|(r, t)| cis(T::lit(2.0) * t.arg()) * *r)
        .collect();
    Ok((k, s21))
}

pub fn first_approximation<T: Real>(n: usize, setup: &AccumulationSetup<T>) -> Result<FirstApproximation<T>> {
    setup.validate()?;
    if n == 0 {
        return Err(Error::validation("ladder length must be at least 1"));
    }
    let spec = setup.x_grid()?;
    let bs = accumulation_ladder(n, setup.e_inf);
    let reflection = match &setup.profile {
        Some(p) => Some(reflection_samples(p, &bs)?),
        None => None,
    };
    let two = T::lit(2.0);
    let (q, dq): (Vec<T>, Vec<T>) = spec
        .xs()
        .par_iter()
        .map(|&x| {
            let t = two * x;
            // Ω' and Ω'' of the exponential sum
            let mut d1 = T::zero();
            let mut d2 = T::zero();
            for b in &bs {
                let e = b.norming * (-b.kappa * t).exp();
                d1 = d1 - b.kappa * e;
                d2 = d2 + b.kappa * b.kappa * e;
            }
            if let Some((k, s21)) = &reflection {
                let dk = k[1] - k[0];
                let mut a1 = Complex::new(T::zero(), T::zero());
                let mut a2 = Complex::new(T::zero(), T::zero());
                for (kk, s) in k.iter().zip(s21) {
                    let v = *s * cis(*kk * t);
                    a1 = a1 + v * Complex::new(T::zero(), *kk);
                    a2 = a2 - v * (*kk * *kk);
                }
                let w = dk / T::two_pi();
                d1 = d1 + a1.re * w;
                d2 = d2 + a2.re * w;
            }
            (T::lit(4.0) * d1, T::lit(8.0) * d2)
        })
        .unzip();
    Ok(FirstApproximation { spec, q, dq })
}

/// Norms of `q_n` on the half-line. Without reflection the exponential sum
/// is integrated in closed form; otherwise the samples are integrated with
/// the trapezoid rule.
fn half_line_norms<T: Real>(fa: &FirstApproximation<T>, bs: &[BoundState<T>], exact: bool) -> NormReport<T> {
    let h = fa.spec.spacing();
    let sup = fa.q.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let sup_grad = fa.dq.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let trap = |v: &[T]| {
        let s: T = v.iter().map(|a| *a * *a).sum();
        (s - (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]) / T::lit(2.0)) * h
    };
    let (l2_sq, h1_sq) = if exact {
        // q = -4 Σ M E e^{-2Ex}, q' = 8 Σ M E² e^{-2Ex}
        let mut a = T::zero();
        let mut b = T::zero();
        for bi in bs {
            for bj in bs {
                let den = T::lit(2.0) * (bi.kappa + bj.kappa);
                let mm = bi.norming * bj.norming;
                a = a + T::lit(16.0) * mm * bi.kappa * bj.kappa / den;
                b = b + T::lit(64.0) * mm * (bi.kappa * bj.kappa).powi(2) / den;
            }
        }
        (a, b)
    } else {
        (trap(&fa.q), trap(&fa.dq))
    };
    let m_norm = fa
        .q
        .iter()
        .enumerate()
        .map(|(j, v)| v.abs() * (T::one() + fa.spec.x(j)))
        .sum::<T>()
        * h;
    NormReport {
        l2: l2_sq.sqrt(),
        h1_seminorm: h1_sq.sqrt(),
        sup,
        sup_grad,
        m_norm,
    }
}

/// Runs the accumulation experiment over the ladder lengths in `n_list`
/// (ascending, each ≥ 1) and summarizes the first-approximation
/// potentials in a [`CatastropheReport`]. The `winding` column holds the
/// number of bound states, the Levinson count of the transmission phase.
pub fn accumulation_experiment<T: Real>(
    n_list: &[usize],
    setup: &AccumulationSetup<T>,
) -> Result<CatastropheReport<T>> {
    setup.validate()?;
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::validation("ladder lengths must be a non-empty list of positive integers"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("ladder lengths must be strictly ascending"));
    }
    let rows = n_list
        .iter()
        .map(|&n| {
            let fa = first_approximation(n, setup)?;
            let bs = accumulation_ladder(n, setup.e_inf);
            let r = half_line_norms(&fa, &bs, setup.profile.is_none());
            if fa.q.last().is_some_and(|v| v.abs() > T::lit(1e-8) * r.sup) {
                log::warn!("q_n for n = {n} has not decayed by the end of the x-grid");
            }
            Ok(ReportRow::from_norms(n, &r, n as i64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CatastropheReport::from_rows(rows, None))
}
