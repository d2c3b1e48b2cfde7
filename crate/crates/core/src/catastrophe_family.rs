//! Functions with a fixed spectral modulus whose Fourier phase is a power
//! of a Blaschke factor:
//!
//! ```text
//!   f̃_n(k) = Δ(k)^n / (1 + k²),     Δ(k) = (i - k)/(i + k) = e^{2i·atan k}
//! ```
//!
//! `|f̃_n|` does not depend on `n`, so neither do `‖f_n‖₂` nor `‖f_n'‖₂`.
//! In `x` the family is a Laguerre function supported on a half-line.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_fourier::{
    inverse_transform, norms, phase_decompose, GridFunction, GridSpec, NormReport, SpectralFunction,
};
use crate::scalar::{cis, Real};

/// Largest Laguerre degree accepted by [`laguerre_eval`].
pub const MAX_LAGUERRE_DEGREE: usize = 200;

/// Relative slack allowed between consecutive `sup_grad` values before a
/// trend is considered broken.
pub const TREND_SLACK: f64 = 0.01;

/// Drift limit on `l2`/`h1` for the family verdict.
pub const FAMILY_DRIFT_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParams<T> {
    n: usize,
    spec: GridSpec<T>,
}

impl<T: Real> FamilyParams<T> {
    /// `n = 0` is accepted as the unmodulated reference spectrum. The dual
    /// grid must resolve the phase: `n·Δk < π/4`.
    pub fn new(n: usize, spec: GridSpec<T>) -> Result<Self> {
        let guard = T::from_usize_lossy(n) * spec.k_spacing();
        if guard >= T::FRAC_PI_4() {
            return Err(Error::validation(format!(
                "Blaschke power {n} aliases on this grid: n·Δk = {guard} >= π/4 (widen the box)"
            )));
        }
        Ok(Self { n, spec })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }
}

/// `Δ(k)^n / (1+k²)`, evaluated as `e^{2in·atan k}/(1+k²)`.
pub fn blaschke_value<T: Real>(n: usize, k: T) -> Complex<T> {
    let phase = T::lit(2.0) * T::from_usize_lossy(n) * k.atan();
    cis(phase) / (T::one() + k * k)
}

/// The family member's spectrum on the dual grid of `p.spec`.
pub fn blaschke_spectrum<T: Real>(p: &FamilyParams<T>) -> Result<SpectralFunction<T>> {
    let k = p.spec.dual_k();
    let values = k.iter().map(|&k| blaschke_value(p.n, k)).collect();
    SpectralFunction::new(k, values, Some(p.spec))
}

/// Winding number of `Δ^n/(1+k²)` over `[-k_max, k_max]`, measured by
/// unwrapping on a grid fine enough for the phase (independent of any
/// x-grid).
pub fn blaschke_winding<T: Real>(n: usize, k_max: T) -> i64 {
    let dk = T::PI() / (T::lit(8.0) * T::from_usize_lossy(n.max(1)));
    let steps = (T::lit(2.0) * k_max / dk).ceil().to_usize().unwrap_or(1).max(1);
    let k: Vec<T> = (0..=steps)
        .map(|j| -k_max + T::lit(2.0) * k_max * T::from_usize_lossy(j) / T::from_usize_lossy(steps))
        .collect();
    let values: Vec<_> = k.iter().map(|&k| blaschke_value(n, k)).collect();
    phase_decompose(&k, &values).winding
}

/// Generalized Laguerre polynomial `L^{(1)}_m(y)` by the three-term
/// recurrence `(j+1) L_{j+1} = (2j+2-y) L_j - (j+1) L_{j-1}`.
pub fn laguerre_eval<T: Real>(m: usize, y: T) -> Result<T> {
    if m > MAX_LAGUERRE_DEGREE {
        return Err(Error::validation(format!(
            "Laguerre degree {m} exceeds {MAX_LAGUERRE_DEGREE}"
        )));
    }
    let mut prev = T::one();
    if m == 0 {
        return Ok(prev);
    }
    let two = T::lit(2.0);
    let mut cur = two - y;
    for j in 1..m {
        let jf = T::from_usize_lossy(j);
        let next = ((two * jf + two - y) * cur - (jf + T::one()) * prev) / (jf + T::one());
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfLine {
    Negative,
    Positive,
}

/// How the textbook closed form `x(-1)^{n-1} 2π e^{-x} L¹_{n-1}(2x)` maps
/// onto this crate's transform convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConventionCalibration {
    pub support: HalfLine,
    pub sign: i8,
    /// Multiplies the `2π` constant of the textbook form.
    pub scale: f64,
}

/// Frozen result of [`calibrate`]: the family lives on `x < 0` (the double
/// pole of `f̃_n` sits at `k = -i`) and the `2π` is cancelled by the `1/2π`
/// of the inverse transform.
pub const CALIBRATION: ConventionCalibration = ConventionCalibration {
    support: HalfLine::Negative,
    sign: 1,
    scale: 1.0 / std::f64::consts::TAU,
};

/// Fits support side, sign and scale of the `n = 1` closed form against the
/// numerical inverse transform of its spectrum.
pub fn calibrate<T: Real>(spec: &GridSpec<T>) -> Result<ConventionCalibration> {
    let p = FamilyParams::new(1, *spec)?;
    let g = inverse_transform(&blaschke_spectrum(&p)?)?;
    let xs = spec.xs();
    let mut best: Option<(f64, ConventionCalibration)> = None;
    for side in [HalfLine::Negative, HalfLine::Positive] {
        let template: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let y = support_coordinate(side, x).to_f64_lossy();
                if y > 0.0 {
                    std::f64::consts::TAU * y * (-y).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let tt: f64 = template.iter().map(|t| t * t).sum();
        let gt: f64 = g.values().iter().zip(&template).map(|(v, t)| v.re.to_f64_lossy() * t).sum();
        let c = gt / tt;
        let resid: f64 = g
            .values()
            .iter()
            .zip(&template)
            .map(|(v, t)| (v.re.to_f64_lossy() - c * t).powi(2))
            .sum();
        let cal = ConventionCalibration {
            support: side,
            sign: if c >= 0.0 { 1 } else { -1 },
            scale: c.abs(),
        };
        if best.as_ref().is_none_or(|(r, _)| resid < *r) {
            best = Some((resid, cal));
        }
    }
    Ok(best.expect("two candidates").1)
}

fn support_coordinate<T: Real>(side: HalfLine, x: T) -> T {
    match side {
        HalfLine::Negative => -x,
        HalfLine::Positive => x,
    }
}

/// Closed form of the `n`-th family member at `x` under [`CALIBRATION`]:
///
/// ```text
///   f_n = (-1)^{n-1} · 2π·scale · y e^{-y} L¹_{n-1}(2y) / n,    y = -x > 0
/// ```
///
/// The `1/n` keeps `‖f_n‖₂` equal to the `n`-independent `‖f̃_n‖₂/√(2π)`.
pub fn closed_form_value<T: Real>(n: usize, x: T) -> Result<T> {
    if n == 0 {
        return Err(Error::validation("closed form needs n >= 1"));
    }
    let cal = CALIBRATION;
    let y = support_coordinate(cal.support, x);
    if y <= T::zero() {
        return Ok(T::zero());
    }
    let lag = laguerre_eval(n - 1, T::lit(2.0) * y)?;
    let parity = if (n - 1).is_multiple_of(2) { T::one() } else { -T::one() };
    let constant = T::lit(f64::from(cal.sign) * cal.scale * std::f64::consts::TAU);
    Ok(constant * parity * y * (-y).exp() * lag / T::from_usize_lossy(n))
}

fn closed_form_samples<T: Real>(n: usize, spec: &GridSpec<T>) -> Result<GridFunction<T>> {
    let values = spec
        .xs()
        .into_iter()
        .map(|x| closed_form_value(n, x))
        .collect::<Result<Vec<T>>>()?;
    GridFunction::from_real(*spec, values)
}

/// Samples the closed form on `p.spec`.
pub fn laguerre_closed_form<T: Real>(p: &FamilyParams<T>) -> Result<GridFunction<T>> {
    closed_form_samples(p.n, &p.spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CatastropheTrend,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow<T> {
    pub n: usize,
    pub l2: T,
    pub h1: T,
    pub sup: T,
    pub sup_grad: T,
    pub winding: i64,
}

impl<T: Real> ReportRow<T> {
    pub fn from_norms(n: usize, r: &NormReport<T>, winding: i64) -> Self {
        Self {
            n,
            l2: r.l2,
            h1: r.h1_seminorm,
            sup: r.sup,
            sup_grad: r.sup_grad,
            winding,
        }
    }
}

/// Growth of the gradient over a ladder of family members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatastropheReport<T> {
    pub rows: Vec<ReportRow<T>>,
    /// `sup_grad(last) / sup_grad(first)`.
    pub growth_ratio_supgrad: T,
    /// Largest relative deviation of `l2` from the first row.
    pub max_l2_drift: T,
    pub max_h1_drift: T,
    pub verdict: Verdict,
}

impl<T: Real> CatastropheReport<T> {
    /// Summarizes rows (ascending in `n`). The verdict is a trend when there
    /// are at least two rows, every step keeps `sup_grad` within
    /// [`TREND_SLACK`] of its predecessor, the overall ratio exceeds one and,
    /// if `drift_limit` is given, both norm drifts stay below it.
    pub fn from_rows(rows: Vec<ReportRow<T>>, drift_limit: Option<T>) -> Self {
        let first = rows.first().copied();
        let rel = |a: T, b: T| {
            if b == T::zero() {
                if a == T::zero() {
                    T::zero()
                } else {
                    T::infinity()
                }
            } else {
                (a - b).abs() / b
            }
        };
        let (growth, l2d, h1d) = match (first, rows.last()) {
            (Some(f), Some(l)) => {
                let growth = if f.sup_grad > T::zero() {
                    l.sup_grad / f.sup_grad
                } else {
                    T::zero()
                };
                let l2d = rows.iter().fold(T::zero(), |m, r| m.max(rel(r.l2, f.l2)));
                let h1d = rows.iter().fold(T::zero(), |m, r| m.max(rel(r.h1, f.h1)));
                (growth, l2d, h1d)
            }
            _ => (T::zero(), T::zero(), T::zero()),
        };
        let slack = T::one() - T::lit(TREND_SLACK);
        let monotone = rows.windows(2).all(|w| w[1].sup_grad >= slack * w[0].sup_grad);
        let bounded = drift_limit.is_none_or(|lim| l2d < lim && h1d < lim);
        let verdict = if rows.len() >= 2 && monotone && growth > T::one() && bounded {
            Verdict::CatastropheTrend
        } else {
            Verdict::Stable
        };
        Self {
            rows,
            growth_ratio_supgrad: growth,
            max_l2_drift: l2d,
            max_h1_drift: h1d,
            verdict,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::validation(e.to_string());
        w.write_record(["n", "l2", "h1", "sup", "sup_grad", "winding"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.l2.to_string(),
                r.h1.to_string(),
                r.sup.to_string(),
                r.sup_grad.to_string(),
                r.winding.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Minimum grid for a ladder topping out at `n_max`: `N ≥ 4096·⌈n_max/16⌉`
/// and a box reaching at least 40 on both sides.
pub fn check_family_grid<T: Real>(n_max: usize, spec: &GridSpec<T>) -> Result<()> {
    let need = 4096 * n_max.div_ceil(16);
    if spec.n_points() < need {
        return Err(Error::validation(format!(
            "under-resolved grid for n = {n_max}: need at least {need} points, have {}",
            spec.n_points()
        )));
    }
    let half = (-spec.x_min()).min(spec.x_max());
    if half < T::lit(40.0) {
        return Err(Error::validation(format!(
            "under-resolved grid for n = {n_max}: box half-width {half} < 40"
        )));
    }
    Ok(())
}

/// Norms of the closed-form members for each `n` in `n_list`.
pub fn family_report<T: Real>(n_list: &[usize], spec: &GridSpec<T>) -> Result<CatastropheReport<T>> {
    if n_list.is_empty() {
        return Err(Error::validation("empty n list"));
    }
    if n_list.contains(&0) {
        return Err(Error::validation("family members need n >= 1"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("n list must be strictly ascending"));
    }
    let n_max = *n_list.last().unwrap();
    check_family_grid(n_max, spec)?;
    let k_max = spec.k_nyquist();
    let rows = n_list
        .par_iter()
        .map(|&n| {
            let f = closed_form_samples(n, spec)?;
            if !f.decays_at_edges(T::lit(1e-8)) {
                log::warn!("family member n = {n} does not decay inside the box; norms are truncated");
            }
            Ok(ReportRow::from_norms(n, &norms(&f), blaschke_winding(n, k_max)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CatastropheReport::from_rows(rows, Some(T::lit(FAMILY_DRIFT_LIMIT))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `L^{(1)}_m(y) = Σ_i (-1)^i C(m+1, m-i) y^i / i!`
    fn laguerre_series(m: usize, y: f64) -> f64 {
        let binom = |n: usize, r: usize| -> f64 {
            (0..r).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
        };
        let mut fact = 1.0;
        let mut sum = 0.0;
        for i in 0..=m {
            if i > 0 {
                fact *= i as f64;
            }
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom(m + 1, m - i) * y.powi(i as i32) / fact;
        }
        sum
    }

    fn spec(n: usize, half: f64) -> GridSpec<f64> {
        GridSpec::new(-half, half, n).unwrap()
    }

    #[test]
    fn laguerre_base_cases() {
        for y in [0.0, 0.5, 3.0, 17.0] {
            assert_eq!(laguerre_eval::<f64>(0, y).unwrap(), 1.0);
            assert!((laguerre_eval::<f64>(1, y).unwrap() - (2.0 - y)).abs() < 1e-15);
            assert!((laguerre_series(1, y) - (2.0 - y)).abs() < 1e-15);
        }
        // 3 - 3y + y²/2 at y = 3
        assert!((laguerre_series(2, 3.0) + 1.5).abs() < 1e-14);
        assert!((laguerre_eval::<f64>(2, 3.0).unwrap() + 1.5).abs() < 1e-14);
        assert!(laguerre_eval::<f64>(201, 1.0).is_err());
        assert!(laguerre_eval::<f64>(200, 1.0).is_ok());
        assert!((laguerre_eval::<f32>(2, 3.0).unwrap() + 1.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn laguerre_recurrence_matches_series(m in 0usize..12, y in 0.0f64..10.0) {
            let a = laguerre_eval(m, y).unwrap();
            let b = laguerre_series(m, y);
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn modulus_is_n_independent() {
        let s = spec(1024, 200.0);
        let base = blaschke_spectrum(&FamilyParams::new(0, s).unwrap()).unwrap();
        for n in 0..=12 {
            let f = blaschke_spectrum(&FamilyParams::new(n, s).unwrap()).unwrap();
            for ((k, m), m0) in f.k_grid().iter().zip(f.modulus()).zip(base.modulus()) {
                assert!((m - 1.0 / (1.0 + k * k)).abs() < 1e-14);
                assert!((m - m0).abs() < 1e-14);
            }
        }
        assert!(base.phase_unwrapped().iter().all(|p| *p == 0.0));
    }

    #[test]
    fn consecutive_powers_differ_by_one_factor() {
        let s = spec(512, 100.0);
        let f1 = blaschke_spectrum(&FamilyParams::new(1, s).unwrap()).unwrap();
        let f2 = blaschke_spectrum(&FamilyParams::new(2, s).unwrap()).unwrap();
        for ((k, a), b) in f1.k_grid().iter().zip(f1.values()).zip(f2.values()) {
            let factor = Complex::new(-k, 1.0) / Complex::new(*k, 1.0);
            assert!((b / a - factor).norm() < 1e-14);
        }
    }

    #[test]
    fn winding_matches_power() {
        let s = spec(4096, 400.0);
        // a window [-K, K] loses about 2n/(πK) turns of the total n
        for n in [1usize, 3, 7] {
            let f = blaschke_spectrum(&FamilyParams::new(n, s).unwrap()).unwrap();
            assert_eq!(f.winding(), n as i64, "n = {n}");
            assert_eq!(blaschke_winding(n, s.k_nyquist()), n as i64);
        }
        assert_eq!(blaschke_winding(15, s.k_nyquist()), 14);
        assert_eq!(blaschke_winding(64, 643.0), 64);
    }

    #[test]
    fn aliasing_guard() {
        let s = spec(1024, 40.0);
        assert!(FamilyParams::new(9, s).is_ok());
        assert!(matches!(FamilyParams::new(10, s), Err(Error::Validation(_))));
    }

    #[test]
    fn calibration_is_reproducible() {
        let s = spec(16384, 40.0);
        let cal = calibrate(&s).unwrap();
        assert_eq!(cal.support, CALIBRATION.support);
        assert_eq!(cal.sign, CALIBRATION.sign);
        // the fit inherits the O(h) cusp error of the discrete inverse
        assert!((cal.scale - CALIBRATION.scale).abs() / CALIBRATION.scale < 1e-3, "{cal:?}");
    }

    #[test]
    fn first_member_has_single_maximum_at_unit_distance() {
        let s = spec(16384, 40.0);
        let f = laguerre_closed_form(&FamilyParams::new(1, s).unwrap()).unwrap();
        let xs = s.xs();
        let v = f.real_parts();
        let jmax = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert!((xs[jmax] + 1.0).abs() <= s.spacing());
        assert!((v[jmax] - (-1.0f64).exp()).abs() < 1e-4);
        let interior_max = (1..v.len() - 1).filter(|&j| v[j] > v[j - 1] && v[j] >= v[j + 1]).count();
        assert_eq!(interior_max, 1);
        assert!(xs.iter().zip(&v).all(|(x, y)| *x < 0.0 || *y == 0.0));
    }

    #[test]
    fn fourth_member_changes_sign_three_times() {
        let s = spec(16384, 40.0);
        let v = laguerre_closed_form(&FamilyParams::new(4, s).unwrap()).unwrap().real_parts();
        let nz: Vec<f64> = v.into_iter().filter(|x| x.abs() > 1e-300).collect();
        let changes = nz.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(changes, 3);
    }

    #[test]
    fn closed_form_norm_is_n_independent_on_a_wide_box() {
        // ∫ y² e^{-2y} (L¹_{n-1}(2y))² dy / n² = 1/4 for every n
        let s = spec(32768, 256.0);
        let l2: Vec<f64> = [1usize, 2, 8, 32]
            .iter()
            .map(|&n| norms(&closed_form_samples(n, &s).unwrap()).l2)
            .collect();
        for v in &l2 {
            assert!((v - 0.5).abs() < 1e-7, "{l2:?}");
        }
    }

    #[test]
    fn single_row_is_stable() {
        let r = family_report(&[1], &spec(4096, 40.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Stable);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].winding, 1);
    }

    #[test]
    fn report_validation() {
        let s = spec(4096, 40.0);
        assert!(family_report(&[], &s).is_err());
        assert!(family_report(&[2, 1], &s).is_err());
        assert!(family_report(&[0, 1], &s).is_err());
        assert!(family_report(&[1, 17], &s).is_err());
        assert!(family_report(&[1], &spec(4096, 30.0)).is_err());
    }

    #[test]
    fn verdict_rules() {
        let row = |n, sg: f64| ReportRow { n, l2: 1.0, h1: 1.0, sup: 1.0, sup_grad: sg, winding: 0 };
        let up = CatastropheReport::from_rows(vec![row(1, 1.0), row(2, 0.995), row(4, 2.0)], Some(0.01));
        assert_eq!(up.verdict, Verdict::CatastropheTrend);
        assert!((up.growth_ratio_supgrad - 2.0).abs() < 1e-15);
        let dip = CatastropheReport::from_rows(vec![row(1, 1.0), row(2, 0.9), row(4, 2.0)], Some(0.01));
        assert_eq!(dip.verdict, Verdict::Stable);
        let mut drifting = vec![row(1, 1.0), row(2, 2.0)];
        drifting[1].l2 = 1.5;
        assert_eq!(CatastropheReport::from_rows(drifting.clone(), Some(0.01)).verdict, Verdict::Stable);
        assert_eq!(CatastropheReport::from_rows(drifting, None).verdict, Verdict::CatastropheTrend);
    }

    #[test]
    fn report_json_shape() {
        let r = family_report(&[1, 2], &spec(4096, 40.0)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["rows"][0]["sup_grad"].is_number());
        assert!(v["verdict"] == "stable" || v["verdict"] == "catastrophe_trend");
    }
}
