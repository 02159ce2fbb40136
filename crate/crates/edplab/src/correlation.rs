//! Self-correlations, the window-variance identity, finite-N decoupling
//! defects, and the product-correlation identity for polynomial phases.
//!
//! Everything here is a finite-N estimate: sequences are materialized to
//! N plus the largest shift, windows are one-sided, and no wraparound or
//! zero-padding is applied. Smallness tolerances are pinned per-experiment
//! from oracle runs, since no convergence rates are available.

use num_complex::Complex64;
use serde::Serialize;

use crate::averaging::{mode_average, AverageMode};
use crate::error::{Error, Result};
use crate::numeric::e2pi;
use crate::poly::PhasePoly;
use crate::sequence::UnitDiscSequence;

/// gamma(h) = mode-average over n in `[N]` of a(n+h) conj(a(n)).
pub fn self_correlation(
    a: &UnitDiscSequence,
    h: u64,
    n: u64,
    mode: AverageMode,
) -> Result<Complex64> {
    if h < 1 {
        return Err(Error::domain("shift h must be >= 1"));
    }
    if n + h > a.len() {
        return Err(Error::domain(format!(
            "self_correlation needs N + h = {} materialized entries, have {}",
            n + h,
            a.len()
        )));
    }
    mode_average(n, mode, &|k| a.get(k + h) * a.get(k).conj())
}

/// Mode-average over n in `[N]` of `|sum_{h=1..H} b(n+h)|^2`. When the
/// self-correlations of b vanish this equals H * E|b|^2.
pub fn window_variance(
    b: &UnitDiscSequence,
    window: u64,
    n: u64,
    mode: AverageMode,
) -> Result<f64> {
    if window < 1 {
        return Err(Error::domain("window length must be >= 1"));
    }
    if n + window > b.len() {
        return Err(Error::domain(format!(
            "window_variance needs N + H = {} materialized entries, have {}",
            n + window,
            b.len()
        )));
    }
    // prefix sums keep each window sum O(1); magnitudes stay <= N so the
    // cancellation error is ~N * 1e-16, well under useful tolerances
    let mut prefix = vec![Complex64::new(0.0, 0.0); (n + window) as usize + 1];
    for k in 1..=(n + window) {
        prefix[k as usize] = prefix[k as usize - 1] + b.get(k);
    }
    let avg = mode_average(n, mode, &|k| {
        let w = prefix[(k + window) as usize] - prefix[k as usize];
        Complex64::new(w.norm_sqr(), 0.0)
    })?;
    Ok(avg.re)
}

/// Finite-N proxy for non-nullness: the mode-average of |a(n)|^2.
pub fn nonnull_score(a: &UnitDiscSequence, n: u64, mode: AverageMode) -> Result<f64> {
    if n > a.len() {
        return Err(Error::domain("nonnull_score range exceeds materialization"));
    }
    let avg = mode_average(n, mode, &|k| Complex64::new(a.get(k).norm_sqr(), 0.0))?;
    Ok(avg.re)
}

/// One factor of a shift-product: the sequence, a non-negative shift, and
/// whether the factor enters conjugated.
pub struct ShiftFactor<'a> {
    pub seq: &'a UnitDiscSequence,
    pub shift: u64,
    pub conjugate: bool,
}

impl ShiftFactor<'_> {
    #[inline]
    fn eval(&self, n: u64) -> Complex64 {
        let v = self.seq.get(n + self.shift);
        if self.conjugate {
            v.conj()
        } else {
            v
        }
    }
}

fn product_at(factors: &[ShiftFactor<'_>], n: u64) -> Complex64 {
    factors
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.eval(n))
}

/// |E(A B) - E(A) E(B)| at finite N for shift-products A, B.
pub fn decoupling_defect(
    a_factors: &[ShiftFactor<'_>],
    b_factors: &[ShiftFactor<'_>],
    n: u64,
    mode: AverageMode,
) -> Result<f64> {
    for f in a_factors.iter().chain(b_factors) {
        if n + f.shift > f.seq.len() {
            return Err(Error::domain(format!(
                "factor '{}' needs N + shift = {} entries, have {}",
                f.seq.label(),
                n + f.shift,
                f.seq.len()
            )));
        }
    }
    let joint = mode_average(n, mode, &|k| product_at(a_factors, k) * product_at(b_factors, k))?;
    let ea = mode_average(n, mode, &|k| product_at(a_factors, k))?;
    let eb = mode_average(n, mode, &|k| product_at(b_factors, k))?;
    Ok((joint - ea * eb).norm())
}

/// A Riemann-integrable test function on the torus with a closed-form
/// integral: a constant, a harmonic e(m t), or a step function.
#[derive(Clone, Debug, Serialize)]
pub enum TorusFunction {
    Constant { re: f64, im: f64 },
    /// t -> e(m t)
    Harmonic { m: i64 },
    Step { cells: Vec<crate::weights::StepCell> },
}

impl TorusFunction {
    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            TorusFunction::Constant { re, im } => Complex64::new(*re, *im),
            TorusFunction::Harmonic { m } => e2pi(*m as f64 * t),
            TorusFunction::Step { cells } => {
                let idx = cells.partition_point(|c| c.end <= t);
                cells[idx.min(cells.len() - 1)].value_c()
            }
        }
    }

    pub fn integral(&self) -> Complex64 {
        match self {
            TorusFunction::Constant { re, im } => Complex64::new(*re, *im),
            TorusFunction::Harmonic { m } => {
                if *m == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            TorusFunction::Step { cells } => cells
                .iter()
                .map(|c| c.value_c() * (c.end - c.start))
                .fold(Complex64::new(0.0, 0.0), |a, b| a + b),
        }
    }
}

/// Cesaro estimate of E_n phi({P(n+h)}) psi({P(n)}) against the
/// equidistribution target (integral of phi)(integral of psi).
pub fn weyl_product_correlation(
    phi: &TorusFunction,
    psi: &TorusFunction,
    p: &PhasePoly,
    h: u64,
    n: u64,
) -> Result<(Complex64, Complex64)> {
    if h < 1 {
        return Err(Error::domain("shift h must be >= 1"));
    }
    if p.degree() < 2 {
        return Err(Error::domain("polynomial degree must be >= 2"));
    }
    let est = mode_average(n, AverageMode::Cesaro, &|k| {
        phi.eval(p.frac_at(k + h)) * psi.eval(p.frac_at(k))
    })?;
    Ok((est, phi.integral() * psi.integral()))
}

/// Tabulated correlation estimates for one sequence over a range of shifts.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub sequence_label: String,
    pub n: u64,
    pub mode: AverageMode,
    pub h_values: Vec<u64>,
    pub estimates: Vec<[f64; 2]>,
}

impl CorrelationReport {
    pub fn compute(
        a: &UnitDiscSequence,
        h_values: &[u64],
        n: u64,
        mode: AverageMode,
    ) -> Result<Self> {
        let mut estimates = Vec::with_capacity(h_values.len());
        for &h in h_values {
            let g = self_correlation(a, h, n, mode)?;
            estimates.push([g.re, g.im]);
        }
        Ok(CorrelationReport {
            sequence_label: a.label().to_string(),
            n,
            mode,
            h_values: h_values.to_vec(),
            estimates,
        })
    }

    /// CSV export: `h,re,im,abs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,re,im,abs\n");
        for (h, est) in self.h_values.iter().zip(&self.estimates) {
            let abs = (est[0] * est[0] + est[1] * est[1]).sqrt();
            out.push_str(&format!("{},{},{},{}\n", h, est[0], est[1], abs));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_sequence_correlates_to_one() {
        let a = UnitDiscSequence::ones(1_000);
        for h in [1u64, 5, 17] {
            let g = self_correlation(&a, h, 900, AverageMode::Logarithmic).unwrap();
            assert!((g - c(1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn linear_phase_correlation_is_exact() {
        // a(n) = e(n alpha): a(n+h) conj(a(n)) = e(h alpha) for every n
        let alpha = 2f64.sqrt();
        let a = weights::linear_phase_weight(alpha, 2_000);
        for h in [1u64, 2, 3] {
            for mode in [AverageMode::Cesaro, AverageMode::Logarithmic] {
                let g = self_correlation(&a, h, 1_900, mode).unwrap();
                let expect = e2pi((alpha * h as f64).fract());
                assert!((g - expect).norm() < 1e-11, "h = {h}");
            }
        }
    }

    #[test]
    fn correlation_range_checked() {
        let a = UnitDiscSequence::ones(100);
        assert!(self_correlation(&a, 1, 100, AverageMode::Cesaro).is_err());
        assert!(self_correlation(&a, 0, 50, AverageMode::Cesaro).is_err());
    }

    #[test]
    fn conjugate_symmetry_on_shared_window() {
        let a = weights::random_sign_weight(2_000, 5);
        let n = 1_000u64;
        for h in [1u64, 7] {
            let fwd = self_correlation(&a, h, n, AverageMode::Logarithmic).unwrap();
            // reversed roles on the same window
            let rev = mode_average(n, AverageMode::Logarithmic, &|k| {
                a.get(k) * a.get(k + h).conj()
            })
            .unwrap();
            assert!((fwd - rev.conj()).norm() <= 2.0 * h as f64 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn window_variance_trivial_cases() {
        let ones = UnitDiscSequence::ones(200);
        let v = window_variance(&ones, 7, 150, AverageMode::Cesaro).unwrap();
        assert!((v - 49.0).abs() < 1e-10);

        let alt: Vec<Complex64> = (1..=200).map(|k| c(if k % 2 == 0 { 1.0 } else { -1.0 })).collect();
        let alt = UnitDiscSequence::new(alt, "alt").unwrap();
        let v = window_variance(&alt, 2, 150, AverageMode::Logarithmic).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn window_variance_matches_double_sum_at_small_n() {
        // brute-force equivalence: V(H) = sum_{h1,h2<=H} E b(n+h1) conj(b(n+h2))
        let b = weights::random_sign_weight(1_100, 12);
        let n = 1_000u64;
        for window in [3u64, 5] {
            let direct = window_variance(&b, window, n, AverageMode::Logarithmic).unwrap();
            let mut dsum = Complex64::new(0.0, 0.0);
            for h1 in 1..=window {
                for h2 in 1..=window {
                    dsum += mode_average(n, AverageMode::Logarithmic, &|k| {
                        b.get(k + h1) * b.get(k + h2).conj()
                    })
                    .unwrap();
                }
            }
            assert!((direct - dsum.re).abs() < 1e-9, "H = {window}");
            assert!(dsum.im.abs() < 1e-12);
        }
    }

    #[test]
    fn window_variance_cauchy_schwarz() {
        let b = weights::polynomial_phase_weight(&PhasePoly::monomial(2, 0.37), 3_000).unwrap();
        for window in [2u64, 8, 32] {
            let v = window_variance(&b, window, 2_900, AverageMode::Logarithmic).unwrap();
            assert!(v <= (window * window) as f64 + 1e-9);
        }
    }

    #[test]
    fn nonnull_scores() {
        let ones = UnitDiscSequence::ones(100);
        assert!((nonnull_score(&ones, 100, AverageMode::Logarithmic).unwrap() - 1.0).abs() < 1e-13);
        let zeros = UnitDiscSequence::constant(c(0.0), 100, "zero").unwrap();
        assert_eq!(nonnull_score(&zeros, 100, AverageMode::Logarithmic).unwrap(), 0.0);
    }

    #[test]
    fn decoupling_against_constant_is_exact_zero() {
        let a = weights::random_sign_weight(500, 9);
        let ones = UnitDiscSequence::ones(500);
        let d = decoupling_defect(
            &[ShiftFactor { seq: &a, shift: 0, conjugate: false }],
            &[ShiftFactor { seq: &ones, shift: 0, conjugate: false }],
            400,
            AverageMode::Logarithmic,
        )
        .unwrap();
        // E(A*1) - E(A)*1 cancels to rounding noise
        assert!(d < 1e-13);
    }

    #[test]
    fn linear_phase_not_self_decoupled() {
        // control case: A = A' = e(n alpha) has |E(A^2) - E(A)^2| large
        let a = weights::linear_phase_weight(2f64.sqrt(), 1_100);
        let fac = || ShiftFactor { seq: &a, shift: 0, conjugate: false };
        let d = decoupling_defect(&[fac()], &[fac()], 1_000, AverageMode::Logarithmic).unwrap();
        assert!(d > 0.01, "defect unexpectedly small: {d}");
    }

    #[test]
    fn weyl_product_correlation_constant_case() {
        let one = TorusFunction::Constant { re: 1.0, im: 0.0 };
        let p = PhasePoly::monomial(2, 2f64.sqrt());
        let (est, target) = weyl_product_correlation(&one, &one, &p, 1, 10_000).unwrap();
        assert!((est - c(1.0)).norm() < 1e-12);
        assert!((target - c(1.0)).norm() < 1e-15);
        // degree and shift guards
        let lin = PhasePoly::monomial(1, 2f64.sqrt());
        assert!(weyl_product_correlation(&one, &one, &lin, 1, 100).is_err());
        assert!(weyl_product_correlation(&one, &one, &p, 0, 100).is_err());
    }

    #[test]
    fn weyl_product_correlation_harmonics_cancel() {
        let phi = TorusFunction::Harmonic { m: 1 };
        let psi = TorusFunction::Harmonic { m: -1 };
        let p = PhasePoly::monomial(2, 2f64.sqrt());
        let (est, target) = weyl_product_correlation(&phi, &psi, &p, 1, 1_000_000).unwrap();
        assert_eq!(target, c(0.0));
        assert!(est.norm() <= 0.01, "estimate = {}", est.norm());
    }

    #[test]
    fn weyl_product_correlation_three_cell_step() {
        let step = TorusFunction::Step { cells: weights::three_cell_step() };
        let p = PhasePoly::monomial(2, 2f64.sqrt());
        let (est, target) = weyl_product_correlation(&step, &step, &p, 2, 1_000_000).unwrap();
        assert!(target.norm() < 1e-15);
        assert!(est.norm() <= 0.02, "estimate = {}", est.norm());
    }

    #[test]
    fn report_csv_has_fixed_header() {
        let a = UnitDiscSequence::ones(50);
        let r = CorrelationReport::compute(&a, &[1, 2], 40, AverageMode::Cesaro).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("h,re,im,abs\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn report_estimates_stay_in_the_disc() {
        let a = weights::random_sign_weight(2_000, 31);
        for mode in [AverageMode::Cesaro, AverageMode::Logarithmic] {
            let r = CorrelationReport::compute(&a, &[1, 3, 9, 27], 1_900, mode).unwrap();
            for e in &r.estimates {
                assert!(e[0] * e[0] + e[1] * e[1] <= (1.0 + 1e-9) * (1.0 + 1e-9));
            }
        }
    }
}
