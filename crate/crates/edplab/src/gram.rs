//! Finite-scale dilated correlations B(r) = E_{d in Phi} a(rd) conj(a(d))
//! over a Folner box, and positive-semidefiniteness of the associated Gram
//! matrix.
//!
//! Two matrix forms are computed. `ExactForm` builds G_ij = E_d a(r_i d)
//! conj(a(r_j d)), a true Gram matrix of vectors indexed by the box, so
//! its smallest eigenvalue is nonnegative up to rounding for every input.
//! `QuotientForm` builds G_ij = B(r_i / r_j), which equals the exact form
//! only up to the box's dilation defect; the report carries the maximal
//! defect over the pairwise ratios so the deviation can be bounded.

use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;

use crate::averaging::{dilation_defect, FolnerBox};
use crate::error::{Error, Result};
use crate::numeric::tree_sum_c64;

/// Sequences enter as evaluable functions on the positive integers; the
/// extension by zero off the integers is handled here via exact
/// divisibility tests on the rational dilation.
pub type SeqFn<'a> = &'a (dyn Fn(u64) -> Result<Complex64> + Sync);

/// Value of a at the rational r*d: zero when r*d is not an integer.
fn eval_dilated(a: SeqFn<'_>, r: Ratio<u64>, d: u64) -> Result<Complex64> {
    let (u, v) = (*r.numer(), *r.denom());
    if d % v != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    match (d / v).checked_mul(u) {
        Some(n) => a(n),
        None => Err(Error::resource(format!(
            "dilated index {r} * {d} overflows u64"
        ))),
    }
}

/// B(r) = E_{d in Phi} a(r d) conj(a(d)), with a = 0 off the integers.
pub fn dilated_correlation(a: SeqFn<'_>, r: Ratio<u64>, folner: &FolnerBox) -> Result<Complex64> {
    if *r.numer() == 0 {
        return Err(Error::domain("dilation ratio must be positive"));
    }
    let elems = folner.elements();
    let terms: Result<Vec<Complex64>> = elems
        .iter()
        .map(|&d| Ok(eval_dilated(a, r, d)? * a(d)?.conj()))
        .collect();
    let terms = terms?;
    Ok(tree_sum_c64(0, terms.len(), &|i| terms[i]) / elems.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GramForm {
    ExactForm,
    QuotientForm,
}

pub const MAX_GRAM_RATIONALS: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct GramReport {
    /// The rationals as reduced "numer/denom" strings.
    pub rationals: Vec<String>,
    /// Row-major complex entries as [re, im].
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub min_eigenvalue: f64,
    /// Max dilation defect over the pairwise ratios r_i / r_j, i != j.
    pub folner_defect_max: f64,
    pub form: GramForm,
    pub box_prime_count: usize,
    pub box_max_exponent: u32,
    pub box_size: usize,
}

fn min_eigenvalue_hermitian(g: &[Vec<Complex64>]) -> f64 {
    let m = g.len();
    let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| g[i][j]);
    let eig = mat.symmetric_eigen();
    eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Gram report for distinct positive rationals in lowest terms.
pub fn gram_psd_check(
    a: SeqFn<'_>,
    rationals: &[Ratio<u64>],
    folner: &FolnerBox,
    form: GramForm,
) -> Result<GramReport> {
    if rationals.is_empty() {
        return Err(Error::domain("need at least one rational"));
    }
    if rationals.len() > MAX_GRAM_RATIONALS {
        return Err(Error::resource(format!(
            "at most {MAX_GRAM_RATIONALS} rationals supported"
        )));
    }
    for (i, r) in rationals.iter().enumerate() {
        if *r.numer() == 0 {
            return Err(Error::domain("rationals must be positive"));
        }
        for s in &rationals[..i] {
            if r == s {
                return Err(Error::domain(format!("duplicate rational {r}")));
            }
        }
    }
    let m = rationals.len();
    let matrix: Vec<Vec<Complex64>> = match form {
        GramForm::ExactForm => {
            // vectors v_i(d) = a(r_i d) over the box; G = V V^H / |box|
            let elems = folner.elements();
            let mut vectors = Vec::with_capacity(m);
            for &r in rationals {
                let col: Result<Vec<Complex64>> =
                    elems.iter().map(|&d| eval_dilated(a, r, d)).collect();
                vectors.push(col?);
            }
            let mut g = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for i in 0..m {
                for j in 0..=i {
                    let (vi, vj) = (&vectors[i], &vectors[j]);
                    let s = tree_sum_c64(0, elems.len(), &|k| vi[k] * vj[k].conj())
                        / elems.len() as f64;
                    g[i][j] = s;
                    g[j][i] = s.conj();
                }
            }
            g
        }
        GramForm::QuotientForm => {
            let mut g = vec![vec![Complex64::new(0.0, 0.0); m]; m];
            for i in 0..m {
                for j in 0..m {
                    g[i][j] = dilated_correlation(a, rationals[i] / rationals[j], folner)?;
                }
            }
            g
        }
    };

    let mut defect_max = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                defect_max =
                    defect_max.max(dilation_defect(folner, rationals[i] / rationals[j])?);
            }
        }
    }

    Ok(GramReport {
        rationals: rationals.iter().map(|r| format!("{}/{}", r.numer(), r.denom())).collect(),
        min_eigenvalue: min_eigenvalue_hermitian(&matrix),
        matrix: matrix
            .iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        folner_defect_max: defect_max,
        form,
        box_prime_count: folner.prime_count(),
        box_max_exponent: folner.max_exponent(),
        box_size: folner.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::FactorizationTable;

    fn one() -> impl Fn(u64) -> Result<Complex64> + Sync {
        |_| Ok(Complex64::new(1.0, 0.0))
    }

    #[test]
    fn unit_sequence_identity_dilation() {
        let t = FactorizationTable::build(100).unwrap();
        let b = FolnerBox::build(2, 2, &t).unwrap();
        let f = one();
        let v = dilated_correlation(&f, Ratio::new(1, 1), &b).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn half_dilation_counts_even_elements() {
        let t = FactorizationTable::build(100).unwrap();
        let b = FolnerBox::build(2, 1, &t).unwrap(); // {1,2,3,6}
        let f = one();
        let v = dilated_correlation(&f, Ratio::new(1, 2), &b).unwrap();
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn total_mass_is_nonnegative() {
        let t = FactorizationTable::build(10_000).unwrap();
        let b = FolnerBox::build(3, 2, &t).unwrap();
        let a = |d: u64| Ok(crate::numeric::e2pi(crate::rng::unit_f64(3, d)));
        let v = dilated_correlation(&a, Ratio::new(1, 1), &b).unwrap();
        assert!(v.re >= 0.0 && v.im.abs() < 1e-12);
    }

    #[test]
    fn single_rational_report() {
        let t = FactorizationTable::build(100).unwrap();
        let b = FolnerBox::build(2, 2, &t).unwrap();
        let f = one();
        let r = gram_psd_check(&f, &[Ratio::new(1, 1)], &b, GramForm::ExactForm).unwrap();
        assert_eq!(r.matrix.len(), 1);
        assert!(r.min_eigenvalue >= -1e-9);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_rationals_rejected() {
        let t = FactorizationTable::build(100).unwrap();
        let b = FolnerBox::build(2, 1, &t).unwrap();
        let f = one();
        let dup = [Ratio::new(2, 1), Ratio::new(4, 2)];
        assert!(gram_psd_check(&f, &dup, &b, GramForm::ExactForm).is_err());
    }

    #[test]
    fn exact_form_is_psd_and_hermitian() {
        let t = FactorizationTable::build(1_000_000).unwrap();
        let b = FolnerBox::build(3, 3, &t).unwrap();
        let rat = [
            Ratio::new(1, 1),
            Ratio::new(2, 1),
            Ratio::new(3, 2),
            Ratio::new(5, 1),
        ];
        let a = |d: u64| Ok(crate::numeric::e2pi(crate::rng::unit_f64(11, d)));
        let rep = gram_psd_check(&a, &rat, &b, GramForm::ExactForm).unwrap();
        assert!(rep.min_eigenvalue >= -1e-9, "min eig {}", rep.min_eigenvalue);
        for i in 0..4 {
            for j in 0..4 {
                let gij = rep.matrix[i][j];
                let gji = rep.matrix[j][i];
                assert!((gij[0] - gji[0]).abs() < 1e-12);
                assert!((gij[1] + gji[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quotient_form_diagonal_is_total_mass() {
        let t = FactorizationTable::build(1_000_000).unwrap();
        let b = FolnerBox::build(3, 2, &t).unwrap();
        let a = |d: u64| Ok(crate::numeric::e2pi(crate::rng::unit_f64(29, d)));
        let rat = [Ratio::new(1, 1), Ratio::new(2, 1), Ratio::new(3, 1)];
        let rep = gram_psd_check(&a, &rat, &b, GramForm::QuotientForm).unwrap();
        let mass = dilated_correlation(&a, Ratio::new(1, 1), &b).unwrap();
        for i in 0..3 {
            assert!((rep.matrix[i][i][0] - mass.re).abs() < 1e-12);
            assert!(rep.matrix[i][i][1].abs() < 1e-12);
        }
    }

    #[test]
    fn quotient_form_close_to_exact_within_defect() {
        let t = FactorizationTable::build(100).unwrap();
        let b = FolnerBox::build(3, 4, &t).unwrap();
        let lam_table = FactorizationTable::build(3 * 810_000).unwrap();
        let a = move |d: u64| {
            let omega = lam_table.big_omega(d)?;
            Ok(Complex64::new(if omega % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
        };
        let rat = [Ratio::new(1, 1), Ratio::new(2, 1), Ratio::new(3, 1)];
        let exact = gram_psd_check(&a, &rat, &b, GramForm::ExactForm).unwrap();
        let quotient = gram_psd_check(&a, &rat, &b, GramForm::QuotientForm).unwrap();
        let bound = 2.0 * quotient.folner_defect_max + 1e-9;
        for i in 0..3 {
            for j in 0..3 {
                let d = Complex64::new(
                    quotient.matrix[i][j][0] - exact.matrix[i][j][0],
                    quotient.matrix[i][j][1] - exact.matrix[i][j][1],
                )
                .norm();
                assert!(d <= bound, "entry ({i},{j}): |diff| = {d} > {bound}");
            }
        }
        assert!(quotient.min_eigenvalue >= -(2.0 * quotient.folner_defect_max + 1e-9));
    }
}
