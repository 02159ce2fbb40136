//! Real polynomials evaluated mod 1 at integer arguments.
//!
//! Weights like e(P(k)) need the fractional part of P(k) for k up to ~1e7.
//! Plain double Horner carries only relative precision, which is useless
//! mod 1 once P(k) ~ 1e12. Here Horner runs in two-double (compensated)
//! arithmetic and reduces mod 1 after every step; the reduction is valid
//! because k is an integer, and it keeps every intermediate below k in
//! magnitude, so the absolute phase error stays around 1e-24 per step —
//! far inside every tolerance used downstream.
//!
//! The coefficients themselves are doubles; irrational coefficients are
//! represented by their nearest double and all equidistribution claims are
//! made for that double, at stated N, within stated tolerances.

/// Unevaluated two-double value `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

/// Requires |a| >= |b| or a == 0.
#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: a.mul_add(b, -p),
    }
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    fn mul_f64(self, x: f64) -> Dd {
        let p = two_prod(self.hi, x);
        quick_two_sum(p.hi, p.lo + self.lo * x)
    }

    #[inline]
    fn add_f64(self, x: f64) -> Dd {
        let s = two_sum(self.hi, x);
        quick_two_sum(s.hi, s.lo + self.lo)
    }

    /// Fractional part in [0, 1).
    #[inline]
    fn frac(self) -> Dd {
        // hi - floor(hi) is exact (Sterbenz), so only lo can push the
        // value outside [0, 1).
        let mut r = quick_two_sum(self.hi - self.hi.floor(), self.lo);
        if r.hi >= 1.0 {
            r = quick_two_sum(r.hi - 1.0, r.lo);
        } else if r.hi < 0.0 {
            r = quick_two_sum(r.hi + 1.0, r.lo);
        }
        r
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// A polynomial `P(k) = c[d] k^d + ... + c[1] k + c[0]` viewed as a map into
/// the torus R/Z.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoly {
    /// Coefficients in ascending degree order: `coeffs[i]` multiplies `k^i`.
    coeffs: Vec<f64>,
}

impl PhasePoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs at least one coefficient");
        PhasePoly { coeffs }
    }

    /// `P(k) = lead * k^degree` with all lower coefficients zero.
    pub fn monomial(degree: usize, lead: f64) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = lead;
        PhasePoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Fractional part of P(k), in [0, 1).
    pub fn frac_at(&self, k: u64) -> f64 {
        debug_assert!(k < (1u64 << 53), "argument too large to be exact in f64");
        let kf = k as f64;
        let mut acc = Dd::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul_f64(kf).add_f64(c).frac();
        }
        let out = acc.to_f64();
        // to_f64 may round back up to 1.0 when the value is just below it
        if out >= 1.0 {
            0.0
        } else if out < 0.0 {
            out + 1.0
        } else {
            out
        }
    }
}
