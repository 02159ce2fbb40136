//! Deterministic summation and small numeric helpers.
//!
//! All large reductions in this crate go through [`tree_sum_f64`] /
//! [`tree_sum_c64`]: a fixed binary splitting whose shape depends only on
//! the index range. `rayon::join` may run the halves concurrently, but the
//! combination order is the same at any worker count, so floating-point
//! results are bit-identical whether the pool has 1 or 8 threads. Pairwise
//! splitting also keeps rounding error at O(log n) instead of O(n).

use num_complex::Complex64;

/// Below this range length the sum is a plain sequential fold.
const LEAF: usize = 2048;
/// Below this range length we do not spawn parallel work.
const PAR_MIN: usize = 1 << 16;

macro_rules! tree_sum_impl {
    ($name:ident, $ty:ty, $zero:expr) => {
        pub fn $name<F>(lo: usize, hi: usize, f: &F) -> $ty
        where
            F: Fn(usize) -> $ty + Sync,
        {
            debug_assert!(lo <= hi);
            let len = hi - lo;
            if len <= LEAF {
                let mut acc: $ty = $zero;
                for i in lo..hi {
                    acc += f(i);
                }
                acc
            } else {
                let mid = lo + len / 2;
                if len >= PAR_MIN {
                    let (a, b) = rayon::join(|| $name(lo, mid, f), || $name(mid, hi, f));
                    a + b
                } else {
                    $name(lo, mid, f) + $name(mid, hi, f)
                }
            }
        }
    };
}

tree_sum_impl!(tree_sum_f64, f64, 0.0);
tree_sum_impl!(tree_sum_c64, Complex64, Complex64::new(0.0, 0.0));

/// e(t) := exp(2 pi i t).
#[inline]
pub fn e2pi(t: f64) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Harmonic sum `H_n = sum_{k<=n} 1/k`, pairwise-summed.
pub fn harmonic_sum(n: u64) -> f64 {
    tree_sum_f64(1, n as usize + 1, &|k| 1.0 / k as f64)
}

/// Distance from `t` to the nearest integer.
#[inline]
pub fn dist_to_integer(t: f64) -> f64 {
    (t - t.round()).abs()
}

/// Numerical slack allowed above the closed unit disc.
pub const UNIT_DISC_TOL: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_matches_sequential() {
        let v: Vec<f64> = (0..100_000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let t = tree_sum_f64(0, v.len(), &|i| v[i]);
        let s: f64 = v.iter().sum();
        assert!((t - s).abs() < 1e-6);
    }

    #[test]
    fn tree_sum_independent_of_workers() {
        let f = |i: usize| (i as f64).sin() / (i + 1) as f64;
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| tree_sum_f64(0, 300_000, &f));
        let eight = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| tree_sum_f64(0, 300_000, &f));
        assert_eq!(one.to_bits(), eight.to_bits());
    }

    #[test]
    fn harmonic_small_values() {
        assert!((harmonic_sum(1) - 1.0).abs() < 1e-15);
        assert!((harmonic_sum(2) - 1.5).abs() < 1e-15);
        assert!((harmonic_sum(4) - 25.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn e2pi_quarter_turns() {
        assert!((e2pi(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((e2pi(0.25) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((e2pi(0.5) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }
}
