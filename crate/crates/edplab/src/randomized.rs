//! Monte-Carlo verification of the probabilistic ingredients: the
//! exponential tail bound for random signings, and the net-uniform
//! orthogonality experiment.
//!
//! The orthogonality experiment replaces the supremum over the full class
//! of net-valued multiplicative tuples by seeded random sampling (full
//! enumeration is astronomically infeasible); every report carries its
//! sample count so the estimate cannot be mistaken for the true supremum.
//! A tiny-N exhaustive path exists for brute-force comparison.

use num_complex::Complex64;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numeric::tree_sum_c64;
use crate::numtheory::{EpsilonNet, FactorizationTable, RangeEvaluator};
use crate::rng;
use crate::sequence::UnitDiscSequence;

/// Empirical tail frequency against the bound exp(-delta^2 N / 4).
#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub n: u64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    pub empirical_tail: f64,
    pub theoretical_bound: f64,
    /// Half-width of the exact (Clopper-Pearson) 95% binomial interval.
    pub mc_halfwidth: f64,
}

/// Exact binomial confidence interval for k successes in n trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let alpha = 1.0 - confidence;
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(k as f64, (n - k + 1) as f64)
            .unwrap()
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new((k + 1) as f64, (n - k) as f64)
            .unwrap()
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Fraction of seeded sign vectors X with |E_{n<=N} X_n b(n)| >= delta,
/// against the bound exp(-delta^2 N / 4). Trials are independent
/// substreams, so the count is identical at any worker count.
pub fn bernstein_tail_mc(
    b: &UnitDiscSequence,
    n: u64,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<TailReport> {
    if trials < 1 {
        return Err(Error::domain("need at least one trial"));
    }
    if n < 1 || n > b.len() {
        return Err(Error::domain(format!(
            "N = {n} outside the materialized range [1, {}]",
            b.len()
        )));
    }
    if delta <= 0.0 {
        return Err(Error::domain("delta must be positive"));
    }
    use rayon::prelude::*;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let sub = rng::substream(seed, t);
            let s = tree_sum_c64(1, n as usize + 1, &|k| {
                b.get(k as u64) * rng::sign(sub, k as u64) as f64
            });
            u64::from((s / n as f64).norm() >= delta)
        })
        .sum();
    let empirical = hits as f64 / trials as f64;
    let (lo, hi) = clopper_pearson(hits, trials, 0.95);
    Ok(TailReport {
        n,
        delta,
        trials,
        seed,
        empirical_tail: empirical,
        theoretical_bound: (-delta * delta * n as f64 / 4.0).exp(),
        mc_halfwidth: (hi - lo) / 2.0,
    })
}

/// Per-scale record of the sampled orthogonality maxima.
#[derive(Clone, Debug, Serialize)]
pub struct NetOrthogonalityRow {
    pub n: u64,
    pub epsilon: f64,
    /// Comparison scale (log N)^(-1/3).
    pub delta_n: f64,
    /// max over sampled tuples of |E_{n<=N} a(n) X_n prod_j g_j(n+h_j)|.
    pub max_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NetOrthogonalityReport {
    pub ell: usize,
    pub shifts: Vec<u64>,
    pub samples_per_n: u64,
    pub seed: u64,
    /// Sampling replaces the class supremum; `samples_per_n` says how far
    /// the reported maxima are from exhaustive.
    pub sampled_not_supremum: bool,
    pub rows: Vec<NetOrthogonalityRow>,
}

/// Draws a tuple of net-valued multiplicative functions (dense values on
/// [1, m]) and returns |E_{n<=N} a(n) X(n) prod_j g_j(n+h_j)| with the
/// class-N truncation g_j = 0 beyond N.
fn sampled_average(
    a: &UnitDiscSequence,
    x_seed: u64,
    g_dense: &[Vec<Complex64>],
    shifts: &[u64],
    n: u64,
) -> f64 {
    let s = tree_sum_c64(1, n as usize + 1, &|k| {
        let k64 = k as u64;
        let mut t = a.get(k64) * rng::sign(x_seed, k64) as f64;
        for (g, &h) in g_dense.iter().zip(shifts) {
            let idx = k64 + h;
            t *= if idx <= n { g[idx as usize] } else { Complex64::new(0.0, 0.0) };
        }
        t
    });
    (s / n as f64).norm()
}

fn draw_tuple(
    ev: &RangeEvaluator,
    net: &EpsilonNet,
    ell: usize,
    tuple_seed: u64,
) -> Vec<Vec<Complex64>> {
    let ppc = ev.prime_powers().len();
    (0..ell)
        .map(|j| {
            let gseed = rng::substream(tuple_seed, j as u64);
            let ppv: Vec<Complex64> = (0..ppc)
                .map(|i| {
                    let pick = rng::at(gseed, i as u64) as usize % net.len();
                    net.points()[pick]
                })
                .collect();
            ev.evaluate(&ppv)
        })
        .collect()
}

/// One sampled row at an explicit epsilon: fixes the sign realization of
/// grid slot `grid_index` and reports the worst |average| over
/// `samples` drawn tuples. The experiment below calls this with its own
/// epsilon schedule; tiny-N brute-force comparisons call it with a pinned
/// epsilon.
pub fn net_orthogonality_sampled_at(
    a: &UnitDiscSequence,
    ell: usize,
    shifts: &[u64],
    n: u64,
    epsilon: f64,
    samples: u64,
    seed: u64,
    grid_index: u64,
    table: &FactorizationTable,
) -> Result<f64> {
    if ell < 1 || shifts.len() != ell {
        return Err(Error::domain("need one shift per factor"));
    }
    if samples < 1 {
        return Err(Error::domain("need at least one sample"));
    }
    if n > a.len() {
        return Err(Error::domain(format!(
            "scale {n} exceeds materialized length {}",
            a.len()
        )));
    }
    let net = EpsilonNet::build(epsilon)?;
    let ev = RangeEvaluator::new(table, n)?;
    let scale_seed = rng::substream(seed, grid_index);
    let x_seed = rng::substream(scale_seed, 0);
    let mut max_abs = 0.0f64;
    for s in 0..samples {
        let tuple_seed = rng::substream(scale_seed, s + 1);
        let g = draw_tuple(&ev, &net, ell, tuple_seed);
        max_abs = max_abs.max(sampled_average(a, x_seed, &g, shifts, n));
    }
    Ok(max_abs)
}

/// For each N in the grid: fixes one seeded sign realization, samples
/// `samples_per_n` tuples from the net class at epsilon_N = (log N)^-2 and
/// reports the worst |average| seen, next to delta_N = (log N)^(-1/3).
pub fn net_orthogonality_experiment(
    a: &UnitDiscSequence,
    ell: usize,
    shifts: &[u64],
    n_grid: &[u64],
    samples_per_n: u64,
    seed: u64,
    table: &FactorizationTable,
) -> Result<NetOrthogonalityReport> {
    for w in n_grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::domain("N grid must be strictly increasing"));
        }
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        if n < 3 {
            return Err(Error::domain("grid scales must be >= 3"));
        }
        let eps = (n as f64).ln().powi(-2).min(1.0);
        let max_abs = net_orthogonality_sampled_at(
            a,
            ell,
            shifts,
            n,
            eps,
            samples_per_n,
            seed,
            gi as u64,
            table,
        )?;
        rows.push(NetOrthogonalityRow {
            n,
            epsilon: eps,
            delta_n: (n as f64).ln().powf(-1.0 / 3.0),
            max_abs,
        });
    }
    Ok(NetOrthogonalityReport {
        ell,
        shifts: shifts.to_vec(),
        samples_per_n,
        seed,
        sampled_not_supremum: true,
        rows,
    })
}

/// Cap on the enumerated class size of the exhaustive path.
pub const MAX_EXHAUSTIVE_CLASS: u64 = 200_000;

/// Exhaustive maximum over the whole class of net-valued tuples at scale N
/// (feasible only for tiny N and coarse epsilon). The sign realization is
/// seeded exactly like row `grid_index` of the sampled experiment.
pub fn net_orthogonality_exhaustive(
    a: &UnitDiscSequence,
    ell: usize,
    shifts: &[u64],
    n: u64,
    epsilon: f64,
    seed: u64,
    grid_index: u64,
    table: &FactorizationTable,
) -> Result<f64> {
    if ell < 1 || shifts.len() != ell {
        return Err(Error::domain("need one shift per factor"));
    }
    let net = EpsilonNet::build(epsilon)?;
    let ev = RangeEvaluator::new(table, n)?;
    let ppc = ev.prime_powers().len();
    let slots = ppc * ell;
    let class = (net.len() as u64)
        .checked_pow(slots as u32)
        .filter(|&c| c <= MAX_EXHAUSTIVE_CLASS)
        .ok_or_else(|| {
            Error::resource(format!(
                "class size |B|^(ell*ppc) = {}^{slots} exceeds the exhaustive cap",
                net.len()
            ))
        })?;
    let scale_seed = rng::substream(seed, grid_index);
    let x_seed = rng::substream(scale_seed, 0);
    let mut max_abs = 0.0f64;
    let mut assignment = vec![0usize; slots];
    for code in 0..class {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = (c % net.len() as u64) as usize;
            c /= net.len() as u64;
        }
        let g_dense: Vec<Vec<Complex64>> = (0..ell)
            .map(|j| {
                let ppv: Vec<Complex64> = (0..ppc)
                    .map(|i| net.points()[assignment[j * ppc + i]])
                    .collect();
                ev.evaluate(&ppv)
            })
            .collect();
        max_abs = max_abs.max(sampled_average(a, x_seed, &g_dense, shifts, n));
    }
    Ok(max_abs)
}
