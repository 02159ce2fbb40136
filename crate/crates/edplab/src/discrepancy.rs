//! Weighted discrepancy sums S_d(n) = sum_{k<=n} a(dk) w(k) and their
//! maximum over d*n <= N.
//!
//! The sup is truncated to d*n <= N exactly; no extended ranges. A full
//! profile evaluation costs sum_d N/d = O(N log N) complex additions; the
//! d-ranges are partitioned across workers and merged in d order, so the
//! result is identical at any worker count.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{FactorizationTable, MultiplicativeFunctionSpec};
use crate::sequence::UnitDiscSequence;

/// How a partial sum is scored: complex modulus (default) or |real part|
/// for +-1 studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscrepancyMetric {
    Modulus,
    RealPart,
}

impl DiscrepancyMetric {
    #[inline]
    fn score_sqr(&self, s: Complex64) -> f64 {
        match self {
            DiscrepancyMetric::Modulus => s.norm_sqr(),
            DiscrepancyMetric::RealPart => s.re * s.re,
        }
    }
}

/// Running sums S_d(0..=n_max) for one d; S_d(0) = 0.
pub fn partial_sums(
    a: &UnitDiscSequence,
    w: &UnitDiscSequence,
    d: u64,
) -> Result<Vec<Complex64>> {
    if d < 1 {
        return Err(Error::domain("dilation d must be >= 1"));
    }
    let n_max = (a.len() / d).min(w.len());
    let mut sums = Vec::with_capacity(n_max as usize + 1);
    let mut s = Complex64::new(0.0, 0.0);
    sums.push(s);
    for n in 1..=n_max {
        s += a.get(d * n) * w.get(n);
        sums.push(s);
    }
    Ok(sums)
}

/// Checkpointed maxima of |S_d(n)| over d*n <= N', with the attaining
/// (d, n) per checkpoint; ties go to the smallest d, then the smallest n.
#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyProfile {
    pub checkpoints: Vec<u64>,
    pub values: Vec<f64>,
    pub witnesses: Vec<(u64, u64)>,
    pub metric: DiscrepancyMetric,
}

impl DiscrepancyProfile {
    /// CSV export: `N,value,d,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,value,d,n\n");
        for i in 0..self.checkpoints.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.checkpoints[i], self.values[i], self.witnesses[i].0, self.witnesses[i].1
            ));
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Best {
    score_sqr: f64,
    d: u64,
    n: u64,
}

impl Best {
    const NONE: Best = Best { score_sqr: -1.0, d: u64::MAX, n: u64::MAX };

    /// Larger score wins; ties go to smaller d, then smaller n.
    #[inline]
    fn better_than(&self, other: &Best) -> bool {
        if self.score_sqr != other.score_sqr {
            return self.score_sqr > other.score_sqr;
        }
        (self.d, self.n) < (other.d, other.n)
    }
}

fn scan_d_range(
    a: &UnitDiscSequence,
    w: &UnitDiscSequence,
    n: u64,
    bucket: &[u32],
    n_buckets: usize,
    metric: DiscrepancyMetric,
    d_lo: u64,
    d_hi: u64,
) -> Vec<Best> {
    let mut best = vec![Best::NONE; n_buckets];
    for d in d_lo..d_hi {
        let mut s = Complex64::new(0.0, 0.0);
        let top = n / d;
        for k in 1..=top {
            s += a.get(d * k) * w.get(k);
            let cand = Best { score_sqr: metric.score_sqr(s), d, n: k };
            let b = &mut best[bucket[(d * k) as usize] as usize];
            if cand.better_than(b) {
                *b = cand;
            }
        }
    }
    best
}

/// Profile of max_{d n <= N'} |S_d(n)| at each checkpoint N'.
pub fn discrepancy_profile(
    a: &UnitDiscSequence,
    w: &UnitDiscSequence,
    n: u64,
    checkpoints: &[u64],
    metric: DiscrepancyMetric,
) -> Result<DiscrepancyProfile> {
    if checkpoints.is_empty() {
        return Err(Error::domain("need at least one checkpoint"));
    }
    if checkpoints[0] < 1 {
        return Err(Error::domain("checkpoints must be >= 1"));
    }
    for pair in checkpoints.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::domain("checkpoints must be strictly increasing"));
        }
    }
    let top = *checkpoints.last().unwrap();
    if top > n {
        return Err(Error::domain("checkpoints must not exceed N"));
    }
    if a.len() < n || w.len() < n {
        return Err(Error::domain(format!(
            "sequences must be materialized to N = {n} (have a: {}, w: {})",
            a.len(),
            w.len()
        )));
    }
    // bucket[m] = index of the first checkpoint >= m
    let mut bucket = vec![u32::MAX; n as usize + 1];
    {
        let mut c = 0usize;
        for m in 1..=n {
            while c < checkpoints.len() && checkpoints[c] < m {
                c += 1;
            }
            if c == checkpoints.len() {
                break;
            }
            bucket[m as usize] = c as u32;
        }
    }
    let n_buckets = checkpoints.len();

    // Partition d ranges into fixed chunks; merge in d order.
    const CHUNK: u64 = 4096;
    let ranges: Vec<(u64, u64)> = (1..=top)
        .step_by(CHUNK as usize)
        .map(|lo| (lo, (lo + CHUNK).min(top + 1)))
        .collect();
    use rayon::prelude::*;
    let partials: Vec<Vec<Best>> = ranges
        .par_iter()
        .map(|&(lo, hi)| scan_d_range(a, w, top, &bucket, n_buckets, metric, lo, hi))
        .collect();

    let mut merged = vec![Best::NONE; n_buckets];
    for part in &partials {
        for (m, p) in merged.iter_mut().zip(part) {
            if p.better_than(m) {
                *m = *p;
            }
        }
    }
    // prefix-combine: a checkpoint inherits everything below it
    for i in 1..n_buckets {
        if !merged[i].better_than(&merged[i - 1]) {
            merged[i] = merged[i - 1];
        }
    }

    let values = merged.iter().map(|b| b.score_sqr.max(0.0).sqrt()).collect();
    let witnesses = merged.iter().map(|b| (b.d, b.n)).collect();
    Ok(DiscrepancyProfile {
        checkpoints: checkpoints.to_vec(),
        values,
        witnesses,
        metric,
    })
}

/// Exhaustive double-loop evaluation, used as the oracle for small N.
pub fn discrepancy_brute_force(
    a: &UnitDiscSequence,
    w: &UnitDiscSequence,
    n: u64,
    metric: DiscrepancyMetric,
) -> (f64, u64, u64) {
    let mut best = Best::NONE;
    for d in 1..=n {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=n / d {
            s += a.get(d * k) * w.get(k);
            let cand = Best { score_sqr: metric.score_sqr(s), d, n: k };
            if cand.better_than(&best) {
                best = cand;
            }
        }
    }
    (best.score_sqr.max(0.0).sqrt(), best.d, best.n)
}

/// Which family of random completely multiplicative functions a growth
/// experiment samples from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSampler {
    Pm1,
    Circle,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSummary {
    pub checkpoints: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    pub sampler: SignSampler,
    pub min: Vec<f64>,
    pub median: Vec<f64>,
    pub max: Vec<f64>,
    pub per_sample: Vec<Vec<f64>>,
}

/// Profiles the weighted discrepancy of `samples` random completely
/// multiplicative sequences against w; deterministic given the seed.
/// `median` is the lower median of the per-sample values per checkpoint.
pub fn growth_experiment(
    sampler: SignSampler,
    w: &UnitDiscSequence,
    n: u64,
    checkpoints: &[u64],
    samples: usize,
    seed: u64,
    table: &FactorizationTable,
) -> Result<GrowthSummary> {
    if samples < 1 {
        return Err(Error::domain("need at least one sample"));
    }
    let mut per_sample = Vec::with_capacity(samples);
    for i in 0..samples {
        let sub = crate::rng::substream(seed, i as u64);
        let spec = match sampler {
            SignSampler::Pm1 => MultiplicativeFunctionSpec::random_pm1(table, n, sub)?,
            SignSampler::Circle => MultiplicativeFunctionSpec::random_unit_circle(table, n, sub)?,
        };
        let dense = spec.eval_range(table, n)?;
        let a = UnitDiscSequence::new(dense[1..].to_vec(), spec.label())?;
        let profile = discrepancy_profile(&a, w, n, checkpoints, DiscrepancyMetric::Modulus)?;
        per_sample.push(profile.values);
    }
    let stats = |pick: fn(&mut Vec<f64>) -> f64| -> Vec<f64> {
        (0..checkpoints.len())
            .map(|c| {
                let mut col: Vec<f64> = per_sample.iter().map(|row| row[c]).collect();
                col.sort_by(|x, y| x.partial_cmp(y).unwrap());
                pick(&mut col)
            })
            .collect()
    };
    Ok(GrowthSummary {
        checkpoints: checkpoints.to_vec(),
        samples,
        seed,
        sampler,
        min: stats(|col| col[0]),
        median: stats(|col| col[(col.len() - 1) / 2]),
        max: stats(|col| col[col.len() - 1]),
        per_sample,
    })
}
