//! Generators for every weight family under study: polynomial phases, step
//! weights, random signs, sparse random indicators, and the counterexample
//! weights with bounded weighted discrepancy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::e2pi;
use crate::numtheory::{FactorizationTable, MfSpecJson, MultiplicativeFunctionSpec};
use crate::poly::PhasePoly;
use crate::rng;
use crate::sequence::UnitDiscSequence;

/// One cell of a step function on the torus: value on [start, end).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StepCell {
    pub start: f64,
    pub end: f64,
    pub value: [f64; 2],
}

impl StepCell {
    pub fn value_c(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }
}

/// Rule for the inclusion probability rho_k of a sparse random weight.
/// Must be non-increasing on [2, N]; materialization verifies this.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DensityRule {
    Constant { rho: f64 },
    /// rho_k = min(1, 1/ln k) for k >= 2, rho_1 = 1.
    OneOverLog,
    /// rho_k = k^-a.
    Power { a: f64 },
    /// rho_k = 1 exactly at primes. Non-monotone; kept as the documented
    /// rejection case.
    PrimeIndicator,
}

impl DensityRule {
    fn rho(&self, k: u64, table: Option<&FactorizationTable>) -> f64 {
        match self {
            DensityRule::Constant { rho } => *rho,
            DensityRule::OneOverLog => {
                if k < 2 {
                    1.0
                } else {
                    (1.0 / (k as f64).ln()).min(1.0)
                }
            }
            DensityRule::Power { a } => (k as f64).powf(-a),
            DensityRule::PrimeIndicator => match table {
                Some(t) if t.is_prime(k) => 1.0,
                _ => 0.0,
            },
        }
    }
}

/// Serializable description of a weight family; `materialize` turns it into
/// a concrete sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant {
        re: f64,
        im: f64,
    },
    /// w(k) = e(P(k)) with P given by ascending coefficients.
    PolynomialPhase {
        coeffs: Vec<f64>,
    },
    /// w(k) = value of the cell containing frac(P(k)).
    StepWeight {
        cells: Vec<StepCell>,
        coeffs: Vec<f64>,
    },
    RandomSign {
        seed: Option<u64>,
    },
    SparseRandom {
        rule: DensityRule,
        c_re: f64,
        c_im: f64,
        seed: Option<u64>,
    },
    /// w(k) = e(k alpha): bounded partial sums, not a good weight.
    LinearPhaseCounterexample {
        alpha: f64,
    },
    /// w(k) = (-1)^k conj(f(k)) for a multiplicative f.
    ParityTwist {
        f: MfSpecJson,
    },
    /// Indicator of a union of disjoint integer intervals.
    IntervalIndicator {
        intervals: Vec<(u64, u64)>,
    },
}

impl WeightSpec {
    /// Materializes w(1..=n). The factorization table is only consulted by
    /// kinds that evaluate a multiplicative function.
    pub fn materialize(&self, n: u64, table: &FactorizationTable) -> Result<UnitDiscSequence> {
        match self {
            WeightSpec::Constant { re, im } => {
                UnitDiscSequence::constant(Complex64::new(*re, *im), n, "constant")
            }
            WeightSpec::PolynomialPhase { coeffs } => {
                polynomial_phase_weight(&PhasePoly::new(coeffs.clone()), n)
            }
            WeightSpec::StepWeight { cells, coeffs } => {
                step_weight(cells, &PhasePoly::new(coeffs.clone()), n)
            }
            WeightSpec::RandomSign { seed } => {
                let seed = seed
                    .ok_or_else(|| Error::domain("random_sign weight requires a seed"))?;
                Ok(random_sign_weight(n, seed))
            }
            WeightSpec::SparseRandom {
                rule,
                c_re,
                c_im,
                seed,
            } => {
                let seed = seed
                    .ok_or_else(|| Error::domain("sparse_random weight requires a seed"))?;
                sparse_random_weight(rule, Complex64::new(*c_re, *c_im), n, seed, Some(table))
            }
            WeightSpec::LinearPhaseCounterexample { alpha } => Ok(linear_phase_weight(*alpha, n)),
            WeightSpec::ParityTwist { f } => {
                let spec = MultiplicativeFunctionSpec::from_json(f.clone())?;
                parity_twist_weight(&spec, table, n)
            }
            WeightSpec::IntervalIndicator { intervals } => interval_indicator_weight(intervals, n),
        }
    }
}

/// w(k) = e(P(k)); unit modulus everywhere, phase reduced mod 1 before
/// exponentiation.
pub fn polynomial_phase_weight(p: &PhasePoly, n: u64) -> Result<UnitDiscSequence> {
    if n < 1 {
        return Err(Error::domain("weight length must be >= 1"));
    }
    let values = (1..=n).map(|k| e2pi(p.frac_at(k))).collect();
    UnitDiscSequence::new(values, format!("poly-phase(deg={})", p.degree()))
}

fn validate_cells(cells: &[StepCell]) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::domain("step weight needs at least one cell"));
    }
    if cells[0].start != 0.0 {
        return Err(Error::domain("step cells must start at 0"));
    }
    for w in cells.windows(2) {
        if w[1].start != w[0].end {
            return Err(Error::domain(format!(
                "step cells must tile [0,1): gap or overlap at {}",
                w[0].end
            )));
        }
    }
    if cells.last().unwrap().end != 1.0 {
        return Err(Error::domain("step cells must end at 1"));
    }
    for c in cells {
        if c.start >= c.end {
            return Err(Error::domain("step cell must have positive length"));
        }
        if c.value_c().norm_sqr() > 1.0 + 1e-12 {
            return Err(Error::domain("step cell value outside unit disc"));
        }
    }
    Ok(())
}

/// w(k) = value of the cell containing frac(P(k)).
pub fn step_weight(cells: &[StepCell], p: &PhasePoly, n: u64) -> Result<UnitDiscSequence> {
    validate_cells(cells)?;
    let values = (1..=n)
        .map(|k| {
            let t = p.frac_at(k);
            let idx = cells.partition_point(|c| c.end <= t);
            cells[idx].value_c()
        })
        .collect();
    UnitDiscSequence::new(values, format!("step({} cells)", cells.len()))
}

/// The three-cell step taking values -1, 0, +1 on [0,1/3), [1/3,2/3),
/// [2/3,1).
pub fn three_cell_step() -> Vec<StepCell> {
    vec![
        StepCell { start: 0.0, end: 1.0 / 3.0, value: [-1.0, 0.0] },
        StepCell { start: 1.0 / 3.0, end: 2.0 / 3.0, value: [0.0, 0.0] },
        StepCell { start: 2.0 / 3.0, end: 1.0, value: [1.0, 0.0] },
    ]
}

/// Seeded i.i.d. uniform signs.
pub fn random_sign_weight(n: u64, seed: u64) -> UnitDiscSequence {
    let values = (1..=n)
        .map(|k| Complex64::new(rng::sign(seed, k) as f64, 0.0))
        .collect();
    UnitDiscSequence::new(values, format!("random-sign(seed={seed})")).unwrap()
}

/// `values[k] = c` with probability rho_k, else 0, independently (seeded).
/// Rejects rules that fail the non-increasing check on [2, n].
pub fn sparse_random_weight(
    rule: &DensityRule,
    c: Complex64,
    n: u64,
    seed: u64,
    table: Option<&FactorizationTable>,
) -> Result<UnitDiscSequence> {
    if c.norm_sqr() > 1.0 + 1e-12 || c == Complex64::new(0.0, 0.0) {
        return Err(Error::domain("target value c must be nonzero in the unit disc"));
    }
    let mut prev = f64::INFINITY;
    for k in 2..=n {
        let r = rule.rho(k, table);
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::domain(format!("rho_{k} = {r} outside [0,1]")));
        }
        if r > prev {
            return Err(Error::domain(format!(
                "density rule is not non-increasing: rho_{k} = {r} > rho_{} = {prev}",
                k - 1
            )));
        }
        prev = r;
    }
    let values = (1..=n)
        .map(|k| {
            if rng::unit_f64(seed, k) < rule.rho(k, table) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    UnitDiscSequence::new(values, format!("sparse-random(seed={seed})"))
}

/// w(k) = e(k alpha). Partial sums are bounded by 1/(2 ||alpha||) where
/// ||.|| is the distance to the nearest integer.
pub fn linear_phase_weight(alpha: f64, n: u64) -> UnitDiscSequence {
    let p = PhasePoly::new(vec![0.0, alpha]);
    let values = (1..=n).map(|k| e2pi(p.frac_at(k))).collect();
    UnitDiscSequence::new(values, format!("linear-phase(alpha={alpha})")).unwrap()
}

/// w(k) = (-1)^k conj(f(k)) for a multiplicative f. Against a(k) = f(k)
/// of unit modulus the weighted sums telescope to |sum (-1)^k| <= 1, so
/// this is the zero-entropy counterexample weight.
pub fn parity_twist_weight(
    f: &MultiplicativeFunctionSpec,
    table: &FactorizationTable,
    n: u64,
) -> Result<UnitDiscSequence> {
    let dense = f.eval_range(table, n)?;
    let values = (1..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            dense[k as usize].conj() * sign
        })
        .collect();
    UnitDiscSequence::new(values, format!("parity-twist({})", f.label()))
}

/// Indicator of a union of disjoint closed integer intervals [lo, hi].
pub fn interval_indicator_weight(intervals: &[(u64, u64)], n: u64) -> Result<UnitDiscSequence> {
    let mut prev_end = 0u64;
    for &(lo, hi) in intervals {
        if lo < 1 || hi < lo {
            return Err(Error::domain(format!("bad interval [{lo}, {hi}]")));
        }
        if lo <= prev_end {
            return Err(Error::domain("intervals must be disjoint and ascending"));
        }
        prev_end = hi;
    }
    let mut values = vec![Complex64::new(0.0, 0.0); n as usize];
    for &(lo, hi) in intervals {
        for k in lo..=hi.min(n) {
            values[k as usize - 1] = Complex64::new(1.0, 0.0);
        }
    }
    UnitDiscSequence::new(values, format!("interval-indicator({} intervals)", intervals.len()))
}

/// Greedy realization of the bounded-discrepancy interval construction:
/// places intervals of the requested even lengths and assigns prime values
/// of a completely multiplicative +-1 function a so that a(m) = (-1)^m on
/// every interval. With even lengths the weighted sums of a against the
/// interval indicator then cancel pairwise and never exceed 1.
///
/// For each candidate interval the scan walks its elements in order; an
/// element whose value is already forced must match (-1)^m, otherwise the
/// candidate start is rejected; an element with unassigned primes gets its
/// largest such prime set to fix the value (other fresh primes default to
/// +1). The scan is deterministic, so the output is a pure function of the
/// inputs.
pub fn adversarial_interval_construction(
    lengths: &[u64],
    first_start: u64,
    table: &FactorizationTable,
) -> Result<(Vec<(u64, u64)>, MultiplicativeFunctionSpec)> {
    if lengths.is_empty() {
        return Err(Error::domain("need at least one interval length"));
    }
    for w in lengths.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::domain("interval lengths must be strictly increasing"));
        }
    }
    if lengths.iter().any(|l| l % 2 != 0 || *l == 0) {
        return Err(Error::domain("interval lengths must be positive and even"));
    }
    type SignMap = std::collections::HashMap<u64, f64>;

    // Extends `assigned` so that a(m) = (-1)^m for every m in the
    // candidate interval, or reports the candidate unusable.
    fn try_interval(
        start: u64,
        len: u64,
        assigned: &SignMap,
        table: &FactorizationTable,
    ) -> Result<Option<SignMap>> {
        let mut tentative = SignMap::new();
        for m in start..start + len {
            let target = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut forced = 1.0f64;
            let mut free: Vec<u64> = Vec::new();
            for (p, e) in table.factorize(m)? {
                match assigned.get(&p).or_else(|| tentative.get(&p)) {
                    Some(&s) => {
                        if e % 2 == 1 {
                            forced *= s;
                        }
                    }
                    None => {
                        if e % 2 == 1 {
                            free.push(p);
                        } else {
                            tentative.entry(p).or_insert(1.0);
                        }
                    }
                }
            }
            match free.last() {
                None => {
                    if forced != target {
                        return Ok(None);
                    }
                }
                Some(_) => {
                    free.sort_unstable();
                    let fix = free.pop().unwrap();
                    for p in free {
                        tentative.insert(p, 1.0);
                    }
                    tentative.insert(fix, target * forced);
                }
            }
        }
        Ok(Some(tentative))
    }

    let mut assigned = SignMap::new();
    let mut intervals = Vec::new();
    let mut start = first_start.max(2);
    for &len in lengths {
        let mut placed = false;
        while start + len - 1 <= table.limit() {
            if let Some(tentative) = try_interval(start, len, &assigned, table)? {
                assigned.extend(tentative);
                intervals.push((start, start + len - 1));
                start += len + 1;
                placed = true;
                break;
            }
            start += 1;
        }
        if !placed {
            return Err(Error::resource(format!(
                "no feasible placement for an interval of length {len} below limit {}",
                table.limit()
            )));
        }
    }
    // Fresh primes untouched by any interval default to +1.
    let values = table
        .primes()
        .map(|p| {
            let s = assigned.get(&p).copied().unwrap_or(1.0);
            (p, Complex64::new(s, 0.0))
        })
        .collect();
    let spec = MultiplicativeFunctionSpec::new_completely_multiplicative(
        "interval-adversary",
        values,
        table.limit(),
    )?;
    Ok((intervals, spec))
}
