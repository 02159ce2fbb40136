//! Extremal search: the longest +-1 sequence whose weighted discrepancy
//! stays within C, and the m!-pattern certificate for weights that repeat
//! a fixed value on the dilated grids r*m!/i + j.
//!
//! The search is a depth-first branch and bound over a(1), a(2), ...; a
//! prefix of length m is feasible iff |S_d(n)| <= C for every d*n <= m.
//! Constraints are prefix-monotone, so pruning at the first violation is
//! sound. For w == 1 and any C the sums are integers and the engine works
//! in integer arithmetic; general weights use complex sums with a 1e-9
//! tolerance on the constraint check. The +1 branch is explored first, so
//! the first witness found at a given depth is the lexicographically
//! smallest (with +1 ordered before -1).

use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequence::UnitDiscSequence;

pub const MAX_HORIZON: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    ArbitrarySigns,
    CompletelyMultiplicativeSigns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    /// The whole tree below the horizon was refuted; `infeasible_length`
    /// is proven impossible. Also requires max_length < horizon: a search
    /// that reaches the horizon feasibly reports `BudgetReached` instead,
    /// because nothing beyond the horizon was examined.
    Exhausted,
    BudgetReached,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub max_length_found: u32,
    pub witness: Vec<i8>,
    pub infeasible_length: Option<u32>,
    pub nodes_expanded: u64,
    #[serde(serialize_with = "ser_duration_ms")]
    pub wall_time: Duration,
}

fn ser_duration_ms<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Clone, Debug)]
pub struct SearchParams {
    pub c: f64,
    pub horizon: u32,
    pub budget: u64,
    pub mode: SearchMode,
    /// Fix a(1) = +1; sound because global sign flip preserves every
    /// constraint.
    pub symmetry_prune: bool,
}

impl SearchParams {
    pub fn new(c: f64, horizon: u32, budget: u64, mode: SearchMode) -> Self {
        SearchParams { c, horizon, budget, mode, symmetry_prune: true }
    }
}

/// divisors[m] for m in 0..=h (ascending).
fn divisor_lists(h: u32) -> Vec<Vec<u32>> {
    let mut div = vec![Vec::new(); h as usize + 1];
    for d in 1..=h {
        let mut m = d;
        while m <= h {
            div[m as usize].push(d);
            m += d;
        }
    }
    div
}

/// Per-position branching structure for completely multiplicative mode:
/// positions that are primes branch; composite values are forced products
/// of the prime signs occurring to odd exponent.
struct CmStructure {
    /// prime_index[m] = Some(i) when m is the i-th prime position.
    prime_index: Vec<Option<u32>>,
    /// odd-exponent prime indices of composite m.
    odd_primes: Vec<Vec<u32>>,
    n_primes: usize,
}

fn cm_structure(h: u32) -> CmStructure {
    let h = h as usize;
    let mut spf = vec![0u32; h + 1];
    for i in 2..=h {
        if spf[i] == 0 {
            let mut j = i;
            while j <= h {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut prime_index = vec![None; h + 1];
    let mut odd_primes = vec![Vec::new(); h + 1];
    let mut n_primes = 0usize;
    let mut idx_of = std::collections::HashMap::new();
    for m in 2..=h {
        if spf[m] as usize == m {
            prime_index[m] = Some(n_primes as u32);
            idx_of.insert(m as u32, n_primes as u32);
            n_primes += 1;
        } else {
            let mut x = m;
            while x > 1 {
                let p = spf[x];
                let mut e = 0u32;
                while x % p as usize == 0 {
                    x /= p as usize;
                    e += 1;
                }
                if e % 2 == 1 {
                    odd_primes[m].push(idx_of[&p]);
                }
            }
        }
    }
    CmStructure { prime_index, odd_primes, n_primes }
}

enum Flow {
    Continue,
    Abort,
}

/// Shared DFS skeleton; `Sums` abstracts integer vs complex running sums.
trait Sums {
    /// Apply sign s at position m to every constraint ending at m; returns
    /// false when some constraint is now violated (the update must still
    /// be fully applied so `retract` undoes it).
    fn apply(&mut self, m: u32, s: i8) -> bool;
    fn retract(&mut self, m: u32, s: i8);
}

struct IntSums<'a> {
    sums: Vec<i64>,
    divisors: &'a [Vec<u32>],
    limit: i64,
}

impl Sums for IntSums<'_> {
    #[inline]
    fn apply(&mut self, m: u32, s: i8) -> bool {
        let mut ok = true;
        for &d in &self.divisors[m as usize] {
            let v = &mut self.sums[d as usize];
            *v += s as i64;
            ok &= v.abs() <= self.limit;
        }
        ok
    }

    #[inline]
    fn retract(&mut self, m: u32, s: i8) {
        for &d in &self.divisors[m as usize] {
            self.sums[d as usize] -= s as i64;
        }
    }
}

struct ComplexSums<'a> {
    sums: Vec<Complex64>,
    divisors: &'a [Vec<u32>],
    weight: &'a [Complex64],
    limit_sqr: f64,
}

impl Sums for ComplexSums<'_> {
    #[inline]
    fn apply(&mut self, m: u32, s: i8) -> bool {
        let mut ok = true;
        for &d in &self.divisors[m as usize] {
            let w = self.weight[(m / d) as usize];
            let v = &mut self.sums[d as usize];
            *v += w * s as f64;
            ok &= v.norm_sqr() <= self.limit_sqr;
        }
        ok
    }

    #[inline]
    fn retract(&mut self, m: u32, s: i8) {
        for &d in &self.divisors[m as usize] {
            let w = self.weight[(m / d) as usize];
            self.sums[d as usize] -= w * s as f64;
        }
    }
}

struct Dfs<'a, S: Sums> {
    sums: S,
    signs: Vec<i8>,
    prime_signs: Vec<i8>,
    cm: Option<&'a CmStructure>,
    horizon: u32,
    budget: u64,
    nodes: u64,
    best: u32,
    witness: Vec<i8>,
    symmetry_prune: bool,
}

impl<S: Sums> Dfs<'_, S> {
    fn candidates(&self, m: u32) -> (i8, bool) {
        // returns (first or forced sign, whether a second branch exists)
        match self.cm {
            None => {
                if m == 1 && self.symmetry_prune {
                    (1, false)
                } else {
                    (1, true)
                }
            }
            Some(cm) => {
                if m == 1 {
                    (1, false) // a(1) = 1 by complete multiplicativity
                } else if cm.prime_index[m as usize].is_some() {
                    (1, true)
                } else {
                    let mut s = 1i8;
                    for &i in &cm.odd_primes[m as usize] {
                        s *= self.prime_signs[i as usize];
                    }
                    (s, false)
                }
            }
        }
    }

    fn explore(&mut self, m: u32) -> Flow {
        if m > self.horizon {
            return Flow::Continue;
        }
        let (first, branch) = self.candidates(m);
        let seconds = if branch { [first, -first] } else { [first, 0] };
        for &s in seconds.iter().take(if branch { 2 } else { 1 }) {
            if self.nodes >= self.budget {
                return Flow::Abort;
            }
            self.nodes += 1;
            let ok = self.sums.apply(m, s);
            if ok {
                self.signs[m as usize] = s;
                if let Some(cm) = self.cm {
                    if let Some(i) = cm.prime_index[m as usize] {
                        self.prime_signs[i as usize] = s;
                    }
                }
                if m > self.best {
                    self.best = m;
                    self.witness = self.signs[1..=m as usize].to_vec();
                }
                if let Flow::Abort = self.explore(m + 1) {
                    self.sums.retract(m, s);
                    return Flow::Abort;
                }
            }
            self.sums.retract(m, s);
        }
        Flow::Continue
    }
}

/// Longest feasible length for constraint bound C under the given weight
/// (None = the constant weight 1, computed in exact integer arithmetic).
pub fn max_length_search(
    params: &SearchParams,
    weight: Option<&UnitDiscSequence>,
) -> Result<SearchResult> {
    if params.c < 0.0 {
        return Err(Error::domain("C must be >= 0"));
    }
    if params.horizon == 0 || params.horizon as u64 > MAX_HORIZON {
        return Err(Error::domain(format!(
            "horizon must be in [1, {MAX_HORIZON}]"
        )));
    }
    if let Some(w) = weight {
        if w.len() < params.horizon as u64 {
            return Err(Error::domain(format!(
                "weight materialized to {} but horizon is {}",
                w.len(),
                params.horizon
            )));
        }
    }
    let start = Instant::now();
    let divisors = divisor_lists(params.horizon);
    let cm = match params.mode {
        SearchMode::ArbitrarySigns => None,
        SearchMode::CompletelyMultiplicativeSigns => Some(cm_structure(params.horizon)),
    };
    let h = params.horizon as usize;

    let (best, witness, nodes, aborted) = match weight {
        None => {
            let sums = IntSums {
                sums: vec![0; h + 1],
                divisors: &divisors,
                // integer sums: |S| <= C is |S| <= floor(C)
                limit: (params.c + 1e-9).floor() as i64,
            };
            run_dfs(sums, cm.as_ref(), params)
        }
        Some(w) => {
            let mut wv = vec![Complex64::new(0.0, 0.0); h + 1];
            for k in 1..=h {
                wv[k] = w.get(k as u64);
            }
            let limit = params.c + 1e-9;
            let sums = ComplexSums {
                sums: vec![Complex64::new(0.0, 0.0); h + 1],
                divisors: &divisors,
                weight: &wv,
                limit_sqr: limit * limit,
            };
            run_dfs(sums, cm.as_ref(), params)
        }
    };

    let status = if aborted || best == params.horizon {
        SearchStatus::BudgetReached
    } else {
        SearchStatus::Exhausted
    };
    Ok(SearchResult {
        status,
        max_length_found: best,
        witness,
        infeasible_length: (status == SearchStatus::Exhausted).then_some(best + 1),
        nodes_expanded: nodes,
        wall_time: start.elapsed(),
    })
}

fn run_dfs<S: Sums>(
    sums: S,
    cm: Option<&CmStructure>,
    params: &SearchParams,
) -> (u32, Vec<i8>, u64, bool) {
    let mut dfs = Dfs {
        sums,
        signs: vec![0; params.horizon as usize + 1],
        prime_signs: vec![0; cm.map_or(0, |c| c.n_primes)],
        cm,
        horizon: params.horizon,
        budget: params.budget,
        nodes: 0,
        best: 0,
        witness: Vec::new(),
        symmetry_prune: params.symmetry_prune,
    };
    let aborted = matches!(dfs.explore(1), Flow::Abort);
    (dfs.best, dfs.witness, dfs.nodes, aborted)
}

/// Replays a witness against brute-force evaluation of every constraint.
pub fn check_witness(witness: &[i8], weight: Option<&UnitDiscSequence>, c: f64) -> bool {
    let m = witness.len() as u64;
    for d in 1..=m {
        let mut s = Complex64::new(0.0, 0.0);
        for n in 1..=m / d {
            let w = match weight {
                None => Complex64::new(1.0, 0.0),
                Some(w) => w.get(n),
            };
            s += w * witness[(d * n - 1) as usize] as f64;
            if s.norm() > c + 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Certificate that w equals c on the full m x m pattern of positions
/// `r*m!/i + j`, i, j in `[m]`.
#[derive(Clone, Debug, Serialize)]
pub struct PatternCertificate {
    pub m: u32,
    pub r: u64,
    pub c: [f64; 2],
    pub positions_checked: Vec<u64>,
}

/// Smallest r <= r_max whose m^2 pattern positions all carry the value c
/// (within 1e-12), scanning r in increasing order.
pub fn find_pattern_certificate(
    w: &UnitDiscSequence,
    c: Complex64,
    m: u32,
    r_max: u64,
) -> Result<Option<PatternCertificate>> {
    if m < 1 {
        return Err(Error::domain("pattern size m must be >= 1"));
    }
    if m > 20 {
        return Err(Error::domain("m! overflows u64 for m > 20"));
    }
    let fact: u64 = (1..=m as u64).product();
    let required = r_max
        .checked_mul(fact)
        .and_then(|x| x.checked_add(m as u64))
        .ok_or_else(|| Error::resource("pattern positions overflow u64".to_string()))?;
    if required > w.len() {
        return Err(Error::resource(format!(
            "pattern scan to r_max = {r_max} needs the weight materialized to {required}, have {}",
            w.len()
        )));
    }
    for r in 1..=r_max {
        let mut all = true;
        'outer: for i in 1..=m as u64 {
            let q = fact / i;
            for j in 1..=m as u64 {
                let pos = r * q + j;
                if (w.get(pos) - c).norm() > 1e-12 {
                    all = false;
                    break 'outer;
                }
            }
        }
        if all {
            let mut positions = Vec::with_capacity((m * m) as usize);
            for i in 1..=m as u64 {
                for j in 1..=m as u64 {
                    positions.push(r * (fact / i) + j);
                }
            }
            return Ok(Some(PatternCertificate {
                m,
                r,
                c: [c.re, c.im],
                positions_checked: positions,
            }));
        }
    }
    Ok(None)
}
