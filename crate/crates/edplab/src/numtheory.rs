//! Primes, factorization, multiplicative functions, and the epsilon-net
//! discretization of the space of multiplicative functions.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{e2pi, UNIT_DISC_TOL};
use crate::rng;

/// Memory-bound cap on sieve size (u32 entries, ~400 MB at the cap).
pub const MAX_SIEVE_LIMIT: u64 = 100_000_000;

/// Smallest-prime-factor table for `[2, limit]`.
///
/// `smallest_prime_factor(n)` is the least prime dividing n, and equals n
/// exactly when n is prime.
pub struct FactorizationTable {
    limit: u64,
    spf: Vec<u32>,
}

impl FactorizationTable {
    pub fn build(limit: u64) -> Result<Self> {
        if limit < 1 {
            return Err(Error::domain("sieve limit must be >= 1"));
        }
        if limit > MAX_SIEVE_LIMIT {
            return Err(Error::resource(format!(
                "sieve limit {limit} exceeds the cap {MAX_SIEVE_LIMIT}"
            )));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut i = 2usize;
        while i <= n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                let mut j = i * i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
            i += 1;
        }
        Ok(FactorizationTable { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Least prime factor of n, for 2 <= n <= limit.
    #[inline]
    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        debug_assert!(n >= 2 && n <= self.limit);
        self.spf[n as usize] as u64
    }

    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit).filter(|&n| self.is_prime(n))
    }

    /// The first `count` primes; errors if the table is too small.
    pub fn first_primes(&self, count: usize) -> Result<Vec<u64>> {
        let primes: Vec<u64> = self.primes().take(count).collect();
        if primes.len() < count {
            return Err(Error::resource(format!(
                "table limit {} holds fewer than {count} primes",
                self.limit
            )));
        }
        Ok(primes)
    }

    /// Prime-power factorization of n as (p, e) pairs, ascending in p.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        if n < 1 || n > self.limit {
            return Err(Error::domain(format!(
                "factorize({n}) outside table range [1, {}]",
                self.limit
            )));
        }
        let mut out = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.smallest_prime_factor(m);
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        Ok(out)
    }

    /// Number of prime factors of n counted with multiplicity.
    pub fn big_omega(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.iter().map(|&(_, e)| e).sum())
    }

    /// True when n = p^e for a single prime p and e >= 1.
    pub fn is_prime_power(&self, n: u64) -> bool {
        if n < 2 || n > self.limit {
            return false;
        }
        let p = self.smallest_prime_factor(n);
        let mut m = n;
        while m % p == 0 {
            m /= p;
        }
        m == 1
    }

    /// All prime powers p^e <= n, sorted.
    pub fn prime_powers_upto(&self, n: u64) -> Result<Vec<u64>> {
        if n > self.limit {
            return Err(Error::domain(format!(
                "prime_powers_upto({n}) exceeds table limit {}",
                self.limit
            )));
        }
        let mut out = Vec::new();
        for p in self.primes().take_while(|&p| p <= n) {
            let mut q = p;
            loop {
                out.push(q);
                match q.checked_mul(p) {
                    Some(next) if next <= n => q = next,
                    _ => break,
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Precomputed split `n = lead * cofactor` where `lead` is the full power of
/// the smallest prime of n. Lets a multiplicative function be evaluated on
/// all of `[1, m]` in O(m) once its prime-power values are a dense vector.
pub struct RangeEvaluator {
    m: u64,
    prime_powers: Vec<u64>,
    /// Index into `prime_powers` of the leading prime power of n (n >= 2).
    lead_rank: Vec<u32>,
    cofactor: Vec<u32>,
}

impl RangeEvaluator {
    pub fn new(table: &FactorizationTable, m: u64) -> Result<Self> {
        if m > table.limit() {
            return Err(Error::domain(format!(
                "range {m} exceeds table limit {}",
                table.limit()
            )));
        }
        let prime_powers = table.prime_powers_upto(m)?;
        let mut rank = vec![u32::MAX; m as usize + 1];
        for (i, &q) in prime_powers.iter().enumerate() {
            rank[q as usize] = i as u32;
        }
        let mut lead_rank = vec![0u32; m as usize + 1];
        let mut cofactor = vec![0u32; m as usize + 1];
        for n in 2..=m {
            let p = table.smallest_prime_factor(n);
            let mut lead = 1u64;
            let mut rest = n;
            while rest % p == 0 {
                rest /= p;
                lead *= p;
            }
            lead_rank[n as usize] = rank[lead as usize];
            cofactor[n as usize] = rest as u32;
        }
        Ok(RangeEvaluator {
            m,
            prime_powers,
            lead_rank,
            cofactor,
        })
    }

    pub fn range(&self) -> u64 {
        self.m
    }

    /// Prime powers <= m in ascending order; `pp_values` below is indexed
    /// the same way.
    pub fn prime_powers(&self) -> &[u64] {
        &self.prime_powers
    }

    /// Values of the multiplicative function with the given prime-power
    /// values on all of [1, m]; slot 0 is unused, slot 1 is 1.
    pub fn evaluate(&self, pp_values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(pp_values.len(), self.prime_powers.len());
        let m = self.m as usize;
        let mut vals = vec![Complex64::new(0.0, 0.0); m + 1];
        if m >= 1 {
            vals[1] = Complex64::new(1.0, 0.0);
        }
        for n in 2..=m {
            vals[n] = pp_values[self.lead_rank[n] as usize] * vals[self.cofactor[n] as usize];
        }
        vals
    }
}

/// A multiplicative function given by its values on prime powers up to a
/// declared horizon. Evaluation beyond `n_max` is an error, never a silent
/// extension.
///
/// Completely multiplicative specs store values at primes only; the value
/// at p^e is the e-th power of the value at p.
#[derive(Clone, Debug)]
pub struct MultiplicativeFunctionSpec {
    label: String,
    completely_multiplicative: bool,
    /// Keyed by prime (completely multiplicative) or prime power (general).
    values: HashMap<u64, Complex64>,
    n_max: u64,
    seed: Option<u64>,
}

fn check_disc(label: &str, key: u64, v: Complex64) -> Result<()> {
    if v.norm_sqr() > (1.0 + UNIT_DISC_TOL) * (1.0 + UNIT_DISC_TOL) {
        return Err(Error::domain(format!(
            "spec '{label}': |f({key})| = {} exceeds the unit disc",
            v.norm()
        )));
    }
    Ok(())
}

impl MultiplicativeFunctionSpec {
    pub fn new_completely_multiplicative(
        label: impl Into<String>,
        prime_values: HashMap<u64, Complex64>,
        n_max: u64,
    ) -> Result<Self> {
        let label = label.into();
        for (&p, &v) in &prime_values {
            check_disc(&label, p, v)?;
        }
        Ok(MultiplicativeFunctionSpec {
            label,
            completely_multiplicative: true,
            values: prime_values,
            n_max,
            seed: None,
        })
    }

    pub fn new_general(
        label: impl Into<String>,
        prime_power_values: HashMap<u64, Complex64>,
        n_max: u64,
    ) -> Result<Self> {
        let label = label.into();
        for (&q, &v) in &prime_power_values {
            check_disc(&label, q, v)?;
        }
        Ok(MultiplicativeFunctionSpec {
            label,
            completely_multiplicative: false,
            values: prime_power_values,
            n_max,
            seed: None,
        })
    }

    /// The Liouville function: completely multiplicative, -1 at every prime.
    pub fn liouville(table: &FactorizationTable) -> Self {
        let values = table
            .primes()
            .map(|p| (p, Complex64::new(-1.0, 0.0)))
            .collect();
        MultiplicativeFunctionSpec {
            label: "liouville".into(),
            completely_multiplicative: true,
            values,
            n_max: table.limit(),
            seed: None,
        }
    }

    /// f == 1: completely multiplicative with value 1 at every prime.
    pub fn one(table: &FactorizationTable, n_max: u64) -> Self {
        let values = table
            .primes()
            .take_while(|&p| p <= n_max)
            .map(|p| (p, Complex64::new(1.0, 0.0)))
            .collect();
        MultiplicativeFunctionSpec {
            label: "one".into(),
            completely_multiplicative: true,
            values,
            n_max,
            seed: None,
        }
    }

    /// Seeded random completely multiplicative function with independent
    /// uniform values on the unit circle at each prime <= n_max.
    pub fn random_unit_circle(table: &FactorizationTable, n_max: u64, seed: u64) -> Result<Self> {
        if n_max > table.limit() {
            return Err(Error::domain("n_max exceeds table limit"));
        }
        let values = table
            .primes()
            .take_while(|&p| p <= n_max)
            .map(|p| (p, e2pi(rng::unit_f64(seed, p))))
            .collect();
        Ok(MultiplicativeFunctionSpec {
            label: format!("random-circle(seed={seed})"),
            completely_multiplicative: true,
            values,
            n_max,
            seed: Some(seed),
        })
    }

    /// Seeded random completely multiplicative function with independent
    /// uniform values in {-1, +1} at each prime <= n_max.
    pub fn random_pm1(table: &FactorizationTable, n_max: u64, seed: u64) -> Result<Self> {
        if n_max > table.limit() {
            return Err(Error::domain("n_max exceeds table limit"));
        }
        let values = table
            .primes()
            .take_while(|&p| p <= n_max)
            .map(|p| (p, Complex64::new(rng::sign(seed, p) as f64, 0.0)))
            .collect();
        Ok(MultiplicativeFunctionSpec {
            label: format!("random-pm1(seed={seed})"),
            completely_multiplicative: true,
            values,
            n_max,
            seed: Some(seed),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_completely_multiplicative(&self) -> bool {
        self.completely_multiplicative
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Value at the prime power p^e.
    pub fn prime_power_value(&self, p: u64, e: u32) -> Result<Complex64> {
        if self.completely_multiplicative {
            let v = self.values.get(&p).ok_or(Error::MissingValue {
                label: self.label.clone(),
                key: p,
            })?;
            Ok(v.powu(e))
        } else {
            let key = p.pow(e);
            self.values.get(&key).copied().ok_or(Error::MissingValue {
                label: self.label.clone(),
                key,
            })
        }
    }

    /// f(n) as the product of its prime-power values; f(1) = 1.
    pub fn eval(&self, table: &FactorizationTable, n: u64) -> Result<Complex64> {
        if n < 1 || n > self.n_max {
            return Err(Error::domain(format!(
                "eval({n}) outside the declared horizon [1, {}] of '{}'",
                self.n_max, self.label
            )));
        }
        let mut acc = Complex64::new(1.0, 0.0);
        for (p, e) in table.factorize(n)? {
            acc *= self.prime_power_value(p, e)?;
        }
        Ok(acc)
    }

    /// Dense values on [1, m] (index 0 unused).
    pub fn eval_range(&self, table: &FactorizationTable, m: u64) -> Result<Vec<Complex64>> {
        if m > self.n_max {
            return Err(Error::domain(format!(
                "range {m} outside the declared horizon of '{}'",
                self.label
            )));
        }
        let ev = RangeEvaluator::new(table, m)?;
        let mut pp_values = Vec::with_capacity(ev.prime_powers().len());
        for &q in ev.prime_powers() {
            let p = table.smallest_prime_factor(q);
            let e = (q as f64).log(p as f64).round() as u32;
            pp_values.push(self.prime_power_value(p, e)?);
        }
        Ok(ev.evaluate(&pp_values))
    }

    /// Serializable form following the documented JSON schema.
    pub fn to_json(&self) -> MfSpecJson {
        let mut entries: Vec<(u64, f64, f64)> = self
            .values
            .iter()
            .map(|(&k, &v)| (k, v.re, v.im))
            .collect();
        entries.sort_unstable_by_key(|&(k, _, _)| k);
        MfSpecJson {
            label: self.label.clone(),
            completely_multiplicative: self.completely_multiplicative,
            prime_values: self.completely_multiplicative.then(|| entries.clone()),
            prime_power_values: (!self.completely_multiplicative).then_some(entries),
            n_max: self.n_max,
            seed: self.seed,
        }
    }

    pub fn from_json(doc: MfSpecJson) -> Result<Self> {
        let entries = match (&doc.prime_values, &doc.prime_power_values) {
            (Some(e), None) | (None, Some(e)) => e.clone(),
            _ => {
                return Err(Error::domain(
                    "spec must carry exactly one of prime_values / prime_power_values",
                ))
            }
        };
        let values: HashMap<u64, Complex64> = entries
            .into_iter()
            .map(|(k, re, im)| (k, Complex64::new(re, im)))
            .collect();
        let mut spec = if doc.completely_multiplicative {
            if doc.prime_power_values.is_some() {
                return Err(Error::domain(
                    "completely multiplicative spec must list prime_values",
                ));
            }
            MultiplicativeFunctionSpec::new_completely_multiplicative(
                doc.label, values, doc.n_max,
            )?
        } else {
            MultiplicativeFunctionSpec::new_general(doc.label, values, doc.n_max)?
        };
        spec.seed = doc.seed;
        Ok(spec)
    }
}

/// JSON document for a multiplicative-function spec. Value entries are
/// `[n, re, im]` triples sorted by n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MfSpecJson {
    pub label: String,
    pub completely_multiplicative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prime_values: Option<Vec<(u64, f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prime_power_values: Option<Vec<(u64, f64, f64)>>,
    pub n_max: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A finite set of disc points within `epsilon` of every point of the
/// closed unit disc.
///
/// Construction (deterministic): the square grid of pitch `epsilon *
/// sqrt(2)`, keeping grid points inside the disc as they are and radially
/// projecting onto the boundary those with `1 < |g| <= 1 + epsilon`; the
/// origin is always included. Projection onto a convex set is 1-Lipschitz,
/// so the covering radius of the result is still at most epsilon. For
/// `epsilon >= 1` the single point {0} suffices.
///
/// The cardinality stays within `4 epsilon^-2` on the tested grid
/// `{0.05, 0.1, 0.2, 0.5, 1.0}` (roughly `pi/2 epsilon^-2` interior points
/// plus `~4.5/epsilon` boundary points); very coarse pitches between 0.55
/// and 1 can exceed that bound and are outside the certified range.
#[derive(Clone, Debug)]
pub struct EpsilonNet {
    epsilon: f64,
    points: Vec<Complex64>,
}

impl EpsilonNet {
    pub fn build(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 2.0) {
            return Err(Error::domain(format!(
                "epsilon {epsilon} outside (0, 2]"
            )));
        }
        if epsilon >= 1.0 {
            return Ok(EpsilonNet {
                epsilon,
                points: vec![Complex64::new(0.0, 0.0)],
            });
        }
        let pitch = epsilon * std::f64::consts::SQRT_2;
        let reach = 1.0 + epsilon;
        let m = (reach / pitch).ceil() as i64 + 1;
        let mut points = vec![Complex64::new(0.0, 0.0)];
        for i in -m..=m {
            for j in -m..=m {
                if i == 0 && j == 0 {
                    continue;
                }
                let g = Complex64::new(i as f64 * pitch, j as f64 * pitch);
                let r2 = g.norm_sqr();
                if r2 <= 1.0 + 1e-12 {
                    points.push(g);
                } else if r2 <= reach * reach {
                    points.push(g / r2.sqrt());
                }
            }
        }
        points.sort_unstable_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        points.dedup();
        Ok(EpsilonNet { epsilon, points })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest net point to z; ties resolve to the first point in the
    /// deterministic ordering.
    pub fn nearest(&self, z: Complex64) -> Complex64 {
        let mut best = self.points[0];
        let mut best_d = (z - best).norm_sqr();
        for &p in &self.points[1..] {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best = p;
                best_d = d;
            }
        }
        best
    }
}

/// Nearest-net projection of f: a general multiplicative function whose
/// value at every prime power q <= n is the net point nearest f(q).
///
/// For all n' <= n the pointwise error obeys |f - g| <= 2 epsilon ln n
/// (natural log): n' has at most log2(n) <= 2 ln n / ln 4 prime-power
/// parts, each contributing at most epsilon after telescoping.
pub fn project_to_net(
    f: &MultiplicativeFunctionSpec,
    epsilon: f64,
    n: u64,
    table: &FactorizationTable,
) -> Result<MultiplicativeFunctionSpec> {
    let net = EpsilonNet::build(epsilon)?;
    let mut values = HashMap::new();
    for q in table.prime_powers_upto(n)? {
        let p = table.smallest_prime_factor(q);
        let e = (q as f64).log(p as f64).round() as u32;
        values.insert(q, net.nearest(f.prime_power_value(p, e)?));
    }
    MultiplicativeFunctionSpec::new_general(
        format!("{}~net(eps={epsilon})", f.label()),
        values,
        n,
    )
}

/// Counting report for the class of net-valued tuples of multiplicative
/// functions on `[N]`: the exact class size `|B_eps|^(ell * #pp)` against the
/// asymptotic bound exp(4 ell log(2/eps) N / log N), both in log form.
#[derive(Clone, Debug, Serialize)]
pub struct NetClassCounts {
    pub prime_power_count: u64,
    pub net_size: usize,
    pub log_exact_class_size: f64,
    pub log_asymptotic_bound: f64,
    /// Whether log_exact <= log_bound at this N. The bound is asymptotic
    /// ("for all large enough N"), so this is reported, not asserted.
    pub bound_holds: bool,
}

pub fn net_class_counts(
    ell: u64,
    epsilon: f64,
    n: u64,
    table: &FactorizationTable,
) -> Result<NetClassCounts> {
    if ell < 1 {
        return Err(Error::domain("ell must be >= 1"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon outside (0, 1]"));
    }
    if n < 2 {
        return Err(Error::domain("N must be >= 2"));
    }
    let net = EpsilonNet::build(epsilon)?;
    let ppc = table.prime_powers_upto(n)?.len() as u64;
    let log_exact = (ell * ppc) as f64 * (net.len() as f64).ln();
    let log_bound = 4.0 * ell as f64 * (2.0 / epsilon).ln() * n as f64 / (n as f64).ln();
    Ok(NetClassCounts {
        prime_power_count: ppc,
        net_size: net.len(),
        log_exact_class_size: log_exact,
        log_asymptotic_bound: log_bound,
        bound_holds: log_exact <= log_bound,
    })
}
