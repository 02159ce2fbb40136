//! Cesaro and logarithmic averages over `[N]`, and multiplicative Folner
//! boxes of prime powers with measured dilation defects.

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::numeric::{harmonic_sum, tree_sum_c64};
use crate::numtheory::FactorizationTable;
use crate::sequence::UnitDiscSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    Cesaro,
    Logarithmic,
}

impl std::fmt::Display for AverageMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AverageMode::Cesaro => write!(f, "cesaro"),
            AverageMode::Logarithmic => write!(f, "log"),
        }
    }
}

/// Mode-average of `term(n)` over n in `[1, N]` with deterministic pairwise
/// summation. `term` receives 1-based indices.
pub fn mode_average<F>(n: u64, mode: AverageMode, term: &F) -> Result<Complex64>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    if n == 0 {
        return Err(Error::domain("average over an empty range"));
    }
    let hi = n as usize + 1;
    match mode {
        AverageMode::Cesaro => {
            Ok(tree_sum_c64(1, hi, &|k| term(k as u64)) / n as f64)
        }
        AverageMode::Logarithmic => {
            let s = tree_sum_c64(1, hi, &|k| term(k as u64) / k as f64);
            Ok(s / harmonic_sum(n))
        }
    }
}

/// Mode-average of the first N entries of a materialized sequence.
pub fn average(seq: &UnitDiscSequence, n: u64, mode: AverageMode) -> Result<Complex64> {
    if n > seq.len() {
        return Err(Error::domain(format!(
            "average range {n} exceeds materialized length {}",
            seq.len()
        )));
    }
    mode_average(n, mode, &|k| seq.get(k))
}

/// Cap on the number of elements of a Folner box.
pub const BOX_ELEMENT_CAP: u64 = 10_000_000;

/// The finite box {p_1^{k_1} ... p_P^{k_P} : 0 <= k_i <= E} in the
/// multiplicative group, decoupled into a prime count P and a common
/// exponent ceiling E. Exact dilation invariance only holds in the limit;
/// [`dilation_defect`] measures the finite defect.
#[derive(Clone, Debug)]
pub struct FolnerBox {
    prime_count: usize,
    max_exponent: u32,
    elements: Vec<u64>,
}

impl FolnerBox {
    pub fn build(prime_count: usize, max_exponent: u32, table: &FactorizationTable) -> Result<Self> {
        if prime_count == 0 {
            return Err(Error::domain("box needs at least one prime"));
        }
        let size = (max_exponent as u64 + 1)
            .checked_pow(prime_count as u32)
            .unwrap_or(u64::MAX);
        if size > BOX_ELEMENT_CAP {
            return Err(Error::resource(format!(
                "box would hold {size} elements, above the cap {BOX_ELEMENT_CAP}"
            )));
        }
        let primes = table.first_primes(prime_count)?;
        let mut elements = vec![1u64];
        for &p in &primes {
            let mut next = Vec::with_capacity(elements.len() * (max_exponent as usize + 1));
            for &x in &elements {
                let mut q = x;
                next.push(q);
                for _ in 0..max_exponent {
                    q = q.checked_mul(p).ok_or_else(|| {
                        Error::resource(format!(
                            "box element exceeds u64 (prime {p} at exponent ceiling {max_exponent})"
                        ))
                    })?;
                    next.push(q);
                }
            }
            elements = next;
        }
        elements.sort_unstable();
        Ok(FolnerBox {
            prime_count,
            max_exponent,
            elements,
        })
    }

    pub fn prime_count(&self) -> usize {
        self.prime_count
    }

    pub fn max_exponent(&self) -> u32 {
        self.max_exponent
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// |(r^-1 Phi) triangle Phi| and |Phi| as exact integers, where
/// r^-1 Phi = {n : r n in Phi}. All membership arithmetic is integral.
pub fn dilation_defect_counts(folner: &FolnerBox, r: Ratio<u64>) -> Result<(u64, u64)> {
    if *r.numer() == 0 {
        return Err(Error::domain("dilation ratio must be positive"));
    }
    let (u, v) = (*r.numer(), *r.denom());
    let members: HashSet<u64> = folner.elements().iter().copied().collect();
    // r^-1 Phi = { v * (x/u) : x in Phi, u | x }
    let mut pre_size = 0u64;
    let mut inter = 0u64;
    for &x in folner.elements() {
        if x % u == 0 {
            pre_size += 1;
            // a checked_mul overflow means n exceeds u64, certainly outside Phi
            if let Some(n) = (x / u).checked_mul(v) {
                if members.contains(&n) {
                    inter += 1;
                }
            }
        }
    }
    let size = folner.len() as u64;
    Ok((pre_size + size - 2 * inter, size))
}

/// Symmetric-difference ratio |(r^-1 Phi) triangle Phi| / |Phi| in [0, 2].
pub fn dilation_defect(folner: &FolnerBox, r: Ratio<u64>) -> Result<f64> {
    let (symm, size) = dilation_defect_counts(folner, r)?;
    Ok(symm as f64 / size as f64)
}

/// Arithmetic mean of `f` over the box elements (deterministic reduction).
pub fn folner_average<F>(f: &F, folner: &FolnerBox) -> Result<Complex64>
where
    F: Fn(u64) -> Result<Complex64> + Sync,
{
    let elems = folner.elements();
    // evaluate first so errors surface; values then reduce pairwise
    let values: Result<Vec<Complex64>> = elems.iter().map(|&d| f(d)).collect();
    let values = values?;
    Ok(tree_sum_c64(0, values.len(), &|i| values[i]) / values.len() as f64)
}
