//! Finitely materialized unit-disc sequences, indexed from 1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::UNIT_DISC_TOL;

/// A sequence a(1), ..., a(N) of complex values of modulus at most 1.
#[derive(Clone, Debug)]
pub struct UnitDiscSequence {
    values: Vec<Complex64>,
    label: String,
}

impl UnitDiscSequence {
    /// Wraps materialized values, enforcing the unit-disc bound.
    pub fn new(values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        for (i, v) in values.iter().enumerate() {
            if v.norm_sqr() > (1.0 + UNIT_DISC_TOL) * (1.0 + UNIT_DISC_TOL) {
                return Err(Error::domain(format!(
                    "sequence '{label}': |a({})| = {} exceeds the unit disc",
                    i + 1,
                    v.norm()
                )));
            }
        }
        Ok(UnitDiscSequence { values, label })
    }

    pub fn constant(value: Complex64, n: u64, label: impl Into<String>) -> Result<Self> {
        Self::new(vec![value; n as usize], label)
    }

    pub fn ones(n: u64) -> Self {
        UnitDiscSequence {
            values: vec![Complex64::new(1.0, 0.0); n as usize],
            label: "ones".into(),
        }
    }

    /// Number of materialized entries.
    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// a(n) for 1 <= n <= len.
    #[inline]
    pub fn get(&self, n: u64) -> Complex64 {
        self.values[n as usize - 1]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// CSV export: `index,re,im` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, v.re, v.im));
        }
        out
    }
}
