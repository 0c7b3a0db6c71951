use std::collections::BTreeMap;

use crate::dist::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::shock::{BpParams, BpTable};
use crate::simulate::CountSample;

/// A sample reduced to its distinct pairs and their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounts {
    /// Distinct pairs other than `(0, 0)` with their counts.
    pub nonzero: Vec<((u64, u64), usize)>,
    pub n: usize,
    pub m0: usize,
    pub max: (u64, u64),
}

impl PairCounts {
    pub fn new(sample: &CountSample) -> Self {
        let mut map: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        for &p in &sample.pairs {
            *map.entry(p).or_default() += 1;
        }
        let m0 = map.remove(&(0, 0)).unwrap_or(0);
        Self {
            nonzero: map.into_iter().collect(),
            n: sample.len(),
            m0,
            max: sample.max_counts(),
        }
    }

    /// Latent PMF table covering every observed pair.
    pub(crate) fn table(&self, bp: &BpParams) -> BpTable {
        BpTable::new(bp, self.max.0 as usize + 1, self.max.1 as usize + 1)
    }

    /// `sum over nonzero pairs of count * ln f`, or `-inf` if some observed
    /// pair has zero latent probability.
    pub(crate) fn nonzero_log_sum(&self, table: &BpTable) -> f64 {
        let mut acc = 0.0;
        for &((a, b), c) in &self.nonzero {
            let f = table.get(a as usize, b as usize);
            if f <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += c as f64 * f.ln();
        }
        acc
    }

    /// Observed-data log-likelihood from a latent table.
    pub(crate) fn loglik_with(&self, table: &BpTable, phi: f64) -> f64 {
        let f00 = table.get(0, 0);
        let zero_part = if self.m0 > 0 {
            self.m0 as f64 * (phi + (1.0 - phi) * f00).ln()
        } else {
            0.0
        };
        let scale = if self.n > self.m0 {
            (self.n - self.m0) as f64 * (1.0 - phi).ln()
        } else {
            0.0
        };
        zero_part + scale + self.nonzero_log_sum(table)
    }

    pub fn loglik(&self, m: &ModelParams) -> f64 {
        self.loglik_with(&self.table(&m.bp), m.phi)
    }
}

/// Observed-data log-likelihood. Latent probabilities are evaluated once per
/// distinct pair; `-inf` signals an observed pair outside the support.
pub fn loglik(m: &ModelParams, sample: &CountSample) -> f64 {
    PairCounts::new(sample).loglik(m)
}

/// Closed-form maximizer of the likelihood in `phi` for fixed latent
/// parameters: `(m0/n - f00) / (1 - f00)`. May be negative.
pub fn profile_phi(f00: f64, m0: usize, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&f00) {
        return Err(invalid(format!("f(0, 0) must lie in [0, 1), got {f00}")));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if m0 > n {
        return Err(invalid(format!("zero count {m0} exceeds sample size {n}")));
    }
    if m0 == n {
        return Ok(1.0);
    }
    Ok((m0 as f64 / n as f64 - f00) / (1.0 - f00))
}
