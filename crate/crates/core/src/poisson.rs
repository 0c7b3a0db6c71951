//! Univariate Poisson and zero-inflated Poisson primitives.
//!
//! Probabilities are built from log-space mass values (`ln k!` via the
//! log-gamma function) and cumulative sums use compensated summation in
//! ascending order, so the CDF seen by [`cdf`] and the inverse seen by
//! [`quantile`] are bit-for-bit the same sequence.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::util::NeumaierSum;

/// A validated Poisson rate: strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Rate(f64);

impl Rate {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(invalid(format!(
                "rate must be positive and finite, got {value}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Rate {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Rate> for f64 {
    fn from(rate: Rate) -> f64 {
        rate.0
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    Rate::new(lambda).map(|_| ())
}

#[inline]
pub(crate) fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// `log g(k)` for a rate that may be zero (degenerate at 0).
#[inline]
pub(crate) fn log_pmf_unchecked(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

#[inline]
pub(crate) fn pmf_unchecked(k: u64, lambda: f64) -> f64 {
    log_pmf_unchecked(k, lambda).exp()
}

/// Log of the Poisson probability mass at `k`.
pub fn log_pmf(k: u64, lambda: f64) -> Result<f64> {
    check_rate(lambda)?;
    Ok(log_pmf_unchecked(k, lambda))
}

/// Poisson probability mass at `k`.
pub fn pmf(k: u64, lambda: f64) -> Result<f64> {
    log_pmf(k, lambda).map(f64::exp)
}

/// `P(X <= k)`; zero for negative `k`.
pub fn cdf(k: i64, lambda: f64) -> Result<f64> {
    check_rate(lambda)?;
    if k < 0 {
        return Ok(0.0);
    }
    let mut acc = NeumaierSum::default();
    for j in 0..=k as u64 {
        acc.add(pmf_unchecked(j, lambda));
    }
    Ok(acc.value().min(1.0))
}

/// `P(X > k)`. Below the mean this is the complement of the CDF; at or
/// above it the upper tail is summed directly so small tails keep their
/// relative precision.
pub fn sf(k: i64, lambda: f64) -> Result<f64> {
    check_rate(lambda)?;
    if k < 0 {
        return Ok(1.0);
    }
    if (k as f64) < lambda {
        return Ok((1.0 - cdf(k, lambda)?).max(0.0));
    }
    Ok(upper_tail(k as u64 + 1, lambda))
}

/// `sum_{j >= from} g(j)` by forward summation until terms stop mattering.
fn upper_tail(from: u64, lambda: f64) -> f64 {
    let mut acc = NeumaierSum::default();
    let mut j = from;
    loop {
        let term = pmf_unchecked(j, lambda);
        acc.add(term);
        if term == 0.0 || (j as f64 > lambda && term <= acc.value() * 1e-18) {
            break;
        }
        j += 1;
    }
    acc.value().min(1.0)
}

/// Smallest `k` with `cdf(k) >= p`.
///
/// The scan stops early if the accumulated CDF stops growing past the mode;
/// that only happens for `p` within a few ulps of 1, and the last index is
/// returned as a cap.
pub fn quantile(p: f64, lambda: f64) -> Result<u64> {
    check_rate(lambda)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "quantile level must lie in [0, 1), got {p}"
        )));
    }
    Ok(quantile_scan(p, lambda))
}

pub(crate) fn quantile_scan(p: f64, lambda: f64) -> u64 {
    let mut acc = NeumaierSum::default();
    let mut k = 0u64;
    loop {
        let before = acc.value();
        acc.add(pmf_unchecked(k, lambda));
        let now = acc.value();
        if now >= p || (k as f64 > lambda && now <= before) {
            return k;
        }
        k += 1;
    }
}

/// Poisson mass values `g(0..len)`; a zero rate gives the point mass at 0.
pub(crate) fn pmf_table(lambda: f64, len: usize) -> Vec<f64> {
    (0..len as u64).map(|k| pmf_unchecked(k, lambda)).collect()
}

/// Cumulative probabilities `G(0..len)` with the same accumulation order as [`cdf`].
pub(crate) fn cdf_table(lambda: f64, len: usize) -> Vec<f64> {
    let mut acc = NeumaierSum::default();
    (0..len as u64)
        .map(|k| {
            acc.add(pmf_unchecked(k, lambda));
            acc.value().min(1.0)
        })
        .collect()
}

/// Survival probabilities `P(X > k)` for `k in 0..len`.
pub(crate) fn sf_table(lambda: f64, len: usize) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    if lambda == 0.0 {
        return vec![0.0; len];
    }
    let cdfs = cdf_table(lambda, len);
    let mut out = vec![0.0; len];
    // Backward accumulation from the far tail for k at or above the mean.
    let mut tail = upper_tail(len as u64, lambda);
    for k in (0..len).rev() {
        if (k as f64) < lambda {
            out[k] = (1.0 - cdfs[k]).max(0.0);
        } else {
            out[k] = tail;
        }
        tail += pmf_unchecked(k as u64, lambda);
    }
    out
}

/// Index `K` such that mass beyond it is below `tail_mass`, padded by `margin`.
pub(crate) fn tail_cutoff(lambda: f64, tail_mass: f64, margin: u64) -> usize {
    if lambda == 0.0 {
        return margin as usize;
    }
    (quantile_scan(1.0 - tail_mass, lambda) + margin) as usize
}

/// Zero-inflated Poisson margin: a point mass `phi` at zero mixed with a
/// Poisson(`lambda`) law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipMarginal {
    lambda: Rate,
    phi: f64,
}

impl ZipMarginal {
    pub fn new(lambda: f64, phi: f64) -> Result<Self> {
        let lambda = Rate::new(lambda)?;
        if !(0.0..1.0).contains(&phi) {
            return Err(invalid(format!("phi must lie in [0, 1), got {phi}")));
        }
        Ok(Self { lambda, phi })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.get()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn pmf(&self, x: u64) -> f64 {
        let lambda = self.lambda.get();
        let base = (1.0 - self.phi) * pmf_unchecked(x, lambda);
        if x == 0 {
            self.phi + base
        } else {
            base
        }
    }

    /// `(mean, variance)`.
    pub fn moments(&self) -> (f64, f64) {
        let (l, p) = (self.lambda.get(), self.phi);
        ((1.0 - p) * l, (1.0 - p) * l * (1.0 + p * l))
    }
}
