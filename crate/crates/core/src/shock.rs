//! The latent dependent Poisson pair `(T1, T2) = (Y1 + Z1, Y2 + Z2)`.
//!
//! `Y1, Y2` are independent Poisson with rates `(1 - theta) * lambda_j`; the
//! shock `(Z1, Z2)` has Poisson margins with rates `theta * lambda_j` and is
//! either comonotonic (both driven by one uniform `U`) or counter-monotonic
//! (driven by `U` and `1 - U`). Shock masses come from the Fréchet bound
//! differences of the shock CDFs, so every finite sum below is exact on its
//! grid; only the covariance series, mixed moments and PGF need a tail cut.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::poisson::{cdf_table, pmf_table, sf_table, tail_cutoff, Rate};

/// Direction of the shock coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceKind {
    /// Comonotonic shock: `(Z1, Z2) = (G^-1(U), G^-1(U))`.
    Positive,
    /// Counter-monotonic shock: `(Z1, Z2) = (G^-1(U), G^-1(1 - U))`.
    Negative,
}

impl DependenceKind {
    pub fn short_name(self) -> &'static str {
        match self {
            Self::Positive => "pos",
            Self::Negative => "neg",
        }
    }
}

impl fmt::Display for DependenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DependenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pos" | "positive" | "+" => Ok(Self::Positive),
            "neg" | "negative" | "-" => Ok(Self::Negative),
            other => Err(invalid(format!("unknown dependence kind `{other}`"))),
        }
    }
}

/// Tail-mass tolerance used wherever an infinite series or grid is cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    tail_mass: f64,
}

impl TruncationPolicy {
    pub const DEFAULT_TAIL_MASS: f64 = 1e-10;
    /// Padding added to every per-axis quantile cutoff.
    pub const MARGIN: u64 = 10;

    pub fn new(tail_mass: f64) -> Result<Self> {
        if tail_mass > 0.0 && tail_mass < 1e-4 {
            Ok(Self { tail_mass })
        } else {
            Err(invalid(format!(
                "tail mass must lie in (0, 1e-4), got {tail_mass}"
            )))
        }
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Grid length (`K + 1`) covering a Poisson axis with the given rate.
    pub fn axis_len(&self, rate: f64) -> usize {
        tail_cutoff(rate, self.tail_mass, Self::MARGIN) + 1
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_mass: Self::DEFAULT_TAIL_MASS,
        }
    }
}

/// Parameters of the latent pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpParams {
    pub lambda1: Rate,
    pub lambda2: Rate,
    pub theta: f64,
    pub kind: DependenceKind,
}

impl BpParams {
    pub fn new(lambda1: f64, lambda2: f64, theta: f64, kind: DependenceKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(invalid(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self {
            lambda1: Rate::new(lambda1)?,
            lambda2: Rate::new(lambda2)?,
            theta,
            kind,
        })
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.lambda1.get(), self.lambda2.get())
    }

    /// Rates of the shock components `Z1, Z2`.
    pub fn shock_rates(&self) -> (f64, f64) {
        let (l1, l2) = self.lambdas();
        (self.theta * l1, self.theta * l2)
    }

    /// Rates of the independent components `Y1, Y2`. At `theta == 1` these are
    /// exactly zero, which the tables treat as a point mass at 0.
    pub fn free_rates(&self) -> (f64, f64) {
        let (l1, l2) = self.lambdas();
        if self.theta == 1.0 {
            (0.0, 0.0)
        } else {
            ((1.0 - self.theta) * l1, (1.0 - self.theta) * l2)
        }
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        let (l1, l2) = self.lambdas();
        Self::new(l1, l2, theta, self.kind)
    }
}

/// One support point of the shock pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Atom {
    pub z1: usize,
    pub z2: usize,
    pub mass: f64,
}

/// Shock mass from the bound-difference formula, given the shock CDF at
/// `z1 - 1, z1` for margin 1 and the CDF (positive) or survival function
/// (negative) at `z2 - 1, z2` for margin 2.
#[inline]
fn bound_difference(kind: DependenceKind, g1: (f64, f64), h2: (f64, f64)) -> f64 {
    let (g1_prev, g1_cur) = g1;
    let (h2_prev, h2_cur) = h2;
    let v = match kind {
        DependenceKind::Positive => g1_cur.min(h2_cur) - g1_prev.max(h2_prev),
        DependenceKind::Negative => g1_cur.min(h2_prev) - g1_prev.max(h2_cur),
    };
    v.max(0.0)
}

/// Joint mass of the shock pair at `(z1, z2)`.
pub fn shock_pmf(z1: u64, z2: u64, p: &BpParams) -> f64 {
    if p.theta == 0.0 {
        return if z1 == 0 && z2 == 0 { 1.0 } else { 0.0 };
    }
    let (r1, r2) = p.shock_rates();
    let g1 = cdf_table(r1, z1 as usize + 1);
    let g1_prev = if z1 == 0 { 0.0 } else { g1[z1 as usize - 1] };
    let g1_cur = g1[z1 as usize];
    let h2 = match p.kind {
        DependenceKind::Positive => {
            let g2 = cdf_table(r2, z2 as usize + 1);
            let prev = if z2 == 0 { 0.0 } else { g2[z2 as usize - 1] };
            (prev, g2[z2 as usize])
        }
        DependenceKind::Negative => {
            let s2 = sf_table(r2, z2 as usize + 1);
            let prev = if z2 == 0 { 1.0 } else { s2[z2 as usize - 1] };
            (prev, s2[z2 as usize])
        }
    };
    bound_difference(p.kind, (g1_prev, g1_cur), h2)
}

/// All shock atoms inside `[0, n1) x [0, n2)`.
pub(crate) fn shock_atoms(p: &BpParams, n1: usize, n2: usize) -> Vec<Atom> {
    if p.theta == 0.0 || n1 == 0 || n2 == 0 {
        return if n1 > 0 && n2 > 0 {
            vec![Atom {
                z1: 0,
                z2: 0,
                mass: 1.0,
            }]
        } else {
            Vec::new()
        };
    }
    let (r1, r2) = p.shock_rates();
    let g1 = cdf_table(r1, n1);
    let h2 = match p.kind {
        DependenceKind::Positive => cdf_table(r2, n2),
        DependenceKind::Negative => sf_table(r2, n2),
    };
    let h2_before_zero = match p.kind {
        DependenceKind::Positive => 0.0,
        DependenceKind::Negative => 1.0,
    };
    let mut atoms = Vec::with_capacity(n1 + n2);
    for z1 in 0..n1 {
        let g1_pair = (if z1 == 0 { 0.0 } else { g1[z1 - 1] }, g1[z1]);
        for z2 in 0..n2 {
            let h2_pair = (if z2 == 0 { h2_before_zero } else { h2[z2 - 1] }, h2[z2]);
            let mass = bound_difference(p.kind, g1_pair, h2_pair);
            if mass > 0.0 {
                atoms.push(Atom { z1, z2, mass });
            }
        }
    }
    atoms
}

/// Joint PMF of `(T1, T2)` tabulated on `[0, n1) x [0, n2)`.
///
/// Each entry is the exact finite convolution of the shock atoms with the
/// independent Poisson parts; no truncation enters the tabulated values.
#[derive(Debug, Clone)]
pub struct BpTable {
    n1: usize,
    n2: usize,
    values: Vec<f64>,
}

impl BpTable {
    pub fn new(p: &BpParams, n1: usize, n2: usize) -> Self {
        let (y1, y2) = p.free_rates();
        let gy1 = pmf_table(y1, n1);
        let gy2 = pmf_table(y2, n2);
        let mut values = vec![0.0; n1 * n2];
        for atom in shock_atoms(p, n1, n2) {
            for t1 in atom.z1..n1 {
                let w = atom.mass * gy1[t1 - atom.z1];
                if w == 0.0 {
                    continue;
                }
                let row = &mut values[t1 * n2..(t1 + 1) * n2];
                for t2 in atom.z2..n2 {
                    row[t2] += w * gy2[t2 - atom.z2];
                }
            }
        }
        Self { n1, n2, values }
    }

    /// Table covering the bulk of both margins under the truncation policy.
    pub fn truncated(p: &BpParams, trunc: &TruncationPolicy) -> Self {
        let (l1, l2) = p.lambdas();
        Self::new(p, trunc.axis_len(l1), trunc.axis_len(l2))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// `f(t1, t2)`; zero outside the table.
    #[inline]
    pub fn get(&self, t1: usize, t2: usize) -> f64 {
        if t1 < self.n1 && t2 < self.n2 {
            self.values[t1 * self.n2 + t2]
        } else {
            0.0
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `sum t1^a t2^b f(t1, t2)` over the table.
    pub fn mixed_moment(&self, a: u32, b: u32) -> f64 {
        let mut acc = 0.0;
        for t1 in 0..self.n1 {
            let p1 = (t1 as f64).powi(a as i32);
            for t2 in 0..self.n2 {
                acc += p1 * (t2 as f64).powi(b as i32) * self.values[t1 * self.n2 + t2];
            }
        }
        acc
    }
}

/// Joint PMF of the latent pair at `(t1, t2)`.
pub fn bp_pmf(t1: u64, t2: u64, p: &BpParams) -> f64 {
    BpTable::new(p, t1 as usize + 1, t2 as usize + 1).get(t1 as usize, t2 as usize)
}

/// Joint CDF of the latent pair, summing shock atoms against the CDFs of the
/// independent parts.
pub fn bp_cdf(t1: i64, t2: i64, p: &BpParams) -> f64 {
    if t1 < 0 || t2 < 0 {
        return 0.0;
    }
    let (n1, n2) = (t1 as usize + 1, t2 as usize + 1);
    let (y1, y2) = p.free_rates();
    let gy1 = cdf_table(y1, n1);
    let gy2 = cdf_table(y2, n2);
    let total: f64 = shock_atoms(p, n1, n2)
        .iter()
        .map(|a| a.mass * gy1[n1 - 1 - a.z1] * gy2[n2 - 1 - a.z2])
        .sum();
    total.min(1.0)
}

/// `E(Z1 Z2)` through the Hoeffding tail-sum representation of the shock pair.
fn shock_cross_moment(p: &BpParams, trunc: &TruncationPolicy) -> f64 {
    let (r1, r2) = p.shock_rates();
    let (n1, n2) = (trunc.axis_len(r1), trunc.axis_len(r2));
    let s1 = sf_table(r1, n1);
    let mut acc = 0.0;
    match p.kind {
        DependenceKind::Positive => {
            let s2 = sf_table(r2, n2);
            for &a in &s1 {
                for &b in &s2 {
                    acc += a.min(b);
                }
            }
        }
        DependenceKind::Negative => {
            // max{0, 1 - G1(i) - G2(j)} written as max{0, S1(i) - G2(j)}.
            let g2 = cdf_table(r2, n2);
            for &a in &s1 {
                for &b in &g2 {
                    let v = a - b;
                    if v <= 0.0 {
                        break;
                    }
                    acc += v;
                }
            }
        }
    }
    acc
}

/// `cov(T1, T2)`; non-negative for the comonotonic shock, non-positive for
/// the counter-monotonic one.
pub fn bp_cov(p: &BpParams, trunc: &TruncationPolicy) -> f64 {
    if p.theta == 0.0 {
        return 0.0;
    }
    let (r1, r2) = p.shock_rates();
    shock_cross_moment(p, trunc) - r1 * r2
}

/// `corr(T1, T2)` from [`bp_cov`] and the Poisson margins.
pub fn bp_corr(p: &BpParams, trunc: &TruncationPolicy) -> f64 {
    let (l1, l2) = p.lambdas();
    bp_cov(p, trunc) / (l1 * l2).sqrt()
}

/// `E(T1^a T2^b)` by summation over the truncated joint PMF.
pub fn bp_mixed_moment(a: u32, b: u32, p: &BpParams, trunc: &TruncationPolicy) -> f64 {
    BpTable::truncated(p, trunc).mixed_moment(a, b)
}

/// Shock PGF `E(s1^Z1 s2^Z2)` summed over the truncated shock support.
pub fn shock_pgf(s1: f64, s2: f64, p: &BpParams, trunc: &TruncationPolicy) -> Result<f64> {
    check_unit("s1", s1)?;
    check_unit("s2", s2)?;
    let (r1, r2) = p.shock_rates();
    let atoms = shock_atoms(p, trunc.axis_len(r1), trunc.axis_len(r2));
    Ok(atoms
        .iter()
        .map(|a| a.mass * s1.powi(a.z1 as i32) * s2.powi(a.z2 as i32))
        .sum())
}

/// PGF of the latent pair, `E(s1^T1 s2^T2)`.
pub fn bp_pgf(s1: f64, s2: f64, p: &BpParams, trunc: &TruncationPolicy) -> Result<f64> {
    let rho = shock_pgf(s1, s2, p, trunc)?;
    let (y1, y2) = p.free_rates();
    Ok(rho * (y1 * (s1 - 1.0) + y2 * (s2 - 1.0)).exp())
}

fn check_unit(name: &str, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in [0, 1], got {s}")))
    }
}
