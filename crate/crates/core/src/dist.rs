//! The observable zero-inflated pair `(X1, X2) = W (T1, T2)` with
//! `W ~ Bernoulli(1 - phi)` independent of the latent pair.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poisson::{self, Rate};
use crate::shock::{self, BpParams, BpTable, DependenceKind, TruncationPolicy};

/// Inflation values closer than this to 1 are rejected.
const PHI_CEILING_GAP: f64 = 1e-12;

/// Full parameter vector `(lambda1, lambda2, theta, phi)` plus the coupling direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub bp: BpParams,
    pub phi: f64,
}

impl ModelParams {
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        theta: f64,
        phi: f64,
        kind: DependenceKind,
    ) -> Result<Self> {
        Self::from_bp(BpParams::new(lambda1, lambda2, theta, kind)?, phi)
    }

    pub fn from_bp(bp: BpParams, phi: f64) -> Result<Self> {
        if !(0.0..1.0 - PHI_CEILING_GAP).contains(&phi) {
            return Err(invalid(format!("phi must lie in [0, 1), got {phi}")));
        }
        Ok(Self { bp, phi })
    }

    pub fn lambdas(&self) -> (f64, f64) {
        self.bp.lambdas()
    }

    pub fn theta(&self) -> f64 {
        self.bp.theta
    }

    pub fn kind(&self) -> DependenceKind {
        self.bp.kind
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::from_bp(self.bp.with_theta(theta)?, self.phi)
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::from_bp(self.bp, phi)
    }

    /// Joint PMF table of `(X1, X2)` on the truncated grid.
    pub fn pmf_table(&self, trunc: &TruncationPolicy) -> BzipTable {
        BzipTable::from_latent(BpTable::truncated(&self.bp, trunc), self.phi)
    }
}

/// Joint PMF of the observable pair on a finite grid.
#[derive(Debug, Clone)]
pub struct BzipTable {
    latent: BpTable,
    phi: f64,
}

impl BzipTable {
    pub fn from_latent(latent: BpTable, phi: f64) -> Self {
        Self { latent, phi }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.latent.dims()
    }

    pub fn get(&self, x1: usize, x2: usize) -> f64 {
        let base = (1.0 - self.phi) * self.latent.get(x1, x2);
        if x1 == 0 && x2 == 0 {
            self.phi + base
        } else {
            base
        }
    }

    pub fn latent(&self) -> &BpTable {
        &self.latent
    }
}

/// Joint PMF of the observable pair.
pub fn bzip_pmf(x1: u64, x2: u64, m: &ModelParams) -> f64 {
    let f = shock::bp_pmf(x1, x2, &m.bp);
    if x1 == 0 && x2 == 0 {
        m.phi + (1.0 - m.phi) * f
    } else {
        (1.0 - m.phi) * f
    }
}

/// Joint CDF of the observable pair.
pub fn bzip_cdf(x1: i64, x2: i64, m: &ModelParams) -> f64 {
    if x1 < 0 || x2 < 0 {
        return 0.0;
    }
    (m.phi + (1.0 - m.phi) * shock::bp_cdf(x1, x2, &m.bp)).min(1.0)
}

/// Joint PGF of the observable pair.
pub fn bzip_pgf(s1: f64, s2: f64, m: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    Ok(m.phi + (1.0 - m.phi) * shock::bp_pgf(s1, s2, &m.bp, trunc)?)
}

/// `cov(X1, X2) = (1 - phi) cov(T1, T2) + phi (1 - phi) lambda1 lambda2`.
pub fn bzip_cov(m: &ModelParams, trunc: &TruncationPolicy) -> f64 {
    let (l1, l2) = m.lambdas();
    let phi = m.phi;
    (1.0 - phi) * shock::bp_cov(&m.bp, trunc) + phi * (1.0 - phi) * l1 * l2
}

/// Correlation of the observable pair split into the latent correlation,
/// its damping factor `a(phi)` and the inflation-induced offset `b(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrDecomposition {
    pub a_phi: f64,
    pub b_phi: f64,
    pub corr_t: f64,
    pub corr_x: f64,
}

impl CorrDecomposition {
    pub fn new(corr_t: f64, lambda1: f64, lambda2: f64, phi: f64) -> Self {
        let a_phi = ((1.0 + phi * lambda1) * (1.0 + phi * lambda2))
            .sqrt()
            .recip();
        let b_phi = phi * a_phi * (lambda1 * lambda2).sqrt();
        Self {
            a_phi,
            b_phi,
            corr_t,
            corr_x: a_phi * corr_t + b_phi,
        }
    }
}

pub fn bzip_corr(m: &ModelParams, trunc: &TruncationPolicy) -> CorrDecomposition {
    let (l1, l2) = m.lambdas();
    CorrDecomposition::new(shock::bp_corr(&m.bp, trunc), l1, l2, m.phi)
}

/// Pointwise Fréchet–Hoeffding bounds for a pair of ZIP margins sharing `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn frechet_bounds(
    x1: i64,
    x2: i64,
    lambda1: f64,
    lambda2: f64,
    phi: f64,
) -> Result<FrechetBounds> {
    let (l1, l2) = (Rate::new(lambda1)?, Rate::new(lambda2)?);
    if !(0.0..1.0).contains(&phi) {
        return Err(invalid(format!("phi must lie in [0, 1), got {phi}")));
    }
    if x1 < 0 || x2 < 0 {
        return Ok(FrechetBounds {
            lower: 0.0,
            upper: 0.0,
        });
    }
    let g1 = poisson::cdf(x1, l1.get())?;
    let g2 = poisson::cdf(x2, l2.get())?;
    Ok(FrechetBounds {
        lower: (phi + (1.0 - phi) * (g1 + g2 - 1.0)).max(0.0),
        upper: phi + (1.0 - phi) * g1.min(g2),
    })
}

/// Slack allowed when comparing CDF grids.
const PQD_SLACK: f64 = 1e-9;

/// Checks the concordance ordering implied by increasing `theta` on a
/// `grid_size x grid_size` grid. For the comonotonic shock the CDF must
/// grow with `theta`; for the counter-monotonic shock it must shrink.
pub fn pqd_grid_check(m_low: &ModelParams, m_high: &ModelParams, grid_size: usize) -> Result<bool> {
    if m_low.kind() != m_high.kind()
        || m_low.lambdas() != m_high.lambdas()
        || m_low.phi != m_high.phi
    {
        return Err(Error::InvalidComparison(
            "models must share rates, inflation and dependence kind".into(),
        ));
    }
    if m_low.theta() > m_high.theta() {
        return Err(Error::InvalidComparison(format!(
            "theta_low = {} exceeds theta_high = {}",
            m_low.theta(),
            m_high.theta()
        )));
    }
    Ok(pqd_holds(
        &cdf_grid(m_low, grid_size),
        &cdf_grid(m_high, grid_size),
        m_low.kind(),
    ))
}

/// `H(i, j)` for `i, j < grid_size`, row-major.
pub fn cdf_grid(m: &ModelParams, grid_size: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid_size * grid_size);
    for i in 0..grid_size as i64 {
        for j in 0..grid_size as i64 {
            out.push(bzip_cdf(i, j, m));
        }
    }
    out
}

/// Grid comparison for two precomputed CDF grids ordered by `theta`.
pub fn pqd_holds(low: &[f64], high: &[f64], kind: DependenceKind) -> bool {
    low.iter().zip(high).all(|(&lo, &hi)| match kind {
        DependenceKind::Positive => lo <= hi + PQD_SLACK,
        DependenceKind::Negative => hi <= lo + PQD_SLACK,
    })
}
