//! Large-sample variances of the moment estimators via the delta method.
//!
//! The building block is the covariance matrix of one observation's moment
//! vector `(X1, X1^2, X2, X2^2)`. Own-margin entries use ZIP closed forms;
//! cross entries combine latent mixed moments with the inflation term.

use serde::{Deserialize, Serialize};

use crate::dist::{bzip_cov, ModelParams};
use crate::error::{Error, Result};
use crate::shock::{BpTable, TruncationPolicy};

/// Step for the numerical derivative of the model covariance in `theta`.
const DIFF_STEP: f64 = 1e-4;

/// Mean `omega` and covariance `sigma` of `(X1, X1^2, X2, X2^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCovariance {
    pub omega: [f64; 4],
    pub sigma: [[f64; 4]; 4],
}

impl MomentCovariance {
    /// `g' sigma g`.
    pub fn quadratic_form(&self, g: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += g[i] * self.sigma[i][j] * g[j];
            }
        }
        acc
    }
}

/// Per-observation asymptotic variances (limits of `n * var`) of the moment
/// estimators. `var_theta` is absent when `theta` is on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVariances {
    pub var_lambda1: f64,
    pub var_lambda2: f64,
    pub var_phi: f64,
    pub var_theta: Option<f64>,
}

/// `var(X^2) = (1 - phi) lambda {phi lambda^3 + 2(2 + phi) lambda^2 + (6 + phi) lambda + 1}`.
pub fn zip_var_square(lambda: f64, phi: f64) -> f64 {
    (1.0 - phi)
        * lambda
        * (phi * lambda.powi(3) + 2.0 * (2.0 + phi) * lambda * lambda + (6.0 + phi) * lambda + 1.0)
}

/// `cov(X, X^2) = (1 - phi) lambda {phi lambda^2 + (phi + 2) lambda + 1}`.
pub fn zip_cov_square(lambda: f64, phi: f64) -> f64 {
    (1.0 - phi) * lambda * (phi * lambda * lambda + (phi + 2.0) * lambda + 1.0)
}

/// `var(X) = (1 - phi) lambda (1 + phi lambda)`.
pub fn zip_var(lambda: f64, phi: f64) -> f64 {
    (1.0 - phi) * lambda * (1.0 + phi * lambda)
}

pub fn sigma_m(m: &ModelParams, trunc: &TruncationPolicy) -> MomentCovariance {
    let (l1, l2) = m.lambdas();
    let phi = m.phi;
    // Raw latent moments E T^1, E T^2 per margin.
    let et = [[l1, l1 * (1.0 + l1)], [l2, l2 * (1.0 + l2)]];
    let omega = [
        (1.0 - phi) * et[0][0],
        (1.0 - phi) * et[0][1],
        (1.0 - phi) * et[1][0],
        (1.0 - phi) * et[1][1],
    ];

    let mut sigma = [[0.0; 4]; 4];
    for (j, &lam) in [l1, l2].iter().enumerate() {
        let o = 2 * j;
        sigma[o][o] = zip_var(lam, phi);
        sigma[o][o + 1] = zip_cov_square(lam, phi);
        sigma[o + 1][o] = sigma[o][o + 1];
        sigma[o + 1][o + 1] = zip_var_square(lam, phi);
    }
    let table = BpTable::truncated(&m.bp, trunc);
    for a in 1..=2u32 {
        for b in 1..=2u32 {
            let (ea, eb) = (et[0][a as usize - 1], et[1][b as usize - 1]);
            let cov_t = table.mixed_moment(a, b) - ea * eb;
            let v = (1.0 - phi) * cov_t + phi * (1.0 - phi) * ea * eb;
            let (i, k) = (a as usize - 1, 2 + b as usize - 1);
            sigma[i][k] = v;
            sigma[k][i] = v;
        }
    }
    MomentCovariance { omega, sigma }
}

/// Covariance of `(X1, X1^2, X2, X2^2)` by direct summation over the
/// truncated joint PMF; an independent check on [`sigma_m`].
pub fn sigma_m_oracle(m: &ModelParams, trunc: &TruncationPolicy) -> MomentCovariance {
    let table = m.pmf_table(trunc);
    let (n1, n2) = table.dims();
    let mut mean = [0.0; 4];
    let mut second = [[0.0; 4]; 4];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let p = table.get(x1, x2);
            let (a, b) = (x1 as f64, x2 as f64);
            let v = [a, a * a, b, b * b];
            for i in 0..4 {
                mean[i] += p * v[i];
                for k in 0..4 {
                    second[i][k] += p * v[i] * v[k];
                }
            }
        }
    }
    let mut sigma = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            sigma[i][k] = second[i][k] - mean[i] * mean[k];
        }
    }
    MomentCovariance { omega: mean, sigma }
}

/// Asymptotic variance of the averaged moment estimator of `phi`.
pub fn avar_phi(m: &ModelParams, trunc: &TruncationPolicy) -> f64 {
    let (l1, l2) = m.lambdas();
    let g = [
        -(1.0 + 2.0 * l1) / (2.0 * l1 * l1),
        1.0 / (2.0 * l1 * l1),
        -(1.0 + 2.0 * l2) / (2.0 * l2 * l2),
        1.0 / (2.0 * l2 * l2),
    ];
    sigma_m(m, trunc).quadratic_form(&g)
}

/// Asymptotic variance of the moment estimator `m2 / m1 - 1` of one rate.
pub fn avar_lambda(m: &ModelParams, margin: usize, trunc: &TruncationPolicy) -> Result<f64> {
    if margin != 1 && margin != 2 {
        return Err(Error::InvalidParameter(format!(
            "margin must be 1 or 2, got {margin}"
        )));
    }
    let mc = sigma_m(m, trunc);
    let o = 2 * (margin - 1);
    let (m1, m2) = (mc.omega[o], mc.omega[o + 1]);
    let mut g = [0.0; 4];
    g[o] = -m2 / (m1 * m1);
    g[o + 1] = 1.0 / m1;
    Ok(mc.quadratic_form(&g))
}

/// `var[(X1 - E X1)(X2 - E X2)]`, the asymptotic variance of the sample covariance.
pub fn tau_squared(m: &ModelParams, trunc: &TruncationPolicy) -> f64 {
    let table = m.pmf_table(trunc);
    let (n1, n2) = table.dims();
    let (l1, l2) = m.lambdas();
    let (mu1, mu2) = ((1.0 - m.phi) * l1, (1.0 - m.phi) * l2);
    let (mut s1, mut s2) = (0.0, 0.0);
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let p = table.get(x1, x2);
            let c = (x1 as f64 - mu1) * (x2 as f64 - mu2);
            s1 += p * c;
            s2 += p * c * c;
        }
    }
    s2 - s1 * s1
}

/// Derivative of the model covariance `s(theta)` by finite differences;
/// one-sided within a step of the boundary.
pub fn cov_slope(m: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    let theta = m.theta();
    let s = |t: f64| -> Result<f64> { Ok(bzip_cov(&m.with_theta(t)?, trunc)) };
    let (lo, hi) = ((theta - DIFF_STEP).max(0.0), (theta + DIFF_STEP).min(1.0));
    Ok((s(hi)? - s(lo)?) / (hi - lo))
}

fn check_interior(m: &ModelParams) -> Result<()> {
    let theta = m.theta();
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "theta must be interior to (0, 1), got {theta}"
        )))
    }
}

/// `tau^2 / s'(theta)^2`: the sampling variability of the covariance pushed
/// through the inverse of `s`, with the rates and `phi` held at their true
/// values. Ignores the estimation error of the plugged-in rates and `phi`.
pub fn avar_theta_fixed_margins(m: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    check_interior(m)?;
    let slope = cov_slope(m, trunc)?;
    Ok(tau_squared(m, trunc) / (slope * slope))
}

/// Mean and covariance of `(X1, X1^2, X2, X2^2, X1 X2)` by summation over
/// the truncated joint PMF.
pub fn extended_moment_cov(m: &ModelParams, trunc: &TruncationPolicy) -> ([f64; 5], [[f64; 5]; 5]) {
    let table = m.pmf_table(trunc);
    let (n1, n2) = table.dims();
    let mut mean = [0.0; 5];
    let mut second = [[0.0; 5]; 5];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let p = table.get(x1, x2);
            let (a, b) = (x1 as f64, x2 as f64);
            let v = [a, a * a, b, b * b, a * b];
            for i in 0..5 {
                mean[i] += p * v[i];
                for k in 0..5 {
                    second[i][k] += p * v[i] * v[k];
                }
            }
        }
    }
    let mut cov = [[0.0; 5]; 5];
    for i in 0..5 {
        for k in 0..5 {
            cov[i][k] = second[i][k] - mean[i] * mean[k];
        }
    }
    (mean, cov)
}

/// The moment estimator of `theta` as a function of the five raw moments.
fn theta_from_moments(mo: &[f64; 5], m: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    let l1 = mo[1] / mo[0] - 1.0;
    let l2 = mo[3] / mo[2] - 1.0;
    let phi = 0.5 * ((1.0 - mo[0] / l1) + (1.0 - mo[2] / l2));
    let s12 = mo[4] - mo[0] * mo[2];
    Ok(crate::estimate::mom_theta_root(s12, l1, l2, phi, m.kind(), trunc)?.0)
}

/// Delta-method variance of the moment estimator of `theta`, propagating
/// the joint sampling error of the rates, `phi` and the covariance.
pub fn avar_theta(m: &ModelParams, trunc: &TruncationPolicy) -> Result<f64> {
    check_interior(m)?;
    let (mean, cov) = extended_moment_cov(m, trunc);
    let mut grad = [0.0; 5];
    for k in 0..5 {
        let h = DIFF_STEP * mean[k].abs().max(1e-2);
        let (mut up, mut down) = (mean, mean);
        up[k] += h;
        down[k] -= h;
        grad[k] =
            (theta_from_moments(&up, m, trunc)? - theta_from_moments(&down, m, trunc)?) / (2.0 * h);
    }
    let mut acc = 0.0;
    for i in 0..5 {
        for k in 0..5 {
            acc += grad[i] * cov[i][k] * grad[k];
        }
    }
    Ok(acc)
}

pub fn asymptotic_variances(
    m: &ModelParams,
    trunc: &TruncationPolicy,
) -> Result<AsymptoticVariances> {
    Ok(AsymptoticVariances {
        var_lambda1: avar_lambda(m, 1, trunc)?,
        var_lambda2: avar_lambda(m, 2, trunc)?,
        var_phi: avar_phi(m, trunc),
        var_theta: avar_theta(m, trunc).ok(),
    })
}
