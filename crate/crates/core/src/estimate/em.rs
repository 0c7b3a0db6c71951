use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::likelihood::PairCounts;
use super::optim::{brent_max, brent_root, nelder_mead, OptConfig};
use super::{theta_flags, FitFlag, FitResult, Method, BOUNDARY_EPS};
use crate::dist::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::poisson::{ln_factorial, Rate};
use crate::shock::{shock_atoms, BpParams, BpTable, DependenceKind, TruncationPolicy};
use crate::simulate::CountSample;
use crate::util::{log_sum_exp, logistic, logit};

/// The open interval searched by the `theta` update is `(EPS, 1 - EPS)`.
const THETA_EPS: f64 = 1e-6;
const THETA_XTOL: f64 = 1e-10;

/// How the latent parameters are updated in the M-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MStep {
    /// Inference functions for margins: the rates are weighted sample means,
    /// then `theta` maximizes the weighted dependence term alone. Cheap, but
    /// the rate update ignores the dependence term, so the observed-data
    /// likelihood can decrease slightly between iterations.
    Ifm,
    /// Rates and `theta` jointly maximize the weighted latent log-likelihood
    /// (a proper EM step: monotone, with the MLE as fixed point).
    #[default]
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop when every parameter moves less than this.
    pub param_tol: f64,
    /// Stop when the observed-data log-likelihood moves less than this.
    pub loglik_tol: f64,
    pub m_step: MStep,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            param_tol: 1e-6,
            loglik_tol: 1e-8,
            m_step: MStep::Joint,
        }
    }
}

/// Posterior probability that the pair came from the latent Poisson part:
/// 1 away from the origin, `(1 - phi) f(0,0) / {phi + (1 - phi) f(0,0)}` at it.
pub fn em_weights(m: &ModelParams, x1: u64, x2: u64) -> f64 {
    if x1 != 0 || x2 != 0 {
        return 1.0;
    }
    let f00 = BpTable::new(&m.bp, 1, 1).get(0, 0);
    weight_at_origin(m.phi, f00)
}

fn weight_at_origin(phi: f64, f00: f64) -> f64 {
    let latent = (1.0 - phi) * f00;
    latent / (phi + latent)
}

/// `ln kappa(x, z) = ln g_{(1-theta) lambda}(x - z) - ln g_lambda(x)`.
fn ln_kappa(x: u64, z: u64, lambda: f64, theta: f64) -> f64 {
    let free = x - z;
    let shrink = if free == 0 {
        0.0
    } else {
        free as f64 * (1.0 - theta).ln()
    };
    ln_factorial(x) - ln_factorial(free) + shrink + theta * lambda - z as f64 * lambda.ln()
}

/// Dependence part of the latent log-likelihood,
/// `ln f(x1, x2) - ln g_{lambda1}(x1) - ln g_{lambda2}(x2)`, computed
/// directly as `ln sum kappa1 kappa2 c` over the shock support below `(x1, x2)`.
pub fn dependence_loglik(bp: &BpParams, x1: u64, x2: u64) -> f64 {
    let (l1, l2) = bp.lambdas();
    let terms: Vec<f64> = shock_atoms(bp, x1 as usize + 1, x2 as usize + 1)
        .iter()
        .map(|a| {
            a.mass.ln()
                + ln_kappa(x1, a.z1 as u64, l1, bp.theta)
                + ln_kappa(x2, a.z2 as u64, l2, bp.theta)
        })
        .collect();
    log_sum_exp(&terms)
}

/// Weighted latent log-likelihood `sum w_i ln f(x_i)`.
fn weighted_latent(counts: &PairCounts, table: &BpTable, w0: f64) -> f64 {
    let f00 = table.get(0, 0);
    // w0 vanishes together with f00 under the counter-monotone shock; the
    // (0, 0) pairs then carry no latent information.
    let zero = if counts.m0 > 0 && w0 > 0.0 {
        counts.m0 as f64 * w0 * f00.ln()
    } else {
        0.0
    };
    zero + counts.nonzero_log_sum(table)
}

/// EM fit started from `init`.
pub fn em_fit(
    sample: &CountSample,
    kind: DependenceKind,
    init: &ModelParams,
    trunc: &TruncationPolicy,
    cfg: &EmConfig,
) -> Result<FitResult> {
    em_fit_with_trace(sample, kind, init, trunc, cfg).map(|(fit, _)| fit)
}

/// As [`em_fit`], also returning the observed-data log-likelihood after
/// every iteration (the first entry is at `init`).
pub fn em_fit_with_trace(
    sample: &CountSample,
    kind: DependenceKind,
    init: &ModelParams,
    _trunc: &TruncationPolicy,
    cfg: &EmConfig,
) -> Result<(FitResult, Vec<f64>)> {
    if init.kind() != kind {
        return Err(invalid(
            "initial parameters use a different dependence kind",
        ));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let counts = PairCounts::new(sample);
    if counts.nonzero.is_empty() {
        return Err(Error::NoInformation);
    }
    let sums = sample
        .pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64, b + y as f64));
    let n = counts.n as f64;
    let m0 = counts.m0 as f64;

    let mut cur = *init;
    let mut table = counts.table(&cur.bp);
    let mut trace = vec![counts.loglik_with(&table, cur.phi)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let w0 = weight_at_origin(cur.phi, table.get(0, 0));
        let w_total = n - m0 + m0 * w0;
        let phi = (m0 * (1.0 - w0) / n).max(0.0);
        let bp = match cfg.m_step {
            MStep::Ifm => {
                let l1 = Rate::new(sums.0 / w_total)?.get();
                let l2 = Rate::new(sums.1 / w_total)?.get();
                let base = BpParams::new(l1, l2, cur.theta(), kind)?;
                let (theta, _) = brent_max(
                    |t| {
                        weighted_latent(
                            &counts,
                            &counts.table(&base.with_theta(t).expect("interior")),
                            w0,
                        )
                    },
                    THETA_EPS,
                    1.0 - THETA_EPS,
                    THETA_XTOL,
                );
                base.with_theta(theta)?
            }
            MStep::Joint => joint_m_step(&counts, &cur.bp, w0),
        };
        let next = ModelParams::from_bp(bp, phi)?;
        table = counts.table(&next.bp);
        let ll = counts.loglik_with(&table, next.phi);
        let step = max_change(&cur, &next);
        let gain = (ll - trace[trace.len() - 1]).abs();
        trace.push(ll);
        cur = next;
        if step < cfg.param_tol || gain < cfg.loglik_tol {
            converged = true;
            break;
        }
    }
    let mut flags = BTreeSet::new();
    theta_flags(cur.theta(), &mut flags);
    if cur.phi <= BOUNDARY_EPS {
        flags.insert(FitFlag::PhiClampedAt0);
    }
    let fit = FitResult {
        params: cur,
        method: Method::Em,
        loglik: trace[trace.len() - 1],
        converged,
        iterations,
        flags,
    };
    Ok((fit, trace))
}

/// Under the counter-monotonic shock the latent mass at `(0, 0)` vanishes
/// once `theta` exceeds the root of `exp(-theta l1) + exp(-theta l2) = 1`.
/// The weighted latent log-likelihood has a barrier there (`w0 ln f00` tends
/// to minus infinity), so no EM path started below the root can cross it.
/// Returns the root when it lies in `(0, 1)`.
pub fn origin_threshold(lambda1: f64, lambda2: f64) -> Option<f64> {
    let g = |t: f64| (-t * lambda1).exp() + (-t * lambda2).exp() - 1.0;
    if g(1.0) >= 0.0 {
        return None;
    }
    brent_root(g, 0.0, 1.0, THETA_XTOL)
}

/// EM from `init` and, for the counter-monotonic shock with an origin
/// threshold in `(0, 1)`, also from a start on the other side of it; keeps
/// the run with the larger observed-data log-likelihood.
pub fn em_fit_multistart(
    sample: &CountSample,
    kind: DependenceKind,
    init: &ModelParams,
    trunc: &TruncationPolicy,
    cfg: &EmConfig,
) -> Result<(FitResult, Vec<f64>)> {
    let first = em_fit_with_trace(sample, kind, init, trunc, cfg)?;
    let (l1, l2) = init.lambdas();
    let threshold = match kind {
        DependenceKind::Positive => None,
        DependenceKind::Negative => origin_threshold(l1, l2),
    };
    let Some(t) = threshold else {
        return Ok(first);
    };
    let alt = if init.theta() < t {
        0.5 * (t + 1.0)
    } else {
        0.5 * t
    };
    let second = em_fit_with_trace(sample, kind, &init.with_theta(alt)?, trunc, cfg)?;
    Ok(if second.0.loglik > first.0.loglik {
        second
    } else {
        first
    })
}

fn joint_m_step(counts: &PairCounts, start: &BpParams, w0: f64) -> BpParams {
    let kind = start.kind;
    let (l1, l2) = start.lambdas();
    let to_bp = |x: &[f64]| BpParams::new(x[0].exp(), x[1].exp(), logistic(x[2]), kind).ok();
    let objective = |x: &[f64]| match to_bp(x) {
        Some(bp) => -weighted_latent(counts, &counts.table(&bp), w0),
        None => f64::INFINITY,
    };
    let x0 = [
        l1.ln(),
        l2.ln(),
        logit(start.theta.clamp(THETA_EPS, 1.0 - THETA_EPS)),
    ];
    let cfg = OptConfig {
        ftol: 1e-10,
        init_step: 0.05,
        ..OptConfig::default()
    };
    let min = nelder_mead(objective, &x0, &cfg);
    match to_bp(&min.x) {
        Some(bp) if min.fx <= objective(&x0) => bp,
        _ => *start,
    }
}

fn max_change(a: &ModelParams, b: &ModelParams) -> f64 {
    let (a1, a2) = a.lambdas();
    let (b1, b2) = b.lambdas();
    [
        (a1 - b1).abs(),
        (a2 - b2).abs(),
        (a.theta() - b.theta()).abs(),
        (a.phi - b.phi).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
