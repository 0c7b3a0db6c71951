use std::collections::BTreeSet;

use super::likelihood::{profile_phi, PairCounts};
use super::optim::{nelder_mead, OptConfig};
use super::{default_init, theta_flags, FitFlag, FitResult, Method, BOUNDARY_EPS};
use crate::dist::ModelParams;
use crate::error::{Error, Result};
use crate::shock::{BpParams, DependenceKind, TruncationPolicy};
use crate::simulate::CountSample;
use crate::util::{logistic, logit};

const PHI_MAX: f64 = 1.0 - 1e-9;
/// Starting values on the open unit interval are kept this far from 0 and 1.
const INIT_MARGIN: f64 = 0.01;

fn checked_counts(sample: &CountSample) -> Result<PairCounts> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let counts = PairCounts::new(sample);
    if counts.nonzero.is_empty() {
        return Err(Error::NoInformation);
    }
    Ok(counts)
}

fn bp_from(x: &[f64], kind: DependenceKind) -> Option<BpParams> {
    BpParams::new(x[0].exp(), x[1].exp(), logistic(x[2]), kind).ok()
}

fn latent_start(init: &ModelParams) -> Vec<f64> {
    let (l1, l2) = init.lambdas();
    vec![
        l1.ln(),
        l2.ln(),
        logit(init.theta().clamp(INIT_MARGIN, 1.0 - INIT_MARGIN)),
    ]
}

/// Two-step profile likelihood: maximizes the likelihood of the pairs other
/// than `(0, 0)`, conditioned on not being `(0, 0)`, over
/// `(ln lambda1, ln lambda2, logit theta)`; `phi` then follows in closed form.
pub fn mle_fit_twostep(
    sample: &CountSample,
    kind: DependenceKind,
    trunc: &TruncationPolicy,
    opt: &OptConfig,
) -> Result<FitResult> {
    let counts = checked_counts(sample)?;
    let init = default_init(sample, kind, trunc)?;
    mle_twostep_from(&counts, kind, &init, opt)
}

fn mle_twostep_from(
    counts: &PairCounts,
    kind: DependenceKind,
    init: &ModelParams,
    opt: &OptConfig,
) -> Result<FitResult> {
    let n_pos = (counts.n - counts.m0) as f64;
    let objective = |x: &[f64]| -> f64 {
        let Some(bp) = bp_from(x, kind) else {
            return f64::INFINITY;
        };
        let table = counts.table(&bp);
        let f00 = table.get(0, 0);
        if f00 >= 1.0 {
            return f64::INFINITY;
        }
        -(counts.nonzero_log_sum(&table) - n_pos * (1.0 - f00).ln())
    };
    let min = nelder_mead(objective, &latent_start(init), opt);
    let bp = bp_from(&min.x, kind)
        .ok_or_else(|| Error::Domain("optimizer left the parameter space".into()))?;
    let table = counts.table(&bp);
    let mut flags = BTreeSet::new();
    theta_flags(bp.theta, &mut flags);
    let phi_raw = profile_phi(table.get(0, 0), counts.m0, counts.n)?;
    if phi_raw < 0.0 {
        flags.insert(FitFlag::PhiClampedAt0);
    }
    let phi = phi_raw.clamp(0.0, PHI_MAX);
    let params = ModelParams::from_bp(bp, phi)?;
    Ok(FitResult {
        params,
        method: Method::Mle2,
        loglik: counts.loglik_with(&table, phi),
        converged: min.converged,
        iterations: min.iterations,
        flags,
    })
}

/// One-step likelihood fit over `(ln lambda1, ln lambda2, logit theta, logit phi)`.
pub fn mle_fit_onestep(
    sample: &CountSample,
    kind: DependenceKind,
    trunc: &TruncationPolicy,
    opt: &OptConfig,
) -> Result<FitResult> {
    let counts = checked_counts(sample)?;
    let init = default_init(sample, kind, trunc)?;
    let mut x0 = latent_start(&init);
    x0.push(logit(init.phi.clamp(0.05, 1.0 - INIT_MARGIN)));
    let objective = |x: &[f64]| -> f64 {
        let Some(bp) = bp_from(x, kind) else {
            return f64::INFINITY;
        };
        -counts.loglik_with(&counts.table(&bp), logistic(x[3]))
    };
    let min = nelder_mead(objective, &x0, opt);
    let bp = bp_from(&min.x, kind)
        .ok_or_else(|| Error::Domain("optimizer left the parameter space".into()))?;
    let phi = logistic(min.x[3]).min(PHI_MAX);
    let mut flags = BTreeSet::new();
    theta_flags(bp.theta, &mut flags);
    if phi <= BOUNDARY_EPS {
        flags.insert(FitFlag::PhiClampedAt0);
    }
    let params = ModelParams::from_bp(bp, phi)?;
    Ok(FitResult {
        params,
        method: Method::Mle1,
        loglik: counts.loglik_with(&counts.table(&bp), phi),
        converged: min.converged,
        iterations: min.iterations,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::loglik;
    use crate::simulate::sample;

    const POS: DependenceKind = DependenceKind::Positive;
    const NEG: DependenceKind = DependenceKind::Negative;

    #[test]
    fn all_zero_sample_has_no_information() {
        let s = CountSample::new(vec![(0, 0); 10]);
        let t = TruncationPolicy::default();
        assert_eq!(
            mle_fit_twostep(&s, POS, &t, &OptConfig::default()).unwrap_err(),
            Error::NoInformation
        );
        assert_eq!(
            mle_fit_onestep(&s, POS, &t, &OptConfig::default()).unwrap_err(),
            Error::NoInformation
        );
    }

    #[test]
    fn recovers_generator() {
        let truth = ModelParams::new(5.0, 10.0, 0.25, 0.5, POS).unwrap();
        let s = sample(&truth, 5000, 17).unwrap();
        let t = TruncationPolicy::default();
        let fit = mle_fit_twostep(&s, POS, &t, &OptConfig::default()).unwrap();
        let [l1, l2, th, ph] = fit.estimates();
        assert!((l1 / 5.0 - 1.0).abs() < 0.1 && (l2 / 10.0 - 1.0).abs() < 0.1);
        assert!((th - 0.25).abs() < 0.1 && (ph - 0.5).abs() < 0.05);
        assert!(fit.converged);
        assert!(fit.loglik >= loglik(&truth, &s) - 1e-6);
    }

    #[test]
    fn one_and_two_step_agree() {
        let t = TruncationPolicy::default();
        for (kind, seed) in [(POS, 1), (NEG, 2)] {
            let truth = ModelParams::new(2.0, 3.0, 0.5, 0.3, kind).unwrap();
            let s = sample(&truth, 2000, seed).unwrap();
            let a = mle_fit_twostep(&s, kind, &t, &OptConfig::default()).unwrap();
            let b = mle_fit_onestep(&s, kind, &t, &OptConfig::default()).unwrap();
            for (x, y) in a.estimates().iter().zip(b.estimates()) {
                assert!(
                    (x - y).abs() < 1e-2,
                    "{kind}: {:?} vs {:?}",
                    a.estimates(),
                    b.estimates()
                );
            }
            assert!(b.loglik >= loglik(&truth, &s) - 1e-6);
        }
    }
}
