use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::optim::brent_root;
use super::{FitFlag, FitResult, Method};
use crate::dist::{bzip_cov, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::estimate::likelihood::loglik;
use crate::shock::{BpParams, DependenceKind, TruncationPolicy};
use crate::simulate::CountSample;

/// Upper clamp for the moment estimate of `phi`.
const PHI_MAX: f64 = 1.0 - 1e-9;
const THETA_XTOL: f64 = 1e-10;

/// Sample moments entering the moment estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomIntermediates {
    pub xbar1: f64,
    pub xbar2: f64,
    /// `sum x^2 / n` per margin.
    pub m2_1: f64,
    pub m2_2: f64,
    /// Sample covariance with divisor `n - 1`.
    pub s12: f64,
    /// Latent share of the covariance, `s12 / (1 - phi) - phi lambda1 lambda2`,
    /// at the moment estimates.
    pub s12_star: f64,
}

/// Fails with `DegenerateMargin` when a margin only takes values 0 and 1.
pub fn check_margins(sample: &CountSample) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.pairs.iter().all(|p| p.0 <= 1) {
        return Err(Error::DegenerateMargin { margin: 1 });
    }
    if sample.pairs.iter().all(|p| p.1 <= 1) {
        return Err(Error::DegenerateMargin { margin: 2 });
    }
    Ok(())
}

struct RawMoments {
    xbar: [f64; 2],
    m2: [f64; 2],
    s12: f64,
}

fn raw_moments(sample: &CountSample) -> Result<RawMoments> {
    check_margins(sample)?;
    let n = sample.len();
    if n < 2 {
        return Err(invalid("moment estimation needs at least two pairs"));
    }
    let (mut s1, mut s2, mut q1, mut q2, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b) in &sample.pairs {
        let (a, b) = (a as f64, b as f64);
        s1 += a;
        s2 += b;
        q1 += a * a;
        q2 += b * b;
        c += a * b;
    }
    let nf = n as f64;
    Ok(RawMoments {
        xbar: [s1 / nf, s2 / nf],
        m2: [q1 / nf, q2 / nf],
        s12: (c - s1 * s2 / nf) / (nf - 1.0),
    })
}

/// Root of `bzip_cov(theta) = s12` in `theta`, capped at 0 or 1 when `s12`
/// leaves the range the model can produce. The second value reports the cap.
pub fn mom_theta_root(
    s12: f64,
    lambda1: f64,
    lambda2: f64,
    phi: f64,
    kind: DependenceKind,
    trunc: &TruncationPolicy,
) -> Result<(f64, Option<FitFlag>)> {
    let base = ModelParams::from_bp(BpParams::new(lambda1, lambda2, 0.0, kind)?, phi)?;
    let s = |theta: f64| bzip_cov(&base.with_theta(theta).expect("theta in [0, 1]"), trunc);
    let (s0, s1) = (s(0.0), s(1.0));
    // Orient so that the target is increasing in theta.
    let sign = match kind {
        DependenceKind::Positive => 1.0,
        DependenceKind::Negative => -1.0,
    };
    if sign * (s12 - s0) <= 0.0 {
        return Ok((0.0, Some(FitFlag::ThetaCappedAt0)));
    }
    if sign * (s12 - s1) >= 0.0 {
        return Ok((1.0, Some(FitFlag::ThetaCappedAt1)));
    }
    let root =
        brent_root(|t| s(t) - s12, 0.0, 1.0, THETA_XTOL).expect("bracketed by the cap checks");
    Ok((root, None))
}

/// Moment estimates before capping and the quantities they are built from.
pub fn mom_intermediates(sample: &CountSample) -> Result<(MomIntermediates, [f64; 2], f64)> {
    let raw = raw_moments(sample)?;
    let lambda = [raw.m2[0] / raw.xbar[0] - 1.0, raw.m2[1] / raw.xbar[1] - 1.0];
    let phi_raw = 0.5 * ((1.0 - raw.xbar[0] / lambda[0]) + (1.0 - raw.xbar[1] / lambda[1]));
    let phi = phi_raw.clamp(0.0, PHI_MAX);
    let s12_star = raw.s12 / (1.0 - phi) - phi * lambda[0] * lambda[1];
    Ok((
        MomIntermediates {
            xbar1: raw.xbar[0],
            xbar2: raw.xbar[1],
            m2_1: raw.m2[0],
            m2_2: raw.m2[1],
            s12: raw.s12,
            s12_star,
        },
        lambda,
        phi_raw,
    ))
}

/// Method-of-moments fit.
pub fn mom_fit(
    sample: &CountSample,
    kind: DependenceKind,
    trunc: &TruncationPolicy,
) -> Result<FitResult> {
    let (inter, lambda, phi_raw) = mom_intermediates(sample)?;
    let mut flags = BTreeSet::new();
    if phi_raw < 0.0 {
        flags.insert(FitFlag::PhiClampedAt0);
    }
    let phi = phi_raw.clamp(0.0, PHI_MAX);
    let (theta, cap) = mom_theta_root(inter.s12, lambda[0], lambda[1], phi, kind, trunc)?;
    flags.extend(cap);
    let wrong_sign = match kind {
        DependenceKind::Positive => inter.s12_star < 0.0,
        DependenceKind::Negative => inter.s12_star > 0.0,
    };
    if wrong_sign {
        flags.insert(FitFlag::WrongSignLatentCov);
    }
    let params = ModelParams::new(lambda[0], lambda[1], theta, phi, kind)?;
    Ok(FitResult {
        params,
        method: Method::MoM,
        loglik: loglik(&params, sample),
        converged: true,
        iterations: 0,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    const POS: DependenceKind = DependenceKind::Positive;
    const NEG: DependenceKind = DependenceKind::Negative;

    #[test]
    fn storm_flood_arithmetic() {
        let s = data::storm_flood();
        let (inter, lambda, phi_raw) = mom_intermediates(&s).unwrap();
        assert!((lambda[0] - (111.0 / 81.0 - 1.0)).abs() < 1e-15);
        assert!((lambda[1] - (64.0 / 52.0 - 1.0)).abs() < 1e-15);
        assert!((lambda[0] - 0.370370).abs() < 5e-7);
        assert!((lambda[1] - 0.230769).abs() < 5e-7);
        assert!((phi_raw - 0.614554).abs() < 5e-7);
        assert!((inter.s12 - (43.0 - 81.0 * 52.0 / 576.0) / 575.0).abs() < 1e-15);
        assert!((inter.s12 - 0.0620652).abs() < 5e-8);
        let phi = phi_raw;
        assert!(
            (inter.s12_star - (inter.s12 / (1.0 - phi) - phi * lambda[0] * lambda[1])).abs()
                < 1e-15
        );
    }

    #[test]
    fn degenerate_margin_detected() {
        let s = CountSample::new(vec![(0, 3), (1, 0), (0, 2), (1, 1)]);
        assert_eq!(
            mom_fit(&s, POS, &TruncationPolicy::default()).unwrap_err(),
            Error::DegenerateMargin { margin: 1 }
        );
        let s = CountSample::new(vec![(0, 0), (3, 0), (2, 0)]);
        assert_eq!(
            mom_fit(&s, POS, &TruncationPolicy::default()).unwrap_err(),
            Error::DegenerateMargin { margin: 2 }
        );
        assert_eq!(
            mom_fit(&CountSample::default(), POS, &TruncationPolicy::default()).unwrap_err(),
            Error::EmptySample
        );
    }

    #[test]
    fn theta_root_round_trip() {
        let trunc = TruncationPolicy::default();
        for kind in [POS, NEG] {
            for i in 1..10 {
                let theta = i as f64 / 10.0;
                let m = ModelParams::new(1.0, 2.0, theta, 0.5, kind).unwrap();
                let s12 = bzip_cov(&m, &trunc);
                let (root, cap) = mom_theta_root(s12, 1.0, 2.0, 0.5, kind, &trunc).unwrap();
                assert!((root - theta).abs() < 1e-6, "{kind} {theta} -> {root}");
                assert!(cap.is_none());
            }
        }
    }

    #[test]
    fn theta_root_caps() {
        let trunc = TruncationPolicy::default();
        let top = bzip_cov(&ModelParams::new(1.0, 2.0, 1.0, 0.5, POS).unwrap(), &trunc);
        assert_eq!(
            mom_theta_root(top + 0.1, 1.0, 2.0, 0.5, POS, &trunc).unwrap(),
            (1.0, Some(FitFlag::ThetaCappedAt1))
        );
        let bottom = bzip_cov(&ModelParams::new(1.0, 2.0, 0.0, 0.5, POS).unwrap(), &trunc);
        assert_eq!(
            mom_theta_root(bottom, 1.0, 2.0, 0.5, POS, &trunc)
                .unwrap()
                .0,
            0.0
        );
        assert_eq!(
            mom_theta_root(bottom - 1.0, 1.0, 2.0, 0.5, POS, &trunc).unwrap(),
            (0.0, Some(FitFlag::ThetaCappedAt0))
        );
        let s0 = bzip_cov(&ModelParams::new(1.0, 2.0, 0.0, 0.5, NEG).unwrap(), &trunc);
        assert_eq!(
            mom_theta_root(s0 + 0.1, 1.0, 2.0, 0.5, NEG, &trunc).unwrap(),
            (0.0, Some(FitFlag::ThetaCappedAt0))
        );
        assert_eq!(
            mom_theta_root(-10.0, 1.0, 2.0, 0.5, NEG, &trunc).unwrap(),
            (1.0, Some(FitFlag::ThetaCappedAt1))
        );
    }
}
