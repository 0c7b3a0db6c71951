//! Estimation: method of moments, profile maximum likelihood (one- and
//! two-step), EM (joint or inference-functions-for-margins M-step), and the
//! nonparametric bootstrap.

mod bootstrap;
mod em;
mod likelihood;
mod mle;
mod mom;
pub mod optim;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::shock::{DependenceKind, TruncationPolicy};
use crate::simulate::CountSample;

pub use bootstrap::{
    bootstrap, bootstrap_with_indices, resample_indices, BootstrapSummary, ParamSummary, Tallies,
};
pub use em::{
    dependence_loglik, em_fit, em_fit_multistart, em_fit_with_trace, em_weights, origin_threshold,
    EmConfig, MStep,
};
pub use likelihood::{loglik, profile_phi, PairCounts};
pub use mle::{mle_fit_onestep, mle_fit_twostep};
pub use mom::{check_margins, mom_fit, mom_intermediates, mom_theta_root, MomIntermediates};
pub use optim::OptConfig;

/// Estimates within this distance of 0 or 1 on the open (0, 1) scale count
/// as boundary touches.
pub const BOUNDARY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mom")]
    MoM,
    #[serde(rename = "mle1")]
    Mle1,
    #[serde(rename = "mle2")]
    Mle2,
    #[serde(rename = "em")]
    Em,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MoM, Method::Mle1, Method::Mle2, Method::Em];

    pub fn name(self) -> &'static str {
        match self {
            Self::MoM => "mom",
            Self::Mle1 => "mle1",
            Self::Mle2 => "mle2",
            Self::Em => "em",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mom" => Ok(Self::MoM),
            "mle" | "mle1" => Ok(Self::Mle1),
            "mle2" => Ok(Self::Mle2),
            "em" => Ok(Self::Em),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitFlag {
    #[serde(rename = "theta_capped_at_0")]
    ThetaCappedAt0,
    #[serde(rename = "theta_capped_at_1")]
    ThetaCappedAt1,
    #[serde(rename = "phi_clamped_at_0")]
    PhiClampedAt0,
    #[serde(rename = "degenerate_margin")]
    DegenerateMargin,
    #[serde(rename = "wrong_sign_latent_cov")]
    WrongSignLatentCov,
}

impl FitFlag {
    pub fn name(self) -> &'static str {
        match self {
            Self::ThetaCappedAt0 => "theta_capped_at_0",
            Self::ThetaCappedAt1 => "theta_capped_at_1",
            Self::PhiClampedAt0 => "phi_clamped_at_0",
            Self::DegenerateMargin => "degenerate_margin",
            Self::WrongSignLatentCov => "wrong_sign_latent_cov",
        }
    }
}

impl fmt::Display for FitFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub method: Method,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub flags: BTreeSet<FitFlag>,
}

impl FitResult {
    pub fn has(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// `(lambda1, lambda2, theta, phi)`.
    pub fn estimates(&self) -> [f64; 4] {
        let (l1, l2) = self.params.lambdas();
        [l1, l2, self.params.theta(), self.params.phi]
    }
}

/// Shared settings for every fitter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitConfig {
    pub trunc: TruncationPolicy,
    pub opt: OptConfig,
    pub em: EmConfig,
}

/// Runs one of the four fitters with its default initialization.
pub fn fit(
    sample: &CountSample,
    kind: DependenceKind,
    method: Method,
    cfg: &FitConfig,
) -> Result<FitResult> {
    match method {
        Method::MoM => mom_fit(sample, kind, &cfg.trunc),
        Method::Mle1 => mle_fit_onestep(sample, kind, &cfg.trunc, &cfg.opt),
        Method::Mle2 => mle_fit_twostep(sample, kind, &cfg.trunc, &cfg.opt),
        Method::Em => {
            let init = default_init(sample, kind, &cfg.trunc)?;
            em_fit_multistart(sample, kind, &init, &cfg.trunc, &cfg.em).map(|(fit, _)| fit)
        }
    }
}

/// Starting point shared by the likelihood fitters: the moment estimates
/// for the comonotonic shock, moment margins with `theta = 0.1` for the
/// counter-monotonic one. Falls back to crude margin summaries when the
/// moment estimator is undefined.
pub fn default_init(
    sample: &CountSample,
    kind: DependenceKind,
    trunc: &TruncationPolicy,
) -> Result<ModelParams> {
    const THETA_NEG: f64 = 0.1;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    match mom_fit(sample, kind, trunc) {
        Ok(fit) => {
            let (l1, l2) = fit.params.lambdas();
            let theta = match kind {
                DependenceKind::Positive => fit.params.theta().clamp(0.01, 0.99),
                DependenceKind::Negative => THETA_NEG,
            };
            ModelParams::new(l1, l2, theta, fit.params.phi.clamp(0.0, 0.95), kind)
        }
        Err(_) => {
            let nonzero: Vec<_> = sample.pairs.iter().filter(|&&p| p != (0, 0)).collect();
            if nonzero.is_empty() {
                return Err(Error::NoInformation);
            }
            let k = nonzero.len() as f64;
            let l1 = (nonzero.iter().map(|p| p.0 as f64).sum::<f64>() / k).max(0.05);
            let l2 = (nonzero.iter().map(|p| p.1 as f64).sum::<f64>() / k).max(0.05);
            let phi = (1.0 - k / sample.len() as f64).clamp(0.0, 0.95);
            let theta = match kind {
                DependenceKind::Positive => 0.5,
                DependenceKind::Negative => THETA_NEG,
            };
            ModelParams::new(l1, l2, theta, phi, kind)
        }
    }
}

fn theta_flags(theta: f64, flags: &mut BTreeSet<FitFlag>) {
    if theta <= BOUNDARY_EPS {
        flags.insert(FitFlag::ThetaCappedAt0);
    }
    if theta >= 1.0 - BOUNDARY_EPS {
        flags.insert(FitFlag::ThetaCappedAt1);
    }
}
