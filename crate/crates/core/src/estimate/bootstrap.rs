use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mom::check_margins;
use super::{fit, FitConfig, FitFlag, FitResult, Method};
use crate::error::{invalid, Error, Result};
use crate::shock::DependenceKind;
use crate::simulate::{rng_from_seed, CountSample};
use crate::util::{mean_sd, quantile_sorted};

/// Mean, standard deviation and 95% percentile interval of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParamSummary {
    fn from_values(values: &[f64]) -> Self {
        let (mean, sd) = mean_sd(values);
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean,
            sd,
            lower: quantile_sorted(&sorted, 0.025),
            upper: quantile_sorted(&sorted, 0.975),
        }
    }
}

/// Counts of replications that hit each anomaly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tallies {
    /// Dropped: a resampled margin only took values 0 and 1.
    pub degenerate_margin: usize,
    /// Dropped: the fitter failed for another reason.
    pub failed: usize,
    pub theta_capped_at_0: usize,
    pub theta_capped_at_1: usize,
    pub phi_clamped_at_0: usize,
    pub wrong_sign_latent_cov: usize,
    pub not_converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub method: Method,
    pub requested: usize,
    pub used: usize,
    pub lambda1: ParamSummary,
    pub lambda2: ParamSummary,
    pub theta: ParamSummary,
    pub phi: ParamSummary,
    pub tallies: Tallies,
    /// Retained replicate estimates `(lambda1, lambda2, theta, phi)`, in
    /// replication order.
    pub estimates: Vec<[f64; 4]>,
}

/// Resampling indices for `b` replications of a size-`n` sample. The stream
/// is separate from the one used for data generation with the same seed.
pub fn resample_indices(n: usize, b: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(1);
    (0..b)
        .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect()
}

/// Nonparametric bootstrap with `b` replications.
pub fn bootstrap(
    sample: &CountSample,
    kind: DependenceKind,
    method: Method,
    b: usize,
    seed: u64,
    cfg: &FitConfig,
) -> Result<BootstrapSummary> {
    if b == 0 {
        return Err(invalid(
            "number of bootstrap replications must be at least 1",
        ));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    bootstrap_with_indices(
        sample,
        kind,
        method,
        &resample_indices(sample.len(), b, seed),
        cfg,
    )
}

/// Bootstrap over caller-supplied resampling indices.
pub fn bootstrap_with_indices(
    sample: &CountSample,
    kind: DependenceKind,
    method: Method,
    indices: &[Vec<usize>],
    cfg: &FitConfig,
) -> Result<BootstrapSummary> {
    if indices.is_empty() {
        return Err(invalid(
            "number of bootstrap replications must be at least 1",
        ));
    }
    if indices.iter().flatten().any(|&i| i >= sample.len()) {
        return Err(invalid("resampling index out of range"));
    }
    let fits: Vec<Result<FitResult>> = indices
        .par_iter()
        .map(|idx| {
            let resampled = CountSample::new(idx.iter().map(|&i| sample.pairs[i]).collect());
            check_margins(&resampled)?;
            fit(&resampled, kind, method, cfg)
        })
        .collect();

    let mut tallies = Tallies::default();
    let mut estimates = Vec::with_capacity(fits.len());
    for r in fits {
        match r {
            Ok(f) => {
                tallies.theta_capped_at_0 += usize::from(f.has(FitFlag::ThetaCappedAt0));
                tallies.theta_capped_at_1 += usize::from(f.has(FitFlag::ThetaCappedAt1));
                tallies.phi_clamped_at_0 += usize::from(f.has(FitFlag::PhiClampedAt0));
                tallies.wrong_sign_latent_cov += usize::from(f.has(FitFlag::WrongSignLatentCov));
                tallies.not_converged += usize::from(!f.converged);
                estimates.push(f.estimates());
            }
            Err(Error::DegenerateMargin { .. }) => tallies.degenerate_margin += 1,
            Err(_) => tallies.failed += 1,
        }
    }
    let column =
        |k: usize| ParamSummary::from_values(&estimates.iter().map(|e| e[k]).collect::<Vec<_>>());
    Ok(BootstrapSummary {
        method,
        requested: indices.len(),
        used: estimates.len(),
        lambda1: column(0),
        lambda2: column(1),
        theta: column(2),
        phi: column(3),
        tallies,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    #[test]
    fn identity_resample_reproduces_point_fit() {
        let s = data::storm_flood();
        let cfg = FitConfig::default();
        let idx = vec![(0..s.len()).collect::<Vec<_>>()];
        let summary =
            bootstrap_with_indices(&s, DependenceKind::Positive, Method::MoM, &idx, &cfg).unwrap();
        let point = fit(&s, DependenceKind::Positive, Method::MoM, &cfg)
            .unwrap()
            .estimates();
        assert_eq!(summary.used, 1);
        for (ps, p) in [summary.lambda1, summary.lambda2, summary.theta, summary.phi]
            .iter()
            .zip(point)
        {
            assert_eq!(ps.mean, p);
            assert_eq!(ps.sd, 0.0);
            assert_eq!((ps.lower, ps.upper), (p, p));
        }
    }

    #[test]
    fn deterministic_and_ordered() {
        let s = data::storm_flood();
        let cfg = FitConfig::default();
        let a = bootstrap(&s, DependenceKind::Positive, Method::MoM, 40, 5, &cfg).unwrap();
        let b = bootstrap(&s, DependenceKind::Positive, Method::MoM, 40, 5, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.used <= a.requested);
        for p in [a.lambda1, a.lambda2, a.theta, a.phi] {
            assert!(p.lower <= p.upper);
        }
        assert_eq!(a.used + a.tallies.degenerate_margin + a.tallies.failed, 40);
    }

    #[test]
    fn rejects_zero_replications() {
        let s = data::storm_flood();
        assert!(bootstrap(
            &s,
            DependenceKind::Positive,
            Method::MoM,
            0,
            1,
            &FitConfig::default()
        )
        .is_err());
    }

    #[test]
    fn bushfire_tallies_recorded() {
        let s = data::bushfire_flood();
        let r = bootstrap(
            &s,
            DependenceKind::Negative,
            Method::MoM,
            200,
            3,
            &FitConfig::default(),
        )
        .unwrap();
        assert!(
            r.tallies.degenerate_margin + r.tallies.theta_capped_at_0 + r.tallies.theta_capped_at_1
                > 0,
            "{:?}",
            r.tallies
        );
    }
}
