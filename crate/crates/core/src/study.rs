//! Monte Carlo study: simulate replications per scenario, run the requested
//! fitters, and summarize bias, spread and RMSE with anomaly accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::estimate::{check_margins, fit, FitConfig, FitFlag, Method};
use crate::shock::DependenceKind;
use crate::simulate::sample;
use crate::util::mean_sd;

pub const PARAM_NAMES: [&str; 4] = ["lambda1", "lambda2", "theta", "phi"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub lambda1: f64,
    pub lambda2: f64,
    pub theta: f64,
    pub phi: f64,
    pub kind: DependenceKind,
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("a scenario needs at least one replication"));
        }
        if self.n < 2 {
            return Err(invalid("a scenario needs n >= 2"));
        }
        if self.methods.is_empty() {
            return Err(invalid("a scenario needs at least one method"));
        }
        self.params().map(|_| ())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.lambda1, self.lambda2, self.theta, self.phi, self.kind)
    }

    pub fn truth(&self) -> [f64; 4] {
        [self.lambda1, self.lambda2, self.theta, self.phi]
    }

    /// Short identifier, also used as a file stem.
    pub fn label(&self) -> String {
        format!(
            "{}_l{}-{}_t{}_p{}_n{}",
            self.kind.short_name(),
            self.lambda1,
            self.lambda2,
            self.theta,
            self.phi,
            self.n
        )
    }
}

/// The 72-scenario design: `n in {100, 500, 1000}`, rates `(1, 2)` and
/// `(5, 10)`, `phi in {0.1, 0.5, 0.9}`, `theta in {0.25, 0.75}`, both kinds.
pub fn design_grid(replications: usize, base_seed: u64, methods: &[Method]) -> Vec<ScenarioSpec> {
    let mut out = Vec::with_capacity(72);
    for kind in [DependenceKind::Positive, DependenceKind::Negative] {
        for (lambda1, lambda2) in [(1.0, 2.0), (5.0, 10.0)] {
            for theta in [0.25, 0.75] {
                for phi in [0.1, 0.5, 0.9] {
                    for n in [100, 500, 1000] {
                        out.push(ScenarioSpec {
                            lambda1,
                            lambda2,
                            theta,
                            phi,
                            kind,
                            n,
                            replications,
                            base_seed,
                            methods: methods.to_vec(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// One method's outcome on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimates: Option<[f64; 4]>,
    pub converged: bool,
    pub flags: Vec<FitFlag>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    /// A margin of the simulated sample only took values 0 and 1; the
    /// replication is left out of every method's summary.
    pub excluded: bool,
    pub outcomes: Vec<MethodOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub records: Vec<ReplicationRecord>,
}

/// Replication `r` (1-based) is simulated with seed `base_seed ^ r`.
pub fn run_scenario(spec: &ScenarioSpec, cfg: &FitConfig) -> Result<ScenarioRun> {
    spec.validate()?;
    let m = spec.params()?;
    let records = (1..=spec.replications)
        .into_par_iter()
        .map(|r| {
            let seed = spec.base_seed ^ r as u64;
            let data = sample(&m, spec.n, seed).expect("n >= 2 checked");
            if let Err(Error::DegenerateMargin { .. }) = check_margins(&data) {
                return ReplicationRecord {
                    replication: r,
                    seed,
                    excluded: true,
                    outcomes: Vec::new(),
                };
            }
            let outcomes = spec
                .methods
                .iter()
                .map(|&method| match fit(&data, spec.kind, method, cfg) {
                    Ok(f) => MethodOutcome {
                        method,
                        estimates: Some(f.estimates()),
                        converged: f.converged,
                        flags: f.flags.iter().copied().collect(),
                        error: None,
                    },
                    Err(e) => MethodOutcome {
                        method,
                        estimates: None,
                        converged: false,
                        flags: Vec::new(),
                        error: Some(e.to_string()),
                    },
                })
                .collect();
            ReplicationRecord {
                replication: r,
                seed,
                excluded: false,
                outcomes,
            }
        })
        .collect();
    Ok(ScenarioRun {
        spec: spec.clone(),
        records,
    })
}

/// Summary of one parameter under one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub bias: f64,
    /// Standard deviation with divisor `R - 1` (0 for a single replication).
    pub sd: f64,
    pub rmse: f64,
    /// `RMSE(MoM) / RMSE(method)`, when MoM was run.
    pub relative_rmse: Option<f64>,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub parameter: String,
    pub truth: f64,
    /// `None` when no replication was usable.
    pub stats: Option<CellStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnomalyCounts {
    pub theta_capped_at_0: usize,
    pub theta_capped_at_1: usize,
    pub phi_clamped_at_0: usize,
    pub wrong_sign_latent_cov: usize,
    pub not_converged: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub spec: ScenarioSpec,
    pub replications: usize,
    pub excluded_degenerate: usize,
    pub cells: Vec<Cell>,
    pub anomalies: Vec<(Method, AnomalyCounts)>,
}

impl ScenarioReport {
    pub fn cell(&self, method: Method, parameter: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.parameter == parameter)
    }

    pub fn anomalies(&self, method: Method) -> Option<&AnomalyCounts> {
        self.anomalies
            .iter()
            .find(|(m, _)| *m == method)
            .map(|(_, a)| a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenarios: Vec<ScenarioReport>,
}

fn estimates_for(run: &ScenarioRun, method: Method) -> Vec<[f64; 4]> {
    run.records
        .iter()
        .filter(|r| !r.excluded)
        .filter_map(|r| {
            r.outcomes
                .iter()
                .find(|o| o.method == method)
                .and_then(|o| o.estimates)
        })
        .collect()
}

fn rmse(values: &[f64], truth: f64) -> f64 {
    (values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn summarize(run: &ScenarioRun) -> ScenarioReport {
    let truth = run.spec.truth();
    let mom = run
        .spec
        .methods
        .contains(&Method::MoM)
        .then(|| estimates_for(run, Method::MoM));
    let mut cells = Vec::new();
    let mut anomalies = Vec::new();
    for &method in &run.spec.methods {
        let est = estimates_for(run, method);
        for (k, &name) in PARAM_NAMES.iter().enumerate() {
            let values: Vec<f64> = est.iter().map(|e| e[k]).collect();
            let stats = (!values.is_empty()).then(|| {
                let (mean, sd) = mean_sd(&values);
                let err = rmse(&values, truth[k]);
                let relative_rmse = mom
                    .as_ref()
                    .filter(|m| !m.is_empty())
                    .map(|m| rmse(&m.iter().map(|e| e[k]).collect::<Vec<_>>(), truth[k]) / err);
                CellStats {
                    mean,
                    bias: mean - truth[k],
                    sd,
                    rmse: err,
                    relative_rmse,
                    used: values.len(),
                }
            });
            cells.push(Cell {
                method,
                parameter: name.to_string(),
                truth: truth[k],
                stats,
            });
        }
        let mut a = AnomalyCounts::default();
        for o in run
            .records
            .iter()
            .filter(|r| !r.excluded)
            .flat_map(|r| &r.outcomes)
            .filter(|o| o.method == method)
        {
            let has = |f: FitFlag| usize::from(o.flags.contains(&f));
            a.theta_capped_at_0 += has(FitFlag::ThetaCappedAt0);
            a.theta_capped_at_1 += has(FitFlag::ThetaCappedAt1);
            a.phi_clamped_at_0 += has(FitFlag::PhiClampedAt0);
            a.wrong_sign_latent_cov += has(FitFlag::WrongSignLatentCov);
            a.failed += usize::from(o.error.is_some());
            a.not_converged += usize::from(o.error.is_none() && !o.converged);
        }
        anomalies.push((method, a));
    }
    ScenarioReport {
        spec: run.spec.clone(),
        replications: run.records.len(),
        excluded_degenerate: run.records.iter().filter(|r| r.excluded).count(),
        cells,
        anomalies,
    }
}

/// Runs and summarizes every scenario in order.
pub fn run_study(
    specs: &[ScenarioSpec],
    cfg: &FitConfig,
) -> Result<(Vec<ScenarioRun>, StudyReport)> {
    let runs = specs
        .iter()
        .map(|s| run_scenario(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let scenarios = runs.iter().map(summarize).collect();
    Ok((runs, StudyReport { scenarios }))
}
