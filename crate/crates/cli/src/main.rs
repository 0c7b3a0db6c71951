//! `bivzip` command-line interface.

mod input;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bivzip::asymptotics::asymptotic_variances;
use bivzip::data::summarize;
use bivzip::dist::{bzip_cdf, bzip_corr, bzip_pmf};
use bivzip::estimate::{bootstrap, fit};
use bivzip::simulate::{sample, sample_with_trace};
use bivzip::study::{
    design_grid, run_scenario, summarize as summarize_run, ScenarioReport, ScenarioRun,
    ScenarioSpec,
};
use bivzip::{DependenceKind, FitConfig, Method, ModelParams, TruncationPolicy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::output::{emit_json, fmt_num, fmt_opt, sink};

const DEFAULT_THETAS: [f64; 8] = [0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 0.95];

#[derive(Parser)]
#[command(
    name = "bivzip",
    version,
    about = "Bivariate zero-inflated Poisson models with comonotonic or counter-monotonic shocks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct KindArgs {
    /// Comonotonic (positive) dependence.
    #[arg(long, conflicts_with_all = ["neg", "dependence"])]
    pos: bool,
    /// Counter-monotonic (negative) dependence.
    #[arg(long, conflicts_with = "dependence")]
    neg: bool,
    /// Dependence kind: `pos` or `neg`.
    #[arg(long, value_parser = parse_kind)]
    dependence: Option<DependenceKind>,
}

impl KindArgs {
    fn kind(&self) -> Result<DependenceKind> {
        match (self.pos, self.neg, self.dependence) {
            (true, _, _) => Ok(DependenceKind::Positive),
            (_, true, _) => Ok(DependenceKind::Negative),
            (_, _, Some(k)) => Ok(k),
            _ => Err(anyhow!(
                "dependence kind required: pass --pos, --neg or --dependence pos|neg"
            )),
        }
    }
}

#[derive(Args, Clone)]
struct TruncArgs {
    /// Tail mass tolerated when truncating infinite series.
    #[arg(long, default_value_t = TruncationPolicy::DEFAULT_TAIL_MASS)]
    tail_mass: f64,
}

impl TruncArgs {
    fn policy(&self) -> Result<TruncationPolicy> {
        Ok(TruncationPolicy::new(self.tail_mass)?)
    }

    fn fit_config(&self) -> Result<FitConfig> {
        Ok(FitConfig {
            trunc: self.policy()?,
            ..FitConfig::default()
        })
    }
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[command(flatten)]
    kind: KindArgs,
    #[arg(long)]
    l1: f64,
    #[arg(long)]
    l2: f64,
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    phi: f64,
}

impl ParamArgs {
    fn model(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(
            self.l1,
            self.l2,
            self.theta,
            self.phi,
            self.kind.kind()?,
        )?)
    }
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Evaluation point `x1 x2`.
    #[arg(long, num_args = 2, value_names = ["X1", "X2"], allow_negative_numbers = true, required = true)]
    x: Vec<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    /// The 72-scenario design grid.
    #[value(name = "paper", alias = "design")]
    Design,
    Custom,
}

#[derive(Subcommand)]
enum Command {
    /// Joint probability mass at a point.
    Pmf(PointArgs),
    /// Joint distribution function at a point.
    Cdf(PointArgs),
    /// Correlation of the latent and observable pairs over a grid of phi (CSV).
    CorrCurve {
        #[command(flatten)]
        kind: KindArgs,
        #[arg(long)]
        l1: f64,
        #[arg(long)]
        l2: f64,
        /// Comma-separated shock proportions in (0, 1].
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THETAS)]
        thetas: Vec<f64>,
        #[command(flatten)]
        trunc: TruncArgs,
    },
    /// Draw a sample (CSV with header `x1,x2`).
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the latent columns of every draw.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the model to data (JSON).
    Fit {
        #[command(flatten)]
        kind: KindArgs,
        /// Fixture name or CSV path.
        #[arg(long)]
        data: String,
        /// mom, mle (one-step), mle2 (two-step) or em.
        #[arg(long, value_parser = parse_method, default_value = "mle2")]
        method: Method,
        #[command(flatten)]
        trunc: TruncArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nonparametric bootstrap of a fitter (JSON).
    Bootstrap {
        #[command(flatten)]
        kind: KindArgs,
        #[arg(long)]
        data: String,
        #[arg(long, value_parser = parse_method, default_value = "mle2")]
        method: Method,
        /// Number of bootstrap replications.
        #[arg(long = "B", visible_alias = "replications", default_value_t = 500)]
        b: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        trunc: TruncArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo study; writes one CSV per scenario plus `report.csv`.
    Study {
        #[arg(long, value_enum, default_value = "custom")]
        grid: Grid,
        #[arg(long, default_value_t = 100)]
        replications: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated methods.
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_values = ["mom", "mle1", "mle2", "em"])]
        methods: Vec<Method>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        kind: KindArgs,
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        /// Sample size of the custom scenario.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        trunc: TruncArgs,
    },
    /// Cross-tabulation and marginal moments of a data set (JSON).
    SummarizeData {
        #[arg(long)]
        data: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic variances of the moment estimators (JSON).
    Avar {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        trunc: TruncArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<DependenceKind, String> {
    s.parse().map_err(|e: bivzip::Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: bivzip::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Pmf(a) => {
            let m = a.params.model()?;
            let p = match (u64::try_from(a.x[0]), u64::try_from(a.x[1])) {
                (Ok(x1), Ok(x2)) => bzip_pmf(x1, x2, &m),
                _ => 0.0,
            };
            println!("{}", fmt_num(p));
        }
        Command::Cdf(a) => {
            let m = a.params.model()?;
            println!("{}", fmt_num(bzip_cdf(a.x[0], a.x[1], &m)));
        }
        Command::CorrCurve {
            kind,
            l1,
            l2,
            thetas,
            trunc,
        } => corr_curve(kind.kind()?, l1, l2, &thetas, &trunc.policy()?)?,
        Command::Simulate {
            params,
            n,
            seed,
            trace,
            out,
        } => simulate(&params.model()?, n, seed, trace, out.as_deref())?,
        Command::Fit {
            kind,
            data,
            method,
            trunc,
            out,
        } => {
            let kind = kind.kind()?;
            let d = input::load(&data)?;
            let f = fit(&d.sample, kind, method, &trunc.fit_config()?)?;
            let [l1, l2, theta, phi] = f.estimates();
            emit_json(
                json!({
                    "method": method,
                    "dependence": kind.short_name(),
                    "data": d.source,
                    "n": d.sample.len(),
                    "estimates": {"lambda1": l1, "lambda2": l2, "theta": theta, "phi": phi},
                    "loglik": finite_or_null(f.loglik),
                    "converged": f.converged,
                    "iterations": f.iterations,
                    "flags": f.flags,
                }),
                out.as_deref(),
            )?;
        }
        Command::Bootstrap {
            kind,
            data,
            method,
            b,
            seed,
            trunc,
            out,
        } => {
            let kind = kind.kind()?;
            let d = input::load(&data)?;
            let s = bootstrap(&d.sample, kind, method, b, seed, &trunc.fit_config()?)?;
            let arrays = |k: usize| s.estimates.iter().map(|e| e[k]).collect::<Vec<_>>();
            emit_json(
                json!({
                    "method": method,
                    "dependence": kind.short_name(),
                    "data": d.source,
                    "n": d.sample.len(),
                    "seed": seed,
                    "requested": s.requested,
                    "used": s.used,
                    "summary": {
                        "lambda1": s.lambda1, "lambda2": s.lambda2, "theta": s.theta, "phi": s.phi,
                    },
                    "tallies": s.tallies,
                    "replicates": {
                        "lambda1": arrays(0), "lambda2": arrays(1), "theta": arrays(2), "phi": arrays(3),
                    },
                }),
                out.as_deref(),
            )?;
        }
        Command::Study {
            grid,
            replications,
            seed,
            methods,
            out,
            kind,
            l1,
            l2,
            theta,
            phi,
            n,
            trunc,
        } => {
            let specs = match grid {
                Grid::Design => design_grid(replications, seed, &methods),
                Grid::Custom => {
                    let need = |v: Option<f64>, name: &str| {
                        v.ok_or_else(|| anyhow!("--grid custom requires --{name}"))
                    };
                    vec![ScenarioSpec {
                        lambda1: need(l1, "l1")?,
                        lambda2: need(l2, "l2")?,
                        theta: need(theta, "theta")?,
                        phi: need(phi, "phi")?,
                        kind: kind.kind()?,
                        n: n.ok_or_else(|| anyhow!("--grid custom requires --n"))?,
                        replications,
                        base_seed: seed,
                        methods,
                    }]
                }
            };
            study(&specs, &trunc.fit_config()?, &out)?;
        }
        Command::SummarizeData { data, out } => {
            let d = input::load(&data)?;
            let s = summarize(&d.sample).ok_or_else(|| anyhow!("empty data set"))?;
            emit_json(
                json!({
                    "data": d.source,
                    "labels": d.labels,
                    "n": s.n,
                    "mean": s.mean,
                    "variance": s.variance,
                    "covariance": s.covariance,
                    "zero_pairs": s.zero_pairs,
                    "crosstab": s.crosstab,
                }),
                out.as_deref(),
            )?;
        }
        Command::Avar { params, trunc, out } => {
            let m = params.model()?;
            let v = asymptotic_variances(&m, &trunc.policy()?)?;
            emit_json(
                json!({
                    "dependence": m.kind().short_name(),
                    "params": {"lambda1": params.l1, "lambda2": params.l2, "theta": params.theta, "phi": params.phi},
                    "asymptotic_variances": v,
                }),
                out.as_deref(),
            )?;
        }
    }
    Ok(())
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn corr_curve(
    kind: DependenceKind,
    l1: f64,
    l2: f64,
    thetas: &[f64],
    trunc: &TruncationPolicy,
) -> Result<()> {
    if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        bail!("theta values must lie in (0, 1], got {t}");
    }
    let mut w = csv::Writer::from_writer(sink(None)?);
    w.write_record(["theta", "phi", "corr_t", "corr_x"])?;
    for &theta in thetas {
        for k in 1..=99 {
            let phi = k as f64 / 100.0;
            let c = bzip_corr(&ModelParams::new(l1, l2, theta, phi, kind)?, trunc);
            w.write_record([
                fmt_num(theta),
                fmt_num(phi),
                fmt_num(c.corr_t),
                fmt_num(c.corr_x),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn simulate(m: &ModelParams, n: usize, seed: u64, trace: bool, out: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    if trace {
        w.write_record([
            "x1", "x2", "u", "v1", "v2", "w", "y1", "y2", "z1", "z2", "t1", "t2",
        ])?;
        for d in sample_with_trace(m, n, seed)? {
            let ints = [d.x1, d.x2];
            let mut row: Vec<String> = ints.iter().map(u64::to_string).collect();
            row.extend([d.u, d.v1, d.v2].map(|v| format!("{v:.17}")));
            row.extend([u64::from(d.w), d.y1, d.y2, d.z1, d.z2, d.t1, d.t2].map(|v| v.to_string()));
            w.write_record(row)?;
        }
    } else {
        w.write_record(["x1", "x2"])?;
        for (a, b) in sample(m, n, seed)?.pairs {
            w.write_record([a.to_string(), b.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn study(specs: &[ScenarioSpec], cfg: &FitConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create `{}`", dir.display()))?;
    let mut reports = Vec::with_capacity(specs.len());
    let mut files = Vec::with_capacity(specs.len());
    for spec in specs {
        let run = run_scenario(spec, cfg)?;
        let file = format!("{}.csv", spec.label());
        write_replications(&run, &dir.join(&file))?;
        reports.push(summarize_run(&run));
        files.push(file);
    }
    write_report(&reports, &dir.join("report.csv"))?;
    let scenarios: Vec<_> = reports
        .iter()
        .zip(&files)
        .map(|(r, f)| json!({"label": r.spec.label(), "file": f, "replications": r.replications, "excluded_degenerate": r.excluded_degenerate}))
        .collect();
    emit_json(
        json!({"out": dir.display().to_string(), "report": "report.csv", "scenarios": scenarios}),
        None,
    )
}

fn write_replications(run: &ScenarioRun, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(Some(path))?);
    w.write_record([
        "replication",
        "seed",
        "excluded",
        "method",
        "lambda1",
        "lambda2",
        "theta",
        "phi",
        "converged",
        "flags",
        "error",
    ])?;
    for r in &run.records {
        let head = [
            r.replication.to_string(),
            r.seed.to_string(),
            r.excluded.to_string(),
        ];
        if r.excluded {
            let mut row = head.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 8));
            w.write_record(row)?;
            continue;
        }
        for o in &r.outcomes {
            let mut row = head.to_vec();
            row.push(o.method.to_string());
            match o.estimates {
                Some(e) => row.extend(e.map(fmt_num)),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            row.push(o.converged.to_string());
            row.push(
                o.flags
                    .iter()
                    .map(|f| f.name())
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            row.push(o.error.clone().unwrap_or_default());
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_report(reports: &[ScenarioReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(Some(path))?);
    w.write_record([
        "scenario",
        "dependence",
        "lambda1",
        "lambda2",
        "theta",
        "phi",
        "n",
        "replications",
        "excluded_degenerate",
        "method",
        "parameter",
        "truth",
        "used",
        "mean",
        "bias",
        "sd",
        "rmse",
        "relative_rmse",
        "theta_capped_at_0",
        "theta_capped_at_1",
        "phi_clamped_at_0",
        "wrong_sign_latent_cov",
        "not_converged",
        "failed",
    ])?;
    for r in reports {
        let s = &r.spec;
        for c in &r.cells {
            let a = r.anomalies(c.method).copied().unwrap_or_default();
            let stats = c.stats;
            let mut row = vec![
                s.label(),
                s.kind.to_string(),
                fmt_num(s.lambda1),
                fmt_num(s.lambda2),
                fmt_num(s.theta),
                fmt_num(s.phi),
                s.n.to_string(),
                r.replications.to_string(),
                r.excluded_degenerate.to_string(),
                c.method.to_string(),
                c.parameter.clone(),
                fmt_num(c.truth),
                stats.map_or(0, |st| st.used).to_string(),
            ];
            row.extend([
                fmt_opt(stats.map(|st| st.mean)),
                fmt_opt(stats.map(|st| st.bias)),
                fmt_opt(stats.map(|st| st.sd)),
                fmt_opt(stats.map(|st| st.rmse)),
                fmt_opt(stats.and_then(|st| st.relative_rmse)),
            ]);
            row.extend(
                [
                    a.theta_capped_at_0,
                    a.theta_capped_at_1,
                    a.phi_clamped_at_0,
                    a.wrong_sign_latent_cov,
                    a.not_converged,
                    a.failed,
                ]
                .map(|v| v.to_string()),
            );
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}
