//! Acceptance suite: nine criteria, one PASS/FAIL line each.
//!
//! Built without the libtest harness (`cargo test -p bivzip --test
//! acceptance`); exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bivzip::asymptotics::{asymptotic_variances, avar_phi, cov_slope, zip_var_square};
use bivzip::data::{bushfire_flood, storm_flood};
use bivzip::dist::{bzip_cdf, bzip_corr, bzip_cov, bzip_pmf, frechet_bounds, pqd_grid_check};
use bivzip::estimate::{
    default_init, em_fit_multistart, fit, mle_fit_twostep, EmConfig, FitFlag, MStep, Method,
    OptConfig,
};
use bivzip::simulate::sample;
use bivzip::study::{run_scenario, summarize, ScenarioReport, ScenarioSpec};
use bivzip::{DependenceKind, FitConfig, ModelParams, TruncationPolicy, ZipMarginal};
use rayon::prelude::*;

const POS: DependenceKind = DependenceKind::Positive;
const NEG: DependenceKind = DependenceKind::Negative;
const KINDS: [DependenceKind; 2] = [POS, NEG];
const RATES: [(f64, f64); 2] = [(1.0, 2.0), (5.0, 10.0)];
const THETAS: [f64; 2] = [0.25, 0.75];
const PHIS: [f64; 3] = [0.1, 0.5, 0.9];

// Criterion 1
const NORMALIZATION_TOL: f64 = 1e-8;
const MARGIN_TOL: f64 = 1e-8;
const CDF_TOL: f64 = 1e-9;
const COV_TOL: f64 = 1e-6;
const C1_RUNTIME: Duration = Duration::from_secs(60);
// Criterion 2
const CLOSED_FORM_TOL: f64 = 1e-6;
const FRECHET_TOL: f64 = 1e-9;
const GRID: usize = 15;
// Criterion 4
const SAMPLER_N: usize = 200_000;
const PMF_DEV_TOL: f64 = 0.005;
const CORR_DEV_TOL: f64 = 0.01;
const C4_RUNTIME: Duration = Duration::from_secs(120);
// Criterion 5
const CONSISTENCY_N: usize = 100_000;
const RATE_REL_TOL: f64 = 0.05;
const THETA_ABS_TOL: f64 = 0.05;
const PHI_ABS_TOL: f64 = 0.03;
// Criterion 6
const MOM_DIGITS_TOL: f64 = 5e-7;
const TABLE_MLE_TOL: f64 = 0.10;
const TABLE_NEG_THETA_TOL: f64 = 0.15;
// Criterion 7
const ASCENT_SLACK: f64 = 1e-10;
const EM_MLE_TOL: f64 = 1e-2;
const EM_CENTER_TOL: f64 = 0.15;
// Criterion 8
const AVAR_PHI_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-6;
const AVAR_REPS: usize = 2000;
const AVAR_N: usize = 5000;
const AVAR_RATIO: (f64, f64) = (0.7, 1.3);
/// Scenarios whose MoM theta hits a cap this often are not interior.
const MAX_CAP_RATE: f64 = 0.01;
/// Relative change of the covariance slope across `theta +- 2 sd` above
/// which the moment map is treated as non-smooth near the truth.
const KINK_TOL: f64 = 0.25;
// Criterion 9
const STUDY_R: usize = 100;
const STUDY_RUNTIME: Duration = Duration::from_secs(30 * 60);

fn mp(l1: f64, l2: f64, theta: f64, phi: f64, kind: DependenceKind) -> ModelParams {
    ModelParams::new(l1, l2, theta, phi, kind).unwrap()
}

fn combos() -> Vec<(f64, f64, f64, DependenceKind)> {
    let mut out = Vec::new();
    for kind in KINDS {
        for (l1, l2) in RATES {
            for theta in THETAS {
                out.push((l1, l2, theta, kind));
            }
        }
    }
    out
}

fn grid24() -> Vec<ModelParams> {
    combos()
        .into_iter()
        .flat_map(|(l1, l2, t, k)| PHIS.map(|phi| mp(l1, l2, t, phi, k)))
        .collect()
}

fn label(m: &ModelParams) -> String {
    let (l1, l2) = m.lambdas();
    format!("{} ({l1},{l2}) theta={} phi={}", m.kind(), m.theta(), m.phi)
}

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }
}

fn c1_distribution() -> Outcome {
    let start = Instant::now();
    let trunc = TruncationPolicy::default();
    let (mut norm, mut margin, mut cdf, mut cov) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for m in grid24() {
        let table = m.pmf_table(&trunc);
        let (n1, n2) = table.dims();
        let mut total = 0.0;
        let mut row = vec![0.0; n1];
        let mut col = vec![0.0; n2];
        let (mut e1, mut e2, mut e12) = (0.0, 0.0, 0.0);
        for i in 0..n1 {
            for j in 0..n2 {
                let p = table.get(i, j);
                total += p;
                row[i] += p;
                col[j] += p;
                e1 += i as f64 * p;
                e2 += j as f64 * p;
                e12 += (i * j) as f64 * p;
            }
        }
        norm = norm.max((1.0 - total).abs());
        let (l1, l2) = m.lambdas();
        let (z1, z2) = (
            ZipMarginal::new(l1, m.phi).unwrap(),
            ZipMarginal::new(l2, m.phi).unwrap(),
        );
        for (i, r) in row.iter().enumerate() {
            margin = margin.max((r - z1.pmf(i as u64)).abs());
        }
        for (j, c) in col.iter().enumerate() {
            margin = margin.max((c - z2.pmf(j as u64)).abs());
        }
        let k = 12usize;
        let mut acc = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                let p = bzip_pmf(i as u64, j as u64, &m);
                acc[i][j] = p
                    + if i > 0 { acc[i - 1][j] } else { 0.0 }
                    + if j > 0 { acc[i][j - 1] } else { 0.0 }
                    - if i > 0 && j > 0 {
                        acc[i - 1][j - 1]
                    } else {
                        0.0
                    };
                cdf = cdf.max((bzip_cdf(i as i64, j as i64, &m) - acc[i][j]).abs());
            }
        }
        cov = cov.max((bzip_cov(&m, &trunc) - (e12 - e1 * e2)).abs());
    }
    let elapsed = start.elapsed();
    let pass = norm <= NORMALIZATION_TOL
        && margin <= MARGIN_TOL
        && cdf <= CDF_TOL
        && cov <= COV_TOL
        && elapsed < C1_RUNTIME;
    Outcome::new(
        pass,
        format!(
            "24 models: |1-sum pmf| {norm:.1e}, margin dev {margin:.1e}, cdf dev {cdf:.1e}, cov dev {cov:.1e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_closed_forms() -> Outcome {
    let trunc = TruncationPolicy::default();
    let mut indep = 0.0f64;
    let mut equal = 0.0f64;
    let zip_var = |l: f64, phi: f64| (1.0 - phi) * l * (1.0 + phi * l);
    for kind in KINDS {
        for (l1, l2) in [(1.0, 2.0), (5.0, 10.0), (0.5, 3.0)] {
            for phi in PHIS {
                let m = mp(l1, l2, 0.0, phi, kind);
                let series = bzip_cov(&m, &trunc) / (zip_var(l1, phi) * zip_var(l2, phi)).sqrt();
                let closed = phi * (l1 * l2).sqrt() / ((1.0 + phi * l1) * (1.0 + phi * l2)).sqrt();
                indep = indep.max((series - closed).abs());
            }
        }
    }
    for lambda in [0.5, 1.0, 3.0, 7.0] {
        for theta in [0.1, 0.25, 0.5, 0.75, 1.0] {
            for phi in PHIS {
                let m = mp(lambda, lambda, theta, phi, POS);
                let series = bzip_cov(&m, &trunc) / zip_var(lambda, phi);
                equal = equal.max((series - (theta + phi * lambda) / (1.0 + phi * lambda)).abs());
                equal = equal.max((bzip_corr(&m, &trunc).corr_x - series).abs());
            }
        }
    }
    let mut frechet = 0.0f64;
    for (l1, l2) in [(1.0, 2.0), (5.0, 10.0), (3.0, 3.0)] {
        for phi in [0.0, 0.1, 0.5, 0.9] {
            let m = mp(l1, l2, 1.0, phi, POS);
            for i in 0..GRID as i64 {
                for j in 0..GRID as i64 {
                    let b = frechet_bounds(i, j, l1, l2, phi).unwrap();
                    frechet = frechet.max((bzip_cdf(i, j, &m) - b.upper).abs());
                }
            }
        }
    }
    let pass = indep <= CLOSED_FORM_TOL && equal <= CLOSED_FORM_TOL && frechet <= FRECHET_TOL;
    Outcome::new(
        pass,
        format!("theta=0 corr dev {indep:.1e}; equal-rate corr dev {equal:.1e}; theta=1 vs upper bound {frechet:.1e}"),
    )
}

fn c3_pqd() -> Outcome {
    let thetas: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut checked = 0;
    let mut failures = Vec::new();
    for kind in KINDS {
        for (a, &lo) in thetas.iter().enumerate() {
            for &hi in &thetas[a + 1..] {
                checked += 1;
                if !pqd_grid_check(
                    &mp(1.0, 2.0, lo, 0.5, kind),
                    &mp(1.0, 2.0, hi, 0.5, kind),
                    GRID,
                )
                .unwrap()
                {
                    failures.push(format!("{kind} {lo}<{hi}"));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("{checked} ordered pairs checked, failures: {failures:?}"),
    )
}

fn c4_sampler() -> Outcome {
    let start = Instant::now();
    let trunc = TruncationPolicy::default();
    let models: Vec<ModelParams> = combos()
        .into_iter()
        .flat_map(|(l1, l2, t, k)| [0.1, 0.5].map(|phi| mp(l1, l2, t, phi, k)))
        .collect();
    let results: Vec<(f64, f64)> = models
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let s = sample(m, SAMPLER_N, 4_000 + i as u64).unwrap();
            let mut counts = [[0usize; 10]; 10];
            let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(a, b) in &s.pairs {
                if a < 10 && b < 10 {
                    counts[a as usize][b as usize] += 1;
                }
                let (x, y) = (a as f64, b as f64);
                s1 += x;
                s2 += y;
                s11 += x * x;
                s22 += y * y;
                s12 += x * y;
            }
            let n = SAMPLER_N as f64;
            let mut dev = 0.0f64;
            for (a, row) in counts.iter().enumerate() {
                for (b, &c) in row.iter().enumerate() {
                    dev = dev.max((c as f64 / n - bzip_pmf(a as u64, b as u64, m)).abs());
                }
            }
            let (m1, m2) = (s1 / n, s2 / n);
            let corr = (s12 / n - m1 * m2) / ((s11 / n - m1 * m1) * (s22 / n - m2 * m2)).sqrt();
            (dev, (corr - bzip_corr(m, &trunc).corr_x).abs())
        })
        .collect();
    let pmf_dev = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let corr_dev = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    Outcome::new(
        pmf_dev < PMF_DEV_TOL && corr_dev < CORR_DEV_TOL && elapsed < C4_RUNTIME,
        format!("16 models x n={SAMPLER_N}: max pmf dev {pmf_dev:.4}, max corr dev {corr_dev:.4}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn c5_consistency() -> Outcome {
    let cfg = FitConfig::default();
    let models = grid24();
    let rows: Vec<(String, Method, [f64; 4])> = models
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, m)| {
            let s = sample(m, CONSISTENCY_N, 5_000 + i as u64).unwrap();
            let (l1, l2) = m.lambdas();
            [Method::MoM, Method::Mle2].map(|method| {
                let e = fit(&s, m.kind(), method, &cfg).unwrap().estimates();
                let err = [
                    (e[0] - l1).abs() / l1,
                    (e[1] - l2).abs() / l2,
                    (e[2] - m.theta()).abs(),
                    (e[3] - m.phi).abs(),
                ];
                (label(m), method, err)
            })
        })
        .collect();
    let worst = rows
        .iter()
        .fold([0.0f64; 4], |w, r| [0, 1, 2, 3].map(|k| w[k].max(r.2[k])));
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| {
            r.2[0] > RATE_REL_TOL
                || r.2[1] > RATE_REL_TOL
                || r.2[2] > THETA_ABS_TOL
                || r.2[3] > PHI_ABS_TOL
        })
        .map(|r| format!("{} {}", r.0, r.1))
        .collect();
    Outcome::new(
        failed.is_empty(),
        format!(
            "24 models x {{MoM, MLE2}}, n={CONSISTENCY_N}: worst rel l1 {:.4}, rel l2 {:.4}, |theta| {:.4}, |phi| {:.4}; failures {failed:?}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c6_real_data() -> Outcome {
    let cfg = FitConfig::default();
    let storm = storm_flood();
    let mom = fit(&storm, POS, Method::MoM, &cfg).unwrap().estimates();
    let mom_ok = (mom[0] - 0.370370).abs() < MOM_DIGITS_TOL
        && (mom[1] - 0.230769).abs() < MOM_DIGITS_TOL
        && (mom[3] - 0.614554).abs() < MOM_DIGITS_TOL;
    let mle = fit(&storm, POS, Method::Mle2, &cfg).unwrap().estimates();
    let table = [0.3248, 0.2112, 0.4484, 0.5470];
    let mle_ok = mle
        .iter()
        .zip(table)
        .all(|(e, t)| (e - t).abs() <= TABLE_MLE_TOL);
    let neg = fit(&bushfire_flood(), NEG, Method::Mle2, &cfg)
        .unwrap()
        .estimates();
    let neg_ok =
        (neg[2] - 0.9082).abs() <= TABLE_NEG_THETA_TOL && (neg[3] - 0.6654).abs() <= TABLE_MLE_TOL;
    Outcome::new(
        mom_ok && mle_ok && neg_ok,
        format!(
            "storm MoM ({:.6}, {:.6}, phi {:.6}); storm MLE2 ({:.4}, {:.4}, {:.4}, {:.4}); bushfire MLE2 theta {:.4}, phi {:.4}",
            mom[0], mom[1], mom[3], mle[0], mle[1], mle[2], mle[3], neg[2], neg[3]
        ),
    )
}

fn c7_em() -> Outcome {
    let trunc = TruncationPolicy::default();
    let opt = OptConfig::default();
    let models: Vec<ModelParams> = combos()
        .into_iter()
        .map(|(l1, l2, t, k)| mp(l1, l2, t, 0.5, k))
        .collect();
    let rows: Vec<(f64, f64, f64)> = models
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let s = sample(m, 2000, 7_000 + i as u64).unwrap();
            let init = default_init(&s, m.kind(), &trunc).unwrap();
            let ascent = |cfg: &EmConfig| {
                let (fit, trace) = em_fit_multistart(&s, m.kind(), &init, &trunc, cfg).unwrap();
                let worst = trace
                    .windows(2)
                    .map(|w| w[0] - w[1])
                    .fold(f64::NEG_INFINITY, f64::max);
                (fit, worst)
            };
            let (em, drop_joint) = ascent(&EmConfig::default());
            let (_, drop_ifm) = ascent(&EmConfig {
                m_step: MStep::Ifm,
                ..EmConfig::default()
            });
            let mle = mle_fit_twostep(&s, m.kind(), &trunc, &opt).unwrap();
            let diff = em
                .estimates()
                .iter()
                .zip(mle.estimates())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (drop_joint, diff, drop_ifm)
        })
        .collect();
    let worst_drop = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_diff = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let ifm_drop = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);

    let mut centers = Vec::new();
    let mut center_ok = true;
    for kind in KINDS {
        let m = mp(5.0, 10.0, 0.25, 0.5, kind);
        let ests: Vec<[f64; 4]> = (1..=20u64)
            .into_par_iter()
            .map(|r| {
                let s = sample(&m, 1000, 8_000 ^ r).unwrap();
                let init = default_init(&s, kind, &trunc).unwrap();
                em_fit_multistart(&s, kind, &init, &trunc, &EmConfig::default())
                    .unwrap()
                    .0
                    .estimates()
            })
            .collect();
        let truth = [5.0, 10.0, 0.25, 0.5];
        let mean: Vec<f64> = (0..4)
            .map(|k| ests.iter().map(|e| e[k]).sum::<f64>() / ests.len() as f64)
            .collect();
        center_ok &= mean
            .iter()
            .zip(truth)
            .all(|(a, t)| (a - t).abs() <= EM_CENTER_TOL);
        centers.push(format!(
            "{kind} mean ({:.3}, {:.3}, {:.3}, {:.3})",
            mean[0], mean[1], mean[2], mean[3]
        ));
    }
    let mut out = Outcome::new(
        worst_drop <= ASCENT_SLACK && worst_diff <= EM_MLE_TOL && center_ok,
        format!(
            "largest log-lik decrease {worst_drop:.1e}; max |EM - MLE2| {worst_diff:.1e} over 8 models at n=2000; 20-rep {}",
            centers.join(", ")
        ),
    );
    out.notes.push(format!(
        "info: IFM M-step largest log-lik decrease {ifm_drop:.1e} (not monotone; not the default)"
    ));
    out
}

/// ZIP fourth-moment oracle: `var(X^2)` by direct summation.
fn zip_var_square_oracle(lambda: f64, phi: f64) -> f64 {
    let z = ZipMarginal::new(lambda, phi).unwrap();
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in 0..400u64 {
        let p = z.pmf(x);
        let xf = x as f64;
        m2 += p * xf * xf;
        m4 += p * xf.powi(4);
    }
    m4 - m2 * m2
}

/// The alternative display, `(1-phi){phi l^4 + 2(2+phi) l^3 + (8+phi) l^2 + l}`.
fn zip_var_square_alt(lambda: f64, phi: f64) -> f64 {
    (1.0 - phi)
        * (phi * lambda.powi(4)
            + 2.0 * (2.0 + phi) * lambda.powi(3)
            + (8.0 + phi) * lambda * lambda
            + lambda)
}

struct AvarRow {
    label: String,
    ratios: [f64; 4],
    cap_rate: f64,
    kink: f64,
}

fn avar_row(m: &ModelParams, seed: u64) -> AvarRow {
    let trunc = TruncationPolicy::default();
    let fits: Vec<(bool, [f64; 4])> = (0..AVAR_REPS as u64)
        .into_par_iter()
        .filter_map(|r| {
            let s = sample(m, AVAR_N, seed ^ (r + 1)).unwrap();
            let f = fit(&s, m.kind(), Method::MoM, &FitConfig::default()).ok()?;
            Some((
                f.has(FitFlag::ThetaCappedAt0) || f.has(FitFlag::ThetaCappedAt1),
                f.estimates(),
            ))
        })
        .collect();
    let cap_rate = fits.iter().filter(|f| f.0).count() as f64 / AVAR_REPS as f64;
    let av = asymptotic_variances(m, &trunc).unwrap();
    let theory = [
        av.var_lambda1,
        av.var_lambda2,
        av.var_theta.unwrap_or(f64::NAN),
        av.var_phi,
    ];
    let ratios = [0, 1, 2, 3].map(|k| {
        let v: Vec<f64> = fits.iter().map(|f| f.1[k]).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
        theory[k] / (AVAR_N as f64 * var)
    });
    let sd = (theory[2] / AVAR_N as f64).sqrt();
    let slope_at =
        |t: f64| cov_slope(&m.with_theta(t.clamp(1e-3, 1.0 - 1e-3)).unwrap(), &trunc).unwrap();
    let (lo, hi) = (
        slope_at(m.theta() - 2.0 * sd),
        slope_at(m.theta() + 2.0 * sd),
    );
    let kink = (lo - hi).abs() / lo.abs().max(hi.abs());
    AvarRow {
        label: label(m),
        ratios,
        cap_rate,
        kink,
    }
}

fn c8_asymptotics() -> Outcome {
    let trunc = TruncationPolicy::default();
    let mut phi_dev = 0.0f64;
    for kind in KINDS {
        for (l1, l2) in [(1.0, 2.0), (5.0, 10.0), (2.0, 2.0)] {
            for phi in PHIS {
                let closed = (1.0 - phi) * (0.5 / (l1 * l1) + 0.5 / (l2 * l2) + phi);
                phi_dev =
                    phi_dev.max((avar_phi(&mp(l1, l2, 0.0, phi, kind), &trunc) - closed).abs());
            }
        }
    }
    let (mut shipped_dev, mut alt_dev) = (0.0f64, 0.0f64);
    for lambda in [0.5, 1.0, 2.0, 5.0, 10.0] {
        for phi in PHIS {
            let oracle = zip_var_square_oracle(lambda, phi);
            shipped_dev = shipped_dev.max((zip_var_square(lambda, phi) - oracle).abs() / oracle);
            alt_dev = alt_dev.max((zip_var_square_alt(lambda, phi) - oracle).abs() / oracle);
        }
    }
    let discrepancy_resolved = shipped_dev <= ORACLE_TOL && alt_dev > ORACLE_TOL;

    let rows: Vec<AvarRow> = grid24()
        .iter()
        .enumerate()
        .map(|(i, m)| avar_row(m, 9_000 + 1_000 * i as u64))
        .collect();
    let mut notes = Vec::new();
    let mut scored = 0;
    let mut failed = Vec::new();
    for r in &rows {
        let interior = r.cap_rate < MAX_CAP_RATE && r.kink <= KINK_TOL;
        let ok = r
            .ratios
            .iter()
            .all(|x| (AVAR_RATIO.0..=AVAR_RATIO.1).contains(x));
        let text = format!(
            "{}: ratios l1 {:.3} l2 {:.3} theta {:.3} phi {:.3} (cap rate {:.3}, slope change {:.2})",
            r.label, r.ratios[0], r.ratios[1], r.ratios[2], r.ratios[3], r.cap_rate, r.kink
        );
        if interior {
            scored += 1;
            if !ok {
                failed.push(r.label.clone());
            }
            notes.push(format!(
                "scored {text}{}",
                if ok { "" } else { "  <-- outside band" }
            ));
        } else {
            notes.push(format!("info   {text} (not interior)"));
        }
    }
    let mut out = Outcome::new(
        phi_dev <= AVAR_PHI_TOL && discrepancy_resolved && scored > 0 && failed.is_empty(),
        format!(
            "theta=0 phi closed form dev {phi_dev:.1e}; var(X^2): shipped form rel dev {shipped_dev:.1e}, \
             alternative display rel dev {alt_dev:.1e}; {scored} interior scenarios scored, outside [{}, {}]: {failed:?}",
            AVAR_RATIO.0, AVAR_RATIO.1
        ),
    );
    out.notes = notes;
    out
}

fn study(
    l1: f64,
    l2: f64,
    theta: f64,
    phi: f64,
    kind: DependenceKind,
    n: usize,
    methods: &[Method],
) -> ScenarioReport {
    let spec = ScenarioSpec {
        lambda1: l1,
        lambda2: l2,
        theta,
        phi,
        kind,
        n,
        replications: STUDY_R,
        base_seed: 20_240_501,
        methods: methods.to_vec(),
    };
    summarize(&run_scenario(&spec, &FitConfig::default()).unwrap())
}

fn c9_study() -> Outcome {
    let start = Instant::now();
    let pair = [Method::MoM, Method::Mle2];
    let mut notes = Vec::new();
    let sd = |r: &ScenarioReport, p: &str| {
        r.cell(Method::Mle2, p)
            .and_then(|c| c.stats)
            .map_or(f64::NAN, |s| s.sd)
    };
    let mut trend_ok = true;
    let mut rel_hits = 0;
    let mut rel_total = 0;
    for (l1, l2) in RATES {
        for theta in THETAS {
            let reports: Vec<ScenarioReport> = PHIS
                .iter()
                .map(|&phi| study(l1, l2, theta, phi, POS, 500, &pair))
                .collect();
            let l1_sd: Vec<f64> = reports.iter().map(|r| sd(r, "lambda1")).collect();
            let th_sd: Vec<f64> = reports.iter().map(|r| sd(r, "theta")).collect();
            let up = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
            trend_ok &= up(&l1_sd) && up(&th_sd);
            notes.push(format!(
                "pos ({l1},{l2}) theta={theta} n=500 MLE2 sd over phi 0.1/0.5/0.9: lambda1 {:.4}/{:.4}/{:.4}, theta {:.4}/{:.4}/{:.4}",
                l1_sd[0], l1_sd[1], l1_sd[2], th_sd[0], th_sd[1], th_sd[2]
            ));
            let mid = &reports[1];
            let rel = |p: &str| {
                mid.cell(Method::Mle2, p)
                    .and_then(|c| c.stats)
                    .and_then(|s| s.relative_rmse)
                    .unwrap_or(f64::NAN)
            };
            let (rt, rp) = (rel("theta"), rel("phi"));
            rel_total += 1;
            if rt >= 1.0 && rp >= 1.0 {
                rel_hits += 1;
            }
            notes.push(format!("pos ({l1},{l2}) theta={theta} phi=0.5 n=500 relative RMSE MoM/MLE2: theta {rt:.3}, phi {rp:.3}"));
        }
    }
    let (mut excluded, mut caps, mut clamps_cell) = (0, 0, 0);
    for kind in KINDS {
        for theta in THETAS {
            let r = study(1.0, 2.0, theta, 0.9, kind, 100, &Method::ALL);
            excluded += r.excluded_degenerate;
            for (method, a) in &r.anomalies {
                caps += a.theta_capped_at_0 + a.theta_capped_at_1;
                clamps_cell += a.phi_clamped_at_0;
                notes.push(format!(
                    "{kind} (1,2) theta={theta} phi=0.9 n=100 {method}: excluded {}, theta caps {}/{}, phi clamps {}, not converged {}",
                    r.excluded_degenerate, a.theta_capped_at_0, a.theta_capped_at_1, a.phi_clamped_at_0, a.not_converged
                ));
            }
        }
    }
    // Negative inflation estimates arise where both phi and the rates are
    // small; the phi clamp counter is exercised in that cell.
    let mut clamps_small_phi = 0;
    for kind in KINDS {
        for theta in THETAS {
            let r = study(1.0, 2.0, theta, 0.1, kind, 100, &pair);
            clamps_small_phi += r
                .anomalies
                .iter()
                .map(|(_, a)| a.phi_clamped_at_0)
                .sum::<usize>();
        }
    }
    notes.push(format!("phi clamps: {clamps_cell} in the phi=0.9 n=100 cell, {clamps_small_phi} in the phi=0.1 n=100 cell"));
    let elapsed = start.elapsed();
    let mut out = Outcome::new(
        trend_ok && rel_hits >= 3 && excluded > 0 && caps > 0 && clamps_small_phi > 0 && elapsed < STUDY_RUNTIME,
        format!(
            "R={STUDY_R}: sd increasing in phi: {trend_ok}; relative RMSE >= 1 for theta and phi in {rel_hits}/{rel_total}; \
             (1,2) phi=0.9 n=100 cell: {excluded} degenerate exclusions, {caps} theta caps; {clamps_small_phi} phi clamps at phi=0.1; {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
    out.notes = notes;
    out
}

/// Runs without the libtest harness so the report is never captured.
fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("distribution correctness", c1_distribution),
        ("closed-form anchors", c2_closed_forms),
        ("PQD ordering", c3_pqd),
        ("sampler fidelity", c4_sampler),
        ("estimator consistency", c5_consistency),
        ("real-data replication", c6_real_data),
        ("EM properties", c7_em),
        ("asymptotics", c8_asymptotics),
        ("study harness", c9_study),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        for note in &out.notes {
            println!("    {note}");
        }
        println!(
            "criterion {} {name}: {} - {}",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if !out.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
