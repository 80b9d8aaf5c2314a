//! `simulate` and `compare`: Monte Carlo estimates, optionally joined with
//! exact finite-`N` values and limiting predictions.

use std::fs::File;
use std::io::BufWriter;

use glbm::covariance::{exact_fluctuation_moment, sigma_free};
use glbm::matrix_lab::{
    estimate, evaluate_samples, mixed_moment, simulate_paths, CovKind, Estimate, EstimateOptions,
    FluctuationReport, SimConfig,
};
use glbm::trace_algebra::TracePoly;
use num_complex::Complex64;
use serde::Serialize;

use super::predict::agreement_threshold;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{num, opt_num, Block, Report};

/// A comparison passes when every `|z|` is at most this.
pub const Z_LIMIT: f64 = 4.0;

/// Outside the limit, or not a number.
fn exceeds(z: f64) -> bool {
    z.is_nan() || z.abs() > Z_LIMIT
}

#[derive(Clone, Copy, Debug, Default)]
pub struct McOptions {
    /// Attach predictions and moment checks.
    pub compare: bool,
    /// Write each dataset as `paths_N<n>.glbm` into the output directory.
    pub save_paths: bool,
    /// Multiplies every predicted covariance; a negative control for `compare`.
    pub corrupt_sigma: Option<f64>,
}

/// `N^3 E[X_P^a conj(X_P)^(3-a)]`; the Wick value is 0, the exact finite-`N`
/// value is `O(1/N)` in units of the covariance.
#[derive(Clone, Debug, Serialize)]
pub struct ThirdMoment {
    pub poly: String,
    /// `a` factors of `X_P` followed by `3 - a` conjugates.
    pub pattern: String,
    pub estimate: Estimate,
    pub exact: [f64; 2],
    /// Against `exact`.
    pub z: f64,
    /// Against 0.
    pub z_wick: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Agreement {
    pub poly_i: String,
    pub poly_j: String,
    pub kind: CovKind,
    pub difference: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct McRun {
    #[serde(flatten)]
    pub report: FluctuationReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub third_moments: Vec<ThirdMoment>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub agreement: Vec<Agreement>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_sigma: Option<f64>,
    pub runs: Vec<McRun>,
}

impl McReport {
    /// Human-readable descriptions of every failing row.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for run in &self.runs {
            let r = &run.report;
            for m in &r.means {
                if let Some(z) = m.z.filter(|&z| exceeds(z)) {
                    out.push(format!("N={} mean {}: z = {z:.2}", r.n, m.poly));
                }
            }
            for c in &r.covariances {
                if let Some(z) = c.z.filter(|&z| exceeds(z)) {
                    let (pi, pj) = (&r.means[c.i].poly, &r.means[c.j].poly);
                    out.push(format!("N={} {:?} ({pi}, {pj}): z = {z:.2}", r.n, c.kind));
                }
            }
            for t in &run.third_moments {
                if exceeds(t.z) {
                    out.push(format!(
                        "N={} third moment {} {}: z = {:.2}",
                        r.n, t.pattern, t.poly, t.z
                    ));
                }
            }
            for a in run.agreement.iter().filter(|a| !a.agree) {
                out.push(format!(
                    "{:?} ({}, {}): direct and free differ by {:e}",
                    a.kind, a.poly_i, a.poly_j, a.difference
                ));
            }
        }
        out
    }
}

pub fn sim_config(cfg: &RunConfig, n: u32) -> CliResult<SimConfig> {
    let sc = SimConfig {
        n: n as usize,
        rs: cfg.rs()?,
        times: cfg.time_vector()?,
        steps_per_unit_time: cfg.steps,
        samples: cfg.samples,
        scheme: cfg.scheme,
        seed: cfg.seed,
    };
    sc.validate()?;
    Ok(sc)
}

fn third_moments(
    cfg: &RunConfig,
    values: &[Vec<Complex64>],
    ps: &[TracePoly],
    n: u32,
) -> CliResult<Vec<ThirdMoment>> {
    let g = cfg.generator()?;
    let mut out = Vec::new();
    for (i, p) in ps.iter().enumerate() {
        for plain in (0..=3).rev() {
            let factors: Vec<(usize, bool)> = (0..3).map(|k| (i, k >= plain)).collect();
            let polys: Vec<TracePoly> = factors
                .iter()
                .map(|&(_, c)| if c { p.conjugate() } else { p.clone() })
                .collect();
            let est = mixed_moment(values, n as usize, &factors, cfg.batches)?;
            let exact = exact_fluctuation_moment(&g, &polys, n)?;
            let pattern: String = factors
                .iter()
                .map(|&(_, c)| if c { "X*" } else { "X" })
                .collect::<Vec<_>>()
                .join(" ");
            out.push(ThirdMoment {
                poly: p.to_string(),
                pattern,
                estimate: est,
                exact: [exact.re, exact.im],
                z: est.z(exact),
                z_wick: est.z(Complex64::new(0.0, 0.0)),
            });
        }
    }
    Ok(out)
}

fn agreement(
    cfg: &RunConfig,
    report: &FluctuationReport,
    ps: &[TracePoly],
) -> CliResult<Vec<Agreement>> {
    let g = cfg.generator()?;
    report
        .covariances
        .iter()
        .map(|c| {
            let q = if c.kind == CovKind::Covariance {
                ps[c.j].conjugate()
            } else {
                ps[c.j].clone()
            };
            let free = sigma_free(&g, &ps[c.i], &q, cfg.tol)?.value;
            let direct = c.limit.map_or(free, |l| Complex64::new(l[0], l[1]));
            let difference = (direct - free).norm();
            Ok(Agreement {
                poly_i: report.means[c.i].poly.clone(),
                poly_j: report.means[c.j].poly.clone(),
                kind: c.kind,
                difference,
                agree: difference <= agreement_threshold(cfg.tol),
            })
        })
        .collect()
}

fn corrupt(report: &mut FluctuationReport, factor: f64) {
    for c in &mut report.covariances {
        c.exact = c.exact.map(|e| [e[0] * factor, e[1] * factor]);
        c.limit = c.limit.map(|e| [e[0] * factor, e[1] * factor]);
        c.z = c.exact.map(|e| c.estimate.z(Complex64::new(e[0], e[1])));
    }
}

pub fn run(cfg: &mut RunConfig, opts: McOptions) -> CliResult<McReport> {
    let ps = cfg.test_functions()?;
    if opts.save_paths && cfg.out.is_none() {
        return Err(CliError::Config(
            "saving paths needs an output directory (--out)".into(),
        ));
    }
    let est_opts = EstimateOptions {
        batches: cfg.batches,
        predict: opts.compare,
        tol: cfg.tol,
    };
    let mut runs = Vec::new();
    for &n in &cfg.n.clone() {
        let sc = sim_config(cfg, n)?;
        eprintln!("N = {n}: simulating {} samples", sc.samples);
        let data = simulate_paths(&sc)?;
        if opts.save_paths {
            let dir = cfg.out.as_ref().expect("checked above");
            std::fs::create_dir_all(dir)?;
            data.write_to(BufWriter::new(File::create(
                dir.join(format!("paths_N{n}.glbm")),
            )?))?;
        }
        let mut report = estimate(&data, &ps, &est_opts)?;
        let (mut third, mut agree) = (Vec::new(), Vec::new());
        if opts.compare {
            agree = agreement(cfg, &report, &ps)?;
            if let Some(f) = opts.corrupt_sigma {
                corrupt(&mut report, f);
            }
            let values = evaluate_samples(&data, &ps)?;
            third = third_moments(cfg, &values, &ps, n)?;
        }
        runs.push(McRun {
            report,
            third_moments: third,
            agreement: agree,
        });
    }
    Ok(McReport {
        config: cfg.clone(),
        corrupt_sigma: opts.corrupt_sigma,
        runs,
    })
}

fn pair_text(p: Option<[f64; 2]>) -> [String; 2] {
    [opt_num(p.map(|v| v[0])), opt_num(p.map(|v| v[1]))]
}

pub fn report(name: &'static str, mc: McReport) -> Report<McReport> {
    let mut means = Block::new(&[
        "n",
        "poly",
        "re_mean_est",
        "im_mean_est",
        "stderr",
        "re_mean_pred",
        "im_mean_pred",
        "z",
    ]);
    let mut covs = Block::new(&[
        "n",
        "poly_i",
        "poly_j",
        "kind",
        "re_cov_est",
        "im_cov_est",
        "stderr",
        "re_cov_exact",
        "im_cov_exact",
        "re_sigma",
        "im_sigma",
        "z",
    ]);
    let mut third = Block::new(&[
        "n", "poly", "pattern", "re_est", "im_est", "stderr", "re_exact", "im_exact", "z", "z_wick",
    ]);
    for run in &mc.runs {
        let r = &run.report;
        let n = r.n.to_string();
        for m in &r.means {
            let [pr, pi] = pair_text(m.predicted);
            let e = m.estimate;
            means.push(vec![
                n.clone(),
                m.poly.clone(),
                num(e.re),
                num(e.im),
                num(e.stderr),
                pr,
                pi,
                opt_num(m.z),
            ]);
        }
        for c in &r.covariances {
            let [xr, xi] = pair_text(c.exact);
            let [lr, li] = pair_text(c.limit);
            let e = c.estimate;
            let kind = match c.kind {
                CovKind::Covariance => "covariance",
                CovKind::Pseudo => "pseudo",
            };
            covs.push(vec![
                n.clone(),
                r.means[c.i].poly.clone(),
                r.means[c.j].poly.clone(),
                kind.into(),
                num(e.re),
                num(e.im),
                num(e.stderr),
                xr,
                xi,
                lr,
                li,
                opt_num(c.z),
            ]);
        }
        for t in &run.third_moments {
            let e = t.estimate;
            third.push(vec![
                n.clone(),
                t.poly.clone(),
                t.pattern.clone(),
                num(e.re),
                num(e.im),
                num(e.stderr),
                num(t.exact[0]),
                num(t.exact[1]),
                num(t.z),
                num(t.z_wick),
            ]);
        }
    }
    let mut blocks = vec![means, covs];
    if mc.runs.iter().any(|r| !r.third_moments.is_empty()) {
        blocks.push(third);
    }
    Report {
        name,
        blocks,
        json: mc,
    }
}
