//! Empirical check of the generator normalization: the simulated mean of
//! `tr B(T)` against the prediction of each convention.

use glbm::intertwine::{Convention, Dim, Generator};
use glbm::matrix_lab::{estimate, simulate_paths, EstimateOptions};
use glbm::trace_algebra::parse;
use serde::Serialize;

use super::montecarlo::{sim_config, Z_LIMIT};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{num, Block, Report};

#[derive(Clone, Debug, Serialize)]
pub struct ConventionRow {
    pub convention: &'static str,
    pub predicted: [f64; 2],
    pub estimate: [f64; 2],
    pub stderr: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub config: RunConfig,
    pub rows: Vec<ConventionRow>,
    /// The half convention fits and the full one is rejected.
    pub confirmed: bool,
}

pub fn calibrate(cfg: &RunConfig) -> CliResult<Calibration> {
    if cfg.r == cfg.s {
        return Err(CliError::Config(
            "r = s leaves E tr B(t) = 1 under both conventions".into(),
        ));
    }
    let n = cfg.n[0];
    let p = parse("tr(X1)", &cfg.indices())?;
    let sc = sim_config(cfg, n)?;
    eprintln!("N = {n}: simulating {} samples", sc.samples);
    let data = simulate_paths(&sc)?;
    let opts = EstimateOptions {
        batches: cfg.batches,
        predict: false,
        tol: cfg.tol,
    };
    let est = estimate(&data, std::slice::from_ref(&p), &opts)?.means[0].estimate;
    let mut rows = Vec::new();
    for (name, conv) in [
        ("half", Convention::HalfLaplacian),
        ("full", Convention::FullLaplacian),
    ] {
        let g = Generator::new(cfg.rs()?, cfg.time_vector()?).with_convention(conv);
        let m = g.heat_expectation(&p, Dim::Finite(n))?;
        rows.push(ConventionRow {
            convention: name,
            predicted: [m.re, m.im],
            estimate: [est.re, est.im],
            stderr: est.stderr,
            z: est.z(m),
        });
    }
    let confirmed = rows[0].z <= Z_LIMIT && rows[1].z > Z_LIMIT;
    Ok(Calibration {
        config: cfg.clone(),
        rows,
        confirmed,
    })
}

pub fn report(c: Calibration) -> Report<Calibration> {
    let mut b = Block::new(&[
        "convention",
        "re_pred",
        "im_pred",
        "re_est",
        "im_est",
        "stderr",
        "z",
    ]);
    for r in &c.rows {
        b.push(vec![
            r.convention.into(),
            num(r.predicted[0]),
            num(r.predicted[1]),
            num(r.estimate[0]),
            num(r.estimate[1]),
            num(r.stderr),
            num(r.z),
        ]);
    }
    Report {
        name: "calibrate",
        blocks: vec![b],
        json: c,
    }
}
