//! Canonical forms of the configured test functions.

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{Block, Report};

#[derive(Clone, Debug, Serialize)]
pub struct Parsed {
    pub input: String,
    pub canonical: String,
    pub degree: usize,
    pub conjugate: String,
}

pub fn parse_all(cfg: &RunConfig) -> CliResult<Vec<Parsed>> {
    if cfg.polys.is_empty() {
        return Err(CliError::Config("no test functions".into()));
    }
    let idx = cfg.indices();
    cfg.polys
        .iter()
        .map(|text| {
            let p = glbm::trace_algebra::parse(text, &idx)
                .map_err(|e| CliError::Config(format!("{text:?}: {e}")))?;
            Ok(Parsed {
                input: text.clone(),
                canonical: p.to_string(),
                degree: p.degree(),
                conjugate: p.conjugate().to_string(),
            })
        })
        .collect()
}

pub fn report(rows: Vec<Parsed>) -> Report<Vec<Parsed>> {
    let mut b = Block::new(&["input", "canonical", "degree", "conjugate"]);
    for r in &rows {
        b.push(vec![
            r.input.clone(),
            r.canonical.clone(),
            r.degree.to_string(),
            r.conjugate.clone(),
        ]);
    }
    Report {
        name: "parse",
        blocks: vec![b],
        json: rows,
    }
}
