//! Run configuration: a TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};

use glbm::intertwine::{Generator, RSParams, TimeVector};
use glbm::matrix_lab::{Scheme, DEFAULT_BATCHES};
use glbm::trace_algebra::{parse, IndexSet, TracePoly};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every setting optional; the file and the flags each fill one of these.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub r: Option<f64>,
    pub s: Option<f64>,
    /// Final time of component `j` at position `j - 1`.
    pub times: Option<Vec<f64>>,
    pub polys: Option<Vec<String>>,
    #[serde(rename = "N")]
    pub n: Option<Vec<u32>>,
    pub samples: Option<usize>,
    pub steps: Option<usize>,
    pub scheme: Option<Scheme>,
    pub seed: Option<u64>,
    pub dmax: Option<usize>,
    pub tol: Option<f64>,
    pub batches: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Settings {
    pub fn from_file(path: &Path) -> CliResult<Settings> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// `self` with every field that `over` sets replaced.
    pub fn overridden_by(self, over: Settings) -> Settings {
        Settings {
            r: over.r.or(self.r),
            s: over.s.or(self.s),
            times: over.times.or(self.times),
            polys: over.polys.or(self.polys),
            n: over.n.or(self.n),
            samples: over.samples.or(self.samples),
            steps: over.steps.or(self.steps),
            scheme: over.scheme.or(self.scheme),
            seed: over.seed.or(self.seed),
            dmax: over.dmax.or(self.dmax),
            tol: over.tol.or(self.tol),
            batches: over.batches.or(self.batches),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
        }
    }
}

/// A fully resolved run. Serialized into every report, so it leaves out
/// where and how the report is written.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub r: f64,
    pub s: f64,
    pub times: Vec<f64>,
    pub polys: Vec<String>,
    #[serde(rename = "N")]
    pub n: Vec<u32>,
    pub samples: usize,
    pub steps: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub dmax: usize,
    pub tol: f64,
    pub batches: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

pub const DEFAULT_N: u32 = 64;
pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_STEPS: usize = 200;
pub const DEFAULT_TOL: f64 = glbm::covariance::DEFAULT_TOL;

impl RunConfig {
    /// Applies defaults and checks everything that does not need the
    /// polynomials to be parsed.
    pub fn resolve(s: Settings) -> CliResult<RunConfig> {
        let cfg = RunConfig {
            r: s.r.unwrap_or(1.0),
            s: s.s.unwrap_or(0.0),
            times: s.times.unwrap_or_else(|| vec![1.0]),
            polys: s.polys.unwrap_or_default(),
            n: s.n.unwrap_or_else(|| vec![DEFAULT_N]),
            samples: s.samples.unwrap_or(DEFAULT_SAMPLES),
            steps: s.steps.unwrap_or(DEFAULT_STEPS),
            scheme: s.scheme.unwrap_or_default(),
            seed: s.seed.unwrap_or(0),
            dmax: s.dmax.unwrap_or(0),
            tol: s.tol.unwrap_or(DEFAULT_TOL),
            batches: s.batches.unwrap_or(DEFAULT_BATCHES),
            out: s.out,
            format: s.format.unwrap_or_default(),
        };
        cfg.rs()?;
        cfg.time_vector()?;
        if cfg.n.is_empty() || cfg.n.contains(&0) {
            return Err(CliError::Config(
                "N must be a nonempty list of positive integers".into(),
            ));
        }
        if !(cfg.tol > 0.0 && cfg.tol.is_finite()) {
            return Err(CliError::Config(format!(
                "tol must be positive, got {}",
                cfg.tol
            )));
        }
        if cfg.steps == 0 {
            return Err(CliError::Config("steps must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn rs(&self) -> CliResult<RSParams> {
        Ok(RSParams::new(self.r, self.s)?)
    }

    pub fn indices(&self) -> IndexSet {
        IndexSet::range(self.times.len() as u16)
    }

    pub fn time_vector(&self) -> CliResult<TimeVector> {
        if self.times.is_empty() {
            return Err(CliError::Config(
                "times must list at least one component".into(),
            ));
        }
        Ok(TimeVector::from_slice(&self.times)?)
    }

    pub fn generator(&self) -> CliResult<Generator> {
        Ok(Generator::new(self.rs()?, self.time_vector()?))
    }

    /// Parses the test functions and fixes `dmax`: a pair of them must fit,
    /// so the default is twice the largest degree.
    pub fn test_functions(&mut self) -> CliResult<Vec<TracePoly>> {
        if self.polys.is_empty() {
            return Err(CliError::Config("no test functions".into()));
        }
        let idx = self.indices();
        let ps = self
            .polys
            .iter()
            .map(|text| parse(text, &idx).map_err(|e| CliError::Config(format!("{text:?}: {e}"))))
            .collect::<CliResult<Vec<_>>>()?;
        let needed = 2 * ps.iter().map(TracePoly::degree).max().unwrap_or(0);
        if self.dmax == 0 {
            self.dmax = needed;
        } else if self.dmax < needed {
            return Err(CliError::Config(format!(
                "dmax = {} is below {needed}, the degree of the largest product of two test functions",
                self.dmax
            )));
        }
        Ok(ps)
    }
}
