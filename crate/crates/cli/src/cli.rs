//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glbm::intertwine::Convention;
use glbm::matrix_lab::Scheme;

use crate::commands::montecarlo::{self, McOptions};
use crate::commands::{calibrate, parse, predict, validate};
use crate::config::{Format, RunConfig, Settings};
use crate::error::{CliError, CliResult};
use crate::report::write_config;

#[derive(Debug, Parser)]
#[command(
    name = "glbm",
    version,
    about = "Fluctuations of trace polynomials of (r,s)-Brownian motions on GL_N"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting covariances by every method, and exact finite-N moments.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Also tabulate sigma at this many multiples of the times, up to 2x.
        #[arg(long, default_value_t = 0)]
        curve: usize,
    },
    /// Simulate and report Monte Carlo estimates.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write each dataset into the output directory.
        #[arg(long)]
        save_paths: bool,
    },
    /// Simulate and test estimates against exact and limiting predictions.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        save_paths: bool,
        /// Multiply every predicted covariance by this factor.
        #[arg(long, hide = true)]
        corrupt_sigma: Option<f64>,
    },
    /// Run the invariant suite.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Normalization of the generator against the Laplacian.
        #[arg(long, value_enum, default_value_t = ConventionArg::Half)]
        convention: ConventionArg,
        /// Degree of the monomials checked against the brute-force Laplacian.
        #[arg(long, default_value_t = 6)]
        degree: usize,
    },
    /// Print canonical forms of the test functions.
    Parse {
        #[command(flatten)]
        common: Common,
    },
    /// Check the generator normalization against simulation.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    /// One half of T . Delta.
    Half,
    /// T . Delta.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    MultiplicativeExp,
    EulerMaruyama,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Matrix dimensions, comma separated.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    /// Final time of each component X1, X2, ..., comma separated.
    #[arg(long = "T", value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Test function, e.g. "tr(X1 X1*)"; repeatable.
    #[arg(long = "poly")]
    pub polys: Vec<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Time steps per unit time.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of batches for standard errors.
    #[arg(long)]
    pub batches: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Output directory; reports go to stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Common {
    fn settings(&self) -> CliResult<Settings> {
        let file = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let flags = Settings {
            r: self.r,
            s: self.s,
            times: self.t.clone(),
            polys: (!self.polys.is_empty()).then(|| self.polys.clone()),
            n: self.n.clone(),
            samples: self.samples,
            steps: self.steps,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::MultiplicativeExp => Scheme::MultiplicativeExp,
                SchemeArg::EulerMaruyama => Scheme::EulerMaruyama,
            }),
            seed: self.seed,
            dmax: self.dmax,
            tol: self.tol,
            batches: self.batches,
            out: self.out.clone(),
            format: self.format,
        };
        Ok(file.overridden_by(flags))
    }

    fn resolve(&self) -> CliResult<RunConfig> {
        RunConfig::resolve(self.settings()?)
    }
}

fn numerical_failure(what: &str, failures: Vec<String>) -> CliResult<()> {
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("FAIL {f}");
    }
    Err(CliError::Numerical(format!(
        "{what}: {} failing rows",
        failures.len()
    )))
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Predict { common, curve } => {
            let mut cfg = common.resolve()?;
            let pred = predict::predict(&mut cfg, curve)?;
            let failures: Vec<String> = pred
                .sigma
                .iter()
                .filter(|r| !r.agree)
                .map(|r| {
                    format!(
                        "{} ({}, {}): methods differ by {:e}",
                        r.kind, r.poly_i, r.poly_j, r.max_difference
                    )
                })
                .collect();
            write_config(&cfg, "predict", cfg.out.as_deref())?;
            predict::report(pred).emit(cfg.format, cfg.out.as_deref())?;
            numerical_failure("predict", failures)
        }
        Command::Simulate { common, save_paths } => {
            let mut cfg = common.resolve()?;
            let mc = montecarlo::run(
                &mut cfg,
                McOptions {
                    save_paths,
                    ..McOptions::default()
                },
            )?;
            write_config(&cfg, "simulate", cfg.out.as_deref())?;
            montecarlo::report("simulate", mc).emit(cfg.format, cfg.out.as_deref())
        }
        Command::Compare {
            common,
            save_paths,
            corrupt_sigma,
        } => {
            let mut cfg = common.resolve()?;
            let opts = McOptions {
                compare: true,
                save_paths,
                corrupt_sigma,
            };
            let mc = montecarlo::run(&mut cfg, opts)?;
            let failures = mc.failures();
            write_config(&cfg, "compare", cfg.out.as_deref())?;
            montecarlo::report("compare", mc).emit(cfg.format, cfg.out.as_deref())?;
            numerical_failure("compare", failures)
        }
        Command::Validate {
            common,
            convention,
            degree,
        } => {
            let settings = common.settings()?;
            let pinned = settings.r.is_some() || settings.s.is_some();
            let cfg = RunConfig::resolve(settings)?;
            let mut opts = validate::ValidateOptions {
                convention: match convention {
                    ConventionArg::Half => Convention::HalfLaplacian,
                    ConventionArg::Full => Convention::FullLaplacian,
                },
                seed: cfg.seed,
                intertwining_degree: degree,
                tol: cfg.tol,
                ..validate::ValidateOptions::default()
            };
            if pinned {
                opts.params = vec![(cfg.r, cfg.s)];
            }
            let v = validate::validate(&opts)?;
            let failures = v.failures();
            validate::report(v).emit(cfg.format, cfg.out.as_deref())?;
            numerical_failure("validate", failures)
        }
        Command::Parse { common } => {
            let cfg = common.resolve()?;
            parse::report(parse::parse_all(&cfg)?).emit(cfg.format, cfg.out.as_deref())
        }
        Command::Calibrate { common } => {
            let mut settings = common.settings()?;
            // Small matrices suffice: E tr B(t) does not depend on N.
            settings.n.get_or_insert_with(|| vec![8]);
            let cfg = RunConfig::resolve(settings)?;
            let c = calibrate::calibrate(&cfg)?;
            let confirmed = c.confirmed;
            write_config(&cfg, "calibrate", cfg.out.as_deref())?;
            calibrate::report(c).emit(cfg.format, cfg.out.as_deref())?;
            if confirmed {
                Ok(())
            } else {
                Err(CliError::Numerical(
                    "calibrate: the simulation does not single out the half convention".into(),
                ))
            }
        }
    }
}
