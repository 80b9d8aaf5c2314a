//! The invariant suite: exact identities and cross-checks with measured
//! residuals against fixed thresholds.

use glbm::covariance::{
    closed_mixed_agreement, direct_free_agreement, sigma_closed_poly, sigma_direct, sigma_free,
    ClosedVariant,
};
use glbm::intertwine::{
    algebraic_laws, duhamel_residual, intertwining_suite, Convention, FilteredBasis, Generator,
    RSParams, TimeVector, DEFAULT_DIMENSION_CAP,
};
use glbm::matrix_lab::magic_suite;
use glbm::trace_algebra::{parse_any, IndexSet};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::report::{num, Block, Report};

#[derive(Clone, Debug, Serialize)]
pub struct ValidateOptions {
    pub params: Vec<(f64, f64)>,
    #[serde(serialize_with = "convention_name")]
    pub convention: Convention,
    pub seed: u64,
    /// Degree of the monomials checked against the brute-force Laplacian.
    pub intertwining_degree: usize,
    pub intertwining_ns: Vec<usize>,
    pub magic_ns: Vec<usize>,
    pub magic_pairs: usize,
    pub sigma_pairs: usize,
    pub sigma_degree: usize,
    pub tol: f64,
}

fn convention_name<S: serde::Serializer>(c: &Convention, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match c {
        Convention::HalfLaplacian => "half",
        Convention::FullLaplacian => "full",
    })
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            params: vec![(1.0, 0.0), (0.5, 0.5), (2.0, 0.3)],
            convention: Convention::HalfLaplacian,
            seed: 0,
            intertwining_degree: 6,
            intertwining_ns: vec![2, 3, 4],
            magic_ns: (2..=8).collect(),
            magic_pairs: 100,
            sigma_pairs: 50,
            sigma_degree: 4,
            tol: glbm::covariance::DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub params: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub options: ValidateOptions,
    pub checks: Vec<Check>,
}

impl Validation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| {
                format!(
                    "{} [{}]: residual {:e} > {:e} {}",
                    c.name, c.params, c.residual, c.threshold, c.detail
                )
            })
            .collect()
    }
}

fn check(
    name: &'static str,
    params: String,
    residual: f64,
    threshold: f64,
    detail: String,
) -> Check {
    Check {
        name,
        params,
        residual,
        threshold,
        pass: residual <= threshold,
        detail,
    }
}

fn rs_label(rs: RSParams) -> String {
    format!("r={} s={}", rs.r(), rs.s())
}

pub fn validate(opts: &ValidateOptions) -> CliResult<Validation> {
    if opts.params.is_empty() {
        return Err(CliError::Config("no (r, s) parameters to validate".into()));
    }
    let mut checks = Vec::new();
    let two = IndexSet::range(2);
    let agree = 10.0 * opts.tol;
    for &(r, s) in &opts.params {
        let rs = RSParams::new(r, s)?;
        let label = rs_label(rs);
        let g = Generator::new(rs, TimeVector::from_slice(&[0.7, 1.3])?)
            .with_convention(opts.convention);
        eprintln!("validating {label}");

        let magic = magic_suite(&opts.magic_ns, rs, opts.magic_pairs, opts.seed);
        checks.push(check(
            "magic_formulas",
            format!("{label} N={:?} pairs={}", opts.magic_ns, opts.magic_pairs),
            magic.max(),
            1e-12,
            format!(
                "scalar same {:e}, scalar mixed {:e}, matrix same {:e}, matrix mixed {:e}",
                magic.scalar_same, magic.scalar_mixed, magic.matrix_same, magic.matrix_mixed
            ),
        ));

        let basis = FilteredBasis::build(&two, opts.intertwining_degree, DEFAULT_DIMENSION_CAP)?;
        let it = intertwining_suite(&g, &basis, &opts.intertwining_ns, opts.seed)?;
        let mut worst = it
            .worst
            .map(|(m, n)| format!("worst {m} at N={n}"))
            .unwrap_or_default();
        if let Some([re, im]) = it.worst_ratio {
            worst += &format!(", predicted/brute = {} + {}i", num(re), num(im));
        }
        checks.push(check(
            "intertwining",
            format!(
                "{label} degree<={} N={:?}",
                opts.intertwining_degree, opts.intertwining_ns
            ),
            it.max_relative_error,
            1e-10,
            format!("{} monomial evaluations; {worst}", it.checked),
        ));

        let laws = algebraic_laws(&g, 20, 4, opts.seed)?;
        checks.push(check(
            "operator_laws",
            format!("{label} degree<=4"),
            laws.max(),
            1e-10,
            format!(
                "derivation {:e}, second order {:e}, gamma from L {:e}, gamma Leibniz {:e}, gamma symmetry {:e}",
                laws.derivation, laws.second_order, laws.gamma_from_l, laws.gamma_leibniz, laws.gamma_symmetry
            ),
        ));

        let small = FilteredBasis::build(&two, 3, DEFAULT_DIMENSION_CAP)?;
        let (residual, quad) = duhamel_residual(&g, &small, 3, 24)?;
        checks.push(check(
            "duhamel",
            format!("{label} degree<=3 N=3"),
            residual,
            opts.tol,
            format!("quadrature change {quad:e}"),
        ));

        let df =
            direct_free_agreement(&g, opts.sigma_pairs, opts.sigma_degree, opts.seed, opts.tol)?;
        checks.push(check(
            "sigma_direct_vs_free",
            format!(
                "{label} pairs={} degree<={}",
                opts.sigma_pairs, opts.sigma_degree
            ),
            df.max_difference,
            agree,
            df.worst
                .map(|(p, q)| format!("worst ({p}, {q})"))
                .unwrap_or_default(),
        ));

        let g1 =
            Generator::new(rs, TimeVector::from_slice(&[1.0])?).with_convention(opts.convention);
        let cm = closed_mixed_agreement(
            &g1,
            opts.sigma_pairs,
            opts.sigma_degree,
            opts.seed,
            opts.tol,
        )?;
        checks.push(check(
            "sigma_closed_mixed",
            format!(
                "{label} pairs={} degree<={}",
                opts.sigma_pairs, opts.sigma_degree
            ),
            cm.max_difference,
            agree,
            cm.worst
                .map(|(p, q)| format!("worst ({p}, {q})"))
                .unwrap_or_default(),
        ));
    }
    checks.extend(anchors(opts)?);
    Ok(Validation {
        options: opts.clone(),
        checks,
    })
}

/// `sigma_T(tr X, tr X*)` against `1 - e^{-T}` at `(1, 0)` and `e^T - 1` at
/// `(1/2, 1/2)` by every method, and the Haar value 1 at large `T`.
fn anchors(opts: &ValidateOptions) -> CliResult<Vec<Check>> {
    let x = parse_any("tr(X1)")?;
    let xs = x.conjugate();
    let one = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let mut out = Vec::new();
    let cases: [(RSParams, f64, f64, f64); 3] = [
        (RSParams::unitary(), 1.0, 1.0 - (-1.0f64).exp(), 1e-8),
        (RSParams::standard(), 1.0, 1f64.exp() - 1.0, 1e-8),
        (RSParams::unitary(), 10.0, 1.0, 5e-5),
    ];
    for (rs, t, want, threshold) in cases {
        let g = Generator::new(rs, TimeVector::from_slice(&[t])?).with_convention(opts.convention);
        let tol = opts.tol.min(1e-10);
        let direct = sigma_direct(&g, &x, &xs, tol)?.value;
        let free = sigma_free(&g, &x, &xs, tol)?.value;
        // The closed form is written in process time; the full convention doubles it.
        let closed_t = t * 2.0 * g.convention.factor();
        let closed = sigma_closed_poly(&one, &one, ClosedVariant::Mixed, rs, closed_t, tol)?.value;
        let target = Complex64::new(want, 0.0);
        let residual = [direct, free, closed]
            .iter()
            .map(|v| (v - target).norm())
            .fold(0.0, f64::max);
        out.push(check(
            "sigma_anchor",
            format!("{} T={t} target {}", rs_label(rs), num(want)),
            residual,
            threshold,
            format!(
                "direct {}, free {}, closed {}",
                num(direct.re),
                num(free.re),
                num(closed.re)
            ),
        ));
    }
    Ok(out)
}

pub fn report(v: Validation) -> Report<Validation> {
    let mut b = Block::new(&["check", "params", "residual", "threshold", "pass", "detail"]);
    for c in &v.checks {
        b.push(vec![
            c.name.into(),
            c.params.clone(),
            num(c.residual),
            num(c.threshold),
            c.pass.to_string(),
            c.detail.clone(),
        ]);
    }
    Report {
        name: "validate",
        blocks: vec![b],
        json: v,
    }
}
