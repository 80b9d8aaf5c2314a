//! The intertwining operators `D` and `L`, the carré du champ `Gamma`, and the
//! heat semigroup they generate on trace polynomials.
//!
//! For a family of independent `(r,s)`-Brownian motions run for times `t_j`,
//! the generator `1/2 sum_j t_j Delta_j` acts on trace polynomial functions as
//! `D + L / N^2`, where `D` splits one trace into two and `L` merges two traces
//! into one. Both preserve degree.

mod basis;
mod free;
mod laws;
mod operator;
mod ops;
mod oracle;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::trace_algebra::{IndexSet, TracePoly};

pub use basis::{necklaces, FilteredBasis, DEFAULT_DIMENSION_CAP};
pub use free::FreeMoments;
pub use laws::{algebraic_laws, random_poly, LawResiduals};
pub use operator::{duhamel_residual, OperatorKind, OperatorMatrix, Semigroup};
pub use oracle::{
    intertwining_suite, laplacian_parts_oracle, IntertwiningReport, LaplacianOracle, LaplacianParts,
};

/// Diffusion parameters; `(1, 0)` is unitary Brownian motion and `(1/2, 1/2)`
/// the standard Brownian motion on `GL_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RSParams {
    r: f64,
    s: f64,
}

impl RSParams {
    /// Requires `r, s >= 0` with `r + s > 0`.
    pub fn new(r: f64, s: f64) -> Result<Self> {
        if !(r.is_finite() && s.is_finite()) || r < 0.0 || s < 0.0 || r + s == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "(r, s) = ({r}, {s}): need r, s >= 0, finite, not both zero"
            )));
        }
        Ok(RSParams { r, s })
    }

    pub fn unitary() -> Self {
        RSParams { r: 1.0, s: 0.0 }
    }

    pub fn standard() -> Self {
        RSParams { r: 0.5, s: 0.5 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Pair weight for two letters of the same star type.
    pub fn same(&self) -> f64 {
        self.s - self.r
    }

    /// Pair weight for a letter and an adjoint letter.
    pub fn mixed(&self) -> f64 {
        self.s + self.r
    }

    pub fn kappa(&self, star_a: bool, star_b: bool) -> f64 {
        if star_a == star_b {
            self.same()
        } else {
            self.mixed()
        }
    }
}

/// Nonnegative time attached to each index.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeVector(BTreeMap<u16, f64>);

impl TimeVector {
    pub fn new(times: impl IntoIterator<Item = (u16, f64)>) -> Result<Self> {
        let map: BTreeMap<u16, f64> = times.into_iter().collect();
        for (&j, &t) in &map {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "time for index {j} is {t}"
                )));
            }
        }
        Ok(TimeVector(map))
    }

    /// The same time on every index of `j`.
    pub fn uniform(j: &IndexSet, t: f64) -> Result<Self> {
        Self::new(j.iter().map(|k| (k, t)))
    }

    /// Times `t_1, t_2, ...` on indices `1, 2, ...`.
    pub fn from_slice(times: &[f64]) -> Result<Self> {
        Self::new(times.iter().enumerate().map(|(k, &t)| (k as u16 + 1, t)))
    }

    pub fn get(&self, j: u16) -> Option<f64> {
        self.0.get(&j).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, f64)> + '_ {
        self.0.iter().map(|(&j, &t)| (j, t))
    }

    pub fn indices(&self) -> IndexSet {
        IndexSet::new(self.0.keys().copied()).expect("time vector must be nonempty")
    }

    pub fn scaled(&self, c: f64) -> TimeVector {
        TimeVector(self.0.iter().map(|(&j, &t)| (j, c * t)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalization of the generator against `T . Delta`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    /// `1/2 T . Delta`, the generator of the matrix SDE.
    #[default]
    HalfLaplacian,
    /// `T . Delta` without the factor one half.
    FullLaplacian,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::HalfLaplacian => 0.5,
            Convention::FullLaplacian => 1.0,
        }
    }
}

/// Matrix dimension for the heat semigroup; `Infinite` is the free limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Finite(u32),
    Infinite,
}

impl Dim {
    /// `1 / N^2`, zero in the limit.
    pub fn inv_sq(self) -> f64 {
        match self {
            Dim::Finite(n) => 1.0 / (n as f64 * n as f64),
            Dim::Infinite => 0.0,
        }
    }
}

/// Parameters of one generator `c . sum_j t_j Delta_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub rs: RSParams,
    pub times: TimeVector,
    pub convention: Convention,
}

impl Generator {
    pub fn new(rs: RSParams, times: TimeVector) -> Self {
        Generator {
            rs,
            times,
            convention: Convention::default(),
        }
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    /// The generator run for `c` times as long.
    pub fn scaled(&self, c: f64) -> Generator {
        Generator {
            rs: self.rs,
            times: self.times.scaled(c),
            convention: self.convention,
        }
    }

    /// `factor * t_j`.
    pub(crate) fn weight(&self, j: u16) -> Result<f64> {
        self.times
            .get(j)
            .map(|t| t * self.convention.factor())
            .ok_or(Error::UnknownIndex { index: j })
    }

    /// `D P`.
    pub fn apply_d(&self, p: &TracePoly) -> Result<TracePoly> {
        ops::apply_d(self, p)
    }

    /// `L P`.
    pub fn apply_l(&self, p: &TracePoly) -> Result<TracePoly> {
        ops::apply_l(self, p)
    }

    /// `Gamma(P, Q)`.
    pub fn gamma(&self, p: &TracePoly, q: &TracePoly) -> Result<TracePoly> {
        ops::gamma(self, p, q)
    }

    /// `(D + L / N^2) P`.
    pub fn apply(&self, p: &TracePoly, dim: Dim) -> Result<TracePoly> {
        let d = self.apply_d(p)?;
        match dim {
            Dim::Infinite => Ok(d),
            Dim::Finite(_) => Ok(&d + &self.apply_l(p)?.scale(Complex64::new(dim.inv_sq(), 0.0))),
        }
    }

    /// `[e^{D + L/N^2} P](1)`, the expectation of `[P]_N` at the final times.
    pub fn heat_expectation(&self, p: &TracePoly, dim: Dim) -> Result<Complex64> {
        heat_expectation_with(self, p, dim, 1e-12)
    }
}

pub(crate) fn heat_expectation_with(
    g: &Generator,
    p: &TracePoly,
    dim: Dim,
    tol: f64,
) -> Result<Complex64> {
    let value = match dim {
        Dim::Infinite => FreeMoments::expectation(g, p)?,
        Dim::Finite(_) => {
            let kind = OperatorKind::from_dim(dim);
            let sg = Semigroup::closure(g, kind, std::slice::from_ref(p), DEFAULT_DIMENSION_CAP)?;
            sg.apply(p, 1.0, tol)?.evaluate_at_one()
        }
    };
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::NonFinite("heat expectation".into()));
    }
    Ok(value)
}

/// `D P` under the SDE convention.
pub fn apply_d(rs: RSParams, t: &TimeVector, p: &TracePoly) -> Result<TracePoly> {
    Generator::new(rs, t.clone()).apply_d(p)
}

/// `L P` under the SDE convention.
pub fn apply_l(rs: RSParams, t: &TimeVector, p: &TracePoly) -> Result<TracePoly> {
    Generator::new(rs, t.clone()).apply_l(p)
}

/// `Gamma(P, Q)` under the SDE convention.
pub fn gamma(rs: RSParams, t: &TimeVector, p: &TracePoly, q: &TracePoly) -> Result<TracePoly> {
    Generator::new(rs, t.clone()).gamma(p, q)
}

/// `E [P]_N(B(t_j)_j)` for independent `(r,s)`-Brownian motions; `Dim::Infinite`
/// gives the free limit.
pub fn heat_expectation(
    p: &TracePoly,
    rs: RSParams,
    t: &TimeVector,
    dim: Dim,
) -> Result<Complex64> {
    Generator::new(rs, t.clone()).heat_expectation(p, dim)
}

/// Builds the operator matrix of `kind` on `basis`.
pub fn operator_matrix(
    kind: OperatorKind,
    rs: RSParams,
    t: &TimeVector,
    basis: &FilteredBasis,
) -> Result<OperatorMatrix> {
    OperatorMatrix::build(kind, &Generator::new(rs, t.clone()), basis)
}

/// Builds the degree-filtered basis over `j` up to degree `dmax`.
pub fn build_basis(j: &IndexSet, dmax: usize) -> Result<FilteredBasis> {
    FilteredBasis::build(j, dmax, DEFAULT_DIMENSION_CAP)
}
