use std::collections::{HashMap, VecDeque};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::basis::FilteredBasis;
use super::ops::{d_monomial, l_monomial};
use super::{Dim, Generator};
use crate::error::{Error, Result};
use crate::linalg::expm::expm_pade;
use crate::linalg::quadrature::gauss_legendre;
use crate::linalg::sparse::Csr;
use crate::linalg::{axpy, max_abs_diff, mul, scaled, CMat};
use crate::trace_algebra::{Monomial, TracePoly};

/// Which operator a matrix represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    D,
    L,
    /// `D + L / N^2`.
    DPlusLOverN2(u32),
}

impl OperatorKind {
    /// `D` in the limit, `D + L/N^2` at finite `N`.
    pub fn from_dim(dim: Dim) -> Self {
        match dim {
            Dim::Finite(n) => OperatorKind::DPlusLOverN2(n),
            Dim::Infinite => OperatorKind::D,
        }
    }

    fn image(self, g: &Generator, m: &Monomial) -> Result<TracePoly> {
        let one = Complex64::new(1.0, 0.0);
        let mut out = TracePoly::zero();
        match self {
            OperatorKind::D => d_monomial(g, m, one, &mut out)?,
            OperatorKind::L => l_monomial(g, m, one, &mut out)?,
            OperatorKind::DPlusLOverN2(n) => {
                d_monomial(g, m, one, &mut out)?;
                l_monomial(g, m, Complex64::new(Dim::Finite(n).inv_sq(), 0.0), &mut out)?;
            }
        }
        Ok(out)
    }
}

/// An operator restricted to a degree-filtered basis, stored as one sparse
/// block per degree. Column `k` holds the image of basis monomial `k`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    kind: OperatorKind,
    basis: FilteredBasis,
    blocks: Vec<Csr>,
}

impl OperatorMatrix {
    pub fn build(kind: OperatorKind, g: &Generator, basis: &FilteredBasis) -> Result<Self> {
        let columns: Vec<TracePoly> = basis
            .monomials()
            .par_iter()
            .map(|m| kind.image(g, m))
            .collect::<Result<_>>()?;
        Ok(Self::from_columns(kind, basis.clone(), &columns))
    }

    fn from_columns(kind: OperatorKind, basis: FilteredBasis, columns: &[TracePoly]) -> Self {
        let mut per_block: Vec<Vec<(usize, usize, Complex64)>> =
            vec![Vec::new(); basis.max_degree() + 1];
        for (col, image) in columns.iter().enumerate() {
            let d = basis.monomials()[col].degree();
            let offset = basis.degree_block(d).start;
            for (m, c) in image.terms() {
                let row = basis.position(m).expect("operator image left the basis");
                assert_eq!(m.degree(), d, "operator changed the degree");
                per_block[d].push((row - offset, col - offset, *c));
            }
        }
        let blocks = per_block
            .into_iter()
            .enumerate()
            .map(|(d, t)| Csr::from_triplets(basis.degree_block(d).len(), t))
            .collect();
        OperatorMatrix {
            kind,
            basis,
            blocks,
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn basis(&self) -> &FilteredBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// The sparse block acting on degree `d`.
    pub fn block(&self, d: usize) -> Option<&Csr> {
        self.blocks.get(d)
    }

    /// Entry `(row, col)` in global basis positions.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let d = self.basis.monomials()[col].degree();
        let range = self.basis.degree_block(d);
        if !range.contains(&row) {
            return Complex64::new(0.0, 0.0);
        }
        self.blocks[d].get(row - range.start, col - range.start)
    }

    /// Nonzero entries in global positions, ordered by degree block then row.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for (d, b) in self.blocks.iter().enumerate() {
            let off = self.basis.degree_block(d).start;
            out.extend(b.triplets().map(|(r, c, v)| (r + off, c + off, v)));
        }
        out
    }

    /// Writes `row col re im` lines.
    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        for (r, c, v) in self.triplets() {
            // Adding zero turns a negative zero into a plain zero.
            writeln!(w, "{r} {c} {} {}", v.re + 0.0, v.im + 0.0)?;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coefficient vector of `p` in this basis.
    pub fn coefficients(&self, p: &TracePoly) -> Result<Vec<Complex64>> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (m, c) in p.terms() {
            let k = self.basis.position(m).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "monomial {m} of degree {} is outside the basis",
                    m.degree()
                ))
            })?;
            v[k] = *c;
        }
        Ok(v)
    }

    pub fn polynomial(&self, v: &[Complex64]) -> TracePoly {
        self.basis
            .monomials()
            .iter()
            .cloned()
            .zip(v.iter().copied())
            .collect()
    }

    /// `e^{tau A} v`, block by block.
    pub fn exp_action(&self, tau: f64, v: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (d, block) in self.blocks.iter().enumerate() {
            let range = self.basis.degree_block(d);
            let x = &v[range.clone()];
            if x.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let y = if block.nnz() == 0 {
                x.to_vec()
            } else {
                block.expm_action(tau, x, tol)?
            };
            out[range].copy_from_slice(&y);
        }
        Ok(out)
    }

    /// Dense `e^{tau A}`, assembled from per-block Padé exponentials.
    pub fn dense_exp(&self, tau: f64) -> CMat {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (d, block) in self.blocks.iter().enumerate() {
            let range = self.basis.degree_block(d);
            let e = expm_pade(scaled(block.to_dense().as_ref(), Complex64::new(tau, 0.0)).as_ref());
            for i in 0..range.len() {
                for k in 0..range.len() {
                    out[(range.start + i, range.start + k)] = e[(i, k)];
                }
            }
        }
        out
    }
}

/// The heat semigroup of one operator restricted to the smallest
/// monomial-spanned subspace that contains the seeds and is invariant.
#[derive(Clone, Debug)]
pub struct Semigroup {
    matrix: OperatorMatrix,
}

impl Semigroup {
    pub fn closure(
        g: &Generator,
        kind: OperatorKind,
        seeds: &[TracePoly],
        cap: usize,
    ) -> Result<Self> {
        let mut seen: HashMap<Monomial, usize> = HashMap::new();
        let mut order: Vec<Monomial> = Vec::new();
        let mut columns: Vec<TracePoly> = Vec::new();
        let mut queue = VecDeque::new();
        for p in seeds {
            for (m, _) in p.terms() {
                if !seen.contains_key(m) {
                    seen.insert(m.clone(), order.len());
                    order.push(m.clone());
                    queue.push_back(m.clone());
                }
            }
        }
        while let Some(m) = queue.pop_front() {
            let image = kind.image(g, &m)?;
            for (k, _) in image.terms() {
                if !seen.contains_key(k) {
                    if order.len() >= cap {
                        return Err(Error::DimensionCap {
                            dim: order.len() + 1,
                            cap,
                        });
                    }
                    seen.insert(k.clone(), order.len());
                    order.push(k.clone());
                    queue.push_back(k.clone());
                }
            }
            columns.push(image);
        }
        let dmax = order.iter().map(Monomial::degree).max().unwrap_or(0);
        let indices = g.times.indices();
        let basis = FilteredBasis::from_monomials(indices, dmax, order.clone())?;
        let mut sorted_columns = vec![TracePoly::zero(); basis.dim()];
        for (m, col) in order.iter().zip(columns) {
            sorted_columns[basis.position(m).expect("closure monomial")] = col;
        }
        Ok(Semigroup {
            matrix: OperatorMatrix::from_columns(kind, basis, &sorted_columns),
        })
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `e^{tau A} p` for `p` in the span of the closure.
    pub fn apply(&self, p: &TracePoly, tau: f64, tol: f64) -> Result<TracePoly> {
        let v = self.matrix.coefficients(p)?;
        Ok(self
            .matrix
            .polynomial(&self.matrix.exp_action(tau, &v, tol)?))
    }
}

/// Residual of Duhamel's formula on `basis`:
/// `max |e^{D + L/N^2} - e^D - N^{-2} int_0^1 e^{t(D + L/N^2)} L e^{(1-t)D} dt|`,
/// with the integral taken by `nodes`-point Gauss–Legendre.
///
/// Returns `(residual, change from halving the node count)`.
pub fn duhamel_residual(
    g: &Generator,
    basis: &FilteredBasis,
    n: u32,
    nodes: usize,
) -> Result<(f64, f64)> {
    let d = OperatorMatrix::build(OperatorKind::D, g, basis)?;
    let l = OperatorMatrix::build(OperatorKind::L, g, basis)?;
    let a = OperatorMatrix::build(OperatorKind::DPlusLOverN2(n), g, basis)?;
    let l_dense = l.to_dense();
    let integral = |k: usize| -> CMat {
        let (x, w) = gauss_legendre(k);
        let mut acc = CMat::zeros(basis.dim(), basis.dim());
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0);
            let left = a.dense_exp(t);
            let right = d.dense_exp(1.0 - t);
            let term = mul(
                mul(left.as_ref(), l_dense.as_ref()).as_ref(),
                right.as_ref(),
            );
            axpy(&mut acc, Complex64::new(0.5 * wi, 0.0), term.as_ref());
        }
        acc
    };
    let fine = integral(nodes);
    let coarse = integral((nodes / 2).max(1));
    let inv = Dim::Finite(n).inv_sq();
    let mut rhs = d.dense_exp(1.0);
    axpy(&mut rhs, Complex64::new(inv, 0.0), fine.as_ref());
    let residual = max_abs_diff(a.dense_exp(1.0).as_ref(), rhs.as_ref());
    Ok((residual, inv * max_abs_diff(fine.as_ref(), coarse.as_ref())))
}
