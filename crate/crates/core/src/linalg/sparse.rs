//! Compressed sparse row matrices and the exponential action on vectors.

use num_complex::Complex64;

use super::CMat;
use crate::error::{Error, Result};

/// Square complex matrix in CSR layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<Complex64>,
}

impl Csr {
    /// Builds from unsorted triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(
                r < dim && c < dim,
                "triplet ({r}, {c}) outside dimension {dim}"
            );
            if let (Some(&lr), Some(&lc)) = (rows.last(), col.last()) {
                if lr == r && lc == c {
                    *val.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col.push(c);
            val.push(v);
        }
        let keep: Vec<bool> = val.iter().map(|v| *v != Complex64::new(0.0, 0.0)).collect();
        let mut out_col = Vec::with_capacity(col.len());
        let mut out_val = Vec::with_capacity(val.len());
        for k in 0..col.len() {
            if keep[k] {
                row_ptr[rows[k] + 1] += 1;
                out_col.push(col[k]);
                out_val.push(val[k]);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            dim,
            row_ptr,
            col: out_col,
            val: out_val,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Csr {
            dim,
            row_ptr: vec![0; dim + 1],
            col: Vec::new(),
            val: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col[k], self.val[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col[range.clone()].binary_search(&c) {
            Ok(k) => self.val[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0f64; self.dim];
        for (k, &c) in self.col.iter().enumerate() {
            sums[c] += self.val[k].norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &CMat) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != Complex64::new(0.0, 0.0) {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Csr::from_triplets(m.nrows(), t)
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: Complex64, other: &Csr, b: Complex64) -> Csr {
        assert_eq!(self.dim, other.dim);
        let mut t: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, a * v)).collect();
        t.extend(other.triplets().map(|(r, c, v)| (r, c, b * v)));
        Csr::from_triplets(self.dim, t)
    }

    /// `e^{t A} x` by a truncated Taylor series with `ceil(t ||A||_1)` substeps.
    ///
    /// Each substep sums terms until two consecutive terms fall below `tol` relative
    /// to the partial sum.
    pub fn expm_action(&self, t: f64, x: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
        let norm = t.abs() * self.norm_one();
        let steps = norm.ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut v = x.to_vec();
        let mut term = vec![Complex64::new(0.0, 0.0); self.dim];
        let mut next = vec![Complex64::new(0.0, 0.0); self.dim];
        for _ in 0..steps {
            term.copy_from_slice(&v);
            let mut small = 0;
            for k in 1..200usize {
                self.matvec_into(&term, &mut next);
                let c = h / k as f64;
                for (a, b) in term.iter_mut().zip(&next) {
                    *a = b * c;
                }
                let mut tmax = 0.0f64;
                let mut vmax = 0.0f64;
                for (vi, ti) in v.iter_mut().zip(&term) {
                    *vi += ti;
                    tmax = tmax.max(ti.norm());
                    vmax = vmax.max(vi.norm());
                }
                if !tmax.is_finite() || !vmax.is_finite() {
                    return Err(Error::NonFinite("exponential action".into()));
                }
                if tmax <= tol * vmax.max(f64::MIN_POSITIVE) {
                    small += 1;
                    if small == 2 {
                        break;
                    }
                } else {
                    small = 0;
                }
            }
        }
        Ok(v)
    }
}
