//! Dense and sparse complex linear algebra used by the operator and
//! simulation layers.

pub mod expm;
pub mod quadrature;
pub mod sparse;

use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;

/// Dense complex matrix (column-major).
pub type CMat = Mat<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

/// `a * b`.
pub fn mul(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> CMat {
    let mut c = Mat::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(c.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    c
}

/// `dst = a * b`.
pub fn mul_into(dst: &mut CMat, a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) {
    faer::linalg::matmul::matmul(dst.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
}

/// Owned conjugate transpose.
pub fn adjoint(a: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// Unnormalized trace.
pub fn trace(a: MatRef<'_, Complex64>) -> Complex64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Unnormalized `Tr(a b)` without forming the product.
pub fn trace_of_product(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Maximum absolute column sum.
pub fn norm_one(a: MatRef<'_, Complex64>) -> f64 {
    norm_one_inf(a).0
}

/// `(max column sum, max row sum)` of entry moduli, in one pass.
pub fn norm_one_inf(a: MatRef<'_, Complex64>) -> (f64, f64) {
    let mut rows = vec![0.0f64; a.nrows()];
    let mut one = 0.0f64;
    for j in 0..a.ncols() {
        let mut col = 0.0;
        for (i, r) in rows.iter_mut().enumerate() {
            let z = a[(i, j)];
            let m = (z.re * z.re + z.im * z.im).sqrt();
            col += m;
            *r += m;
        }
        one = one.max(col);
    }
    (one, rows.into_iter().fold(0.0, f64::max))
}

pub fn norm_fro(a: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        acc += match a.col(j).try_as_col_major() {
            Some(col) => col.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>(),
            None => (0..a.nrows()).map(|i| a[(i, j)].norm_sqr()).sum::<f64>(),
        };
    }
    acc.sqrt()
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `a + c * b` in place.
pub fn axpy(a: &mut CMat, c: Complex64, b: MatRef<'_, Complex64>) {
    for j in 0..a.ncols() {
        let dst = a.col_as_slice_mut(j);
        match b.col(j).try_as_col_major() {
            Some(src) => dst
                .iter_mut()
                .zip(src.as_slice())
                .for_each(|(x, y)| *x += c * y),
            None => dst
                .iter_mut()
                .enumerate()
                .for_each(|(i, x)| *x += c * b[(i, j)]),
        }
    }
}

pub fn scaled(a: MatRef<'_, Complex64>, c: Complex64) -> CMat {
    let mut out = Mat::zeros(a.nrows(), a.ncols());
    axpy(&mut out, c, a);
    out
}

pub fn is_finite(a: MatRef<'_, Complex64>) -> bool {
    (0..a.ncols())
        .all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_of_product_matches_matmul() {
        let a = Mat::from_fn(4, 4, |i, j| {
            Complex64::new(i as f64 - 0.5 * j as f64, 0.3 * (i * j) as f64)
        });
        let b = Mat::from_fn(4, 4, |i, j| {
            Complex64::new((i + 2 * j) as f64 * 0.1, -(i as f64))
        });
        let direct = trace(mul(a.as_ref(), b.as_ref()).as_ref());
        assert!((direct - trace_of_product(a.as_ref(), b.as_ref())).norm() < 1e-12);
    }

    #[test]
    fn adjoint_conjugates() {
        let a = Mat::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64));
        let h = adjoint(a.as_ref());
        assert_eq!(h.nrows(), 3);
        assert_eq!(h[(2, 1)], Complex64::new(1.0, -2.0));
    }
}
