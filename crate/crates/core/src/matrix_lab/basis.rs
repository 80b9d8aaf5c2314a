use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::intertwine::RSParams;
use crate::linalg::{adjoint, axpy, max_abs_diff, mul, trace, trace_of_product, CMat};
use crate::trace_algebra::MatrixTuple;

/// Orthonormal Hermitian basis of `M_N` under `Tr(AB)`: the diagonal units,
/// then `(E_ij + E_ji)/sqrt 2` and `i(E_ij - E_ji)/sqrt 2` for `i < j`.
pub fn hermitian_basis(n: usize) -> Vec<CMat> {
    let zero = Complex64::new(0.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let mut m = CMat::zeros(n, n);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut re = CMat::from_fn(n, n, |_, _| zero);
            re[(i, j)] = Complex64::new(h, 0.0);
            re[(j, i)] = Complex64::new(h, 0.0);
            out.push(re);
            let mut im = CMat::from_fn(n, n, |_, _| zero);
            im[(i, j)] = Complex64::new(0.0, h);
            im[(j, i)] = Complex64::new(0.0, -h);
            out.push(im);
        }
    }
    out
}

/// Orthonormal basis `{sqrt(r/N) i H_k} U {sqrt(s/N) H_k}` for the `(r,s)` inner product.
///
/// A half whose weight is zero is left out, so `(1, 0)` yields `N^2` skew-Hermitian elements.
pub fn build_rs_basis(n: usize, rs: RSParams) -> Vec<CMat> {
    let hs = hermitian_basis(n);
    let mut out = Vec::with_capacity(2 * n * n);
    if rs.r() > 0.0 {
        let c = Complex64::new(0.0, (rs.r() / n as f64).sqrt());
        out.extend(hs.iter().map(|h| CMat::from_fn(n, n, |i, j| c * h[(i, j)])));
    }
    if rs.s() > 0.0 {
        let c = Complex64::new((rs.s() / n as f64).sqrt(), 0.0);
        out.extend(hs.iter().map(|h| CMat::from_fn(n, n, |i, j| c * h[(i, j)])));
    }
    out
}

/// `<A, B> = 1/2 (1/s + 1/r) N Re Tr(A B*) + 1/2 (1/s - 1/r) N Re Tr(A B)`; needs `r, s > 0`.
pub fn rs_inner_product(a: &CMat, b: &CMat, rs: RSParams) -> f64 {
    let n = a.nrows() as f64;
    let b_adj = crate::linalg::adjoint(b.as_ref());
    let with_adj = trace_of_product(a.as_ref(), b_adj.as_ref()).re;
    let plain = trace_of_product(a.as_ref(), b.as_ref()).re;
    0.5 * (1.0 / rs.s() + 1.0 / rs.r()) * n * with_adj
        + 0.5 * (1.0 / rs.s() - 1.0 / rs.r()) * n * plain
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Tuple `X1..Xk` of random matrices from a seeded stream.
pub fn random_tuple(n: usize, k: usize, seed: u64) -> Result<MatrixTuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MatrixTuple::from_vec((0..k).map(|_| random_matrix(n, &mut rng)).collect())
}

/// Residuals of the basis-sum identities, with `tr = Tr/N`:
///
/// * `sum tr(xi A) tr(xi B) = (s - r)/N^2 tr(AB)`
/// * `sum tr(xi* A) tr(xi B) = (s + r)/N^2 tr(AB)`
/// * `sum xi A xi = (s - r) tr(A) I`
/// * `sum xi* A xi = (s + r) tr(A) I`
///
/// Matrix residuals are entrywise maxima.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MagicResiduals {
    pub scalar_same: f64,
    pub scalar_mixed: f64,
    pub matrix_same: f64,
    pub matrix_mixed: f64,
}

impl MagicResiduals {
    pub fn max(&self) -> f64 {
        self.scalar_same
            .max(self.scalar_mixed)
            .max(self.matrix_same)
            .max(self.matrix_mixed)
    }

    /// Componentwise maximum.
    pub fn merge(self, o: MagicResiduals) -> MagicResiduals {
        MagicResiduals {
            scalar_same: self.scalar_same.max(o.scalar_same),
            scalar_mixed: self.scalar_mixed.max(o.scalar_mixed),
            matrix_same: self.matrix_same.max(o.matrix_same),
            matrix_mixed: self.matrix_mixed.max(o.matrix_mixed),
        }
    }
}

/// Residuals of the identities for one pair over `basis = build_rs_basis(N, rs)`.
pub fn magic_residuals(basis: &[CMat], rs: RSParams, a: &CMat, b: &CMat) -> MagicResiduals {
    let n = a.nrows();
    let nf = n as f64;
    let tr = |m: &CMat| trace(m.as_ref()) / nf;
    let ab = trace_of_product(a.as_ref(), b.as_ref()) / nf;
    let (same, mixed) = (rs.s() - rs.r(), rs.s() + rs.r());
    let mut sum_same = Complex64::new(0.0, 0.0);
    let mut sum_mixed = Complex64::new(0.0, 0.0);
    let mut mat_same = CMat::zeros(n, n);
    let mut mat_mixed = CMat::zeros(n, n);
    let one = Complex64::new(1.0, 0.0);
    for xi in basis {
        let xi_adj = adjoint(xi.as_ref());
        let xb = trace_of_product(xi.as_ref(), b.as_ref()) / nf;
        sum_same += trace_of_product(xi.as_ref(), a.as_ref()) / nf * xb;
        sum_mixed += trace_of_product(xi_adj.as_ref(), a.as_ref()) / nf * xb;
        let a_xi = mul(a.as_ref(), xi.as_ref());
        axpy(&mut mat_same, one, mul(xi.as_ref(), a_xi.as_ref()).as_ref());
        axpy(
            &mut mat_mixed,
            one,
            mul(xi_adj.as_ref(), a_xi.as_ref()).as_ref(),
        );
    }
    let scaled_id = |c: f64| {
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                tr(a) * c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };
    MagicResiduals {
        scalar_same: (sum_same - ab * (same / (nf * nf))).norm(),
        scalar_mixed: (sum_mixed - ab * (mixed / (nf * nf))).norm(),
        matrix_same: max_abs_diff(mat_same.as_ref(), scaled_id(same).as_ref()),
        matrix_mixed: max_abs_diff(mat_mixed.as_ref(), scaled_id(mixed).as_ref()),
    }
}

/// Worst residuals over `pairs` random pairs for every `N` in `ns`.
pub fn magic_suite(ns: &[usize], rs: RSParams, pairs: usize, seed: u64) -> MagicResiduals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = MagicResiduals::default();
    for &n in ns {
        let basis = build_rs_basis(n, rs);
        for _ in 0..pairs {
            let a = random_matrix(n, &mut rng);
            let b = random_matrix(n, &mut rng);
            worst = worst.merge(magic_residuals(&basis, rs, &a, &b));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let hs = hermitian_basis(3);
        assert_eq!(hs.len(), 9);
        for (a, x) in hs.iter().enumerate() {
            for (b, y) in hs.iter().enumerate() {
                let ip = trace_of_product(x.as_ref(), y.as_ref());
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - Complex64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn one_by_one_basis() {
        let rs = RSParams::new(0.3, 1.7).unwrap();
        let b = build_rs_basis(1, rs);
        assert_eq!(b.len(), 2);
        assert!((b[0][(0, 0)] - Complex64::new(0.0, 0.3f64.sqrt())).norm() < 1e-15);
        assert!((rs_inner_product(&b[0], &b[0], rs) - 1.0).abs() < 1e-14);
        assert!((rs_inner_product(&b[1], &b[1], rs) - 1.0).abs() < 1e-14);
        assert!(rs_inner_product(&b[0], &b[1], rs).abs() < 1e-15);
    }

    #[test]
    fn gram_matrix_is_identity() {
        for &(r, s) in &[(0.5, 0.5), (2.0, 0.3)] {
            let rs = RSParams::new(r, s).unwrap();
            for n in 1..=4 {
                let b = build_rs_basis(n, rs);
                assert_eq!(b.len(), 2 * n * n);
                for (i, x) in b.iter().enumerate() {
                    for (k, y) in b.iter().enumerate() {
                        let want = if i == k { 1.0 } else { 0.0 };
                        assert!((rs_inner_product(x, y, rs) - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn magic_identities_hold() {
        for rs in [
            RSParams::unitary(),
            RSParams::standard(),
            RSParams::new(2.0, 0.3).unwrap(),
        ] {
            let worst = magic_suite(&[1, 2, 5], rs, 5, 17);
            assert!(worst.max() < 1e-13, "{rs:?}: {worst:?}");
        }
    }

    #[test]
    fn wrong_basis_breaks_identities() {
        // Dropping one element must show up in the matrix forms.
        let rs = RSParams::standard();
        let mut basis = build_rs_basis(3, rs);
        basis.pop();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b) = (random_matrix(3, &mut rng), random_matrix(3, &mut rng));
        assert!(magic_residuals(&basis, rs, &a, &b).max() > 1e-3);
    }

    #[test]
    fn unitary_basis_is_skew_hermitian() {
        let b = build_rs_basis(3, RSParams::unitary());
        assert_eq!(b.len(), 9);
        for x in &b {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((x[(i, j)] + x[(j, i)].conj()).norm() < 1e-15);
                }
            }
        }
    }
}
