//! The limiting complex Gaussian field `(xi_P)` and samples from it.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sigma_direct;
use crate::error::{Error, Result};
use crate::intertwine::Generator;
use crate::trace_algebra::TracePoly;

/// Eigenvalues above `-PSD_TOL * max(1, scale)` count as nonnegative.
const PSD_TOL: f64 = 1e-10;

/// Covariance `C_ij = sigma_T(P_i, P_j^*)` and pseudo-covariance
/// `R_ij = sigma_T(P_i, P_j)` of a finite family of test functions.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GaussianField {
    pub polys: Vec<String>,
    /// Row-major `[re, im]` entries.
    c: Vec<Vec<[f64; 2]>>,
    r: Vec<Vec<[f64; 2]>>,
}

fn pack(m: &[Vec<Complex64>]) -> Vec<Vec<[f64; 2]>> {
    m.iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn unpack(m: &[Vec<[f64; 2]>], i: usize, j: usize) -> Complex64 {
    Complex64::new(m[i][j][0], m[i][j][1])
}

impl GaussianField {
    /// Computes every entry with the direct method and checks the invariants.
    pub fn new(g: &Generator, polys: &[TracePoly], tol: f64) -> Result<Self> {
        let k = polys.len();
        let mut c = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        let mut r = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        let adj: Vec<TracePoly> = polys.iter().map(TracePoly::conjugate).collect();
        for i in 0..k {
            for j in 0..k {
                c[i][j] = sigma_direct(g, &polys[i], &adj[j], tol)?.value;
                if j >= i {
                    r[i][j] = sigma_direct(g, &polys[i], &polys[j], tol)?.value;
                    r[j][i] = r[i][j];
                }
            }
        }
        Self::from_matrices(polys.iter().map(|p| p.to_string()).collect(), c, r)
    }

    /// A field from given matrices; fails unless `C` is Hermitian and the real
    /// embedding is positive semidefinite.
    pub fn from_matrices(
        polys: Vec<String>,
        c: Vec<Vec<Complex64>>,
        r: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let k = c.len();
        if r.len() != k
            || c.iter().chain(&r).any(|row| row.len() != k)
            || (polys.len() != k && !polys.is_empty())
        {
            return Err(Error::DimensionMismatch(
                "covariance matrices must be square and of equal size".into(),
            ));
        }
        let scale = c
            .iter()
            .flatten()
            .chain(r.iter().flatten())
            .fold(1.0f64, |m, z| m.max(z.norm()));
        for i in 0..k {
            for j in 0..k {
                if (c[i][j] - c[j][i].conj()).norm() > PSD_TOL * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "C is not Hermitian at ({i}, {j})"
                    )));
                }
                if (r[i][j] - r[j][i]).norm() > PSD_TOL * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "R is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let field = GaussianField {
            polys,
            c: pack(&c),
            r: pack(&r),
        };
        let min = field.min_embedding_eigenvalue()?;
        if min < -PSD_TOL * scale {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// `E[xi_i conj(xi_j)]`.
    pub fn covariance(&self, i: usize, j: usize) -> Complex64 {
        unpack(&self.c, i, j)
    }

    /// `E[xi_i xi_j]`.
    pub fn pseudo_covariance(&self, i: usize, j: usize) -> Complex64 {
        unpack(&self.r, i, j)
    }

    /// Covariance of `(Re xi, Im xi)` as a `2k x 2k` real matrix.
    pub fn real_embedding(&self) -> Mat<f64> {
        let k = self.len();
        let raw = Mat::from_fn(2 * k, 2 * k, |a, b| {
            let (i, j) = (a % k, b % k);
            let (c, r) = (self.covariance(i, j), self.pseudo_covariance(i, j));
            0.5 * match (a < k, b < k) {
                (true, true) => (c + r).re,
                (false, false) => (c - r).re,
                (true, false) => (r - c).im,
                (false, true) => (c + r).im,
            }
        });
        Mat::from_fn(2 * k, 2 * k, |a, b| 0.5 * (raw[(a, b)] + raw[(b, a)]))
    }

    pub fn min_embedding_eigenvalue(&self) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        let values = self
            .real_embedding()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::NonFinite(format!("eigenvalues: {e:?}")))?;
        Ok(values.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Symmetric square root of the real embedding, negative eigenvalues clamped.
    fn factor(&self) -> Result<Mat<f64>> {
        let sigma = self.real_embedding();
        let eig = sigma
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NonFinite(format!("eigen: {e:?}")))?;
        let (u, s) = (eig.U(), eig.S().column_vector());
        let n = sigma.nrows();
        Ok(Mat::from_fn(n, n, |a, b| {
            (0..n)
                .map(|k| u[(a, k)] * s[k].max(0.0).sqrt() * u[(b, k)])
                .sum()
        }))
    }
}

/// `n` draws of `(xi_P)` from a seeded stream.
pub fn sample_gaussian_field(
    field: &GaussianField,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    let k = field.len();
    if n == 0 || k == 0 {
        return Ok(vec![Vec::new(); n]);
    }
    let l = field.factor()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0f64; 2 * k];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        let real: Vec<f64> = (0..2 * k)
            .map(|a| (0..2 * k).map(|b| l[(a, b)] * z[b]).sum())
            .collect();
        out.push(
            (0..k)
                .map(|i| Complex64::new(real[i], real[k + i]))
                .collect(),
        );
    }
    Ok(out)
}
