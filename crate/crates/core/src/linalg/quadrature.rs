//! Gauss–Legendre quadrature with node doubling.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Nodes (increasing) and weights on `[-1, 1]` from Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Outcome of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub nodes: usize,
    pub est_error: f64,
}

pub const START_NODES: usize = 16;
pub const MAX_NODES: usize = 512;

/// Integrates `f` over `[a, b]`, doubling the node count from 16 up to 512
/// until successive values differ by at most `tol`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Integral>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    integrate_batch(|ts| ts.iter().map(|&t| f(t)).collect(), a, b, tol)
}

/// As [`integrate`], with all nodes of one rule handed to `f` at once in
/// increasing order when `a < b`.
pub fn integrate_batch<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Integral>
where
    F: FnMut(&[f64]) -> Result<Vec<Complex64>>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut rule = |n: usize| -> Result<Complex64> {
        let (x, w) = gauss_legendre(n);
        let ts: Vec<f64> = x.iter().map(|xi| mid + half * xi).collect();
        let values = f(&ts)?;
        let acc: Complex64 = values.iter().zip(&w).map(|(v, wi)| v * wi).sum();
        Ok(acc * half)
    };
    let mut n = START_NODES;
    let mut prev = rule(n)?;
    loop {
        let next_n = 2 * n;
        let cur = rule(next_n)?;
        let err = (cur - prev).norm();
        if !err.is_finite() {
            return Err(Error::NonFinite("quadrature integrand".into()));
        }
        if err <= tol {
            return Ok(Integral {
                value: cur,
                nodes: next_n,
                est_error: err,
            });
        }
        if next_n >= MAX_NODES {
            return Err(Error::QuadratureNotConverged {
                nodes: next_n,
                est_error: err,
                value_re: cur.re,
                value_im: cur.im,
            });
        }
        prev = cur;
        n = next_n;
    }
}
