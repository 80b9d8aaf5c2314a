//! Dense matrix exponentials.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use super::{axpy, identity, mul, norm_one, CMat};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn squarings_for(norm: f64, theta: f64) -> u32 {
    if norm <= theta || !norm.is_finite() {
        0
    } else {
        (norm / theta).log2().ceil().max(0.0) as u32
    }
}

/// Degree-13 Padé approximant with scaling and squaring.
pub fn expm_pade(a: MatRef<'_, Complex64>) -> CMat {
    let n = a.nrows();
    let s = squarings_for(norm_one(a), THETA13);
    let scale = c(0.5f64.powi(s as i32));
    let a = Mat::from_fn(n, n, |i, j| scale * a[(i, j)]);
    let id = identity(n);
    let a2 = mul(a.as_ref(), a.as_ref());
    let a4 = mul(a2.as_ref(), a2.as_ref());
    let a6 = mul(a4.as_ref(), a2.as_ref());
    let b = PADE13;

    let mut inner_u = Mat::zeros(n, n);
    axpy(&mut inner_u, c(b[13]), a6.as_ref());
    axpy(&mut inner_u, c(b[11]), a4.as_ref());
    axpy(&mut inner_u, c(b[9]), a2.as_ref());
    let mut u = mul(a6.as_ref(), inner_u.as_ref());
    axpy(&mut u, c(b[7]), a6.as_ref());
    axpy(&mut u, c(b[5]), a4.as_ref());
    axpy(&mut u, c(b[3]), a2.as_ref());
    axpy(&mut u, c(b[1]), id.as_ref());
    let u = mul(a.as_ref(), u.as_ref());

    let mut inner_v = Mat::zeros(n, n);
    axpy(&mut inner_v, c(b[12]), a6.as_ref());
    axpy(&mut inner_v, c(b[10]), a4.as_ref());
    axpy(&mut inner_v, c(b[8]), a2.as_ref());
    let mut v = mul(a6.as_ref(), inner_v.as_ref());
    axpy(&mut v, c(b[6]), a6.as_ref());
    axpy(&mut v, c(b[4]), a4.as_ref());
    axpy(&mut v, c(b[2]), a2.as_ref());
    axpy(&mut v, c(b[0]), id.as_ref());

    let p = Mat::from_fn(n, n, |i, j| v[(i, j)] + u[(i, j)]);
    let q = Mat::from_fn(n, n, |i, j| v[(i, j)] - u[(i, j)]);
    use faer::linalg::solvers::Solve;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = mul(r.as_ref(), r.as_ref());
    }
    r
}

/// `dst += diag * I + sum c_i M_i` in one pass over contiguous columns.
fn accumulate(dst: &mut CMat, diag: f64, terms: &[(f64, &CMat)]) {
    for j in 0..dst.ncols() {
        let out = dst.col_as_slice_mut(j);
        for &(c, m) in terms {
            out.iter_mut()
                .zip(m.col_as_slice(j))
                .for_each(|(x, y)| *x += y * c);
        }
        out[j] += diag;
    }
}

fn scale_in_place(m: &mut CMat, f: f64) {
    for j in 0..m.ncols() {
        m.col_as_slice_mut(j).iter_mut().for_each(|x| *x *= f);
    }
}

/// `sum_{k <= p q} A^k / k!` from `powers = [A, ..., A^p]` by Paterson–Stockmeyer:
/// `q - 1` further products.
fn taylor_ps(powers: &[CMat], q: usize) -> CMat {
    let p = powers.len();
    let n = powers[0].nrows();
    let mut inv = vec![1.0f64; p * q + 1];
    for k in 1..inv.len() {
        inv[k] = inv[k - 1] / k as f64;
    }
    let top = &powers[p - 1];
    // Block k is sum_{i<p} A^i / (pk+i)!; the last block is the scalar 1/(pq)!.
    let block = |m: &mut CMat, k: usize, lead: f64| {
        let mut terms: Vec<(f64, &CMat)> =
            (1..p).map(|i| (inv[p * k + i], &powers[i - 1])).collect();
        terms.push((lead, top));
        accumulate(m, inv[p * k], &terms);
    };
    let mut acc = Mat::zeros(n, n);
    block(&mut acc, q - 1, inv[p * q]);
    for k in (0..q - 1).rev() {
        acc = mul(acc.as_ref(), top.as_ref());
        block(&mut acc, k, 0.0);
    }
    acc
}

/// Below this `alpha`, degree 9 meets the degree-12 error bound at `alpha = 1/2`.
const THETA9: f64 = 0.19284539703306353;

/// Exponential of a matrix of modest norm: Taylor polynomial of degree 9 or 12
/// with scaling and squaring.
///
/// With `d_k = |A^k|^(1/k)` in the 1-norm, `|A^k| <= max(d_p, d_{p+1})^k` for
/// every `k >= p (p - 1)`. Degree 9 is used when `max(d_2, d_3) <= THETA9`;
/// otherwise the matrix is scaled until `max(d_3, d_4) <= 1/2` and degree 12 is
/// used. Either way the relative truncation error is about `2^-13 / 13!`.
pub fn expm_taylor(a: MatRef<'_, Complex64>) -> CMat {
    let a1 = a.to_owned();
    let a2 = mul(a1.as_ref(), a1.as_ref());
    let a3 = mul(a2.as_ref(), a1.as_ref());
    let d3 = norm_one(a3.as_ref()).cbrt();
    if norm_one(a2.as_ref()).sqrt().max(d3) <= THETA9 {
        return taylor_ps(&[a1, a2, a3], 3);
    }
    let a4 = mul(a2.as_ref(), a2.as_ref());
    let s = squarings_for(d3.max(norm_one(a4.as_ref()).powf(0.25)), 0.5);
    let mut powers = [a1, a2, a3, a4];
    if s > 0 {
        let h = 0.5f64.powi(s as i32);
        for (k, m) in powers.iter_mut().enumerate() {
            scale_in_place(m, h.powi(k as i32 + 1));
        }
    }
    let mut acc = taylor_ps(&powers, 3);
    for _ in 0..s {
        acc = mul(acc.as_ref(), acc.as_ref());
    }
    acc
}
