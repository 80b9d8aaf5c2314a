//! Convergence of exact finite-`N` fluctuation moments to their Wick limit.

use num_complex::Complex64;
use serde::Serialize;

use crate::covariance::{exact_fluctuation_moment, wick_moment};
use crate::error::{Error, Result};
use crate::intertwine::Generator;
use crate::trace_algebra::TracePoly;

/// Differences below this count as converged.
pub const CONVERGED_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: u32,
    pub re: f64,
    pub im: f64,
    /// `|moment(N) - limit|`.
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateStudy {
    pub limit: [f64; 2],
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log difference` against `log N`.
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// Every difference is below [`CONVERGED_TOL`].
    pub converged: bool,
}

/// Least-squares fit `y = a + b x`; returns `(b, stderr of b)`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, c)| (c - my - b * (a - mx)).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (b, se)
}

/// `E[X_{P_1} ... X_{P_k}]` at each `N` against the Wick limit.
pub fn rate_study(ns: &[u32], g: &Generator, ps: &[TracePoly], tol: f64) -> Result<RateStudy> {
    if ns.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "rate study needs at least 3 values of N, got {}",
            ns.len()
        )));
    }
    let limit = if ps.len() == 1 {
        Complex64::new(0.0, 0.0)
    } else {
        wick_moment(g, ps, tol)?
    };
    let rows: Vec<RateRow> = ns
        .iter()
        .map(|&n| {
            let m = exact_fluctuation_moment(g, ps, n)?;
            Ok(RateRow {
                n,
                re: m.re,
                im: m.im,
                difference: (m - limit).norm(),
            })
        })
        .collect::<Result<_>>()?;
    let converged = rows.iter().all(|r| r.difference < CONVERGED_TOL);
    let (slope, slope_stderr) = if converged || rows.iter().any(|r| r.difference == 0.0) {
        (None, None)
    } else {
        let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.difference.ln()).collect();
        let (b, se) = fit_slope(&x, &y);
        (Some(b), Some(se))
    };
    Ok(RateStudy {
        limit: [limit.re, limit.im],
        rows,
        slope,
        slope_stderr,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intertwine::{RSParams, TimeVector};
    use crate::trace_algebra::parse_any;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let (b, se) = fit_slope(&x, &y);
        assert!((b + 2.0).abs() < 1e-14 && se < 1e-14);
    }

    #[test]
    fn single_function_is_converged() {
        let g = Generator::new(RSParams::unitary(), TimeVector::from_slice(&[1.0]).unwrap());
        let s = rate_study(&[2, 3, 4], &g, &[parse_any("tr(X1)").unwrap()], 1e-9).unwrap();
        assert!(s.converged);
        assert!(s.slope.is_none());
    }

    #[test]
    fn needs_three_dimensions() {
        let g = Generator::new(RSParams::unitary(), TimeVector::from_slice(&[1.0]).unwrap());
        assert!(rate_study(&[2, 3], &g, &[parse_any("tr(X1)").unwrap()], 1e-9).is_err());
    }
}
