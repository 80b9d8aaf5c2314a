//! Monte Carlo estimators for means and fluctuation covariances.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::PathDataset;
use crate::covariance::{exact_fluctuation_moment, sigma_direct, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::intertwine::{Dim, Generator};
use crate::trace_algebra::{CachedEvaluator, TracePoly};

pub const DEFAULT_BATCHES: usize = 20;

/// A point estimate with its batch-means standard error.
///
/// For complex quantities the standard error is `sqrt(se_re^2 + se_im^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// `|estimate - target| / stderr`; zero when both sides agree exactly.
    pub fn z(&self, target: Complex64) -> f64 {
        let diff = (self.value() - target).norm();
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff <= 1e-12 * target.norm().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates `stat` on all samples and on `batches` contiguous batches.
pub fn batched(
    samples: usize,
    batches: usize,
    stat: impl Fn(Range<usize>) -> Complex64,
) -> Result<Estimate> {
    if batches < 2 || samples < 2 * batches {
        return Err(Error::NotEnoughSamples(format!(
            "{samples} samples for {batches} batches of at least 2"
        )));
    }
    let value = stat(0..samples);
    let parts: Vec<Complex64> = (0..batches)
        .map(|b| stat(b * samples / batches..(b + 1) * samples / batches))
        .collect();
    let mean: Complex64 = parts.iter().sum::<Complex64>() / batches as f64;
    let var = parts.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / (batches - 1) as f64;
    Ok(Estimate {
        re: value.re,
        im: value.im,
        stderr: (var / batches as f64).sqrt(),
    })
}

/// `[P_i]_N` for every sample, indexed `[sample][poly]`.
pub fn evaluate_samples(dataset: &PathDataset, ps: &[TracePoly]) -> Result<Vec<Vec<Complex64>>> {
    let idx = dataset.config.indices();
    for p in ps {
        p.check_indices(&idx)?;
    }
    dataset
        .tuples
        .par_iter()
        .map(|tuple| {
            let mut eval = CachedEvaluator::new(tuple);
            ps.iter().map(|p| eval.evaluate(p)).collect()
        })
        .collect()
}

fn mean(values: &[Vec<Complex64>], i: usize, range: Range<usize>) -> Complex64 {
    let len = range.len() as f64;
    values[range].iter().map(|v| v[i]).sum::<Complex64>() / len
}

/// Relative spread below which a polynomial counts as constant over the samples.
pub const CONSTANT_TOL: f64 = 1e-10;

/// Every sample of `P_i` agrees with the first up to [`CONSTANT_TOL`].
fn is_constant(values: &[Vec<Complex64>], i: usize) -> bool {
    let Some(first) = values.first().map(|v| v[i]) else {
        return true;
    };
    let scale = first.norm().max(1.0);
    values
        .iter()
        .all(|v| (v[i] - first).norm() <= CONSTANT_TOL * scale)
}

/// `N^2` times the sample (pseudo-)covariance over `range`.
fn scaled_covariance(
    values: &[Vec<Complex64>],
    i: usize,
    j: usize,
    conj: bool,
    n: f64,
    range: Range<usize>,
) -> Complex64 {
    let (mi, mj) = (
        mean(values, i, range.clone()),
        mean(values, j, range.clone()),
    );
    let len = range.len();
    let sum: Complex64 = values[range]
        .iter()
        .map(|v| {
            let b = v[j] - mj;
            (v[i] - mi) * if conj { b.conj() } else { b }
        })
        .sum();
    sum * (n * n / (len - 1) as f64)
}

/// `N^k E[prod_f X_f]` where factor `(i, conj)` is `X_{P_i}` or its
/// conjugate; each batch is centred at its own means.
pub fn mixed_moment(
    values: &[Vec<Complex64>],
    n: usize,
    factors: &[(usize, bool)],
    batches: usize,
) -> Result<Estimate> {
    let scale = (n as f64).powi(factors.len() as i32);
    batched(values.len(), batches, |r| {
        let centres: Vec<Complex64> = factors
            .iter()
            .map(|&(i, _)| mean(values, i, r.clone()))
            .collect();
        let len = r.len() as f64;
        let sum: Complex64 = values[r]
            .iter()
            .map(|v| {
                factors
                    .iter()
                    .zip(&centres)
                    .map(|(&(i, conj), c)| {
                        let x = v[i] - c;
                        if conj {
                            x.conj()
                        } else {
                            x
                        }
                    })
                    .product::<Complex64>()
            })
            .sum();
        sum * (scale / len)
    })
}

/// Sample skewness and excess kurtosis of real data, each with a batch-means
/// standard error. Both vanish for Gaussian data.
pub fn skewness_kurtosis(xs: &[f64], batches: usize) -> Result<(Estimate, Estimate)> {
    let moments = |r: Range<usize>| -> (f64, f64) {
        let part = &xs[r];
        let len = part.len() as f64;
        let m = part.iter().sum::<f64>() / len;
        let central = |k: i32| part.iter().map(|x| (x - m).powi(k)).sum::<f64>() / len;
        let var = central(2);
        if var == 0.0 {
            return (0.0, 0.0);
        }
        (central(3) / var.powf(1.5), central(4) / (var * var) - 3.0)
    };
    let real = |x: f64| Complex64::new(x, 0.0);
    let skew = batched(xs.len(), batches, |r| real(moments(r).0))?;
    let kurt = batched(xs.len(), batches, |r| real(moments(r).1))?;
    Ok((skew, kurt))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    /// `E[X_P conj(X_Q)]`.
    Covariance,
    /// `E[X_P X_Q]`.
    Pseudo,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanRow {
    pub poly: String,
    pub estimate: Estimate,
    /// Exact `E [P]_N` from the finite-`N` semigroup.
    pub predicted: Option<[f64; 2]>,
    pub z: Option<f64>,
    /// Every sample gave the same value up to [`CONSTANT_TOL`].
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovRow {
    pub i: usize,
    pub j: usize,
    pub kind: CovKind,
    pub estimate: Estimate,
    /// Exact finite-`N` second moment of the fluctuations.
    pub exact: Option<[f64; 2]>,
    /// `sigma_T` in the large-`N` limit.
    pub limit: Option<[f64; 2]>,
    /// Against `exact`.
    pub z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub n: usize,
    pub samples: usize,
    pub batches: usize,
    pub means: Vec<MeanRow>,
    pub covariances: Vec<CovRow>,
}

impl FluctuationReport {
    /// Largest `|z|` over all rows with a prediction.
    pub fn max_z(&self) -> f64 {
        self.means
            .iter()
            .filter_map(|m| m.z)
            .chain(self.covariances.iter().filter_map(|c| c.z))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateOptions {
    pub batches: usize,
    /// Attach exact finite-`N` and limiting predictions.
    pub predict: bool,
    pub tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            batches: DEFAULT_BATCHES,
            predict: true,
            tol: DEFAULT_TOL,
        }
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Means and fluctuation covariances of `ps` over the dataset.
pub fn estimate(
    dataset: &PathDataset,
    ps: &[TracePoly],
    opts: &EstimateOptions,
) -> Result<FluctuationReport> {
    let samples = dataset.len();
    let values = evaluate_samples(dataset, ps)?;
    let n = dataset.config.n;
    let g = Generator::new(dataset.config.rs, dataset.config.times.clone());
    let dim = Dim::Finite(n as u32);

    let degenerate: Vec<bool> = (0..ps.len()).map(|i| is_constant(&values, i)).collect();
    let mut means = Vec::with_capacity(ps.len());
    for (i, p) in ps.iter().enumerate() {
        let est = batched(samples, opts.batches, |r| mean(&values, i, r))?;
        let degenerate = degenerate[i];
        let predicted = if opts.predict {
            Some(g.heat_expectation(p, dim)?)
        } else {
            None
        };
        means.push(MeanRow {
            poly: p.to_string(),
            estimate: est,
            predicted: predicted.map(pair),
            z: predicted.map(|m| est.z(m)),
            degenerate,
        });
    }

    let mut covariances = Vec::new();
    for i in 0..ps.len() {
        for j in i..ps.len() {
            for kind in [CovKind::Covariance, CovKind::Pseudo] {
                let conj = kind == CovKind::Covariance;
                // A constant has no fluctuation; its rounding noise is not estimated.
                let est = batched(samples, opts.batches, |r| {
                    if degenerate[i] || degenerate[j] {
                        Complex64::new(0.0, 0.0)
                    } else {
                        scaled_covariance(&values, i, j, conj, n as f64, r)
                    }
                })?;
                let other = if conj {
                    ps[j].conjugate()
                } else {
                    ps[j].clone()
                };
                let (exact, limit) = if opts.predict {
                    let pair_ps = [ps[i].clone(), other.clone()];
                    (
                        Some(exact_fluctuation_moment(&g, &pair_ps, n as u32)?),
                        Some(sigma_direct(&g, &ps[i], &other, opts.tol)?.value),
                    )
                } else {
                    (None, None)
                };
                covariances.push(CovRow {
                    i,
                    j,
                    kind,
                    estimate: est,
                    exact: exact.map(pair),
                    limit: limit.map(pair),
                    z: exact.map(|e| est.z(e)),
                });
            }
        }
    }
    Ok(FluctuationReport {
        n,
        samples,
        batches: opts.batches,
        means,
        covariances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intertwine::{RSParams, TimeVector};
    use crate::matrix_lab::{simulate_paths, Scheme, SimConfig};
    use crate::trace_algebra::parse_any;

    #[test]
    fn batch_means_of_constant_data() {
        let e = batched(40, 20, |_| Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(e.value(), Complex64::new(2.0, 0.0));
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.z(Complex64::new(2.0, 0.0)), 0.0);
        assert!(batched(30, 20, |_| Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn balanced_batches_have_no_spread() {
        // Deterministic +-1 pattern: each batch of 4 has mean zero.
        let xs: Vec<f64> = (0..80)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let e = batched(80, 20, |r| {
            Complex64::new(xs[r.clone()].iter().sum::<f64>() / r.len() as f64, 0.0)
        })
        .unwrap();
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn gaussian_shape_and_moments() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let (skew, kurt) = skewness_kurtosis(&xs, 20).unwrap();
        assert!(skew.z(Complex64::new(0.0, 0.0)) < 4.0 && kurt.z(Complex64::new(0.0, 0.0)) < 4.0);
        // Exponential data: skewness 2.
        let ys: Vec<f64> = xs
            .chunks(2)
            .map(|p| 0.5 * (p[0] * p[0] + p[1] * p[1]))
            .collect();
        let (skew, _) = skewness_kurtosis(&ys, 20).unwrap();
        assert!((skew.re - 2.0).abs() < 0.3, "{skew:?}");

        let values: Vec<Vec<Complex64>> = xs
            .chunks(2)
            .map(|p| vec![Complex64::new(p[0], p[1])])
            .collect();
        let second = mixed_moment(&values, 2, &[(0, false), (0, true)], 20).unwrap();
        assert!((second.re - 8.0).abs() < 4.0 * second.stderr.max(0.1));
        let third = mixed_moment(&values, 1, &[(0, false), (0, false), (0, true)], 20).unwrap();
        assert!(third.z(Complex64::new(0.0, 0.0)) < 4.0);
    }

    #[test]
    fn constant_polynomial_is_degenerate() {
        let cfg = SimConfig {
            n: 3,
            rs: RSParams::unitary(),
            times: TimeVector::from_slice(&[0.5]).unwrap(),
            steps_per_unit_time: 10,
            samples: 40,
            scheme: Scheme::MultiplicativeExp,
            seed: 9,
        };
        let d = simulate_paths(&cfg).unwrap();
        let ps = [
            parse_any("2").unwrap(),
            parse_any("tr(X1)").unwrap(),
            parse_any("tr(X1 X1*)").unwrap(),
        ];
        let report = estimate(&d, &ps, &EstimateOptions::default()).unwrap();
        assert!(report.means[0].degenerate);
        // Unitary up to rounding: constant, with no fluctuation rows to speak of.
        assert!(report.means[2].degenerate);
        for c in report.covariances.iter().filter(|c| c.j == 2) {
            assert_eq!(c.estimate.value(), Complex64::new(0.0, 0.0));
            assert_eq!(c.z, Some(0.0));
        }
        assert_eq!(report.means[0].estimate.stderr, 0.0);
        assert_eq!(
            report.covariances[0].estimate.value(),
            Complex64::new(0.0, 0.0)
        );
        assert!(!report.means[1].degenerate);
        let m = report.means[1].predicted.unwrap();
        assert!((m[0] - (-0.25f64).exp()).abs() < 1e-12);
    }
}
