//! Brute-force evaluation of `1/2 sum_j t_j Delta_j` on trace polynomials by
//! exact insertion derivatives summed over an explicit orthonormal basis.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ops::gap;
use super::FilteredBasis;
use super::Generator;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, mul, trace_of_product, CMat};
use crate::matrix_lab::{build_rs_basis, random_matrix};
use crate::trace_algebra::{CachedEvaluator, Letter, MatrixTuple, TracePoly, Word};

/// Brute-force Laplacian value next to the symbolic parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplacianParts {
    /// `1/2 (T . Delta) [P]_N (g)` from explicit derivatives.
    pub brute: Complex64,
    /// `[D P]_N (g)`.
    pub d_part: Complex64,
    /// `[L P]_N (g)`.
    pub l_part: Complex64,
    pub n: usize,
}

impl LaplacianParts {
    pub fn predicted(&self) -> Complex64 {
        self.d_part + self.l_part / (self.n * self.n) as f64
    }

    /// `|brute - predicted| / max(1, |brute|)`.
    pub fn relative_error(&self) -> f64 {
        (self.brute - self.predicted()).norm() / self.brute.norm().max(1.0)
    }
}

/// One-shot oracle for a single polynomial.
pub fn laplacian_parts_oracle(
    p: &TracePoly,
    g: &MatrixTuple,
    generator: &Generator,
) -> Result<LaplacianParts> {
    LaplacianOracle::new(generator, g).parts(p)
}

#[derive(Clone, Debug)]
struct WordDerivatives {
    /// `d/du tr(w)` along each basis element.
    first: Vec<Complex64>,
    /// Sum over the basis of second derivatives.
    second: Complex64,
}

/// Oracle that caches per-word derivatives across polynomials.
pub struct LaplacianOracle<'a> {
    generator: &'a Generator,
    tuple: &'a MatrixTuple,
    xis: Vec<CMat>,
    xis_adj: Vec<CMat>,
    derivatives: HashMap<(Word, u16), WordDerivatives>,
    eval: CachedEvaluator<'a>,
}

impl<'a> LaplacianOracle<'a> {
    pub fn new(generator: &'a Generator, tuple: &'a MatrixTuple) -> Self {
        let xis = build_rs_basis(tuple.dim(), generator.rs);
        let xis_adj = xis.iter().map(|x| adjoint(x.as_ref())).collect();
        LaplacianOracle {
            generator,
            tuple,
            xis,
            xis_adj,
            derivatives: HashMap::new(),
            eval: CachedEvaluator::new(tuple),
        }
    }

    pub fn parts(&mut self, p: &TracePoly) -> Result<LaplacianParts> {
        let brute = self.brute(p)?;
        let d_part = self.eval.evaluate(&self.generator.apply_d(p)?)?;
        let l_part = self.eval.evaluate(&self.generator.apply_l(p)?)?;
        Ok(LaplacianParts {
            brute,
            d_part,
            l_part,
            n: self.tuple.dim(),
        })
    }

    /// `1/2 sum_j t_j sum_xi d^2/du^2 [P]_N(g_j e^{u xi})` at `u = 0`.
    pub fn brute(&mut self, p: &TracePoly) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        let indices: Vec<(u16, f64)> = self.generator.times.iter().collect();
        for j in p.indices() {
            if !indices.iter().any(|&(k, _)| k == j) {
                return Err(Error::UnknownIndex { index: j });
            }
        }
        for (m, c) in p.terms() {
            let words = m.words();
            let values: Vec<Complex64> = words
                .iter()
                .map(|w| self.eval.word(w))
                .collect::<Result<_>>()?;
            let others = |skip: &[usize]| -> Complex64 {
                values
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !skip.contains(i))
                    .map(|(_, v)| *v)
                    .product()
            };
            for &(j, t) in &indices {
                if !words.iter().any(|w| w.count_index(j) > 0) {
                    continue;
                }
                let ders: Vec<Option<WordDerivatives>> = words
                    .iter()
                    .map(|w| {
                        if w.count_index(j) > 0 {
                            self.word_derivatives(w, j).map(Some)
                        } else {
                            Ok(None)
                        }
                    })
                    .collect::<Result<_>>()?;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, d) in ders.iter().enumerate() {
                    let Some(d) = d else { continue };
                    acc += d.second * others(&[i]);
                    for (k, e) in ders.iter().enumerate().skip(i + 1) {
                        let Some(e) = e else { continue };
                        let pair: Complex64 =
                            d.first.iter().zip(&e.first).map(|(a, b)| a * b).sum();
                        acc += 2.0 * pair * others(&[i, k]);
                    }
                }
                total += c * acc * (0.5 * t);
            }
        }
        Ok(total)
    }

    fn word_derivatives(&mut self, w: &Word, j: u16) -> Result<WordDerivatives> {
        if let Some(d) = self.derivatives.get(&(w.clone(), j)) {
            return Ok(d.clone());
        }
        let d = self.compute_derivatives(w, j)?;
        self.derivatives.insert((w.clone(), j), d.clone());
        Ok(d)
    }

    fn arc(&self, letters: &[Letter], from: usize, len: usize) -> Result<CMat> {
        let n = letters.len();
        let seq: Vec<Letter> = (0..len).map(|k| letters[(from + k) % n]).collect();
        self.tuple.product(&seq)
    }

    fn compute_derivatives(&self, w: &Word, j: u16) -> Result<WordDerivatives> {
        let letters = w.letters();
        let n = letters.len();
        let nf = self.tuple.dim() as f64;
        let occ: Vec<(usize, bool)> = (0..n)
            .filter(|&k| letters[k].index == j)
            .map(|k| (gap(letters, k), letters[k].star))
            .collect();
        let insert = |star: bool, x: usize| if star { &self.xis_adj[x] } else { &self.xis[x] };
        let rotations: Vec<CMat> = occ
            .iter()
            .map(|&(g, _)| self.arc(letters, g, n))
            .collect::<Result<_>>()?;

        let nb = self.xis.len();
        let mut first = vec![Complex64::new(0.0, 0.0); nb];
        let mut second = Complex64::new(0.0, 0.0);
        for (p, &(gp, sp)) in occ.iter().enumerate() {
            for (x, f) in first.iter_mut().enumerate() {
                *f += trace_of_product(rotations[p].as_ref(), insert(sp, x).as_ref()) / nf;
            }
            for x in 0..nb {
                let xx = mul(insert(sp, x).as_ref(), insert(sp, x).as_ref());
                second += trace_of_product(rotations[p].as_ref(), xx.as_ref()) / nf;
            }
            for &(gq, sq) in occ.iter().skip(p + 1) {
                if gp == gq {
                    // A plain letter and the adjoint right after it: xi then xi*.
                    for x in 0..nb {
                        let pair = mul(self.xis[x].as_ref(), self.xis_adj[x].as_ref());
                        second += 2.0 * trace_of_product(rotations[p].as_ref(), pair.as_ref()) / nf;
                    }
                    continue;
                }
                let b = self.arc(letters, gp, (gq + n - gp) % n)?;
                let a = self.arc(letters, gq, (gp + n - gq) % n)?;
                for x in 0..nb {
                    let left = mul(insert(sp, x).as_ref(), b.as_ref());
                    let right = mul(insert(sq, x).as_ref(), a.as_ref());
                    second += 2.0 * trace_of_product(left.as_ref(), right.as_ref()) / nf;
                }
            }
        }
        Ok(WordDerivatives { first, second })
    }
}

/// Outcome of checking every monomial of a basis against the oracle.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct IntertwiningReport {
    pub checked: usize,
    pub max_relative_error: f64,
    /// Monomial and dimension of the largest error.
    pub worst: Option<(String, usize)>,
    /// `predicted / brute` there; 2 under the full-Laplacian convention.
    pub worst_ratio: Option<[f64; 2]>,
}

/// Compares brute force against `[D P]_N + N^-2 [L P]_N` for every monomial of
/// `basis`, at one random tuple per `N`.
pub fn intertwining_suite(
    g: &Generator,
    basis: &FilteredBasis,
    ns: &[usize],
    seed: u64,
) -> Result<IntertwiningReport> {
    let mut report = IntertwiningReport {
        checked: 0,
        max_relative_error: 0.0,
        worst: None,
        worst_ratio: None,
    };
    for (i, &n) in ns.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let tuple = MatrixTuple::new(
            basis
                .indices()
                .iter()
                .map(|j| (j, random_matrix(n, &mut rng)))
                .collect(),
        )?;
        let mut oracle = LaplacianOracle::new(g, &tuple);
        for m in basis.monomials() {
            let parts = oracle.parts(&TracePoly::term(m.clone(), Complex64::new(1.0, 0.0)))?;
            let err = parts.relative_error();
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                let ratio = parts.predicted() / parts.brute;
                report.worst_ratio = ratio.is_finite().then_some([ratio.re, ratio.im]);
                report.max_relative_error = err;
                report.worst = Some((m.to_string(), n));
            }
        }
    }
    Ok(report)
}
