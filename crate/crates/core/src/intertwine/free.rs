//! Moments in the free limit.
//!
//! `D` is a derivation, so `e^{tau D}` is an algebra homomorphism and
//! `[e^{tau D} P](1)` is `P` evaluated at `phi_w(tau) = [e^{tau D} v_w](1)`.
//! Each `phi_w` solves `phi_w' = c_w phi_w + sum kappa phi_a phi_b` with
//! `phi_w(0) = 1`, where `a`, `b` are strictly shorter than `w`. The system is
//! closed over all words reachable by splitting and is integrated with a
//! high-order Taylor series method.

use std::collections::HashMap;

use num_complex::Complex64;

use super::ops::d_word;
use super::Generator;
use crate::error::{Error, Result};
use crate::trace_algebra::{TracePoly, Word};

const ORDER: usize = 24;
const STEP_TOL: f64 = 1e-15;

/// The split-closure of a set of words under one generator.
#[derive(Clone, Debug)]
pub struct FreeMoments {
    words: Vec<Word>,
    id: HashMap<Word, usize>,
    diag: Vec<f64>,
    splits: Vec<Vec<(usize, usize, f64)>>,
}

impl FreeMoments {
    pub fn new<'a>(g: &Generator, seeds: impl IntoIterator<Item = &'a Word>) -> Result<Self> {
        let mut fm = FreeMoments {
            words: Vec::new(),
            id: HashMap::new(),
            diag: Vec::new(),
            splits: Vec::new(),
        };
        let mut stack: Vec<Word> = Vec::new();
        for w in seeds {
            if !fm.id.contains_key(w) {
                fm.intern(w.clone());
                stack.push(w.clone());
            }
        }
        while let Some(w) = stack.pop() {
            let me = fm.id[&w];
            let terms = d_word(g, &w)?;
            let mut splits = Vec::with_capacity(terms.len().saturating_sub(1));
            for (m, k) in terms.iter().skip(1) {
                let ws = m.words();
                let mut ids = [0usize; 2];
                for (slot, x) in ids.iter_mut().zip(ws) {
                    *slot = match fm.id.get(x) {
                        Some(&i) => i,
                        None => {
                            stack.push(x.clone());
                            fm.intern(x.clone())
                        }
                    };
                }
                splits.push((ids[0], ids[1], *k));
            }
            fm.diag[me] = terms[0].1;
            fm.splits[me] = splits;
        }
        Ok(fm)
    }

    fn intern(&mut self, w: Word) -> usize {
        let i = self.words.len();
        self.id.insert(w.clone(), i);
        self.words.push(w);
        self.diag.push(0.0);
        self.splits.push(Vec::new());
        i
    }

    /// Closure of the words of `p`.
    pub fn for_poly(g: &Generator, p: &TracePoly) -> Result<Self> {
        let words = p.words();
        Self::new(g, words.iter())
    }

    /// `[e^D P](1)`.
    pub fn expectation(g: &Generator, p: &TracePoly) -> Result<Complex64> {
        let fm = Self::for_poly(g, p)?;
        let values = fm.solve(&[1.0])?;
        fm.evaluate(p, &values[0])
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.id.get(w).copied()
    }

    /// `phi(tau)` for each requested `tau` (nondecreasing, nonnegative).
    pub fn solve(&self, taus: &[f64]) -> Result<Vec<Vec<f64>>> {
        if taus.iter().any(|t| !t.is_finite() || *t < 0.0) || taus.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidParameter(
                "solve times must be nondecreasing and nonnegative".into(),
            ));
        }
        let n = self.words.len();
        let mut f = vec![1.0f64; n];
        let mut tau = 0.0f64;
        let mut out = Vec::with_capacity(taus.len());
        let mut coeffs = vec![vec![0.0f64; ORDER + 1]; n];
        for &target in taus {
            while tau < target {
                self.taylor(&f, &mut coeffs);
                let scale = f.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                let mut h = f64::INFINITY;
                for k in [ORDER - 1, ORDER] {
                    let size = coeffs.iter().fold(0.0f64, |m, a| m.max(a[k].abs()));
                    if size > 0.0 {
                        h = h.min((STEP_TOL * scale / size).powf(1.0 / k as f64));
                    }
                }
                let h = h.min(target - tau);
                for (fi, a) in f.iter_mut().zip(&coeffs) {
                    *fi = a.iter().rev().fold(0.0, |acc, c| acc * h + c);
                }
                if f.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("free moment integration".into()));
                }
                tau = if target - tau <= h { target } else { tau + h };
            }
            out.push(f.clone());
        }
        Ok(out)
    }

    fn taylor(&self, f: &[f64], a: &mut [Vec<f64>]) {
        for (ai, fi) in a.iter_mut().zip(f) {
            ai[0] = *fi;
        }
        for k in 0..ORDER {
            for i in 0..self.words.len() {
                let mut acc = self.diag[i] * a[i][k];
                for &(x, y, kappa) in &self.splits[i] {
                    let mut conv = 0.0;
                    for m in 0..=k {
                        conv += a[x][m] * a[y][k - m];
                    }
                    acc += kappa * conv;
                }
                a[i][k + 1] = acc / (k + 1) as f64;
            }
        }
    }

    /// `P` at the word values `phi`.
    pub fn evaluate(&self, p: &TracePoly, phi: &[f64]) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in p.terms() {
            let mut v = *c;
            for w in m.words() {
                let i = self.index_of(w).ok_or_else(|| {
                    Error::InvalidParameter(format!("word {w} is not in the closure"))
                })?;
                v *= phi[i];
            }
            total += v;
        }
        Ok(total)
    }
}
