use std::collections::{BTreeMap, HashMap};

use faer::MatRef;
use num_complex::Complex64;

use super::{Letter, TracePoly, Word};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, mul, mul_into, trace, trace_of_product, CMat};

/// A tuple of square matrices of one common dimension, keyed by index.
#[derive(Clone, Debug)]
pub struct MatrixTuple {
    dim: usize,
    mats: BTreeMap<u16, CMat>,
    adjoints: BTreeMap<u16, CMat>,
}

impl MatrixTuple {
    pub fn new(mats: BTreeMap<u16, CMat>) -> Result<Self> {
        let dim = match mats.values().next() {
            Some(m) => m.nrows(),
            None => return Err(Error::DimensionMismatch("empty matrix tuple".into())),
        };
        if dim == 0 {
            return Err(Error::DimensionMismatch(
                "matrices must be at least 1x1".into(),
            ));
        }
        for (j, m) in &mats {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {j} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let adjoints = mats
            .iter()
            .map(|(&j, m)| (j, adjoint(m.as_ref())))
            .collect();
        Ok(MatrixTuple {
            dim,
            mats,
            adjoints,
        })
    }

    /// Matrices indexed `1, 2, ...` in order.
    pub fn from_vec(mats: Vec<CMat>) -> Result<Self> {
        Self::new(
            mats.into_iter()
                .enumerate()
                .map(|(k, m)| (k as u16 + 1, m))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: u16) -> Option<&CMat> {
        self.mats.get(&j)
    }

    pub fn indices(&self) -> impl Iterator<Item = u16> + '_ {
        self.mats.keys().copied()
    }

    pub fn letter(&self, l: Letter) -> Result<MatRef<'_, Complex64>> {
        let table = if l.star { &self.adjoints } else { &self.mats };
        table
            .get(&l.index)
            .map(|m| m.as_ref())
            .ok_or(Error::UnknownIndex { index: l.index })
    }

    /// The matrix product spelled by `letters`; identity for the empty slice.
    pub fn product(&self, letters: &[Letter]) -> Result<CMat> {
        let Some((first, rest)) = letters.split_first() else {
            return Ok(CMat::identity(self.dim, self.dim));
        };
        let mut acc = self.letter(*first)?.to_owned();
        let mut scratch = CMat::zeros(self.dim, self.dim);
        for l in rest {
            mul_into(&mut scratch, acc.as_ref(), self.letter(*l)?);
            std::mem::swap(&mut acc, &mut scratch);
        }
        Ok(acc)
    }

    /// Normalized trace of the word.
    pub fn word_trace(&self, w: &Word) -> Result<Complex64> {
        let letters = w.letters();
        let n = self.dim as f64;
        if letters.len() == 1 {
            return Ok(trace(self.letter(letters[0])?) / n);
        }
        let (last, init) = letters.split_last().expect("nonempty word");
        let head = self.product(init)?;
        Ok(trace_of_product(head.as_ref(), self.letter(*last)?) / n)
    }

    /// `[P]_N` at this tuple.
    pub fn evaluate(&self, p: &TracePoly) -> Result<Complex64> {
        CachedEvaluator::new(self).evaluate(p)
    }

    /// Entrywise map, e.g. for collapsing or scaling a tuple.
    pub fn map(&self, f: impl Fn(u16, &CMat) -> CMat) -> Result<MatrixTuple> {
        Self::new(self.mats.iter().map(|(&j, m)| (j, f(j, m))).collect())
    }

    /// Product of two tuples index by index (`A_j B_j`), over the indices of `self`.
    pub fn times(&self, other: &MatrixTuple) -> Result<MatrixTuple> {
        let mut out = BTreeMap::new();
        for (&j, a) in &self.mats {
            let b = other.get(j).ok_or(Error::UnknownIndex { index: j })?;
            out.insert(j, mul(a.as_ref(), b.as_ref()));
        }
        Self::new(out)
    }
}

/// Evaluator that remembers word traces across calls.
#[derive(Debug)]
pub struct CachedEvaluator<'a> {
    tuple: &'a MatrixTuple,
    cache: HashMap<Word, Complex64>,
}

impl<'a> CachedEvaluator<'a> {
    pub fn new(tuple: &'a MatrixTuple) -> Self {
        CachedEvaluator {
            tuple,
            cache: HashMap::new(),
        }
    }

    pub fn word(&mut self, w: &Word) -> Result<Complex64> {
        if let Some(x) = self.cache.get(w) {
            return Ok(*x);
        }
        let x = self.tuple.word_trace(w)?;
        self.cache.insert(w.clone(), x);
        Ok(x)
    }

    pub fn evaluate(&mut self, p: &TracePoly) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in p.terms() {
            let mut v = *c;
            for w in m.words() {
                v *= self.word(w)?;
            }
            total += v;
        }
        Ok(total)
    }
}

impl TracePoly {
    /// `[P]_N(A)` with the normalized trace.
    pub fn evaluate(&self, a: &MatrixTuple) -> Result<Complex64> {
        a.evaluate(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_algebra::Monomial;

    fn diag(values: &[f64]) -> CMat {
        let n = values.len();
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn identity_trace_is_one() {
        let a = MatrixTuple::from_vec(vec![CMat::identity(3, 3)]).unwrap();
        let p = TracePoly::var(Word::single(Letter::plain(1)));
        assert_eq!(p.evaluate(&a).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn square_of_diagonal() {
        let a = MatrixTuple::from_vec(vec![diag(&[1.0, 2.0])]).unwrap();
        let p = TracePoly::trace_of(&[Letter::plain(1), Letter::plain(1)]).unwrap();
        assert!((p.evaluate(&a).unwrap() - Complex64::new(2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn product_of_variables_evaluates_multiplicatively() {
        let m = CMat::from_fn(2, 2, |i, j| Complex64::new(i as f64 + 1.0, j as f64 - 0.5));
        let a = MatrixTuple::from_vec(vec![m]).unwrap();
        let x = Word::single(Letter::plain(1));
        let xs = Word::single(Letter::adjoint(1));
        let p = TracePoly::term(
            Monomial::from_words(vec![x.clone(), xs.clone()]),
            Complex64::new(1.0, 0.0),
        );
        let want = a.word_trace(&x).unwrap() * a.word_trace(&xs).unwrap();
        assert!((p.evaluate(&a).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let r = MatrixTuple::from_vec(vec![CMat::identity(2, 2), CMat::identity(3, 3)]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn missing_index_is_reported() {
        let a = MatrixTuple::from_vec(vec![CMat::identity(2, 2)]).unwrap();
        let p = TracePoly::var(Word::single(Letter::plain(2)));
        assert!(matches!(
            p.evaluate(&a),
            Err(Error::UnknownIndex { index: 2 })
        ));
    }
}
