use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::trace_algebra::{IndexSet, Letter, Monomial, Word};

pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// Canonical words of length exactly `len` over the letters of `j`, in increasing order.
///
/// Fredricksen–Kessler–Maiorana enumeration over the digits `2 * pos(index) + star`.
pub fn necklaces(j: &IndexSet, len: usize) -> Vec<Word> {
    if len == 0 {
        return Vec::new();
    }
    let alphabet: Vec<Letter> = j
        .iter()
        .flat_map(|i| [Letter::plain(i), Letter::adjoint(i)])
        .collect();
    let k = alphabet.len();
    let mut out = Vec::new();
    let mut a = vec![0usize; len + 1];
    fn rec(
        t: usize,
        p: usize,
        n: usize,
        k: usize,
        a: &mut Vec<usize>,
        emit: &mut dyn FnMut(&[usize]),
    ) {
        if t > n {
            if n.is_multiple_of(p) {
                emit(&a[1..=n]);
            }
            return;
        }
        a[t] = a[t - p];
        rec(t + 1, p, n, k, a, emit);
        for d in a[t - p] + 1..k {
            a[t] = d;
            rec(t + 1, t, n, k, a, emit);
        }
    }
    rec(1, 1, len, k, &mut a, &mut |digits| {
        out.push(Word::from_canonical(
            digits.iter().map(|&d| alphabet[d]).collect(),
        ));
    });
    out
}

/// All monomials of degree at most `dmax` over `j`, ordered by degree and then words.
#[derive(Clone, Debug)]
pub struct FilteredBasis {
    indices: IndexSet,
    dmax: usize,
    monomials: Vec<Monomial>,
    position: HashMap<Monomial, usize>,
    blocks: Vec<Range<usize>>,
}

impl FilteredBasis {
    pub fn build(j: &IndexSet, dmax: usize, cap: usize) -> Result<Self> {
        let words: Vec<Word> = (1..=dmax).flat_map(|len| necklaces(j, len)).collect();
        let mut monomials = Vec::new();
        let mut current = Vec::new();
        fn rec(
            words: &[Word],
            start: usize,
            budget: usize,
            current: &mut Vec<Word>,
            out: &mut Vec<Monomial>,
            cap: usize,
        ) -> Result<()> {
            out.push(Monomial::from_words(current.clone()));
            if out.len() > cap {
                return Err(Error::DimensionCap {
                    dim: out.len(),
                    cap,
                });
            }
            for (i, w) in words.iter().enumerate().skip(start) {
                if w.len() > budget {
                    break;
                }
                current.push(w.clone());
                rec(words, i, budget - w.len(), current, out, cap)?;
                current.pop();
            }
            Ok(())
        }
        rec(&words, 0, dmax, &mut current, &mut monomials, cap)?;
        Self::from_monomials(j.clone(), dmax, monomials)
    }

    /// Wraps an explicit set of monomials (sorted and deduplicated here).
    pub(crate) fn from_monomials(
        indices: IndexSet,
        dmax: usize,
        mut monomials: Vec<Monomial>,
    ) -> Result<Self> {
        monomials.sort();
        monomials.dedup();
        let position = monomials
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let top = monomials.last().map_or(0, Monomial::degree).max(dmax);
        let mut blocks = Vec::with_capacity(top + 1);
        let mut start = 0;
        for d in 0..=top {
            let end = start + monomials[start..].partition_point(|m| m.degree() <= d);
            blocks.push(start..end);
            start = end;
        }
        Ok(FilteredBasis {
            indices,
            dmax,
            monomials,
            position,
            blocks,
        })
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn dmax(&self) -> usize {
        self.dmax
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.position.get(m).copied()
    }

    /// Positions holding monomials of degree `d`.
    pub fn degree_block(&self, d: usize) -> Range<usize> {
        self.blocks
            .get(d)
            .cloned()
            .unwrap_or(self.dim()..self.dim())
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }
}
