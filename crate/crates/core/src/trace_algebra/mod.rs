//! The commutative algebra of trace polynomials.
//!
//! A [`Word`] is a cyclic string of letters `(j, 1)` or `(j, *)`; it stands
//! for the variable `tr(A_{j1}^{e1} ... A_{jn}^{en})`. Words are always
//! stored in their lexicographically least rotation, so two words that differ
//! by a rotation (and therefore agree under every trace evaluation) are equal.
//! A [`Monomial`] is a multiset of words and a [`TracePoly`] a finite complex
//! linear combination of monomials.

mod eval;
mod increments;
mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eval::{CachedEvaluator, MatrixTuple};
pub use increments::expand_increments;
pub use parse::{parse, parse_any};

/// One letter of a word: the matrix with index `index`, or its adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub index: u16,
    pub star: bool,
}

impl Letter {
    pub const fn new(index: u16, star: bool) -> Self {
        Letter { index, star }
    }

    pub const fn plain(index: u16) -> Self {
        Letter { index, star: false }
    }

    pub const fn adjoint(index: u16) -> Self {
        Letter { index, star: true }
    }

    pub fn flipped(self) -> Self {
        Letter {
            index: self.index,
            star: !self.star,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}{}", self.index, if self.star { "*" } else { "" })
    }
}

/// Start position of the lexicographically least rotation.
pub(crate) fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = &s[(i + k) % n];
        let b = &s[(j + k) % n];
        match a.cmp(b) {
            Ordering::Equal => {
                k += 1;
                continue;
            }
            Ordering::Greater => i += k + 1,
            Ordering::Less => j += k + 1,
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// A nonempty cyclic word, stored in canonical (least) rotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    /// Builds the canonical representative of the cyclic class of `letters`.
    pub fn new(letters: Vec<Letter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidParameter(
                "a word needs at least one letter".into(),
            ));
        }
        Ok(Self::canonical(letters))
    }

    /// Caller guarantees `letters` is nonempty.
    pub(crate) fn canonical(mut letters: Vec<Letter>) -> Self {
        debug_assert!(!letters.is_empty());
        let start = least_rotation(&letters);
        letters.rotate_left(start);
        Word { letters }
    }

    /// Wraps letters that are already in least rotation.
    pub(crate) fn from_canonical(letters: Vec<Letter>) -> Self {
        debug_assert_eq!(least_rotation(&letters), 0);
        Word { letters }
    }

    pub fn single(letter: Letter) -> Self {
        Word {
            letters: vec![letter],
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letters read cyclically starting at `start`.
    pub fn rotated(&self, start: usize) -> Vec<Letter> {
        let n = self.letters.len();
        (0..n).map(|k| self.letters[(start + k) % n]).collect()
    }

    /// The word of the adjoint: letters reversed and stars flipped.
    pub fn adjoint(&self) -> Word {
        Word::canonical(self.letters.iter().rev().map(|l| l.flipped()).collect())
    }

    pub fn indices(&self) -> impl Iterator<Item = u16> + '_ {
        self.letters.iter().map(|l| l.index)
    }

    /// Number of letters carrying index `j`.
    pub fn count_index(&self, j: u16) -> usize {
        self.letters.iter().filter(|l| l.index == j).count()
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shorter words first, then lexicographic.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A commutative product of words; the empty product is the constant 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial {
    words: Vec<Word>,
    degree: usize,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn from_words(mut words: Vec<Word>) -> Self {
        words.sort();
        let degree = words.iter().map(Word::len).sum();
        Monomial { words, degree }
    }

    pub fn word(word: Word) -> Self {
        let degree = word.len();
        Monomial {
            words: vec![word],
            degree,
        }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.words.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut words = Vec::with_capacity(self.words.len() + other.words.len());
        let (mut a, mut b) = (self.words.iter().peekable(), other.words.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => {
                    if x <= y {
                        words.push(a.next().unwrap().clone());
                    } else {
                        words.push(b.next().unwrap().clone());
                    }
                }
                (Some(_), None) => words.push(a.next().unwrap().clone()),
                (None, Some(_)) => words.push(b.next().unwrap().clone()),
                (None, None) => break,
            }
        }
        Monomial {
            words,
            degree: self.degree + other.degree,
        }
    }

    /// The monomial with the word at position `i` removed.
    pub fn without(&self, i: usize) -> Monomial {
        let mut words = self.words.clone();
        let w = words.remove(i);
        Monomial {
            words,
            degree: self.degree - w.len(),
        }
    }

    /// The monomial with positions `i < k` removed.
    pub fn without_pair(&self, i: usize, k: usize) -> Monomial {
        debug_assert!(i < k);
        let mut words = self.words.clone();
        let wk = words.remove(k);
        let wi = words.remove(i);
        Monomial {
            words,
            degree: self.degree - wk.len() - wi.len(),
        }
    }

    /// Multiplies by a single word, keeping the multiset sorted.
    pub fn with_word(&self, word: Word) -> Monomial {
        let pos = self.words.partition_point(|w| w <= &word);
        let mut words = self.words.clone();
        let degree = self.degree + word.len();
        words.insert(pos, word);
        Monomial { words, degree }
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial::from_words(self.words.iter().map(Word::adjoint).collect())
    }

    pub fn indices(&self) -> BTreeSet<u16> {
        self.words.iter().flat_map(|w| w.indices()).collect()
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree first, then the sorted word lists.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.words.cmp(&other.words))
    }
}

/// A finite set of matrix indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet(BTreeSet<u16>);

impl IndexSet {
    pub fn new(indices: impl IntoIterator<Item = u16>) -> Result<Self> {
        let set: BTreeSet<u16> = indices.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidParameter("index set must be nonempty".into()));
        }
        Ok(IndexSet(set))
    }

    /// The index set `{1, ..., n}`.
    pub fn range(n: u16) -> Self {
        assert!(n >= 1, "index set must be nonempty");
        IndexSet((1..=n).collect())
    }

    pub fn contains(&self, j: u16) -> bool {
        self.0.contains(&j)
    }

    pub fn iter(&self) -> impl Iterator<Item = u16> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u16 {
        *self.0.iter().next_back().expect("nonempty")
    }

    /// Position of `j` in increasing order.
    pub fn position(&self, j: u16) -> Option<usize> {
        self.0.iter().position(|&k| k == j)
    }
}

/// A complex linear combination of monomials with no stored zero coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TracePoly {
    terms: BTreeMap<Monomial, Complex64>,
}

impl TracePoly {
    pub fn zero() -> Self {
        TracePoly::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: Complex64) -> Self {
        let mut p = TracePoly::zero();
        p.add_term(m, c);
        p
    }

    /// The single variable `v_w`.
    pub fn var(word: Word) -> Self {
        Self::term(Monomial::word(word), Complex64::new(1.0, 0.0))
    }

    /// `tr` of the word spelled by `letters`.
    pub fn trace_of(letters: &[Letter]) -> Result<Self> {
        Ok(Self::var(Word::new(letters.to_vec())?))
    }

    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v == Complex64::new(0.0, 0.0) {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same as [`TracePoly::is_zero`].
    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coeff(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: Complex64) -> TracePoly {
        let mut out = TracePoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    /// Complex-conjugate coefficients and replace every word by its adjoint.
    pub fn conjugate(&self) -> TracePoly {
        let mut out = TracePoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.adjoint(), v.conj());
        }
        out
    }

    /// Value with every variable set to 1.
    pub fn evaluate_at_one(&self) -> Complex64 {
        self.terms.values().sum()
    }

    /// The constant coefficient.
    pub fn constant_term(&self) -> Complex64 {
        self.coeff(&Monomial::one())
    }

    pub fn indices(&self) -> BTreeSet<u16> {
        self.terms.keys().flat_map(Monomial::indices).collect()
    }

    /// All distinct words occurring in some monomial.
    pub fn words(&self) -> BTreeSet<Word> {
        self.terms
            .keys()
            .flat_map(|m| m.words().iter().cloned())
            .collect()
    }

    pub fn check_indices(&self, j: &IndexSet) -> Result<()> {
        match self.indices().into_iter().find(|&i| !j.contains(i)) {
            Some(index) => Err(Error::UnknownIndex { index }),
            None => Ok(()),
        }
    }

    pub fn pow(&self, k: u32) -> TracePoly {
        let mut out = TracePoly::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Largest coefficient modulus; 0 for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Replaces every letter by a letter string and recanonicalizes. A word that
    /// becomes empty is the trace of the identity and drops out of its monomial.
    pub fn substitute(&self, f: impl Fn(Letter) -> Vec<Letter>) -> TracePoly {
        let mut out = TracePoly::zero();
        for (m, c) in &self.terms {
            let words = m
                .words()
                .iter()
                .map(|w| w.letters().iter().flat_map(|&l| f(l)).collect::<Vec<_>>())
                .filter(|letters| !letters.is_empty())
                .map(Word::canonical)
                .collect();
            out.add_term(Monomial::from_words(words), *c);
        }
        out
    }

    /// Drops terms whose coefficient modulus is at most `tol`.
    pub fn pruned(&self, tol: f64) -> TracePoly {
        TracePoly {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(m, c)| (m.clone(), *c))
                .collect(),
        }
    }
}

impl FromIterator<(Monomial, Complex64)> for TracePoly {
    fn from_iter<I: IntoIterator<Item = (Monomial, Complex64)>>(iter: I) -> Self {
        let mut p = TracePoly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }
}

impl AddAssign<&TracePoly> for TracePoly {
    fn add_assign(&mut self, rhs: &TracePoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), *c);
        }
    }
}

impl Add for &TracePoly {
    type Output = TracePoly;
    fn add(self, rhs: &TracePoly) -> TracePoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for TracePoly {
    type Output = TracePoly;
    fn add(mut self, rhs: TracePoly) -> TracePoly {
        self += &rhs;
        self
    }
}

impl Neg for &TracePoly {
    type Output = TracePoly;
    fn neg(self) -> TracePoly {
        TracePoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for TracePoly {
    type Output = TracePoly;
    fn neg(self) -> TracePoly {
        -&self
    }
}

impl Sub for &TracePoly {
    type Output = TracePoly;
    fn sub(self, rhs: &TracePoly) -> TracePoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for TracePoly {
    type Output = TracePoly;
    fn sub(self, rhs: TracePoly) -> TracePoly {
        &self - &rhs
    }
}

impl Mul for &TracePoly {
    type Output = TracePoly;
    fn mul(self, rhs: &TracePoly) -> TracePoly {
        let mut out = TracePoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for TracePoly {
    type Output = TracePoly;
    fn mul(self, rhs: TracePoly) -> TracePoly {
        &self * &rhs
    }
}

impl Mul<Complex64> for &TracePoly {
    type Output = TracePoly;
    fn mul(self, rhs: Complex64) -> TracePoly {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(spec: &[(u16, bool)]) -> Word {
        Word::new(spec.iter().map(|&(j, s)| Letter::new(j, s)).collect()).unwrap()
    }

    #[test]
    fn least_rotation_matches_brute_force() {
        let cases: Vec<Vec<u8>> = vec![
            vec![1, 0],
            vec![2, 1, 2, 1, 0],
            vec![0, 0, 1, 0, 0, 1],
            vec![3, 3, 3],
            vec![1, 2, 0, 1, 2, 0, 0],
        ];
        for s in cases {
            let n = s.len();
            let brute = (0..n)
                .min_by_key(|&k| (0..n).map(|i| s[(k + i) % n]).collect::<Vec<_>>())
                .unwrap();
            let got = least_rotation(&s);
            let rot = |k: usize| (0..n).map(|i| s[(k + i) % n]).collect::<Vec<_>>();
            assert_eq!(rot(got), rot(brute));
        }
    }

    #[test]
    fn rotations_are_identified() {
        let a = w(&[(1, false), (1, true)]);
        let b = w(&[(1, true), (1, false)]);
        assert_eq!(a, b);
        assert_eq!(a.letters()[0], Letter::plain(1));
    }

    #[test]
    fn adjoint_reverses_and_flips() {
        let word = w(&[(1, false), (2, false)]);
        let expected = w(&[(2, true), (1, true)]);
        assert_eq!(word.adjoint(), expected);
        assert_eq!(word.adjoint().adjoint(), word);
    }

    #[test]
    fn monomial_degree_and_order() {
        let x = w(&[(1, false)]);
        let xx = w(&[(1, false), (1, false)]);
        let m = Monomial::from_words(vec![xx.clone(), x.clone(), x.clone()]);
        assert_eq!(m.degree(), 4);
        assert_eq!(m.words()[0], x);
        assert_eq!(m.without(2).degree(), 2);
        assert!(Monomial::one() < m);
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let x = TracePoly::var(w(&[(1, false)]));
        let z = &x - &x;
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn conjugate_of_constant() {
        let p = TracePoly::constant(Complex64::new(2.0, 1.0));
        assert_eq!(
            p.conjugate(),
            TracePoly::constant(Complex64::new(2.0, -1.0))
        );
    }

    #[test]
    fn conjugate_single_letter() {
        let p = TracePoly::var(w(&[(1, false)]));
        assert_eq!(p.conjugate(), TracePoly::var(w(&[(1, true)])));
    }

    #[test]
    fn evaluate_at_one_is_coefficient_sum() {
        let x = TracePoly::var(w(&[(1, false)]));
        let p = &(&x * &x).scale(Complex64::new(3.0, 0.0))
            - &TracePoly::constant(Complex64::new(2.0, 0.0));
        assert_eq!(p.evaluate_at_one(), Complex64::new(1.0, 0.0));
        assert_eq!(
            TracePoly::zero().evaluate_at_one(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            TracePoly::var(w(&[(2, true), (1, false)])).evaluate_at_one(),
            Complex64::new(1.0, 0.0)
        );
    }
}
