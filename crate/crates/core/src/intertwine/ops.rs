//! Splitting and merging rules on words, extended to polynomials.
//!
//! A letter at position `l` of a word of length `n` has insertion gap `l + 1`
//! (mod `n`) if it is plain and `l` if it is an adjoint; the gap `g` sits just
//! before letter `g`.

use num_complex::Complex64;

use super::Generator;
use crate::error::Result;
use crate::trace_algebra::{Letter, Monomial, TracePoly, Word};

pub(crate) fn gap(letters: &[Letter], pos: usize) -> usize {
    if letters[pos].star {
        pos
    } else {
        (pos + 1) % letters.len()
    }
}

/// Letters from gap `a` up to (not including) gap `b`, cyclically; empty if `a == b`.
fn arc(letters: &[Letter], a: usize, b: usize) -> Vec<Letter> {
    let n = letters.len();
    let len = (b + n - a) % n;
    (0..len).map(|k| letters[(a + k) % n]).collect()
}

/// Terms of `D v_w` as (monomial, real coefficient); the diagonal part first.
pub(crate) fn d_word(g: &Generator, w: &Word) -> Result<Vec<(Monomial, f64)>> {
    let letters = w.letters();
    let n = letters.len();
    let mut diagonal = 0.0;
    let mut out = Vec::new();
    for a in 0..n {
        let wa = g.weight(letters[a].index)?;
        diagonal += wa * g.rs.same();
        let ga = gap(letters, a);
        for b in a + 1..n {
            if letters[b].index != letters[a].index {
                continue;
            }
            let kappa = 2.0 * wa * g.rs.kappa(letters[a].star, letters[b].star);
            let gb = gap(letters, b);
            if ga == gb {
                diagonal += kappa;
            } else {
                let left = Word::canonical(arc(letters, ga, gb));
                let right = Word::canonical(arc(letters, gb, ga));
                out.push((Monomial::from_words(vec![left, right]), kappa));
            }
        }
    }
    out.insert(0, (Monomial::word(w.clone()), diagonal));
    Ok(out)
}

/// Terms of `Gamma(v_a, v_b)` as (merged word, real coefficient).
pub(crate) fn gamma_words(g: &Generator, a: &Word, b: &Word) -> Result<Vec<(Word, f64)>> {
    let (la, lb) = (a.letters(), b.letters());
    let mut out = Vec::new();
    for (i, x) in la.iter().enumerate() {
        let wx = g.weight(x.index)?;
        let ga = gap(la, i);
        for (k, y) in lb.iter().enumerate() {
            if y.index != x.index {
                continue;
            }
            let gb = gap(lb, k);
            let mut merged = a.rotated(ga);
            merged.extend(b.rotated(gb));
            out.push((Word::canonical(merged), wx * g.rs.kappa(x.star, y.star)));
        }
    }
    Ok(out)
}

pub(crate) fn d_monomial(
    g: &Generator,
    m: &Monomial,
    c: Complex64,
    out: &mut TracePoly,
) -> Result<()> {
    for (i, w) in m.words().iter().enumerate() {
        let rest = m.without(i);
        for (mono, k) in d_word(g, w)? {
            if k != 0.0 {
                out.add_term(rest.mul(&mono), c * k);
            }
        }
    }
    Ok(())
}

pub(crate) fn l_monomial(
    g: &Generator,
    m: &Monomial,
    c: Complex64,
    out: &mut TracePoly,
) -> Result<()> {
    let words = m.words();
    for i in 0..words.len() {
        for k in i + 1..words.len() {
            let rest = m.without_pair(i, k);
            for (w, x) in gamma_words(g, &words[i], &words[k])? {
                if x != 0.0 {
                    out.add_term(rest.with_word(w), c * (2.0 * x));
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn gamma_monomials(
    g: &Generator,
    p: &Monomial,
    q: &Monomial,
    c: Complex64,
    out: &mut TracePoly,
) -> Result<()> {
    for (i, a) in p.words().iter().enumerate() {
        let rest_p = p.without(i);
        for (k, b) in q.words().iter().enumerate() {
            let rest = rest_p.mul(&q.without(k));
            for (w, x) in gamma_words(g, a, b)? {
                if x != 0.0 {
                    out.add_term(rest.with_word(w), c * x);
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn apply_d(g: &Generator, p: &TracePoly) -> Result<TracePoly> {
    let mut out = TracePoly::zero();
    for (m, c) in p.terms() {
        d_monomial(g, m, *c, &mut out)?;
    }
    Ok(out)
}

pub(crate) fn apply_l(g: &Generator, p: &TracePoly) -> Result<TracePoly> {
    let mut out = TracePoly::zero();
    for (m, c) in p.terms() {
        l_monomial(g, m, *c, &mut out)?;
    }
    Ok(out)
}

pub(crate) fn gamma(g: &Generator, p: &TracePoly, q: &TracePoly) -> Result<TracePoly> {
    let mut out = TracePoly::zero();
    for (mp, cp) in p.terms() {
        for (mq, cq) in q.terms() {
            gamma_monomials(g, mp, mq, cp * cq, &mut out)?;
        }
    }
    Ok(out)
}
