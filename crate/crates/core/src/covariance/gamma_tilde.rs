//! The three-role carré du champ.
//!
//! Each letter of `P` is split into a `b` letter and a `c` letter with the
//! derivative insertion point between them: `(j,1)` becomes `b_j c_j` and
//! `(j,*)` becomes `c_j^* b_j^*`. `Q` is treated the same way with `d` in place
//! of `c`. Pairs of letters are then merged at those points, as in `Gamma`.

use crate::error::{Error, Result};
use crate::intertwine::Generator;
use crate::trace_algebra::{IndexSet, Letter, Monomial, TracePoly, Word};

/// Role of a letter in the tripled index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    B = 1,
    C = 2,
    D = 3,
}

/// Polynomial over the tripled index set `J x {b, c, d}`, where role `k` of
/// index `j` is stored as index `j + (k - 1) * stride`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleIndexPoly {
    pub poly: TracePoly,
    pub stride: u16,
}

impl TripleIndexPoly {
    pub fn index(&self, j: u16, role: Role) -> u16 {
        tripled(j, role, self.stride)
    }

    /// `(j, role)` for a tripled index.
    pub fn split(&self, k: u16) -> (u16, Role) {
        let role = match (k - 1) / self.stride {
            0 => Role::B,
            1 => Role::C,
            _ => Role::D,
        };
        ((k - 1) % self.stride + 1, role)
    }

    /// The tripled index set over `j`.
    pub fn index_set(&self, j: &IndexSet) -> IndexSet {
        IndexSet::new(
            j.iter()
                .flat_map(|k| [Role::B, Role::C, Role::D].map(|r| tripled(k, r, self.stride))),
        )
        .expect("nonempty")
    }

    /// Renames every tripled index back to its base index.
    pub fn collapse(&self) -> TracePoly {
        self.poly
            .substitute(|l| vec![Letter::new(self.split(l.index).0, l.star)])
    }
}

pub(crate) fn tripled(j: u16, role: Role, stride: u16) -> u16 {
    j + (role as u16 - 1) * stride
}

/// A substituted word together with the insertion gap of each original letter.
struct Split {
    word: Vec<Letter>,
    /// `(base index, star, gap position in word)` per original letter.
    gaps: Vec<(u16, bool, usize)>,
}

fn split_word(w: &Word, other: Role, stride: u16) -> Split {
    let mut word = Vec::with_capacity(2 * w.len());
    let mut gaps = Vec::with_capacity(w.len());
    for l in w.letters() {
        let b = tripled(l.index, Role::B, stride);
        let o = tripled(l.index, other, stride);
        if l.star {
            word.push(Letter::adjoint(o));
            gaps.push((l.index, true, word.len()));
            word.push(Letter::adjoint(b));
        } else {
            word.push(Letter::plain(b));
            gaps.push((l.index, false, word.len()));
            word.push(Letter::plain(o));
        }
    }
    Split { word, gaps }
}

fn rotated(letters: &[Letter], start: usize) -> impl Iterator<Item = Letter> + '_ {
    let n = letters.len();
    (0..n).map(move |k| letters[(start + k) % n])
}

fn substituted(m: &Monomial, other: Role, stride: u16) -> Monomial {
    Monomial::from_words(
        m.words()
            .iter()
            .map(|w| Word::canonical(split_word(w, other, stride).word))
            .collect(),
    )
}

/// `Gamma~(P, Q)` over the tripled index set.
pub fn gamma_tilde(g: &Generator, p: &TracePoly, q: &TracePoly) -> Result<TripleIndexPoly> {
    let base = p
        .indices()
        .into_iter()
        .chain(q.indices())
        .chain(g.times.iter().map(|(j, _)| j))
        .max()
        .unwrap_or(1);
    let stride = base;
    if (stride as u32) * 3 > u16::MAX as u32 {
        return Err(Error::InvalidParameter("index too large to triple".into()));
    }
    let mut out = TracePoly::zero();
    for (mp, cp) in p.terms() {
        for (mq, cq) in q.terms() {
            for (i, a) in mp.words().iter().enumerate() {
                let sa = split_word(a, Role::C, stride);
                let rest_p = substituted(&mp.without(i), Role::C, stride);
                for (k, b) in mq.words().iter().enumerate() {
                    let sb = split_word(b, Role::D, stride);
                    let rest = rest_p.mul(&substituted(&mq.without(k), Role::D, stride));
                    for &(ja, star_a, ga) in &sa.gaps {
                        for &(jb, star_b, gb) in &sb.gaps {
                            if ja != jb {
                                continue;
                            }
                            let x = g.weight(ja)? * g.rs.kappa(star_a, star_b);
                            if x == 0.0 {
                                continue;
                            }
                            let merged: Vec<Letter> =
                                rotated(&sa.word, ga).chain(rotated(&sb.word, gb)).collect();
                            out.add_term(rest.with_word(Word::canonical(merged)), cp * cq * x);
                        }
                    }
                }
            }
        }
    }
    Ok(TripleIndexPoly { poly: out, stride })
}
