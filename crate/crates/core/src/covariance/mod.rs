//! The limiting covariance `sigma_T` of trace-polynomial fluctuations.
//!
//! `sigma_T(P, Q) = 2 int_0^1 [e^{tD} Gamma(e^{(1-t)D} P, e^{(1-t)D} Q)](1) dt`
//! is computed three ways: directly from that integral, from the three-role
//! polynomial `Gamma~` evaluated on free processes, and from closed forms for
//! one-variable polynomials. The same form gives Wick moments and the
//! covariance of the limiting Gaussian field.

mod field;
mod gamma_tilde;
mod suite;

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::intertwine::{
    Dim, FreeMoments, Generator, OperatorKind, RSParams, Semigroup, TimeVector,
    DEFAULT_DIMENSION_CAP,
};
use crate::linalg::quadrature::integrate_batch;
use crate::trace_algebra::{Letter, Monomial, TracePoly, Word};

pub use field::{sample_gaussian_field, GaussianField};
pub use gamma_tilde::{gamma_tilde, Role, TripleIndexPoly};
pub use suite::{
    closed_mixed_agreement, direct_free_agreement, one_variable_poly, AgreementReport,
};

/// Default quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Relative tolerance of the exponential actions inside an integrand.
const INNER_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Free,
    Closed,
}

/// One value of `sigma_T` with its quadrature record.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaResult {
    pub value: Complex64,
    pub method: Method,
    pub nodes: usize,
    /// `|I_n - I_{n/2}|` for the last two rules.
    pub est_error: f64,
    pub note: Option<String>,
}

impl Serialize for SigmaResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SigmaResult", 6)?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("value_re", &self.value.re)?;
        st.serialize_field("value_im", &self.value.im)?;
        st.serialize_field("est_error", &self.est_error)?;
        st.serialize_field("nodes", &self.nodes)?;
        if let Some(note) = &self.note {
            st.serialize_field("note", note)?;
        } else {
            st.skip_field("note")?;
        }
        st.end()
    }
}

/// `sigma_T(P, Q)` from the defining integral.
pub fn sigma_direct(g: &Generator, p: &TracePoly, q: &TracePoly, tol: f64) -> Result<SigmaResult> {
    let sg = Semigroup::closure(
        g,
        OperatorKind::D,
        &[p.clone(), q.clone()],
        DEFAULT_DIMENSION_CAP,
    )?;
    let mat = sg.matrix();
    let monomials = mat.basis().monomials();
    let cp = mat.coefficients(p)?;
    let cq = mat.coefficients(q)?;

    // Gamma on every pair of closure monomials; constants drop out.
    let live: Vec<usize> = (0..monomials.len())
        .filter(|&i| !monomials[i].is_one())
        .collect();
    let mut pairs: Vec<(usize, usize, TracePoly)> = Vec::new();
    for &i in &live {
        for &k in &live {
            let gm = g.gamma(
                &TracePoly::term(monomials[i].clone(), one()),
                &TracePoly::term(monomials[k].clone(), one()),
            )?;
            if !gm.is_zero() {
                pairs.push((i, k, gm));
            }
        }
    }
    let words: Vec<Word> = pairs.iter().flat_map(|(_, _, gm)| gm.words()).collect();
    let fm = FreeMoments::new(g, words.iter())?;

    let integral = integrate_batch(
        |ts| {
            let phis = fm.solve(ts)?;
            ts.iter()
                .zip(&phis)
                .map(|(&t, phi)| {
                    let u = mat.exp_action(1.0 - t, &cp, INNER_TOL)?;
                    let v = mat.exp_action(1.0 - t, &cq, INNER_TOL)?;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, k, gm) in &pairs {
                        let w = u[*i] * v[*k];
                        if w != Complex64::new(0.0, 0.0) {
                            acc += w * fm.evaluate(gm, phi)?;
                        }
                    }
                    Ok(acc)
                })
                .collect()
        },
        0.0,
        1.0,
        tol,
    )
    .map_err(doubled)?;
    Ok(SigmaResult {
        value: 2.0 * integral.value,
        method: Method::Direct,
        nodes: integral.nodes,
        est_error: 2.0 * integral.est_error,
        note: None,
    })
}

/// `sigma_T(P, Q)` as `2 int_0^1 [Gamma~(P, Q)](b_{tT}, c_{(1-t)T}, d_{(1-t)T}) dt`
/// with free `b`, `c`, `d`.
pub fn sigma_free(g: &Generator, p: &TracePoly, q: &TracePoly, tol: f64) -> Result<SigmaResult> {
    let gt = gamma_tilde(g, p, q)?;
    let times: Vec<(u16, f64)> = g.times.iter().collect();
    let integral = integrate_batch(
        |ts| {
            ts.iter()
                .map(|&t| {
                    let tv = TimeVector::new(times.iter().flat_map(|&(j, tj)| {
                        [
                            (gt.index(j, Role::B), t * tj),
                            (gt.index(j, Role::C), (1.0 - t) * tj),
                            (gt.index(j, Role::D), (1.0 - t) * tj),
                        ]
                    }))?;
                    let gen = Generator::new(g.rs, tv).with_convention(g.convention);
                    FreeMoments::expectation(&gen, &gt.poly)
                })
                .collect()
        },
        0.0,
        1.0,
        tol,
    )
    .map_err(doubled)?;
    Ok(SigmaResult {
        value: 2.0 * integral.value,
        method: Method::Free,
        nodes: integral.nodes,
        est_error: 2.0 * integral.est_error,
        note: None,
    })
}

/// Which pair of adjoints the closed form covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedVariant {
    /// `sigma_T(tr p(X), tr q(X))`.
    Plain,
    /// `sigma_T(tr p(X), tr q(X)^*)`.
    Mixed,
    /// `sigma_T(tr p(X)^*, tr q(X)^*)`.
    StarStar,
}

const SAME_TYPE_NOTE: &str = "same-type closed form uses the merge-rule sign (s - r) n m";

/// `sigma_T` for one-variable polynomials `p = sum p_n X^n`, `q = sum q_m X^m`
/// (coefficient lists indexed by power) at time `t`.
///
/// With `b` at time `u t` and `c`, `d` at time `(1 - u) t`, all free:
/// * plain: `(s - r) t int_0^1 sum n m p_n q_m tau[(bc)^n (bd)^m] du`
/// * mixed: `(s + r) t int_0^1 sum n m p_n conj(q_m) tau[(bc)^n (d^* b^*)^m] du`
/// * star-star: `(s - r) t int_0^1 sum n m conj(p_n q_m) tau[(c^* b^*)^n (d^* b^*)^m] du`
pub fn sigma_closed_poly(
    p: &[Complex64],
    q: &[Complex64],
    variant: ClosedVariant,
    rs: RSParams,
    t: f64,
    tol: f64,
) -> Result<SigmaResult> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("time {t}")));
    }
    let (b, c, d) = (1u16, 2u16, 3u16);
    let power = |pair: [Letter; 2], n: usize| -> Vec<Letter> {
        pair.iter().copied().cycle().take(2 * n).collect()
    };
    let mut integrand = TracePoly::zero();
    for (n, pn) in p.iter().enumerate().skip(1) {
        for (m, qm) in q.iter().enumerate().skip(1) {
            let (left, right, coeff) = match variant {
                ClosedVariant::Plain => (
                    [Letter::plain(b), Letter::plain(c)],
                    [Letter::plain(b), Letter::plain(d)],
                    pn * qm,
                ),
                ClosedVariant::Mixed => (
                    [Letter::plain(b), Letter::plain(c)],
                    [Letter::adjoint(d), Letter::adjoint(b)],
                    pn * qm.conj(),
                ),
                ClosedVariant::StarStar => (
                    [Letter::adjoint(c), Letter::adjoint(b)],
                    [Letter::adjoint(d), Letter::adjoint(b)],
                    (pn * qm).conj(),
                ),
            };
            let mut letters = power(left, n);
            letters.extend(power(right, m));
            let word = Word::canonical(letters);
            integrand.add_term(Monomial::word(word), coeff * (n * m) as f64);
        }
    }
    let kappa = match variant {
        ClosedVariant::Mixed => rs.mixed(),
        _ => rs.same(),
    };
    let integral = integrate_batch(
        |us| {
            us.iter()
                .map(|&u| {
                    let tv = TimeVector::new([(b, u * t), (c, (1.0 - u) * t), (d, (1.0 - u) * t)])?;
                    FreeMoments::expectation(&Generator::new(rs, tv), &integrand)
                })
                .collect()
        },
        0.0,
        1.0,
        tol,
    )
    .map_err(|e| rescaled(e, kappa * t))?;
    let note = match variant {
        ClosedVariant::Mixed => None,
        _ => Some(SAME_TYPE_NOTE.to_string()),
    };
    Ok(SigmaResult {
        value: integral.value * (kappa * t),
        method: Method::Closed,
        nodes: integral.nodes,
        est_error: integral.est_error * (kappa * t).abs(),
        note,
    })
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn doubled(e: Error) -> Error {
    rescaled(e, 2.0)
}

/// Rescales a quadrature failure to the units of the returned value.
fn rescaled(e: Error, c: f64) -> Error {
    match e {
        Error::QuadratureNotConverged {
            nodes,
            est_error,
            value_re,
            value_im,
        } => Error::QuadratureNotConverged {
            nodes,
            est_error: est_error * c.abs(),
            value_re: value_re * c,
            value_im: value_im * c,
        },
        other => other,
    }
}

/// `sum over pairings of prod sigma_T(P_i, P_j)` from a precomputed symmetric
/// matrix of pair values; zero for odd sizes.
pub fn wick_from_matrix(sigma: &[Vec<Complex64>]) -> Complex64 {
    fn rec(sigma: &[Vec<Complex64>], rest: &mut Vec<usize>) -> Complex64 {
        if rest.is_empty() {
            return Complex64::new(1.0, 0.0);
        }
        let first = rest.remove(0);
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..rest.len() {
            let partner = rest.remove(k);
            total += sigma[first][partner] * rec(sigma, rest);
            rest.insert(k, partner);
        }
        rest.insert(0, first);
        total
    }
    if sigma.len() % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    rec(sigma, &mut (0..sigma.len()).collect())
}

/// Leading-order mixed moment `E[X_{P_1} ... X_{P_k}]` from the Wick formula.
pub fn wick_moment(g: &Generator, ps: &[TracePoly], tol: f64) -> Result<Complex64> {
    if ps.len() % 2 == 1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let k = ps.len();
    let mut sigma = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = sigma_direct(g, &ps[i], &ps[j], tol)?.value;
            sigma[i][j] = v;
            sigma[j][i] = v;
        }
    }
    Ok(wick_from_matrix(&sigma))
}

/// Exact `E[prod_i N ([P_i]_N - E[P_i]_N)]` at dimension `n`.
pub fn exact_fluctuation_moment(g: &Generator, ps: &[TracePoly], n: u32) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let dim = Dim::Finite(n);
    let mut product = TracePoly::one();
    for p in ps {
        let mean = heat(g, p, dim)?;
        product = &product * &(p - &TracePoly::constant(mean));
    }
    let value = heat(g, &product, dim)?;
    Ok(value * (n as f64).powi(ps.len() as i32))
}

fn heat(g: &Generator, p: &TracePoly, dim: Dim) -> Result<Complex64> {
    crate::intertwine::heat_expectation_with(g, p, dim, INNER_TOL)
}

/// `[sigma_T(P_i, P_j)]` by the direct method.
pub fn sigma_matrix(g: &Generator, ps: &[TracePoly], tol: f64) -> Result<Vec<Vec<SigmaResult>>> {
    ps.iter()
        .map(|p| ps.iter().map(|q| sigma_direct(g, p, q, tol)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace_algebra::parse_any;

    fn gen(r: f64, s: f64, t: f64) -> Generator {
        Generator::new(
            RSParams::new(r, s).unwrap(),
            TimeVector::from_slice(&[t]).unwrap(),
        )
    }

    fn x() -> TracePoly {
        parse_any("tr(X1)").unwrap()
    }

    fn xs() -> TracePoly {
        parse_any("tr(X1*)").unwrap()
    }

    #[test]
    fn unitary_variance() {
        for t in [0.5, 1.0, 3.0] {
            let g = gen(1.0, 0.0, t);
            let want = 1.0 - (-t).exp();
            for res in [
                sigma_direct(&g, &x(), &xs(), 1e-12).unwrap(),
                sigma_free(&g, &x(), &xs(), 1e-12).unwrap(),
            ] {
                assert!(
                    (res.value - Complex64::new(want, 0.0)).norm() < 1e-10,
                    "{res:?}"
                );
            }
        }
    }

    #[test]
    fn standard_variance() {
        let t = 1.0f64;
        let g = gen(0.5, 0.5, t);
        let want = Complex64::new(t.exp() - 1.0, 0.0);
        assert!((sigma_direct(&g, &x(), &xs(), 1e-12).unwrap().value - want).norm() < 1e-10);
        assert!((sigma_free(&g, &x(), &xs(), 1e-12).unwrap().value - want).norm() < 1e-10);
        let one = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let closed = sigma_closed_poly(
            &one,
            &one,
            ClosedVariant::Mixed,
            RSParams::standard(),
            t,
            1e-12,
        )
        .unwrap();
        assert!((closed.value - want).norm() < 1e-10);
        assert!(closed.note.is_none());
    }

    #[test]
    fn unitary_pseudo_variance() {
        let t = 1.7f64;
        let g = gen(1.0, 0.0, t);
        let want = -t * (-t).exp() * (1.0 - t / 2.0);
        let got = sigma_direct(&g, &x(), &x(), 1e-12).unwrap().value;
        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-10, "{got}");
    }

    #[test]
    fn circular_symmetry() {
        let g = gen(0.5, 0.5, 2.0);
        assert!(sigma_direct(&g, &x(), &x(), 1e-12).unwrap().value.norm() < 1e-12);
        assert!(sigma_free(&g, &x(), &x(), 1e-12).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn constants_drop_out() {
        let g = gen(0.8, 0.3, 1.0);
        let p = parse_any("tr(X1 X1*) + 2").unwrap();
        let q = parse_any("tr(X1 X1)").unwrap();
        let a = sigma_direct(&g, &p, &q, 1e-12).unwrap().value;
        let b = sigma_direct(&g, &(&p - &TracePoly::constant(one() * 2.0)), &q, 1e-12)
            .unwrap()
            .value;
        assert!((a - b).norm() < 1e-14);
        assert_eq!(
            sigma_direct(&g, &TracePoly::one(), &q, 1e-9).unwrap().value,
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn direct_and_free_agree() {
        let g = Generator::new(
            RSParams::new(0.7, 0.4).unwrap(),
            TimeVector::from_slice(&[1.0, 0.6]).unwrap(),
        );
        for (p, q) in [
            ("tr(X1 X2)", "tr(X2* X1*)"),
            ("tr(X1)*tr(X2*)", "tr(X1 X1)"),
            ("tr(X1 X1* X2)", "tr(X2*)"),
        ] {
            let (p, q) = (parse_any(p).unwrap(), parse_any(q).unwrap());
            let a = sigma_direct(&g, &p, &q, 1e-11).unwrap().value;
            let b = sigma_free(&g, &p, &q, 1e-11).unwrap().value;
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn closed_forms_match_free() {
        let rs = RSParams::new(0.9, 0.4).unwrap();
        let t = 0.8;
        let g = Generator::new(rs, TimeVector::from_slice(&[t]).unwrap());
        let p = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.0),
        ];
        let q = [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let poly = |c: &[Complex64], star: bool| -> TracePoly {
            c.iter()
                .enumerate()
                .skip(1)
                .map(|(n, cn)| {
                    let l = if star {
                        Letter::adjoint(1)
                    } else {
                        Letter::plain(1)
                    };
                    let coeff = if star { cn.conj() } else { *cn };
                    (Monomial::word(Word::canonical(vec![l; n])), coeff)
                })
                .collect()
        };
        for (variant, sp, sq) in [
            (ClosedVariant::Plain, false, false),
            (ClosedVariant::Mixed, false, true),
            (ClosedVariant::StarStar, true, true),
        ] {
            let closed = sigma_closed_poly(&p, &q, variant, rs, t, 1e-12).unwrap();
            let free = sigma_free(&g, &poly(&p, sp), &poly(&q, sq), 1e-12).unwrap();
            assert!(
                (closed.value - free.value).norm() < 1e-9,
                "{variant:?}: {} vs {}",
                closed.value,
                free.value
            );
        }
    }

    #[test]
    fn wick_pairings() {
        let s = |a: f64| Complex64::new(a, 0.0);
        let m = vec![
            vec![s(0.0), s(2.0), s(3.0), s(5.0)],
            vec![s(2.0), s(0.0), s(7.0), s(11.0)],
            vec![s(3.0), s(7.0), s(0.0), s(13.0)],
            vec![s(5.0), s(11.0), s(13.0), s(0.0)],
        ];
        assert_eq!(wick_from_matrix(&m), s(2.0 * 13.0 + 3.0 * 11.0 + 5.0 * 7.0));
        assert_eq!(
            wick_from_matrix(&m[..3].iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>()),
            s(0.0)
        );
        assert_eq!(wick_from_matrix(&[]), s(1.0));
    }

    #[test]
    fn first_moment_is_centered() {
        let g = gen(0.5, 0.5, 1.0);
        let v = exact_fluctuation_moment(&g, &[parse_any("tr(X1 X1*)").unwrap()], 4).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn serializes_with_flat_keys() {
        let r = SigmaResult {
            value: Complex64::new(1.0, -2.0),
            method: Method::Free,
            nodes: 32,
            est_error: 0.5,
            note: None,
        };
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["method"], "free");
        assert_eq!(json["value_im"], -2.0);
        assert!(json.get("note").is_none());
    }
}
