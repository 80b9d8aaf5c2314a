//! Randomized checks of the algebraic laws tying `D`, `L` and `Gamma` together.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{FilteredBasis, Generator, DEFAULT_DIMENSION_CAP};
use crate::error::Result;
use crate::trace_algebra::TracePoly;

/// A sum of one to three random nonconstant monomials of `basis` with standard
/// complex Gaussian coefficients.
pub fn random_poly<R: Rng + ?Sized>(basis: &FilteredBasis, rng: &mut R) -> TracePoly {
    let mons = &basis.monomials()[1..];
    let terms = rng.random_range(1..=3);
    (0..terms)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (
                mons[rng.random_range(0..mons.len())].clone(),
                Complex64::new(re, im),
            )
        })
        .collect()
}

/// Largest coefficient left over by each law, all of which are exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LawResiduals {
    /// `D(PQ) - D(P) Q - P D(Q)`.
    pub derivation: f64,
    /// The third-order expansion of `L(PQR)` in terms of `L` on pairs and singles.
    pub second_order: f64,
    /// `Gamma(P, Q) - 1/2 (L(PQ) - L(P) Q - P L(Q))`.
    pub gamma_from_l: f64,
    /// `Gamma(PQ, R) - Gamma(P, R) Q - P Gamma(Q, R)`.
    pub gamma_leibniz: f64,
    /// `Gamma(P, Q) - Gamma(Q, P)`.
    pub gamma_symmetry: f64,
}

impl LawResiduals {
    pub fn max(&self) -> f64 {
        [
            self.derivation,
            self.second_order,
            self.gamma_from_l,
            self.gamma_leibniz,
            self.gamma_symmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Residuals over `trials` random triples of degree at most `dmax`.
pub fn algebraic_laws(
    g: &Generator,
    trials: usize,
    dmax: usize,
    seed: u64,
) -> Result<LawResiduals> {
    let basis = FilteredBasis::build(&g.times.indices(), dmax, DEFAULT_DIMENSION_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = LawResiduals::default();
    let half = Complex64::new(0.5, 0.0);
    for _ in 0..trials {
        let p = random_poly(&basis, &mut rng);
        let q = random_poly(&basis, &mut rng);
        let r = random_poly(&basis, &mut rng);
        let (pq, qr, pr) = (&p * &q, &q * &r, &p * &r);
        let (d, l) = (|x: &TracePoly| g.apply_d(x), |x: &TracePoly| g.apply_l(x));

        let derivation = &(&d(&pq)? - &(&d(&p)? * &q)) - &(&p * &d(&q)?);
        out.derivation = out.derivation.max(derivation.max_abs_coeff());

        let second = [
            l(&(&pq * &r))?,
            -&(&l(&pq)? * &r),
            -&(&p * &l(&qr)?),
            -&(&l(&pr)? * &q),
            &l(&p)? * &qr,
            &p * &(&l(&q)? * &r),
            &pq * &l(&r)?,
        ]
        .iter()
        .fold(TracePoly::zero(), |acc, x| &acc + x);
        out.second_order = out.second_order.max(second.max_abs_coeff());

        let gamma = g.gamma(&p, &q)?;
        let from_l = (&(&l(&pq)? - &(&l(&p)? * &q)) - &(&p * &l(&q)?)).scale(half);
        out.gamma_from_l = out.gamma_from_l.max((&gamma - &from_l).max_abs_coeff());
        out.gamma_symmetry = out
            .gamma_symmetry
            .max((&gamma - &g.gamma(&q, &p)?).max_abs_coeff());

        let leibniz =
            &(&g.gamma(&pq, &r)? - &(&g.gamma(&p, &r)? * &q)) - &(&p * &g.gamma(&q, &r)?);
        out.gamma_leibniz = out.gamma_leibniz.max(leibniz.max_abs_coeff());
    }
    Ok(out)
}
