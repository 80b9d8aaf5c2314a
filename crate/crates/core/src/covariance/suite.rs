//! Randomized cross-checks between the three ways of computing `sigma_T`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{sigma_closed_poly, sigma_direct, sigma_free, ClosedVariant};
use crate::error::Result;
use crate::intertwine::{random_poly, FilteredBasis, Generator, DEFAULT_DIMENSION_CAP};
use crate::trace_algebra::{Letter, Monomial, TracePoly, Word};

/// Largest disagreement seen over a batch of pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub checked: usize,
    pub max_difference: f64,
    /// The pair with the largest difference.
    pub worst: Option<(String, String)>,
}

impl AgreementReport {
    fn new() -> Self {
        AgreementReport {
            checked: 0,
            max_difference: 0.0,
            worst: None,
        }
    }

    fn record(&mut self, p: &TracePoly, q: &TracePoly, a: Complex64, b: Complex64) {
        let diff = (a - b).norm();
        self.checked += 1;
        if self.worst.is_none() || diff > self.max_difference {
            self.max_difference = diff;
            self.worst = Some((p.to_string(), q.to_string()));
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// `sigma_direct` against `sigma_free` on random pairs of degree at most `dmax`
/// over the generator's indices.
pub fn direct_free_agreement(
    g: &Generator,
    pairs: usize,
    dmax: usize,
    seed: u64,
    tol: f64,
) -> Result<AgreementReport> {
    let basis = FilteredBasis::build(&g.times.indices(), dmax, DEFAULT_DIMENSION_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AgreementReport::new();
    for _ in 0..pairs {
        let p = random_poly(&basis, &mut rng);
        let q = random_poly(&basis, &mut rng);
        let direct = sigma_direct(g, &p, &q, tol)?.value;
        let free = sigma_free(g, &p, &q, tol)?.value;
        report.record(&p, &q, direct, free);
    }
    Ok(report)
}

/// `sum_n c_n tr(X_j^n)`, or its adjoint `sum_n conj(c_n) tr(X_j^{*n})`.
pub fn one_variable_poly(coeffs: &[Complex64], j: u16, adjoint: bool) -> TracePoly {
    let letter = if adjoint {
        Letter::adjoint(j)
    } else {
        Letter::plain(j)
    };
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, c)| {
            (
                Monomial::word(Word::canonical(vec![letter; n])),
                if adjoint { c.conj() } else { *c },
            )
        })
        .collect()
}

/// The mixed closed form against `sigma_direct` on random one-variable
/// polynomials of degree at most `dmax`, using the first index of `g`.
pub fn closed_mixed_agreement(
    g: &Generator,
    pairs: usize,
    dmax: usize,
    seed: u64,
    tol: f64,
) -> Result<AgreementReport> {
    let (j, t) = g.times.iter().next().expect("nonempty time vector");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AgreementReport::new();
    for _ in 0..pairs {
        let coeffs = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            let deg = rng.random_range(1..=dmax);
            std::iter::once(Complex64::new(0.0, 0.0))
                .chain((0..deg).map(|_| gaussian(rng)))
                .collect()
        };
        let (cp, cq) = (coeffs(&mut rng), coeffs(&mut rng));
        let (p, q) = (
            one_variable_poly(&cp, j, false),
            one_variable_poly(&cq, j, true),
        );
        let closed = sigma_closed_poly(&cp, &cq, ClosedVariant::Mixed, g.rs, t, tol)?.value;
        let direct = sigma_direct(g, &p, &q, tol)?.value;
        report.record(&p, &q, closed, direct);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intertwine::{RSParams, TimeVector};

    #[test]
    fn small_batches_agree() {
        let g = Generator::new(
            RSParams::new(2.0, 0.3).unwrap(),
            TimeVector::from_slice(&[0.6, 1.1]).unwrap(),
        );
        let r = direct_free_agreement(&g, 4, 3, 1, 1e-11).unwrap();
        assert_eq!(r.checked, 4);
        assert!(r.max_difference < 1e-8, "{r:?}");
        let g1 = Generator::new(RSParams::unitary(), TimeVector::from_slice(&[1.5]).unwrap());
        let r = closed_mixed_agreement(&g1, 4, 3, 2, 1e-11).unwrap();
        assert!(r.max_difference < 1e-8, "{r:?}");
    }

    #[test]
    fn one_variable_adjoint() {
        let c = [
            Complex64::new(5.0, 0.0),
            Complex64::new(1.0, 2.0),
            Complex64::new(0.0, -1.0),
        ];
        let p = one_variable_poly(&c, 1, false);
        assert_eq!(p.conjugate(), one_variable_poly(&c, 1, true));
        assert_eq!(p.constant_term(), Complex64::new(0.0, 0.0));
    }
}
