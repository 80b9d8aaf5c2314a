//! Limiting covariances, exact finite-`N` moments and method agreement.

use glbm::covariance::{
    exact_fluctuation_moment, sigma_closed_poly, sigma_direct, sigma_free, ClosedVariant,
};
use glbm::intertwine::{Dim, Generator};
use glbm::trace_algebra::TracePoly;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{num, re_im, Block, Report};

/// `(i, j, conjugate second argument)` for every unordered pair.
pub fn pairs(k: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for i in 0..k {
        for j in i..k {
            out.push((i, j, true));
            out.push((i, j, false));
        }
    }
    out
}

pub fn kind_name(conj: bool) -> &'static str {
    if conj {
        "covariance"
    } else {
        "pseudo"
    }
}

/// Second argument of a pair: `Q*` for the covariance, `Q` for the pseudo-covariance.
pub fn second(q: &TracePoly, conj: bool) -> TracePoly {
    if conj {
        q.conjugate()
    } else {
        q.clone()
    }
}

/// `(j, [c_0, c_1, ...])` when `p = sum c_n tr(X_j^n)` without adjoints.
pub fn one_variable(p: &TracePoly) -> Option<(u16, Vec<Complex64>)> {
    let mut index = None;
    let mut coeffs = vec![Complex64::new(0.0, 0.0)];
    for (m, c) in p.terms() {
        match m.words() {
            [] => coeffs[0] += c,
            [w] => {
                let first = w.letters()[0];
                if first.star || w.letters().iter().any(|l| *l != first) {
                    return None;
                }
                if *index.get_or_insert(first.index) != first.index {
                    return None;
                }
                if coeffs.len() <= w.len() {
                    coeffs.resize(w.len() + 1, Complex64::new(0.0, 0.0));
                }
                coeffs[w.len()] += c;
            }
            _ => return None,
        }
    }
    index.map(|j| (j, coeffs))
}

/// Closed-form `sigma_T(P, Q*)` (mixed) or `sigma_T(P, Q)` (plain) when both
/// are polynomials in the same single `tr(X_j^n)` family.
pub fn sigma_closed(
    g: &Generator,
    p: &TracePoly,
    q: &TracePoly,
    conj: bool,
    tol: f64,
) -> CliResult<Option<glbm::covariance::SigmaResult>> {
    let (Some((j, cp)), Some((k, cq))) = (one_variable(p), one_variable(q)) else {
        return Ok(None);
    };
    if j != k {
        return Ok(None);
    }
    let variant = if conj {
        ClosedVariant::Mixed
    } else {
        ClosedVariant::Plain
    };
    let t = g.times.get(j).unwrap_or(0.0);
    Ok(Some(sigma_closed_poly(&cp, &cq, variant, g.rs, t, tol)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanPrediction {
    pub poly: String,
    /// `None` is the large-`N` limit.
    pub n: Option<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaRow {
    pub poly_i: String,
    pub poly_j: String,
    pub kind: &'static str,
    pub direct: [f64; 2],
    pub free: [f64; 2],
    pub closed: Option<[f64; 2]>,
    /// Largest pairwise difference between methods.
    pub max_difference: f64,
    pub agree: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteRow {
    pub n: u32,
    pub poly_i: String,
    pub poly_j: String,
    pub kind: &'static str,
    pub exact: [f64; 2],
    pub sigma: [f64; 2],
    /// `|exact - sigma|`, the finite-`N` correction.
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    /// Multiple of the configured times.
    pub scale: f64,
    pub poly_i: String,
    pub poly_j: String,
    pub kind: &'static str,
    pub sigma: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct Prediction {
    pub config: RunConfig,
    pub means: Vec<MeanPrediction>,
    pub sigma: Vec<SigmaRow>,
    pub finite_n: Vec<FiniteRow>,
    pub curve: Vec<CurvePoint>,
}

impl Prediction {
    pub fn agree(&self) -> bool {
        self.sigma.iter().all(|r| r.agree)
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Method agreement is required to `10 * tol`.
pub fn agreement_threshold(tol: f64) -> f64 {
    10.0 * tol
}

pub fn predict(cfg: &mut RunConfig, curve_points: usize) -> CliResult<Prediction> {
    let ps = cfg.test_functions()?;
    let g = cfg.generator()?;
    let names: Vec<String> = ps.iter().map(|p| p.to_string()).collect();

    let mut means = Vec::new();
    for (p, name) in ps.iter().zip(&names) {
        for n in cfg.n.iter().map(|&n| Some(n)).chain([None]) {
            let dim = n.map_or(Dim::Infinite, Dim::Finite);
            let m = g.heat_expectation(p, dim)?;
            means.push(MeanPrediction {
                poly: name.clone(),
                n,
                re: m.re,
                im: m.im,
            });
        }
    }

    let mut sigma = Vec::new();
    let mut finite_n = Vec::new();
    for (i, j, conj) in pairs(ps.len()) {
        let q = second(&ps[j], conj);
        let direct = sigma_direct(&g, &ps[i], &q, cfg.tol)?;
        let free = sigma_free(&g, &ps[i], &q, cfg.tol)?;
        let closed = sigma_closed(&g, &ps[i], &ps[j], conj, cfg.tol)?;
        let mut diff = (direct.value - free.value).norm();
        if let Some(c) = &closed {
            diff = diff
                .max((c.value - direct.value).norm())
                .max((c.value - free.value).norm());
        }
        sigma.push(SigmaRow {
            poly_i: names[i].clone(),
            poly_j: names[j].clone(),
            kind: kind_name(conj),
            direct: pair(direct.value),
            free: pair(free.value),
            closed: closed.as_ref().map(|c| pair(c.value)),
            max_difference: diff,
            agree: diff <= agreement_threshold(cfg.tol),
            note: closed.and_then(|c| c.note),
        });
        for &n in &cfg.n {
            let exact = exact_fluctuation_moment(&g, &[ps[i].clone(), q.clone()], n)?;
            finite_n.push(FiniteRow {
                n,
                poly_i: names[i].clone(),
                poly_j: names[j].clone(),
                kind: kind_name(conj),
                exact: pair(exact),
                sigma: pair(direct.value),
                difference: (exact - direct.value).norm(),
            });
        }
    }

    let mut curve = Vec::new();
    for k in 1..=curve_points {
        let scale = 2.0 * k as f64 / curve_points as f64;
        let gk = g.scaled(scale);
        for (i, j, conj) in pairs(ps.len()) {
            let v = sigma_direct(&gk, &ps[i], &second(&ps[j], conj), cfg.tol)?.value;
            curve.push(CurvePoint {
                scale,
                poly_i: names[i].clone(),
                poly_j: names[j].clone(),
                kind: kind_name(conj),
                sigma: pair(v),
            });
        }
    }

    Ok(Prediction {
        config: cfg.clone(),
        means,
        sigma,
        finite_n,
        curve,
    })
}

pub fn report(pred: Prediction) -> Report<Prediction> {
    let mut means = Block::new(&["n", "poly", "re_mean_pred", "im_mean_pred"]);
    for m in &pred.means {
        means.push(vec![n_label(m.n), m.poly.clone(), num(m.re), num(m.im)]);
    }
    let mut sigma = Block::new(&[
        "poly_i",
        "poly_j",
        "kind",
        "re_direct",
        "im_direct",
        "re_free",
        "im_free",
        "re_closed",
        "im_closed",
        "max_difference",
        "agree",
    ]);
    for r in &pred.sigma {
        let [cr, ci] = re_im(r.closed.map(|c| Complex64::new(c[0], c[1])));
        sigma.push(vec![
            r.poly_i.clone(),
            r.poly_j.clone(),
            r.kind.into(),
            num(r.direct[0]),
            num(r.direct[1]),
            num(r.free[0]),
            num(r.free[1]),
            cr,
            ci,
            num(r.max_difference),
            r.agree.to_string(),
        ]);
    }
    let mut finite = Block::new(&[
        "n",
        "poly_i",
        "poly_j",
        "kind",
        "re_exact",
        "im_exact",
        "re_sigma",
        "im_sigma",
        "difference",
    ]);
    for r in &pred.finite_n {
        finite.push(vec![
            r.n.to_string(),
            r.poly_i.clone(),
            r.poly_j.clone(),
            r.kind.into(),
            num(r.exact[0]),
            num(r.exact[1]),
            num(r.sigma[0]),
            num(r.sigma[1]),
            num(r.difference),
        ]);
    }
    let mut blocks = vec![means, sigma, finite];
    if !pred.curve.is_empty() {
        let mut curve = Block::new(&["scale", "poly_i", "poly_j", "kind", "re_sigma", "im_sigma"]);
        for c in &pred.curve {
            curve.push(vec![
                num(c.scale),
                c.poly_i.clone(),
                c.poly_j.clone(),
                c.kind.into(),
                num(c.sigma[0]),
                num(c.sigma[1]),
            ]);
        }
        blocks.push(curve);
    }
    Report {
        name: "predict",
        blocks,
        json: pred,
    }
}

pub fn n_label(n: Option<u32>) -> String {
    n.map_or_else(|| "inf".to_string(), |n| n.to_string())
}
