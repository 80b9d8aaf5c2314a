//! End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
//! and exits nonzero if any fails.
//!
//! Reference values come from oracles written here: a Gram-Schmidt basis for
//! the `(r, s)` inner product, second-order jets for the Laplacian, and closed
//! forms for unitary Brownian motion obtained from a two-dimensional linear
//! system for `E tr U^2` and `E (tr U)^2`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::time::Instant;

use glbm::covariance::{
    closed_mixed_agreement, direct_free_agreement, exact_fluctuation_moment, sigma_closed_poly,
    sigma_direct, sigma_free, wick_moment, ClosedVariant,
};
use glbm::intertwine::{
    intertwining_suite, Convention, FilteredBasis, Generator, RSParams, TimeVector,
    DEFAULT_DIMENSION_CAP,
};
use glbm::linalg::CMat;
use glbm::matrix_lab::{
    build_rs_basis, estimate, evaluate_samples, mixed_moment, random_tuple, rate_study,
    simulate_paths, simulate_refined, skewness_kurtosis, CovKind, EstimateOptions,
    FluctuationReport, PathDataset, Scheme, SimConfig,
};
use glbm::trace_algebra::{parse_any, IndexSet, MatrixTuple, TracePoly, Word};
use num_complex::Complex64;

type C = Complex64;
type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

const PARAMS: [(f64, f64); 3] = [(1.0, 0.0), (0.5, 0.5), (2.0, 0.3)];

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn rs(r: f64, s: f64) -> RSParams {
    RSParams::new(r, s).unwrap()
}

fn gen(r: f64, s: f64, times: &[f64]) -> Generator {
    Generator::new(rs(r, s), TimeVector::from_slice(times).unwrap())
}

fn poly(text: &str) -> TracePoly {
    parse_any(text).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Dense row-major square matrices, kept apart from the library's linear algebra.

#[derive(Clone, Debug, PartialEq)]
struct M {
    n: usize,
    a: Vec<C>,
}

impl M {
    fn zeros(n: usize) -> M {
        M {
            n,
            a: vec![c(0.0); n * n],
        }
    }

    fn eye(n: usize) -> M {
        let mut m = M::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = c(1.0);
        }
        m
    }

    fn from_lib(m: &CMat) -> M {
        let n = m.nrows();
        M {
            n,
            a: (0..n * n).map(|k| m[(k / n, k % n)]).collect(),
        }
    }

    fn at(&self, i: usize, j: usize) -> C {
        self.a[i * self.n + j]
    }

    fn mul(&self, o: &M) -> M {
        let n = self.n;
        let mut out = M::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.at(i, k);
                if x == c(0.0) {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += x * o.at(k, j);
                }
            }
        }
        out
    }

    fn adj(&self) -> M {
        let n = self.n;
        M {
            n,
            a: (0..n * n).map(|k| self.at(k % n, k / n).conj()).collect(),
        }
    }

    fn add(&self, o: &M) -> M {
        M {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    fn scale(&self, z: C) -> M {
        M {
            n: self.n,
            a: self.a.iter().map(|x| x * z).collect(),
        }
    }

    /// `Tr / N`.
    fn tr(&self) -> C {
        (0..self.n).map(|i| self.at(i, i)).sum::<C>() / self.n as f64
    }

    fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

fn random_mats(n: usize, k: usize, seed: u64) -> Vec<M> {
    let t = random_tuple(n, k, seed).unwrap();
    (1..=k as u16)
        .map(|j| M::from_lib(t.get(j).unwrap()))
        .collect()
}

/// Real inner product on the tangent space. At `s = 0` the space is the
/// skew-Hermitian matrices, where the `1/s` terms cancel.
fn inner(a: &M, b: &M, r: f64, s: f64) -> f64 {
    let n = a.n as f64;
    let with_adj = a.mul(&b.adj()).tr().re * n * n;
    if s == 0.0 {
        return with_adj / r;
    }
    let plain = a.mul(b).tr().re * n * n;
    0.5 * (1.0 / s + 1.0 / r) * with_adj + 0.5 * (1.0 / s - 1.0 / r) * plain
}

/// Orthonormal basis from Gram-Schmidt on random starting vectors, so it is
/// unrelated to any coordinate basis.
fn rotated_basis(n: usize, r: f64, s: f64, seed: u64) -> Vec<M> {
    let dim = if s == 0.0 { n * n } else { 2 * n * n };
    let mut out: Vec<M> = Vec::with_capacity(dim);
    for v in random_mats(n, dim, seed) {
        let mut v = if s == 0.0 {
            v.add(&v.adj().scale(c(-1.0))).scale(c(0.5))
        } else {
            v
        };
        // Two passes keep the basis orthonormal to rounding.
        for _ in 0..2 {
            for e in &out {
                v = v.add(&e.scale(c(-inner(&v, e, r, s))));
            }
        }
        let norm = inner(&v, &v, r, s).sqrt();
        out.push(v.scale(c(1.0 / norm)));
    }
    out
}

fn gram_defect(basis: &[M], r: f64, s: f64) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(a, b, r, s) - want).abs());
        }
    }
    worst
}

/// Largest residual of the five basis-sum identities over `pairs` random pairs.
fn magic_defect(basis: &[M], r: f64, s: f64, pairs: usize, seed: u64) -> [f64; 5] {
    let n = basis[0].n;
    let nf = n as f64;
    let adjs: Vec<M> = basis.iter().map(M::adj).collect();
    let mut worst = [0.0f64; 5];
    for k in 0..pairs {
        let ab = random_mats(n, 2, seed.wrapping_add(k as u64));
        let (a, b) = (&ab[0], &ab[1]);
        let tab = a.mul(b).tr();
        let (mut same, mut star_star, mut mixed) = (c(0.0), c(0.0), c(0.0));
        let (mut m_same, mut m_mixed) = (M::zeros(n), M::zeros(n));
        for (x, xs) in basis.iter().zip(&adjs) {
            let (xa, xb, xsa, xsb) = (x.mul(a).tr(), x.mul(b).tr(), xs.mul(a).tr(), xs.mul(b).tr());
            same += xa * xb;
            star_star += xsa * xsb;
            mixed += xsa * xb;
            let ax = a.mul(x);
            m_same = m_same.add(&x.mul(&ax));
            m_mixed = m_mixed.add(&xs.mul(&ax));
        }
        let eye = M::eye(n);
        let res = [
            (same - (s - r) / (nf * nf) * tab).norm(),
            (star_star - (s - r) / (nf * nf) * tab).norm(),
            (mixed - (s + r) / (nf * nf) * tab).norm(),
            m_same.add(&eye.scale(-(s - r) * a.tr())).max_abs(),
            m_mixed.add(&eye.scale(-(s + r) * a.tr())).max_abs(),
        ];
        for (w, x) in worst.iter_mut().zip(res) {
            *w = w.max(x);
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    let mut worst = [0.0f64; 5];
    let mut gram = 0.0f64;
    let mut bases = 0;
    for (r, s) in PARAMS {
        for n in 2..=8 {
            let library: Vec<M> = build_rs_basis(n, rs(r, s))
                .iter()
                .map(M::from_lib)
                .collect();
            let expected_dim = if s == 0.0 { n * n } else { 2 * n * n };
            if library.len() != expected_dim {
                return Err(format!(
                    "({r}, {s}) N={n}: basis has {} elements",
                    library.len()
                ));
            }
            for (k, basis) in [library, rotated_basis(n, r, s, 100 + n as u64)]
                .iter()
                .enumerate()
            {
                gram = gram.max(gram_defect(basis, r, s));
                let d = magic_defect(basis, r, s, 100, 1000 * n as u64 + k as u64);
                for (w, x) in worst.iter_mut().zip(d) {
                    *w = w.max(x);
                }
                bases += 1;
            }
        }
    }
    let max = worst.iter().copied().fold(gram, f64::max);
    ensure(
        max <= 1e-12,
        format!(
            "{bases} bases x 100 pairs: orthonormality {gram:.1e}, xi xi {:.1e}, xi* xi* {:.1e}, \
             xi* xi {:.1e}, sum xi A xi {:.1e}, sum xi* A xi {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

// Second-order jets `a + b u + c u^2` of matrices.

#[derive(Clone)]
struct Jet([M; 3]);

impl Jet {
    fn mul(&self, o: &Jet) -> Jet {
        let [a0, a1, a2] = &self.0;
        let [b0, b1, b2] = &o.0;
        Jet([
            a0.mul(b0),
            a0.mul(b1).add(&a1.mul(b0)),
            a0.mul(b2).add(&a1.mul(b1)).add(&a2.mul(b0)),
        ])
    }

    fn tr(&self) -> [C; 3] {
        [self.0[0].tr(), self.0[1].tr(), self.0[2].tr()]
    }
}

fn jet_product(a: [C; 3], b: [C; 3]) -> [C; 3] {
    [
        a[0] * b[0],
        a[0] * b[1] + a[1] * b[0],
        a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
    ]
}

/// Half the Laplacian in direction `j` weighted by `t_j`, from the `u^2`
/// coefficients of `P(g_j e^{u xi})` summed over the basis.
struct BruteLaplacian {
    g: Vec<M>,
    basis: Vec<M>,
    /// Jets of `g_j e^{u xi}` and its adjoint, per `(j, xi)`.
    moved: HashMap<(u16, usize), (Jet, Jet)>,
    words: HashMap<(Word, u16), Vec<[C; 3]>>,
}

impl BruteLaplacian {
    fn new(g: Vec<M>, basis: Vec<M>) -> Self {
        let mut moved = HashMap::new();
        for (j, gj) in g.iter().enumerate() {
            let n = gj.n;
            for (k, xi) in basis.iter().enumerate() {
                let e = Jet([M::eye(n), xi.clone(), xi.mul(xi).scale(c(0.5))]);
                let zero = M::zeros(n);
                let gj_jet = Jet([gj.clone(), zero.clone(), zero]);
                let fwd = gj_jet.mul(&e);
                let back = Jet([fwd.0[0].adj(), fwd.0[1].adj(), fwd.0[2].adj()]);
                moved.insert((j as u16 + 1, k), (fwd, back));
            }
        }
        BruteLaplacian {
            g,
            basis,
            moved,
            words: HashMap::new(),
        }
    }

    fn word_jets(&mut self, w: &Word, j: u16) -> &Vec<[C; 3]> {
        if !self.words.contains_key(&(w.clone(), j)) {
            let n = self.g[0].n;
            let zero = M::zeros(n);
            let jets = (0..self.basis.len())
                .map(|k| {
                    let (fwd, back) = &self.moved[&(j, k)];
                    let mut acc = Jet([M::eye(n), zero.clone(), zero.clone()]);
                    for l in w.letters() {
                        let factor = if l.index == j {
                            if l.star {
                                back.clone()
                            } else {
                                fwd.clone()
                            }
                        } else {
                            let m = &self.g[l.index as usize - 1];
                            Jet([
                                if l.star { m.adj() } else { m.clone() },
                                zero.clone(),
                                zero.clone(),
                            ])
                        };
                        acc = acc.mul(&factor);
                    }
                    acc.tr()
                })
                .collect();
            self.words.insert((w.clone(), j), jets);
        }
        &self.words[&(w.clone(), j)]
    }

    fn half_laplacian(&mut self, words: &[Word], times: &[(u16, f64)]) -> C {
        let mut total = c(0.0);
        for &(j, t) in times {
            let jets: Vec<Vec<[C; 3]>> =
                words.iter().map(|w| self.word_jets(w, j).clone()).collect();
            for k in 0..self.basis.len() {
                let prod = jets
                    .iter()
                    .fold([c(1.0), c(0.0), c(0.0)], |acc, wj| jet_product(acc, wj[k]));
                // 1/2 t d^2/du^2 = t * (u^2 coefficient).
                total += t * prod[2];
            }
        }
        total
    }
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    let mut worst = (0.0f64, String::new());
    let times = [0.7, 1.3];
    let basis = FilteredBasis::build(&IndexSet::range(2), 6, DEFAULT_DIMENSION_CAP).unwrap();
    for (r, s) in PARAMS {
        let g = gen(r, s, &times);
        for n in [2usize, 3, 4] {
            let seed = 17 * n as u64;
            let mats = random_mats(n, 2, seed);
            let tuple = MatrixTuple::from_vec(
                mats.iter()
                    .map(|m| CMat::from_fn(n, n, |i, j| m.at(i, j)))
                    .collect(),
            )
            .unwrap();
            let mut brute = BruteLaplacian::new(mats, rotated_basis(n, r, s, seed + 1));
            let weights: Vec<(u16, f64)> = g.times.iter().collect();
            for m in basis.monomials() {
                let p = TracePoly::term(m.clone(), c(1.0));
                let want = brute.half_laplacian(m.words(), &weights);
                let nn = (n * n) as f64;
                let got = tuple.evaluate(&g.apply_d(&p).unwrap()).unwrap()
                    + tuple.evaluate(&g.apply_l(&p).unwrap()).unwrap() / nn;
                let err = (got - want).norm() / want.norm().max(1.0);
                checked += 1;
                if err > worst.0 || worst.1.is_empty() {
                    worst = (err, format!("{m} at ({r}, {s}) N={n}"));
                }
            }
        }
    }
    ensure(
        worst.0 <= 1e-10,
        format!(
            "{checked} monomial evaluations, max relative error {:.1e} ({})",
            worst.0, worst.1
        ),
    )
}

fn criterion_3() -> Outcome {
    let (mut df, mut cm) = (0.0f64, 0.0f64);
    let mut pairs = 0;
    for (k, (r, s)) in PARAMS.into_iter().enumerate() {
        let seed = 5 + k as u64;
        let a = direct_free_agreement(&gen(r, s, &[0.7, 1.3]), 50, 4, seed, 1e-9).unwrap();
        let b = closed_mixed_agreement(&gen(r, s, &[1.0]), 50, 4, seed, 1e-9).unwrap();
        df = df.max(a.max_difference);
        cm = cm.max(b.max_difference);
        pairs += a.checked + b.checked;
    }
    ensure(
        df <= 1e-7 && cm <= 1e-7,
        format!("{pairs} pairs over 3 parameter sets: |direct - free| {df:.1e}, |closed - direct| {cm:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let x = poly("tr(X1)");
    let xs = x.conjugate();
    let one = [c(0.0), c(1.0)];
    let mut cases: Vec<((f64, f64), f64, f64, f64)> = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        cases.push(((1.0, 0.0), t, 1.0 - (-t).exp(), 1e-8));
        cases.push(((0.5, 0.5), t, t.exp() - 1.0, 1e-8));
    }
    cases.push(((1.0, 0.0), 10.0, 1.0, 5e-5));
    let mut detail = String::new();
    let mut ok = true;
    for ((r, s), t, want, limit) in cases {
        let g = gen(r, s, &[t]);
        let values = [
            sigma_direct(&g, &x, &xs, 1e-10).unwrap().value,
            sigma_free(&g, &x, &xs, 1e-10).unwrap().value,
            sigma_closed_poly(&one, &one, ClosedVariant::Mixed, rs(r, s), t, 1e-10)
                .unwrap()
                .value,
        ];
        let err = values
            .iter()
            .map(|v| (v - c(want)).norm())
            .fold(0.0, f64::max);
        ok &= err <= limit;
        let _ = write!(detail, "({r},{s}) T={t}: {err:.1e}; ");
    }
    ensure(ok, detail.trim_end_matches("; ").to_string())
}

/// `E tr U^2` and `E (tr U)^2` for unitary Brownian motion at time `t`.
fn unitary_second_moments(n: f64, t: f64) -> (f64, f64) {
    let (ch, sh) = ((t / n).cosh(), (t / n).sinh());
    ((-t).exp() * (ch - n * sh), (-t).exp() * (ch - sh / n))
}

const N_MC: usize = 64;

fn mc_config(r: f64, s: f64, samples: usize, seed: u64) -> SimConfig {
    SimConfig {
        n: N_MC,
        rs: rs(r, s),
        times: TimeVector::from_slice(&[1.0]).unwrap(),
        steps_per_unit_time: 200,
        samples,
        scheme: Scheme::MultiplicativeExp,
        seed,
    }
}

fn head(data: &PathDataset, samples: usize) -> PathDataset {
    let mut config = data.config.clone();
    config.samples = samples;
    PathDataset {
        config,
        tuples: data.tuples[..samples].to_vec(),
    }
}

fn unitary_polys() -> Vec<TracePoly> {
    ["tr(X1)", "tr(X1*)", "tr(X1 X1)", "tr(X1 X1*)"]
        .iter()
        .map(|p| poly(p))
        .collect()
}

fn report_of(data: &PathDataset, ps: &[TracePoly], predict: bool) -> FluctuationReport {
    estimate(
        data,
        ps,
        &EstimateOptions {
            batches: 20,
            predict,
            tol: 1e-9,
        },
    )
    .unwrap()
}

fn criterion_5(all: &PathDataset) -> Outcome {
    let ps = unitary_polys();
    let main = head(all, 2000);
    let rep = report_of(&main, &ps, true);
    let (n, t) = (N_MC as f64, 1.0f64);
    let (tr_sq, sq_tr) = unitary_second_moments(n, t);

    let oracle_means = [(-t / 2.0).exp(), (-t / 2.0).exp(), tr_sq, 1.0];
    let mut oracle_gap = 0.0f64;
    for (m, want) in rep.means.iter().zip(oracle_means) {
        let p = m.predicted.ok_or("missing mean prediction")?;
        oracle_gap = oracle_gap.max((C::new(p[0], p[1]) - c(want)).norm());
    }
    let var = 1.0 - (-t).exp();
    let pseudo = n * n * (sq_tr - (-t).exp());
    for row in &rep.covariances {
        let want = match (row.i, row.j, row.kind) {
            (0, 0, CovKind::Covariance) | (0, 1, CovKind::Pseudo) => var,
            (0, 0, CovKind::Pseudo) | (0, 1, CovKind::Covariance) => pseudo,
            _ => continue,
        };
        let e = row.exact.ok_or("missing exact covariance")?;
        oracle_gap = oracle_gap.max((C::new(e[0], e[1]) - c(want)).norm());
    }

    let z_means = rep.means.iter().filter_map(|m| m.z).fold(0.0, f64::max);
    let (mut z_covs, mut worst_cov) = (0.0f64, String::new());
    for row in &rep.covariances {
        if let Some(z) = row.z.filter(|&z| z > z_covs) {
            z_covs = z;
            worst_cov = format!(
                " at ({}, {}) {:?}",
                rep.means[row.i].poly, rep.means[row.j].poly, row.kind
            );
        }
    }

    // Same Brownian paths at half the step size; differences are paired.
    let fine_cfg = SimConfig {
        samples: 400,
        ..main.config.clone()
    };
    let fine = simulate_refined(&fine_cfg).unwrap();
    let coarse = report_of(&head(all, 400), &ps, false);
    let refined = report_of(&fine, &ps, false);
    // Constant rows are compared absolutely; their stderr is rounding noise.
    let (mut shift, mut constant_shift) = (0.0f64, 0.0f64);
    for ((a, b), m) in coarse.means.iter().zip(&refined.means).zip(&rep.means) {
        let d = (a.estimate.value() - b.estimate.value()).norm();
        if m.degenerate {
            constant_shift = constant_shift.max(d);
        } else {
            shift = shift.max(d / m.estimate.stderr);
        }
    }
    for ((a, b), m) in coarse
        .covariances
        .iter()
        .zip(&refined.covariances)
        .zip(&rep.covariances)
    {
        let d = (a.estimate.value() - b.estimate.value()).norm();
        if d > 1e-12 {
            shift = shift.max(d / m.estimate.stderr);
        }
    }
    ensure(
        z_means <= 3.0 && z_covs <= 3.0 && shift < 1.0 && constant_shift <= 1e-12 && oracle_gap <= 1e-10,
        format!(
            "max |z| means {z_means:.2}, covariances {z_covs:.2}{worst_cov}; dt-halving shift {shift:.2} stderr \
             ({constant_shift:.0e} on constants); \
             predictions vs closed forms {oracle_gap:.1e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let ns = [8, 16, 32, 64];
    let t = 1.0f64;
    let x = poly("tr(X1)");
    let xs = x.conjugate();
    let unitary = gen(1.0, 0.0, &[t]);
    let standard = gen(0.5, 0.5, &[t]);
    let cases: Vec<(&str, &Generator, Vec<TracePoly>)> = vec![
        (
            "k=2 (1,0) tr(X1), tr(X1)",
            &unitary,
            vec![x.clone(), x.clone()],
        ),
        (
            "k=2 (1,0) tr(X1 X1), tr(X1* X1*)",
            &unitary,
            vec![poly("tr(X1 X1)"), poly("tr(X1* X1*)")],
        ),
        (
            "k=2 (1/2,1/2) tr(X1 X1*), tr(X1 X1*)",
            &standard,
            vec![poly("tr(X1 X1*)"), poly("tr(X1 X1*)")],
        ),
        (
            "k=4 (1,0) |X_tr(X1)|^4",
            &unitary,
            vec![x.clone(), x.clone(), xs.clone(), xs.clone()],
        ),
        (
            "k=4 (1/2,1/2) |X_tr(X1)|^4",
            &standard,
            vec![x.clone(), x.clone(), xs.clone(), xs.clone()],
        ),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, g, ps) in cases {
        let study = rate_study(&ns, g, &ps, 1e-10).unwrap();
        let pass = study.converged || study.slope.is_some_and(|b| b <= -1.0);
        ok &= pass;
        match study.slope {
            Some(b) if !study.converged => {
                let _ = write!(detail, "{name}: slope {b:.2}; ");
            }
            _ => {
                let _ = write!(detail, "{name}: exact at every N; ");
            }
        }
    }

    // Closed forms for the unitary trace.
    let (_, sq_tr) = unitary_second_moments(64.0, t);
    let exact = exact_fluctuation_moment(&unitary, &[x.clone(), x.clone()], 64).unwrap();
    let mut gap = (exact - c(64.0 * 64.0 * (sq_tr - (-t).exp()))).norm();
    let pseudo = (-t).exp() * (t * t / 2.0 - t);
    let var = 1.0 - (-t).exp();
    let wick = wick_moment(&unitary, &[x.clone(), x.clone(), xs.clone(), xs], 1e-10).unwrap();
    gap = gap.max((wick - c(pseudo * pseudo + 2.0 * var * var)).norm());
    ok &= gap <= 1e-9;
    let _ = write!(detail, "closed forms {gap:.1e}");
    ensure(ok, detail)
}

fn criterion_7(all: &PathDataset) -> Outcome {
    let x = poly("tr(X1)");
    let values = evaluate_samples(all, std::slice::from_ref(&x)).unwrap();
    let n = all.config.n as f64;
    let mean: C = values.iter().map(|v| v[0]).sum::<C>() / values.len() as f64;
    let fluct: Vec<C> = values.iter().map(|v| (v[0] - mean) * n).collect();
    let mut detail = String::new();
    let mut ok = true;
    for (part, xs) in [
        ("re", fluct.iter().map(|z| z.re).collect::<Vec<_>>()),
        ("im", fluct.iter().map(|z| z.im).collect::<Vec<_>>()),
    ] {
        let sd = (xs.iter().map(|v| v * v).sum::<f64>() / xs.len() as f64).sqrt();
        let std: Vec<f64> = xs.iter().map(|v| v / sd).collect();
        let (skew, kurt) = skewness_kurtosis(&std, 20).unwrap();
        let (zs, zk) = (skew.z(c(0.0)), kurt.z(c(0.0)));
        ok &= zs <= 4.0 && zk <= 4.0;
        let _ = write!(
            detail,
            "{part}: skewness {:.3} (z {zs:.2}), excess kurtosis {:.3} (z {zk:.2}); ",
            skew.re, kurt.re
        );
    }
    let mut worst = 0.0f64;
    for plain in 0..=3 {
        let factors: Vec<(usize, bool)> = (0..3).map(|k| (0, k >= plain)).collect();
        let est = mixed_moment(&values, all.config.n, &factors, 20).unwrap();
        worst = worst.max(est.z(c(0.0)));
    }
    ok &= worst <= 3.0;
    let _ = write!(detail, "third moments max |z| {worst:.2}");
    ensure(ok, detail)
}

fn criterion_8() -> Outcome {
    let data = simulate_paths(&mc_config(0.5, 0.5, 1000, 8)).unwrap();
    let x = poly("tr(X1)");
    let rep = report_of(&data, std::slice::from_ref(&x), true);
    let row = rep
        .covariances
        .iter()
        .find(|r| r.kind == CovKind::Pseudo)
        .ok_or("no pseudo-covariance row")?;
    let z = row.estimate.z(c(0.0));
    let g = gen(0.5, 0.5, &[1.0]);
    let mut predicted = [
        sigma_direct(&g, &x, &x, 1e-10).unwrap().value.norm(),
        sigma_free(&g, &x, &x, 1e-10).unwrap().value.norm(),
        exact_fluctuation_moment(&g, &[x.clone(), x.clone()], N_MC as u32)
            .unwrap()
            .norm(),
    ];
    if let Some(l) = row.limit {
        predicted[0] = predicted[0].max(C::new(l[0], l[1]).norm());
    }
    let pred = predicted.iter().copied().fold(0.0, f64::max);

    // |X|^4 against its Gaussian value 2 sigma^2, reported only.
    let values = evaluate_samples(&data, std::slice::from_ref(&x)).unwrap();
    let fourth = mixed_moment(
        &values,
        N_MC,
        &[(0, false), (0, false), (0, true), (0, true)],
        20,
    )
    .unwrap();
    let var = 1f64.exp() - 1.0;
    ensure(
        z <= 3.0 && pred <= 1e-9,
        format!(
            "pseudo-covariance {:.4} + {:.4}i (z {z:.2}), largest |prediction| {pred:.1e}; \
             E|X|^4 {:.2} vs 2 sigma^2 = {:.2} (z {:.2})",
            row.estimate.re,
            row.estimate.im,
            fourth.re,
            2.0 * var * var,
            fourth.z(c(2.0 * var * var))
        ),
    )
}

fn glbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glbm"))
        .args(args)
        .output()
        .expect("glbm runs")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn criterion_9() -> Outcome {
    let root = std::env::temp_dir().join(format!("glbm-acceptance-{}", std::process::id()));
    let base = [
        "compare",
        "--r",
        "0.5",
        "--s",
        "0.5",
        "--N",
        "8",
        "--T",
        "1",
        "--samples",
        "400",
        "--steps",
        "50",
        "--poly",
        "tr(X1)",
        "--poly",
        "tr(X1 X1*)",
    ];
    let run = |name: &str, seed: &str, extra: &[&str]| -> (Output, Vec<(String, Vec<u8>)>) {
        let dir = root.join(name);
        let dir_s = dir.to_string_lossy().into_owned();
        let mut args: Vec<&str> = base.to_vec();
        args.extend(["--seed", seed, "--out", &dir_s, "--save-paths"]);
        args.extend(extra);
        let out = glbm(&args);
        (out, files(&dir))
    };
    let (a, fa) = run("a", "11", &[]);
    let (b, fb) = run("b", "11", &[]);
    let (_, fc) = run("c", "12", &[]);
    let (_, fj) = run("j", "11", &["--format", "json"]);
    let (_, fk) = run("k", "11", &["--format", "json"]);
    let (bad, _) = run("bad", "11", &["--corrupt-sigma", "1.5"]);
    let _ = std::fs::remove_dir_all(&root);

    let names: BTreeSet<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    let identical = !fa.is_empty() && fa == fb && !fj.is_empty() && fj == fk;
    let seed_matters = fa != fc;
    let exits = (a.status.code(), b.status.code(), bad.status.code());

    // The full-Laplacian convention doubles every generator value.
    let full = glbm(&[
        "validate",
        "--convention",
        "full",
        "--degree",
        "3",
        "--format",
        "json",
    ]);
    let half = glbm(&["validate", "--degree", "3", "--format", "json"]);
    let parsed: serde_json::Value =
        serde_json::from_slice(&full.stdout).map_err(|e| e.to_string())?;
    let failing_intertwining = parsed["checks"]
        .as_array()
        .ok_or("validate report without checks")?
        .iter()
        .filter(|ch| ch["name"] == "intertwining" && ch["pass"] == false)
        .count();
    let mut ratio_gap = 0.0f64;
    for (r, s) in PARAMS {
        let g = gen(r, s, &[0.7, 1.3]).with_convention(Convention::FullLaplacian);
        let basis = FilteredBasis::build(&IndexSet::range(2), 3, DEFAULT_DIMENSION_CAP).unwrap();
        let rep = intertwining_suite(&g, &basis, &[3], 1).unwrap();
        let [re, im] = rep.worst_ratio.ok_or("no ratio")?;
        ratio_gap = ratio_gap.max((C::new(re, im) - c(2.0)).norm());
    }
    ensure(
        identical
            && seed_matters
            && exits == (Some(0), Some(0), Some(2))
            && half.status.code() == Some(0)
            && full.status.code() == Some(2)
            && failing_intertwining == PARAMS.len()
            && ratio_gap <= 1e-8,
        format!(
            "reruns byte-identical {identical} over {names:?} and json, other seed differs {seed_matters}; \
             compare exits {:?}/{:?}, corrupted sigma exits {:?}; validate exits {:?}, full convention {:?} \
             with {failing_intertwining} failing intertwining checks, predicted/brute off 2 by {ratio_gap:.1e}",
            exits.0,
            exits.1,
            exits.2,
            half.status.code(),
            full.status.code()
        ),
    )
}

fn run(number: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, pass) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("{tag} {number} {name} ({secs:.0}s): {detail}");
    pass
}

/// `GLBM_ACCEPTANCE=1,4` restricts the run to the listed criteria.
fn selected() -> Option<BTreeSet<usize>> {
    let list = std::env::var("GLBM_ACCEPTANCE").ok()?;
    Some(
        list.split(',')
            .filter_map(|x| x.trim().parse().ok())
            .collect(),
    )
}

fn main() -> ExitCode {
    let only = selected();
    let wanted = |k: usize| only.as_ref().is_none_or(|s| s.contains(&k));
    // One unitary run serves criterion 5 (its first 2000 samples) and criterion 7.
    let data = (wanted(5) || wanted(7))
        .then(|| catch_unwind(|| simulate_paths(&mc_config(1.0, 0.0, 4000, 7)).unwrap()).ok())
        .flatten();
    let unitary = || data.as_ref().ok_or_else(|| "simulation failed".to_string());
    let criteria: Vec<Criterion> = vec![
        ("magic_formulas", Box::new(criterion_1)),
        ("intertwining", Box::new(criterion_2)),
        ("sigma_agreement", Box::new(criterion_3)),
        ("sigma_anchors", Box::new(criterion_4)),
        ("monte_carlo_vs_exact", Box::new(|| criterion_5(unitary()?))),
        ("clt_rate", Box::new(criterion_6)),
        ("gaussianity", Box::new(|| criterion_7(unitary()?))),
        ("circular_symmetry", Box::new(criterion_8)),
        ("determinism_and_controls", Box::new(criterion_9)),
    ];
    let mut pass = true;
    for (k, (name, f)) in criteria.into_iter().enumerate() {
        if wanted(k + 1) {
            pass &= run(k + 1, name, f);
        }
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
