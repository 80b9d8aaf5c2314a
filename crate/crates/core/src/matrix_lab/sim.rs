//! Discretized `(r,s)`-Brownian motions on `GL_N`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intertwine::{RSParams, TimeVector};
use crate::linalg::expm::expm_taylor;
use crate::linalg::{axpy, is_finite, mul_into, CMat};
use crate::trace_algebra::{IndexSet, MatrixTuple};

/// Time-stepping rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `B <- B exp(dW)`; exactly unitary at `(1, 0)`.
    #[default]
    MultiplicativeExp,
    /// `B <- B (I + dW - (r - s)/2 dt I)`.
    EulerMaruyama,
}

impl Scheme {
    fn code(self) -> u8 {
        match self {
            Scheme::MultiplicativeExp => 0,
            Scheme::EulerMaruyama => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Scheme::MultiplicativeExp),
            1 => Ok(Scheme::EulerMaruyama),
            _ => Err(Error::Format(format!("unknown scheme code {c}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub rs: RSParams,
    /// Final time of each component; the keys form the index set.
    pub times: TimeVector,
    pub steps_per_unit_time: usize,
    pub samples: usize,
    pub scheme: Scheme,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if self.steps_per_unit_time == 0 {
            return Err(Error::InvalidParameter(
                "steps per unit time must be at least 1".into(),
            ));
        }
        if self.times.is_empty() {
            return Err(Error::InvalidParameter("no components to simulate".into()));
        }
        Ok(())
    }

    pub fn indices(&self) -> IndexSet {
        self.times.indices()
    }

    /// Number of steps for a component run to time `t`.
    pub fn steps_for(&self, t: f64) -> usize {
        (t * self.steps_per_unit_time as f64 - 1e-9).ceil().max(0.0) as usize
    }

    /// The same configuration with half the step size.
    pub fn halved(&self) -> SimConfig {
        SimConfig {
            steps_per_unit_time: 2 * self.steps_per_unit_time,
            ..self.clone()
        }
    }
}

/// `sqrt(r) i X + sqrt(s) Y` with `X`, `Y` independent GUE, `E tr X^2 = dt`.
pub fn sample_increment<R: Rng + ?Sized>(n: usize, rs: RSParams, dt: f64, rng: &mut R) -> CMat {
    let mut w = CMat::zeros(n, n);
    if rs.r() > 0.0 {
        add_gue(&mut w, Complex64::new(0.0, rs.r().sqrt()), dt, rng);
    }
    if rs.s() > 0.0 {
        add_gue(&mut w, Complex64::new(rs.s().sqrt(), 0.0), dt, rng);
    }
    w
}

/// Adds `c X` for a GUE matrix `X`: diagonal variance `dt/N`, off-diagonal
/// complex variance `dt/N`.
fn add_gue<R: Rng + ?Sized>(w: &mut CMat, c: Complex64, dt: f64, rng: &mut R) {
    let n = w.nrows();
    let sd_diag = (dt / n as f64).sqrt();
    let sd_off = (dt / (2 * n) as f64).sqrt();
    // Upper triangle column by column, then the lower triangle by reflection.
    let mut x = CMat::zeros(n, n);
    for j in 0..n {
        let col = x.col_as_slice_mut(j);
        for z in &mut col[..j] {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = Complex64::new(sd_off * re, sd_off * im);
        }
        let d: f64 = rng.sample(StandardNormal);
        col[j] = Complex64::new(sd_diag * d, 0.0);
    }
    for j in 0..n {
        for i in j + 1..n {
            x[(i, j)] = x[(j, i)].conj();
        }
    }
    axpy(w, c, x.as_ref());
}

/// The random stream of one component of one sample.
fn stream(seed: u64, sample: usize, j: u16) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sample as u64) << 16) | j as u64);
    rng
}

/// A second stream for the Brownian bridge between coarse steps.
fn bridge_stream(seed: u64, sample: usize, j: u16) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1 << 63) | ((sample as u64) << 16) | j as u64);
    rng
}

struct Stepper {
    scheme: Scheme,
    drift: f64,
    scratch: CMat,
}

impl Stepper {
    fn new(scheme: Scheme, rs: RSParams, n: usize) -> Self {
        Stepper {
            scheme,
            drift: -0.5 * (rs.r() - rs.s()),
            scratch: CMat::zeros(n, n),
        }
    }

    fn step(&mut self, b: &mut CMat, dw: &CMat, dt: f64) {
        let factor = match self.scheme {
            Scheme::MultiplicativeExp => expm_taylor(dw.as_ref()),
            Scheme::EulerMaruyama => {
                let mut f = dw.clone();
                for i in 0..f.nrows() {
                    f[(i, i)] += Complex64::new(1.0 + self.drift * dt, 0.0);
                }
                f
            }
        };
        mul_into(&mut self.scratch, b.as_ref(), factor.as_ref());
        std::mem::swap(b, &mut self.scratch);
    }
}

/// Which step sizes to run on a common Brownian path.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Coarse,
    Fine,
    Both,
}

/// Runs one component at the configured step size and/or at half of it.
///
/// Each coarse increment `dW` is drawn from the main stream and split as
/// `dW/2 + xi`, `dW/2 - xi` with `xi` an independent increment of variance
/// `dt/4` from the bridge stream, so the two halves are independent with
/// variance `dt/2` and the coarse path does not depend on `mode`.
fn run_component(
    cfg: &SimConfig,
    sample: usize,
    j: u16,
    t: f64,
    mode: Mode,
) -> Result<(Option<CMat>, Option<CMat>)> {
    let n = cfg.n;
    let steps = cfg.steps_for(t);
    let mut rng = stream(cfg.seed, sample, j);
    let mut bridge = bridge_stream(cfg.seed, sample, j);
    let mut coarse = (mode != Mode::Fine).then(|| CMat::identity(n, n));
    let mut fine = (mode != Mode::Coarse).then(|| CMat::identity(n, n));
    let mut stepper = Stepper::new(cfg.scheme, cfg.rs, n);
    if steps == 0 {
        return Ok((coarse, fine));
    }
    let dt = t / steps as f64;
    let blowup = |step| Error::SimulationBlowup {
        sample,
        index: j,
        step,
    };
    let half = Complex64::new(0.5, 0.0);
    for step in 0..steps {
        let dw = sample_increment(n, cfg.rs, dt, &mut rng);
        if let Some(fine) = fine.as_mut() {
            let xi = sample_increment(n, cfg.rs, dt / 4.0, &mut bridge);
            let mut a = xi.clone();
            axpy(&mut a, half, dw.as_ref());
            let mut b = xi;
            scale_neg(&mut b);
            axpy(&mut b, half, dw.as_ref());
            stepper.step(fine, &a, dt / 2.0);
            stepper.step(fine, &b, dt / 2.0);
            if !is_finite(fine.as_ref()) {
                return Err(blowup(2 * step + 2));
            }
        }
        if let Some(coarse) = coarse.as_mut() {
            stepper.step(coarse, &dw, dt);
            if !is_finite(coarse.as_ref()) {
                return Err(blowup(step + 1));
            }
        }
    }
    Ok((coarse, fine))
}

fn scale_neg(m: &mut CMat) {
    for j in 0..m.ncols() {
        m.col_as_slice_mut(j).iter_mut().for_each(|x| *x = -*x);
    }
}

fn simulate(cfg: &SimConfig, mode: Mode) -> Result<(Option<PathDataset>, Option<PathDataset>)> {
    cfg.validate()?;
    let comps: Vec<(u16, f64)> = cfg.times.iter().collect();
    let runs: Vec<Vec<(Option<CMat>, Option<CMat>)>> = (0..cfg.samples)
        .into_par_iter()
        .map(|sample| {
            comps
                .iter()
                .map(|&(j, t)| run_component(cfg, sample, j, t, mode))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut coarse = Vec::with_capacity(cfg.samples);
    let mut fine = Vec::with_capacity(cfg.samples);
    let keys: Vec<u16> = comps.iter().map(|&(j, _)| j).collect();
    for run in runs {
        let (c, f): (Vec<_>, Vec<_>) = run.into_iter().unzip();
        if mode != Mode::Fine {
            coarse.push(MatrixTuple::new(
                keys.iter().copied().zip(c.into_iter().flatten()).collect(),
            )?);
        }
        if mode != Mode::Coarse {
            fine.push(MatrixTuple::new(
                keys.iter().copied().zip(f.into_iter().flatten()).collect(),
            )?);
        }
    }
    let coarse = (mode != Mode::Fine).then(|| PathDataset {
        config: cfg.clone(),
        tuples: coarse,
    });
    let fine = (mode != Mode::Coarse).then(|| PathDataset {
        config: cfg.halved(),
        tuples: fine,
    });
    Ok((coarse, fine))
}

/// Independent samples of `(B_j(t_j))_j`.
pub fn simulate_paths(cfg: &SimConfig) -> Result<PathDataset> {
    Ok(simulate(cfg, Mode::Coarse)?.0.expect("coarse run"))
}

/// The samples of [`simulate_paths`] rerun at half the step size on the same
/// Brownian paths.
pub fn simulate_refined(cfg: &SimConfig) -> Result<PathDataset> {
    Ok(simulate(cfg, Mode::Fine)?.1.expect("fine run"))
}

/// [`simulate_paths`] and [`simulate_refined`] in one pass.
pub fn simulate_coupled(cfg: &SimConfig) -> Result<(PathDataset, PathDataset)> {
    let (coarse, fine) = simulate(cfg, Mode::Both)?;
    Ok((coarse.expect("coarse run"), fine.expect("fine run")))
}

/// Simulated endpoints, one matrix tuple per sample.
#[derive(Clone, Debug)]
pub struct PathDataset {
    pub config: SimConfig,
    pub tuples: Vec<MatrixTuple>,
}

const MAGIC: &[u8; 4] = b"GLBM";
const VERSION: u32 = 1;

impl PathDataset {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Little-endian layout: magic, version, N, |J|, samples, then `(index, time)`
    /// per component, `r`, `s`, steps per unit time, scheme, seed, and the
    /// matrices sample by sample and component by component, row-major.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let cfg = &self.config;
        let comps: Vec<(u16, f64)> = cfg.times.iter().collect();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(cfg.n as u32).to_le_bytes())?;
        w.write_all(&(comps.len() as u32).to_le_bytes())?;
        w.write_all(&(self.tuples.len() as u64).to_le_bytes())?;
        for &(j, t) in &comps {
            w.write_all(&(j as u32).to_le_bytes())?;
            w.write_all(&t.to_le_bytes())?;
        }
        w.write_all(&cfg.rs.r().to_le_bytes())?;
        w.write_all(&cfg.rs.s().to_le_bytes())?;
        w.write_all(&(cfg.steps_per_unit_time as u64).to_le_bytes())?;
        w.write_all(&[cfg.scheme.code()])?;
        w.write_all(&cfg.seed.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * cfg.n * cfg.n);
        for tuple in &self.tuples {
            for &(j, _) in &comps {
                let m = tuple.get(j).ok_or(Error::UnknownIndex { index: j })?;
                buf.clear();
                for row in 0..cfg.n {
                    for col in 0..cfg.n {
                        buf.extend_from_slice(&m[(row, col)].re.to_le_bytes());
                        buf.extend_from_slice(&m[(row, col)].im.to_le_bytes());
                    }
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        let nj = read_u32(&mut r)? as usize;
        let samples = read_u64(&mut r)? as usize;
        let mut comps = Vec::with_capacity(nj);
        for _ in 0..nj {
            let j = u16::try_from(read_u32(&mut r)?)
                .map_err(|_| Error::Format("index out of range".into()))?;
            comps.push((j, read_f64(&mut r)?));
        }
        let rs = RSParams::new(read_f64(&mut r)?, read_f64(&mut r)?)?;
        let steps_per_unit_time = read_u64(&mut r)? as usize;
        let mut code = [0u8; 1];
        r.read_exact(&mut code)?;
        let scheme = Scheme::from_code(code[0])?;
        let seed = read_u64(&mut r)?;
        let config = SimConfig {
            n,
            rs,
            times: TimeVector::new(comps.iter().copied())?,
            steps_per_unit_time,
            samples,
            scheme,
            seed,
        };
        config
            .validate()
            .map_err(|e| Error::Format(e.to_string()))?;
        let mut tuples = Vec::with_capacity(samples);
        let mut buf = vec![0u8; 16 * n * n];
        for _ in 0..samples {
            let mut mats = std::collections::BTreeMap::new();
            for &(j, _) in &comps {
                r.read_exact(&mut buf)?;
                let m = CMat::from_fn(n, n, |row, col| {
                    let k = 16 * (row * n + col);
                    Complex64::new(f64_at(&buf, k), f64_at(&buf, k + 8))
                });
                mats.insert(j, m);
            }
            tuples.push(MatrixTuple::new(mats)?);
        }
        Ok(PathDataset { config, tuples })
    }
}

fn f64_at(buf: &[u8], k: usize) -> f64 {
    f64::from_le_bytes(buf[k..k + 8].try_into().expect("8 bytes"))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}
