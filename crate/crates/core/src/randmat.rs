//! Finite-N samplers and Monte-Carlo estimators of spherical integrals.
//!
//! A spherical integral only depends on the spectrum of the matrix, so frames
//! are drawn directly in its eigenbasis. Uniform frames almost never visit the
//! alignments that dominate `E[exp((βN/2) Σ θ_i ⟨e_i, X e_i⟩)]` once `N` is a
//! few hundred, so the default estimator draws each frame vector from an
//! angular central Gaussian tilted toward the relevant eigenvalues and
//! reweights it by the exact density ratio against the uniform law. The
//! estimator is therefore unbiased for the finite-N expectation, with a
//! variance that stays bounded as `N` grows. [`Proposal::Haar`] keeps the
//! plain uniform sampler.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{Read, Write};

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::ldp::{PerturbationSpec, VarianceProfile};
use crate::measures::SpectralMeasure;
use crate::spherical::{DiscreteModel, ThetaSpec};
use crate::{Beta, Error, Result};

/// Number of batches used for the jackknife standard error.
pub const BATCHES: usize = 50;

/// Scalar field of a sampler: `f64` for `β = 1`, `Complex64` for `β = 2`.
trait Entry: ComplexField<RealField = f64> + Copy + Send + Sync {
    /// Variance of a diagonal Wigner entry before the `1/N` scaling.
    const DIAG_VARIANCE: f64;
    /// Standard Gaussian with `E|z|² = 1`; real and imaginary parts independent.
    fn gauss<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Rademacher-type entry with `E|z|² = 1`.
    fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Centered uniform entry with `E|z|² = 1`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Entry for f64 {
    const DIAG_VARIANCE: f64 = 2.0;

    fn gauss<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() { 1.0 } else { -1.0 }
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        3f64.sqrt() * rng.random_range(-1.0..1.0)
    }
}

impl Entry for Complex64 {
    const DIAG_VARIANCE: f64 = 1.0;

    fn gauss<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    }

    fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(f64::rademacher(rng) * FRAC_1_SQRT_2, f64::rademacher(rng) * FRAC_1_SQRT_2)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(f64::uniform(rng) * FRAC_1_SQRT_2, f64::uniform(rng) * FRAC_1_SQRT_2)
    }
}

/// Real symmetric or complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Hermitian {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// Top and bottom eigenvalues, `top` decreasing and `bottom` increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
}

impl Hermitian {
    pub fn from_diagonal(d: &[f64]) -> Self {
        Hermitian::Real(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Hermitian::Real(m) => m.nrows(),
            Hermitian::Complex(m) => m.nrows(),
        }
    }

    /// `Real` for a real symmetric matrix, `Complex` otherwise.
    pub fn field(&self) -> Beta {
        match self {
            Hermitian::Real(_) => Beta::Real,
            Hermitian::Complex(_) => Beta::Complex,
        }
    }

    /// Checks squareness and symmetry up to `tol` relative to the largest entry.
    pub fn validate(&self, tol: f64) -> Result<()> {
        fn check<T: Entry>(m: &DMatrix<T>, tol: f64) -> Result<()> {
            if m.nrows() != m.ncols() {
                return Err(Error::Shape(format!("matrix is {}x{}", m.nrows(), m.ncols())));
            }
            let scale = m.iter().map(|x| x.modulus()).fold(0.0, f64::max);
            if !scale.is_finite() {
                return domain("matrix has non-finite entries");
            }
            for i in 0..m.nrows() {
                for j in 0..i {
                    if (m[(i, j)] - m[(j, i)].conjugate()).modulus() > tol * scale.max(1.0) {
                        return domain(format!("matrix is not Hermitian at ({i}, {j})"));
                    }
                }
                if m[(i, i)].imaginary().abs() > tol * scale.max(1.0) {
                    return domain(format!("diagonal entry {i} is not real"));
                }
            }
            Ok(())
        }
        match self {
            Hermitian::Real(m) => check(m, tol),
            Hermitian::Complex(m) => check(m, tol),
        }
    }

    /// All eigenvalues in increasing order, from a dense decomposition.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self {
            Hermitian::Real(m) => m.clone().symmetric_eigenvalues().iter().copied().collect(),
            Hermitian::Complex(m) => m.clone().symmetric_eigenvalues().iter().copied().collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// The `top` largest and `bottom` smallest eigenvalues. Small matrices use
    /// a dense decomposition; larger ones use Lanczos with full
    /// reorthogonalization, run until the wanted Ritz pairs have residual
    /// below `1e-10 ‖X‖`.
    pub fn extreme_eigenvalues(&self, top: usize, bottom: usize) -> Result<Extremes> {
        let n = self.dim();
        if top + bottom > n {
            return Err(Error::Shape(format!("{} extreme eigenvalues of a {n}x{n} matrix", top + bottom)));
        }
        if n <= 300 {
            let ev = self.eigenvalues();
            return Ok(Extremes {
                top: ev.iter().rev().take(top).copied().collect(),
                bottom: ev.iter().take(bottom).copied().collect(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x01a2_c205);
        match self {
            Hermitian::Real(m) => lanczos(m, top, bottom, &mut rng),
            Hermitian::Complex(m) => lanczos(m, top, bottom, &mut rng),
        }
    }

    /// Largest eigenvalue modulus.
    pub fn operator_norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev.first().map_or(0.0, |a| a.abs()).max(ev.last().map_or(0.0, |b| b.abs()))
    }

    /// Entrywise sum; a real and a complex matrix give a complex matrix.
    pub fn add(&self, other: &Hermitian) -> Result<Hermitian> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!("cannot add {0}x{0} and {1}x{1}", self.dim(), other.dim())));
        }
        Ok(match (self, other) {
            (Hermitian::Real(a), Hermitian::Real(b)) => Hermitian::Real(a + b),
            (a, b) => Hermitian::Complex(a.to_complex() + b.to_complex()),
        })
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        match self {
            Hermitian::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
            Hermitian::Complex(m) => m.clone(),
        }
    }
}

fn lanczos<T: Entry, R: Rng>(m: &DMatrix<T>, top: usize, bottom: usize, rng: &mut R) -> Result<Extremes> {
    let n = m.nrows();
    let want = top + bottom;
    if want == 0 {
        return Ok(Extremes { top: vec![], bottom: vec![] });
    }
    let norm_bound = (0..n).map(|i| m.row(i).iter().map(|x| x.modulus()).sum::<f64>()).fold(0.0, f64::max);
    let tol = 1e-10 * norm_bound.max(f64::MIN_POSITIVE);
    let mut q = DVector::from_fn(n, |_, _| T::gauss(rng));
    let nq = q.norm();
    q.unscale_mut(nq);
    let mut basis: Vec<DVector<T>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev: Option<DVector<T>> = None;
    loop {
        let mut w = m * &q;
        let a = q.dotc(&w).real();
        w.axpy(T::from_real(-a), &q, T::one());
        if let (Some(p), Some(b)) = (&prev, betas.last()) {
            w.axpy(T::from_real(-*b), p, T::one());
        }
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let c = v.dotc(&w);
                w.axpy(-c, v, T::one());
            }
        }
        alphas.push(a);
        let b = w.norm();
        let steps = alphas.len();
        let exhausted = steps == n || b <= tol;
        if exhausted || (steps >= want + 10 && steps % 10 == 0) {
            let mut t = DMatrix::<f64>::zeros(steps, steps);
            for i in 0..steps {
                t[(i, i)] = alphas[i];
                if i + 1 < steps {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..steps).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let chosen: Vec<usize> =
                order.iter().rev().take(top).chain(order.iter().take(bottom)).copied().collect();
            let converged = steps >= want
                && chosen.iter().all(|&i| (b * eig.eigenvectors[(steps - 1, i)]).abs() <= tol);
            if converged || exhausted {
                if !converged || steps < want {
                    return Err(Error::Convergence(format!(
                        "Lanczos stopped after {steps} steps without resolving {want} eigenvalues"
                    )));
                }
                return Ok(Extremes {
                    top: order.iter().rev().take(top).map(|&i| eig.eigenvalues[i]).collect(),
                    bottom: order.iter().take(bottom).map(|&i| eig.eigenvalues[i]).collect(),
                });
            }
        }
        betas.push(b);
        w.unscale_mut(b);
        prev = Some(std::mem::replace(&mut q, w));
    }
}

/// Orthonormal vectors `e_1, …, e_k` in `R^N` or `C^N`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSample {
    Real(Vec<DVector<f64>>),
    Complex(Vec<DVector<Complex64>>),
}

impl FrameSample {
    pub fn len(&self) -> usize {
        match self {
            FrameSample::Real(v) => v.len(),
            FrameSample::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|e_i(j)|²`.
    pub fn abs2(&self, i: usize, j: usize) -> f64 {
        match self {
            FrameSample::Real(v) => v[i][j] * v[i][j],
            FrameSample::Complex(v) => v[i][j].norm_sqr(),
        }
    }

    /// `max_{i,j} |⟨e_i, e_j⟩ - δ_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        fn residual<T: Entry>(v: &[DVector<T>]) -> f64 {
            let mut worst = 0.0f64;
            for (i, a) in v.iter().enumerate() {
                for (j, b) in v.iter().enumerate() {
                    let target = if i == j { T::one() } else { T::zero() };
                    worst = worst.max((a.dotc(b) - target).modulus());
                }
            }
            worst
        }
        match self {
            FrameSample::Real(v) => residual(v),
            FrameSample::Complex(v) => residual(v),
        }
    }
}

/// Gram–Schmidt applied twice, which equals QR with a positive diagonal in `R`.
fn orthonormalize<T: Entry>(cols: &mut [DVector<T>]) {
    for i in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(i);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c = q.dotc(v);
                v.axpy(-c, q, T::one());
            }
        }
        let norm = v.norm();
        v.unscale_mut(norm);
    }
}

fn frame<T: Entry, R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<DVector<T>> {
    let mut cols: Vec<DVector<T>> = (0..count).map(|_| DVector::from_fn(n, |_, _| T::gauss(rng))).collect();
    orthonormalize(&mut cols);
    cols
}

/// Haar-distributed orthonormal `count`-frame in dimension `n`, drawn from `rng`.
pub fn sample_frame_with<R: Rng + ?Sized>(n: usize, count: usize, beta: Beta, rng: &mut R) -> Result<FrameSample> {
    if count > n {
        return Err(Error::Shape(format!("{count} orthonormal vectors in dimension {n}")));
    }
    Ok(match beta {
        Beta::Real => FrameSample::Real(frame(n, count, rng)),
        Beta::Complex => FrameSample::Complex(frame(n, count, rng)),
    })
}

/// Haar-distributed orthonormal `count`-frame in dimension `config.n`,
/// seeded by `config.seed`.
pub fn sample_frame(config: &McConfig, count: usize) -> Result<FrameSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_frame_with(config.n, count, config.beta, &mut rng)
}

/// Sampling law of the frame vectors in the Monte-Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    /// Uniform frames with unit weights.
    Haar,
    /// Angular central Gaussian frames tilted toward the extreme eigenvalues,
    /// reweighted to the uniform law.
    #[default]
    Tilted,
}

/// Monte-Carlo configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Matrix dimension.
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub beta: Beta,
    #[serde(default)]
    pub proposal: Proposal,
}

impl McConfig {
    pub fn new(n: usize, samples: usize, seed: u64, beta: Beta) -> Self {
        McConfig { n, samples, seed, beta, proposal: Proposal::Tilted }
    }

    pub fn with_proposal(mut self, proposal: Proposal) -> Self {
        self.proposal = proposal;
        self
    }

    fn check(&self, dim: usize, frames: usize) -> Result<()> {
        if self.n != dim {
            return Err(Error::Shape(format!("config has N = {} but the input has dimension {dim}", self.n)));
        }
        if self.samples == 0 {
            return domain("need at least one sample");
        }
        if frames > self.n {
            return Err(Error::Shape(format!("{frames} tilts exceed N = {}", self.n)));
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of `(1/N) log E[...]` with its jackknife standard
/// error over [`BATCHES`] batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Streaming `log Σ exp(x_s)`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
    count: usize,
}

impl LogSum {
    const EMPTY: LogSum = LogSum { max: f64::NEG_INFINITY, scaled: 0.0, count: 0 };

    fn push(&mut self, x: f64) {
        self.merge(&LogSum { max: x, scaled: 1.0, count: 1 });
    }

    fn merge(&mut self, other: &LogSum) {
        if other.count == 0 {
            return;
        }
        if other.max > self.max {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        } else {
            self.scaled += other.scaled * (other.max - self.max).exp();
        }
        self.count += other.count;
    }

    fn log_mean(&self) -> f64 {
        self.max + self.scaled.ln() - (self.count as f64).ln()
    }
}

fn batch_sizes(samples: usize) -> Vec<usize> {
    let b = samples.min(BATCHES);
    (0..b).map(|i| samples / b + usize::from(i < samples % b)).collect()
}

/// Runs `draw` over seeded batches in parallel and reduces in batch order.
fn run_batches<F>(config: &McConfig, n: f64, draw: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let sizes = batch_sizes(config.samples);
    let batches: Vec<LogSum> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(b as u64);
            let mut acc = LogSum::EMPTY;
            for _ in 0..size {
                acc.push(draw(&mut rng));
            }
            acc
        })
        .collect();
    let mut total = LogSum::EMPTY;
    for b in &batches {
        total.merge(b);
    }
    let estimate = total.log_mean() / n;
    let k = batches.len();
    let stderr = if k < 2 {
        f64::INFINITY
    } else {
        let loo: Vec<f64> = (0..k)
            .map(|skip| {
                let mut acc = LogSum::EMPTY;
                for (b, s) in batches.iter().enumerate() {
                    if b != skip {
                        acc.merge(s);
                    }
                }
                acc.log_mean() / n
            })
            .collect();
        let mean = loo.iter().sum::<f64>() / k as f64;
        let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
        ((k - 1) as f64 / k as f64 * ss).sqrt()
    };
    McEstimate { estimate, stderr, samples: config.samples }
}

/// Solves `Σ_j w_j / (v - d_j) = target` for `v` above every `d_j` with
/// positive weight.
fn tilt_level(d: &[f64], w: &[f64], target: f64) -> f64 {
    let top = d.iter().zip(w).filter(|(_, w)| **w > 0.0).map(|(d, _)| *d).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = w.iter().sum();
    let f = |v: f64| d.iter().zip(w).map(|(d, w)| w / (v - d)).sum::<f64>() - target;
    let hi = top + total / target;
    crate::optim::bisect(|v| if v <= top { f64::INFINITY } else { f(v) }, top, hi)
}

/// Proposal for one frame vector: diagonal covariance `s` in the eigenbasis.
struct FramePlan {
    theta: f64,
    /// `None` for the uniform law.
    s: Option<Vec<f64>>,
    sqrt_s: Vec<f64>,
    log_det_s: f64,
}

fn plan_frames(d: &[f64], thetas: &ThetaSpec, proposal: Proposal) -> Vec<FramePlan> {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let mut taken = vec![false; n];
    let mut plans = Vec::new();
    let tilts: Vec<f64> = thetas.iter().filter(|t| *t != 0.0).collect();
    for (i, &theta) in tilts.iter().enumerate() {
        let remaining = n - i;
        if proposal == Proposal::Haar || remaining == 1 {
            plans.push(FramePlan { theta, s: None, sqrt_s: vec![1.0; n], log_det_s: 0.0 });
            continue;
        }
        let sign = theta.signum();
        let signed: Vec<f64> = d.iter().map(|x| sign * x).collect();
        let avail: Vec<f64> = taken.iter().map(|t| if *t { 0.0 } else { 1.0 }).collect();
        let v = tilt_level(&signed, &avail, n as f64 * theta.abs());
        let mut s: Vec<f64> = signed.iter().map(|x| 1.0 / (v - x)).collect();
        let floor = s.iter().zip(&taken).filter(|(_, t)| !**t).map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
        for (sj, t) in s.iter_mut().zip(&taken) {
            if *t {
                *sj = floor;
            }
        }
        let peak = s.iter().copied().fold(0.0, f64::max);
        for sj in s.iter_mut() {
            *sj /= peak;
        }
        let next = if sign > 0.0 {
            order.iter().rev().find(|&&j| !taken[j])
        } else {
            order.iter().find(|&&j| !taken[j])
        };
        if let Some(&j) = next {
            taken[j] = true;
        }
        let log_det_s = s.iter().map(|x| x.ln()).sum();
        let sqrt_s = s.iter().map(|x| x.sqrt()).collect();
        plans.push(FramePlan { theta, s: Some(s), sqrt_s, log_det_s });
    }
    plans
}

/// One draw of `N (β/2) Σ θ_i ⟨e_i, D e_i⟩ + log(dUniform/dProposal)`.
fn frame_exponent<T: Entry>(d: &[f64], plans: &[FramePlan], beta: f64, rng: &mut ChaCha8Rng) -> f64 {
    let n = d.len();
    let mut frames: Vec<DVector<T>> = Vec::with_capacity(plans.len());
    let mut total = 0.0;
    for (i, plan) in plans.iter().enumerate() {
        let mut x = DVector::from_fn(n, |j, _| T::gauss(rng).scale(plan.sqrt_s[j]));
        for _ in 0..2 {
            for q in &frames {
                let c = q.dotc(&x);
                x.axpy(-c, q, T::one());
            }
        }
        let norm = x.norm();
        x.unscale_mut(norm);
        let form: f64 = x.iter().zip(d).map(|(xj, dj)| xj.modulus_squared() * dj).sum();
        total += n as f64 * 0.5 * beta * plan.theta * form;
        if let Some(s) = &plan.s {
            let tx = DVector::from_fn(n, |j, _| x[j].unscale(s[j]));
            let xtx = x.dotc(&tx).real();
            let (log_det_c, correction) = if frames.is_empty() {
                (0.0, 0.0)
            } else {
                let k = frames.len();
                let tq: Vec<DVector<T>> =
                    frames.iter().map(|q| DVector::from_fn(n, |j, _| q[j].unscale(s[j]))).collect();
                let c = DMatrix::from_fn(k, k, |a, b| frames[a].dotc(&tq[b]));
                let rhs = DVector::from_fn(k, |a, _| frames[a].dotc(&tx));
                match Cholesky::new(c) {
                    Some(ch) => {
                        let l = ch.l();
                        let log_det = 2.0 * (0..k).map(|a| l[(a, a)].real().ln()).sum::<f64>();
                        let sol = ch.solve(&rhs);
                        (log_det, rhs.dotc(&sol).real())
                    }
                    None => return f64::NEG_INFINITY,
                }
            };
            let m = (n - i) as f64;
            let q = (xtx - correction).max(f64::MIN_POSITIVE);
            total += 0.5 * beta * (plan.log_det_s + log_det_c) + 0.5 * beta * m * q.ln();
        }
        frames.push(x);
    }
    total
}

/// Estimate of `(1/N) log E[exp((βN/2) Σ θ_i ⟨e_i, X e_i⟩)]` over uniform
/// orthonormal frames, for a matrix with the given eigenvalues. The `β/2`
/// factor is included.
pub fn mc_spherical_spectrum(eigenvalues: &[f64], thetas: &ThetaSpec, config: &McConfig) -> Result<McEstimate> {
    config.check(eigenvalues.len(), thetas.len())?;
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return domain("eigenvalues must be finite");
    }
    if thetas.iter().all(|t| t == 0.0) {
        return Ok(McEstimate { estimate: 0.0, stderr: 0.0, samples: config.samples });
    }
    let plans = plan_frames(eigenvalues, thetas, config.proposal);
    let beta = config.beta.value();
    let n = eigenvalues.len() as f64;
    Ok(match config.beta {
        Beta::Real => run_batches(config, n, |rng| frame_exponent::<f64>(eigenvalues, &plans, beta, rng)),
        Beta::Complex => run_batches(config, n, |rng| frame_exponent::<Complex64>(eigenvalues, &plans, beta, rng)),
    })
}

/// Estimate of `(1/N) log E[exp((βN/2) Σ θ_i ⟨e_i, X e_i⟩)]` with the frame
/// taken real for `β = 1` and complex for `β = 2`. The `β/2` factor is
/// included. A complex matrix requires `β = 2`.
pub fn mc_spherical(matrix: &Hermitian, thetas: &ThetaSpec, config: &McConfig) -> Result<McEstimate> {
    matrix.validate(1e-10)?;
    if matrix.field() == Beta::Complex && config.beta == Beta::Real {
        return domain("real frames are not invariant for a complex Hermitian matrix; use beta = 2");
    }
    mc_spherical_spectrum(&matrix.eigenvalues(), thetas, config)
}

fn gamma_laws(model: &DiscreteModel, beta: Beta) -> Vec<Gamma<f64>> {
    model
        .mult()
        .iter()
        .map(|&m| Gamma::new(beta.half() * m as f64, 1.0).expect("positive shape"))
        .collect()
}

/// Squared projections of a uniform unit vector onto the eigenspaces of the
/// model: a Dirichlet vector with parameters `(β/2) N_i`.
pub fn sample_dirichlet_weights(model: &DiscreteModel, beta: Beta, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_dirichlet_weights_with(model, beta, &mut rng)
}

pub fn sample_dirichlet_weights_with<R: Rng + ?Sized>(model: &DiscreteModel, beta: Beta, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = gamma_laws(model, beta).iter().map(|law| law.sample(rng)).collect();
    let total: f64 = g.iter().sum();
    g.iter().map(|x| x / total).collect()
}

/// Rank-one estimate of `(1/N) log E[exp((βN/2) θ Σ η_i γ_i)]` with `γ`
/// Dirichlet, which equals the spherical integral of the model's diagonal
/// matrix. The tilted proposal rescales the Gamma variables by
/// `s_i = 1/(v - η_i)`, the marginal of the tilted frame proposal.
pub fn mc_dirichlet_spherical(model: &DiscreteModel, theta: f64, config: &McConfig) -> Result<McEstimate> {
    let dim = usize::try_from(model.dim()).map_err(|_| Error::Shape("model dimension overflows".into()))?;
    config.check(dim, 1)?;
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    if theta == 0.0 {
        return Ok(McEstimate { estimate: 0.0, stderr: 0.0, samples: config.samples });
    }
    let etas = model.etas();
    let shapes: Vec<f64> = model.mult().iter().map(|&m| config.beta.half() * m as f64).collect();
    let total_shape: f64 = shapes.iter().sum();
    let laws = gamma_laws(model, config.beta);
    let s: Vec<f64> = if config.proposal == Proposal::Haar || etas.len() == 1 {
        vec![1.0; etas.len()]
    } else {
        let sign = theta.signum();
        let signed: Vec<f64> = etas.iter().map(|e| sign * e).collect();
        let w: Vec<f64> = model.mult().iter().map(|&m| m as f64).collect();
        let v = tilt_level(&signed, &w, dim as f64 * theta.abs());
        let raw: Vec<f64> = signed.iter().map(|x| 1.0 / (v - x)).collect();
        let peak = raw.iter().copied().fold(0.0, f64::max);
        raw.iter().map(|x| x / peak).collect()
    };
    let log_s_term: f64 = shapes.iter().zip(&s).map(|(a, s)| a * s.ln()).sum();
    let n = dim as f64;
    let half_beta = config.beta.half();
    Ok(run_batches(config, n, |rng| {
        let u: Vec<f64> = laws.iter().zip(&s).map(|(law, s)| law.sample(rng) * s).collect();
        let total: f64 = u.iter().sum();
        let mut form = 0.0;
        let mut inv = 0.0;
        for ((ui, si), eta) in u.iter().zip(&s).zip(etas) {
            let g = ui / total;
            form += eta * g;
            inv += g / si;
        }
        n * half_beta * theta * form + log_s_term + total_shape * inv.ln()
    }))
}

/// Random matrix ensembles, normalized so that off-diagonal entries have
/// variance `1/N` and diagonal entries `2/N` (`β = 1`) or `1/N` (`β = 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MatrixKind {
    /// Gaussian, always real.
    Goe,
    /// Gaussian, always complex.
    Gue,
    /// `(1/M) G G*` with `G` of size `N × M`, `M = round(N/α)`.
    Wishart { alpha: f64 },
    /// Gaussian Wigner matrix with entry variances `R_ab / N` by block.
    Profile { profile: VarianceProfile },
    /// Entries `±1` (diagonal `±√2` for `β = 1`).
    RademacherWigner,
    /// Entries uniform with unit variance (diagonal variance 2 for `β = 1`).
    UniformWigner,
}

impl MatrixKind {
    /// Field actually used: GOE and GUE fix it, the others follow `beta`.
    pub fn field(&self, beta: Beta) -> Beta {
        match self {
            MatrixKind::Goe => Beta::Real,
            MatrixKind::Gue => Beta::Complex,
            _ => beta,
        }
    }
}

#[derive(Clone, Copy)]
enum EntryLaw {
    Gauss,
    Rademacher,
    Uniform,
}

fn wigner<T: Entry, R: Rng + ?Sized>(
    n: usize,
    law: EntryLaw,
    scale: impl Fn(usize, usize) -> f64,
    rng: &mut R,
) -> DMatrix<T> {
    let diag_sd = T::DIAG_VARIANCE.sqrt();
    let root = (n as f64).sqrt();
    let mut m = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        let d = match law {
            EntryLaw::Gauss => f64::gauss(rng),
            EntryLaw::Rademacher => f64::rademacher(rng),
            EntryLaw::Uniform => f64::uniform(rng),
        };
        m[(i, i)] = T::from_real(d * diag_sd * scale(i, i) / root);
        for j in (i + 1)..n {
            let x = match law {
                EntryLaw::Gauss => T::gauss(rng),
                EntryLaw::Rademacher => T::rademacher(rng),
                EntryLaw::Uniform => T::uniform(rng),
            }
            .scale(scale(i, j) / root);
            m[(i, j)] = x;
            m[(j, i)] = x.conjugate();
        }
    }
    m
}

fn wishart<T: Entry, R: Rng + ?Sized>(n: usize, alpha: f64, spikes: &[f64], rng: &mut R) -> Result<DMatrix<T>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("aspect ratio must lie in (0, 1], got {alpha}"));
    }
    let m = ((n as f64) / alpha).round().max(1.0) as usize;
    let mut g = DMatrix::<T>::from_fn(n, m, |_, _| T::gauss(rng));
    for (i, gamma) in spikes.iter().enumerate() {
        let c = (1.0 + gamma).sqrt();
        g.row_mut(i).iter_mut().for_each(|x| *x = x.scale(c));
    }
    let mut x = &g * g.adjoint();
    x.unscale_mut(m as f64);
    Ok(x)
}

/// Samples an `n × n` matrix of the given ensemble.
pub fn sample_matrix(kind: &MatrixKind, n: usize, beta: Beta, seed: u64) -> Result<Hermitian> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_matrix_with(kind, n, beta, &mut rng)
}

pub fn sample_matrix_with<R: Rng + ?Sized>(kind: &MatrixKind, n: usize, beta: Beta, rng: &mut R) -> Result<Hermitian> {
    fn build<T: Entry, R: Rng + ?Sized>(kind: &MatrixKind, n: usize, rng: &mut R) -> Result<DMatrix<T>> {
        Ok(match kind {
            MatrixKind::Goe | MatrixKind::Gue => wigner(n, EntryLaw::Gauss, |_, _| 1.0, rng),
            MatrixKind::RademacherWigner => wigner(n, EntryLaw::Rademacher, |_, _| 1.0, rng),
            MatrixKind::UniformWigner => wigner(n, EntryLaw::Uniform, |_, _| 1.0, rng),
            MatrixKind::Wishart { alpha } => wishart(n, *alpha, &[], rng)?,
            MatrixKind::Profile { profile } => {
                let blocks: Vec<usize> = (0..n).map(|i| profile.block_of(i, n)).collect();
                let r = profile.r();
                wigner(n, EntryLaw::Gauss, |i, j| r[blocks[i]][blocks[j]].sqrt(), rng)
            }
        })
    }
    Ok(match kind.field(beta) {
        Beta::Real => Hermitian::Real(build(kind, n, rng)?),
        Beta::Complex => Hermitian::Complex(build(kind, n, rng)?),
    })
}

/// Samples `X + Σ θ_i e_i e_i*` (Gaussian Wigner `X`) or the spiked Wishart
/// matrix `(1/M) Σ^{1/2} G G* Σ^{1/2}` with `Σ = I + Σ γ_i e_i e_i*`, and
/// returns one top eigenvalue per nonnegative tilt and one bottom eigenvalue
/// per negative tilt.
pub fn mc_perturbed_spectrum(spec: &PerturbationSpec, n: usize, beta: Beta, seed: u64) -> Result<Extremes> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        PerturbationSpec::Wigner { thetas } => {
            check_rank(thetas.len(), n)?;
            let kind = if beta == Beta::Real { MatrixKind::Goe } else { MatrixKind::Gue };
            let mut x = sample_matrix_with(&kind, n, beta, &mut rng)?;
            for (i, t) in thetas.iter().enumerate() {
                match &mut x {
                    Hermitian::Real(m) => m[(i, i)] += t,
                    Hermitian::Complex(m) => m[(i, i)] += t,
                }
            }
            x.extreme_eigenvalues(thetas.top.len(), thetas.bottom.len())
        }
        PerturbationSpec::Wishart { gammas, alpha } => {
            check_rank(gammas.len(), n)?;
            let x = match beta {
                Beta::Real => Hermitian::Real(wishart(n, *alpha, gammas, &mut rng)?),
                Beta::Complex => Hermitian::Complex(wishart(n, *alpha, gammas, &mut rng)?),
            };
            let top = gammas.iter().filter(|g| **g >= 0.0).count();
            x.extreme_eigenvalues(top, gammas.len() - top)
        }
    }
}

fn check_rank(rank: usize, n: usize) -> Result<()> {
    if rank > 8 {
        return domain(format!("perturbation rank {rank} exceeds 8"));
    }
    if rank > n {
        return Err(Error::Shape(format!("rank {rank} perturbation of a {n}x{n} matrix")));
    }
    Ok(())
}

/// `Ψ = U₁* U₁` for the first `l` rows `U₁` of a uniform `(l+m) × k` frame.
pub fn sample_jacobi_gram(l: usize, m: usize, k: usize, beta: Beta, seed: u64) -> Result<Hermitian> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_jacobi_gram_with(l, m, k, beta, &mut rng)
}

pub fn sample_jacobi_gram_with<R: Rng + ?Sized>(l: usize, m: usize, k: usize, beta: Beta, rng: &mut R) -> Result<Hermitian> {
    fn gram<T: Entry>(v: &[DVector<T>], l: usize) -> DMatrix<T> {
        let k = v.len();
        DMatrix::from_fn(k, k, |a, b| v[a].rows(0, l).dotc(&v[b].rows(0, l)))
    }
    Ok(match sample_frame_with(l + m, k, beta, rng)? {
        FrameSample::Real(v) => Hermitian::Real(gram(&v, l)),
        FrameSample::Complex(v) => Hermitian::Complex(gram(&v, l)),
    })
}

/// `n` points at the quantiles `(i + 1/2)/n` of `mu`.
pub fn quantile_points(mu: &SpectralMeasure, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|i| mu.quantile((i as f64 + 0.5) / n as f64)).collect()
}

/// Diagonal matrix whose spectrum is `n - outliers.len()` quantiles of `mu`
/// followed by the outliers.
pub fn quantile_diagonal(mu: &SpectralMeasure, n: usize, outliers: &[f64]) -> Result<Vec<f64>> {
    if outliers.len() > n {
        return Err(Error::Shape(format!("{} outliers in dimension {n}", outliers.len())));
    }
    let mut d = quantile_points(mu, n - outliers.len())?;
    d.extend_from_slice(outliers);
    Ok(d)
}

const MAGIC: &[u8; 4] = b"SPHI";

/// Writes `m` as the 16-byte header `"SPHI"`, `u32 N`, `u32 dtype`
/// (1 = f64, 2 = complex f64 as re/im pairs), 4 zero bytes, followed by the
/// entries in row-major order, all little-endian.
pub fn write_matrix<W: Write>(mut out: W, m: &Hermitian) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let n = u32::try_from(m.dim()).map_err(|_| Error::Shape("matrix too large to dump".into()))?;
    let dtype: u32 = match m {
        Hermitian::Real(_) => 1,
        Hermitian::Complex(_) => 2,
    };
    let mut buf = Vec::with_capacity(16 + m.dim() * m.dim() * 8 * dtype as usize);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&dtype.to_le_bytes());
    buf.extend_from_slice(&[0; 4]);
    let n = m.dim();
    for i in 0..n {
        for j in 0..n {
            match m {
                Hermitian::Real(a) => buf.extend_from_slice(&a[(i, j)].to_le_bytes()),
                Hermitian::Complex(a) => {
                    buf.extend_from_slice(&a[(i, j)].re.to_le_bytes());
                    buf.extend_from_slice(&a[(i, j)].im.to_le_bytes());
                }
            }
        }
    }
    out.write_all(&buf).map_err(io)?;
    out.flush().map_err(io)
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix<R: Read>(mut input: R) -> Result<Hermitian> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| Error::Io(e.to_string()))?;
    if bytes.len() < 16 || &bytes[0..4] != MAGIC {
        return Err(Error::Io("missing SPHI header".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes"));
    let n = word(4) as usize;
    let dtype = word(8);
    let width = match dtype {
        1 => 8,
        2 => 16,
        other => return Err(Error::Io(format!("unknown dtype {other}"))),
    };
    let expected = n.checked_mul(n).and_then(|x| x.checked_mul(width)).and_then(|x| x.checked_add(16));
    if expected != Some(bytes.len()) {
        return Err(Error::Io(format!("file holds {} bytes, expected {:?}", bytes.len(), expected)));
    }
    let float = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    Ok(if dtype == 1 {
        Hermitian::Real(DMatrix::from_fn(n, n, |i, j| float(16 + 8 * (i * n + j))))
    } else {
        Hermitian::Complex(DMatrix::from_fn(n, n, |i, j| {
            let k = 16 + 16 * (i * n + j);
            Complex64::new(float(k), float(k + 8))
        }))
    })
}
