//! The limiting spherical integral `J(μ, θ, λ)`, its k-dimensional sum, and two
//! oracles that recompute it from first principles on discrete models: the
//! simplex variational problem and the interlacing-conditioned 2-d problem.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::measures::{Side, SpectralMeasure};
use crate::optim;
use crate::{Error, Result};

/// Which branch of the case split produced `v*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `v* = λ`: the outlier sits beyond where the tilt would push it.
    TiltBinds,
    /// `v* = G_μ^{-1}(θ)`.
    InverseBinds,
    /// `θ = 0`, where the integral is identically 1.
    ZeroTilt,
}

/// Value of `J` with the saddle point that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JBreakdown {
    pub value: f64,
    pub v_star: f64,
    pub regime: Regime,
}

/// Saddle point `v*(μ, θ, λ)`.
///
/// Needs `λ ≥ r_μ` for `θ > 0` and `λ ≤ l_μ` for `θ < 0`. On the regime
/// boundary `G_μ(λ) = θ` the tilt branch is taken; both give the same value.
pub fn v_star(mu: &SpectralMeasure, theta: f64, lambda: f64) -> Result<(f64, Regime)> {
    if !theta.is_finite() || !lambda.is_finite() {
        return domain("theta and lambda must be finite");
    }
    if theta == 0.0 {
        return domain("v* is undefined for theta = 0");
    }
    let e = mu.edges();
    if theta > 0.0 {
        if lambda < e.right {
            return domain(format!("positive tilt needs lambda >= r_mu = {}, got {lambda}", e.right));
        }
        let g = if lambda == e.right { mu.edge_stieltjes(Side::Right) } else { mu.stieltjes(lambda)? };
        if g <= theta {
            Ok((lambda, Regime::TiltBinds))
        } else {
            Ok((mu.stieltjes_inverse(theta)?, Regime::InverseBinds))
        }
    } else {
        if lambda > e.left {
            return domain(format!("negative tilt needs lambda <= l_mu = {}, got {lambda}", e.left));
        }
        let g = if lambda == e.left { mu.edge_stieltjes(Side::Left) } else { mu.stieltjes(lambda)? };
        if g >= theta {
            Ok((lambda, Regime::TiltBinds))
        } else {
            Ok((mu.stieltjes_inverse(theta)?, Regime::InverseBinds))
        }
    }
}

/// Rank-one limit `J(μ, θ, λ) = θλ + (v-λ)G_μ(v) - ln|θ| - ∫ln|v-x|dμ(x) - 1`
/// at `v = v*(μ, θ, λ)`, and exactly 0 for `θ = 0`.
///
/// The finite-`N` log-integral divided by `N` converges to `(β/2)·J`.
pub fn j_one(mu: &SpectralMeasure, theta: f64, lambda: f64) -> Result<JBreakdown> {
    if theta == 0.0 {
        if !lambda.is_finite() {
            return domain("lambda must be finite");
        }
        return Ok(JBreakdown { value: 0.0, v_star: lambda, regime: Regime::ZeroTilt });
    }
    let (v, regime) = v_star(mu, theta, lambda)?;
    // In the inverse branch G_μ(v) = θ by construction.
    let shift = match regime {
        Regime::InverseBinds => (v - lambda) * theta,
        _ => 0.0,
    };
    let value = theta * lambda + shift - theta.abs().ln() - mu.log_potential(v)? - 1.0;
    Ok(JBreakdown { value, v_star: v, regime })
}

/// Ordered tilts `θ_1 ≥ … ≥ θ_k ≥ 0 ≥ θ_{-ℓ} ≥ … ≥ θ_{-1}`.
///
/// `bottom[0]` is `θ_{-1}`, the most negative tilt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpec {
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
}

impl ThetaSpec {
    pub fn new(top: Vec<f64>, bottom: Vec<f64>) -> Result<Self> {
        if top.iter().chain(&bottom).any(|t| !t.is_finite()) {
            return domain("tilts must be finite");
        }
        if top.iter().any(|&t| t < 0.0) || top.windows(2).any(|w| w[0] < w[1]) {
            return domain("top tilts must be nonnegative and nonincreasing");
        }
        if bottom.iter().any(|&t| t > 0.0) || bottom.windows(2).any(|w| w[0] > w[1]) {
            return domain("bottom tilts must be nonpositive, most negative first");
        }
        Ok(ThetaSpec { top, bottom })
    }

    /// Splits a signed list: nonnegative entries go to `top`, the rest to `bottom`.
    pub fn from_signed(thetas: &[f64]) -> Result<Self> {
        let mut top: Vec<f64> = thetas.iter().copied().filter(|t| *t >= 0.0).collect();
        let mut bottom: Vec<f64> = thetas.iter().copied().filter(|t| *t < 0.0).collect();
        top.sort_by(|a, b| b.total_cmp(a));
        bottom.sort_by(|a, b| a.total_cmp(b));
        Self::new(top, bottom)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.top.iter().chain(&self.bottom).copied()
    }

    pub fn len(&self) -> usize {
        self.top.len() + self.bottom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Outlier locations `λ_1 ≥ … ≥ λ_k ≥ r_μ` and `λ_{-1} ≤ … ≤ λ_{-ℓ} ≤ l_μ`.
///
/// `bottom[0]` is `λ_{-1}`, the smallest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierSpec {
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
}

impl OutlierSpec {
    pub fn new(top: Vec<f64>, bottom: Vec<f64>) -> Result<Self> {
        if top.iter().chain(&bottom).any(|t| !t.is_finite()) {
            return domain("outlier locations must be finite");
        }
        if top.windows(2).any(|w| w[0] < w[1]) {
            return domain("top outliers must be nonincreasing");
        }
        if bottom.windows(2).any(|w| w[0] > w[1]) {
            return domain("bottom outliers must be nondecreasing, smallest first");
        }
        Ok(OutlierSpec { top, bottom })
    }

    /// Checks the support-edge constraints against `mu`.
    pub fn check_against(&self, mu: &SpectralMeasure) -> Result<()> {
        let e = mu.edges();
        if self.top.iter().any(|&l| l < e.right) {
            return domain(format!("top outliers must be >= r_mu = {}", e.right));
        }
        if self.bottom.iter().any(|&l| l > e.left) {
            return domain(format!("bottom outliers must be <= l_mu = {}", e.left));
        }
        Ok(())
    }
}

/// `Σ_i J(μ, θ_i, λ_i)` over top and bottom pairs, without the `β/2` factor.
/// Coincident outliers are allowed.
pub fn j_multi(mu: &SpectralMeasure, thetas: &ThetaSpec, lambdas: &OutlierSpec) -> Result<f64> {
    if thetas.top.len() != lambdas.top.len() || thetas.bottom.len() != lambdas.bottom.len() {
        return Err(Error::Shape(format!(
            "{}+{} tilts but {}+{} outliers",
            thetas.top.len(),
            thetas.bottom.len(),
            lambdas.top.len(),
            lambdas.bottom.len()
        )));
    }
    let mut total = 0.0;
    for (t, l) in thetas.top.iter().zip(&lambdas.top).chain(thetas.bottom.iter().zip(&lambdas.bottom)) {
        total += j_one(mu, *t, *l)?.value;
    }
    Ok(total)
}

/// Finite spectrum with distinct eigenvalues `etas`, multiplicities `mult`,
/// and bulk indices `bulk[0]..=bulk[1]` (zero-based, inclusive). Indices
/// below the bulk are bottom outliers and indices above it top outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct DiscreteModel {
    etas: Vec<f64>,
    mult: Vec<u64>,
    bulk: [usize; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    etas: Vec<f64>,
    mult: Vec<u64>,
    bulk: [usize; 2],
}

impl TryFrom<RawModel> for DiscreteModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        DiscreteModel::new(r.etas, r.mult, r.bulk)
    }
}

impl DiscreteModel {
    pub fn new(etas: Vec<f64>, mult: Vec<u64>, bulk: [usize; 2]) -> Result<Self> {
        if etas.len() != mult.len() {
            return Err(Error::Shape(format!("{} etas but {} multiplicities", etas.len(), mult.len())));
        }
        if etas.is_empty() {
            return domain("a model needs at least one eigenvalue");
        }
        if etas.iter().any(|e| !e.is_finite()) || etas.windows(2).any(|w| w[0] >= w[1]) {
            return domain("etas must be finite and strictly increasing");
        }
        if mult.contains(&0) {
            return domain("multiplicities must be positive");
        }
        if bulk[0] > bulk[1] || bulk[1] >= etas.len() {
            return domain(format!("bulk range {bulk:?} invalid for {} eigenvalues", etas.len()));
        }
        Ok(DiscreteModel { etas, mult, bulk })
    }

    /// One-atom-per-eigenvalue model: `bulk` plus outliers above and below.
    pub fn from_spectrum(bulk: &[f64], bottom: &[f64], top: &[f64]) -> Result<Self> {
        let mut etas: Vec<f64> = bottom.to_vec();
        etas.extend_from_slice(bulk);
        etas.extend_from_slice(top);
        let n = etas.len();
        let b = [bottom.len(), bottom.len() + bulk.len().max(1) - 1];
        Self::new(etas, vec![1; n], b)
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn mult(&self) -> &[u64] {
        &self.mult
    }

    pub fn bulk(&self) -> [usize; 2] {
        self.bulk
    }

    /// Matrix dimension `N = Σ N_i`.
    pub fn dim(&self) -> u64 {
        self.mult.iter().sum()
    }

    /// Limit weights: `N_i / Σ_bulk N_j` on the bulk, 0 on outliers.
    pub fn alphas(&self) -> Vec<f64> {
        let nb: u64 = self.mult[self.bulk[0]..=self.bulk[1]].iter().sum();
        (0..self.etas.len())
            .map(|i| if self.is_bulk(i) { self.mult[i] as f64 / nb as f64 } else { 0.0 })
            .collect()
    }

    pub fn is_bulk(&self, i: usize) -> bool {
        i >= self.bulk[0] && i <= self.bulk[1]
    }

    /// The limiting spectral measure: bulk atoms with weights `alphas`.
    pub fn bulk_measure(&self) -> SpectralMeasure {
        let a = self.alphas();
        let idx = self.bulk[0]..=self.bulk[1];
        let pos = self.etas[idx.clone()].to_vec();
        let w: Vec<f64> = a[idx].to_vec();
        let total: f64 = w.iter().sum();
        SpectralMeasure::atoms(pos, w.into_iter().map(|x| x / total).collect())
            .expect("bulk of a valid model is a valid measure")
    }

    /// Largest eigenvalue, or the bulk edge when there is no top outlier.
    pub fn top(&self) -> f64 {
        self.etas[self.etas.len() - 1]
    }

    /// Model under `X ↦ -X`.
    pub fn reflect(&self) -> DiscreteModel {
        let n = self.etas.len();
        DiscreteModel {
            etas: self.etas.iter().rev().map(|x| -x).collect(),
            mult: self.mult.iter().rev().copied().collect(),
            bulk: [n - 1 - self.bulk[1], n - 1 - self.bulk[0]],
        }
    }

    /// Objective `θ Σ η_i γ_i + Σ_bulk α_i ln(γ_i / α_i)` of the simplex problem.
    pub fn simplex_objective(&self, theta: f64, gamma: &[f64]) -> f64 {
        let a = self.alphas();
        let mut v = 0.0;
        for i in 0..self.etas.len() {
            v += theta * self.etas[i] * gamma[i];
            if a[i] > 0.0 {
                v += a[i] * (gamma[i] / a[i]).ln();
            }
        }
        v
    }
}

/// Maximizer and value of the simplex problem, with its KKT residual.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptimum {
    pub value: f64,
    pub gamma: Vec<f64>,
    pub kkt_residual: f64,
}

/// `sup_γ { θ Σ η_i γ_i + Σ_bulk α_i ln(γ_i/α_i) }` over the probability simplex.
///
/// Negative `θ` is handled by reflecting the model. Agrees with
/// `j_one(bulk, θ, top outlier)`; see [`simplex_optimum`] for the maximizer.
pub fn simplex_oracle_1d(model: &DiscreteModel, theta: f64) -> Result<f64> {
    Ok(simplex_optimum(model, theta)?.value)
}

/// Solves the simplex problem through its KKT system.
///
/// Stationarity gives `γ_i = α_i / (μ - θη_i)` on the bulk for a multiplier
/// `μ`. Either the top eigenvalue carries the leftover mass and `μ = θη_top`,
/// or it carries none and `μ` solves `Σ α_i/(μ - θη_i) = 1`. The multiplier is
/// warm-started from the closed-form critical point and polished by a
/// safeguarded Newton iteration on that scalar equation.
pub fn simplex_optimum(model: &DiscreteModel, theta: f64) -> Result<SimplexOptimum> {
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    if theta == 0.0 {
        let gamma = model.alphas();
        return Ok(SimplexOptimum { value: 0.0, gamma, kkt_residual: 0.0 });
    }
    if theta < 0.0 {
        let mut opt = simplex_optimum(&model.reflect(), -theta)?;
        opt.gamma.reverse();
        return Ok(opt);
    }
    let n = model.etas.len();
    let a = model.alphas();
    let c: Vec<f64> = model.etas.iter().map(|e| theta * e).collect();
    let bulk: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cmax = bulk.iter().map(|&i| c[i]).fold(f64::NEG_INFINITY, f64::max);
    let top = n - 1;
    let has_outlier = !model.is_bulk(top);
    let mass = |mu: f64| bulk.iter().map(|&i| a[i] / (mu - c[i])).sum::<f64>();

    let mut gamma = vec![0.0; n];
    let mu = if has_outlier && mass(c[top]) <= 1.0 {
        gamma[top] = 1.0 - mass(c[top]);
        c[top]
    } else {
        // Σ α_i/(μ - c_i) - 1 is decreasing and convex on (cmax, ∞), with a
        // root in (cmax, cmax + 1].
        let h = |mu: f64| mass(mu) - 1.0;
        let (mut lo, mut hi) = (cmax, cmax + 1.0);
        let warm = theta * model.bulk_measure().stieltjes_inverse(theta)?;
        let mut mu = if warm > lo && warm <= hi { warm } else { 0.5 * (lo + hi) };
        for _ in 0..200 {
            let hv = h(mu);
            if hv > 0.0 { lo = mu } else { hi = mu }
            let d: f64 = -bulk.iter().map(|&i| a[i] / (mu - c[i]).powi(2)).sum::<f64>();
            let mut next = mu - hv / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == mu || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                mu = next;
                break;
            }
            mu = next;
        }
        mu
    };
    for &i in &bulk {
        gamma[i] = a[i] / (mu - c[i]);
    }
    let scale = 1.0 + mu.abs();
    let mut res: f64 = (gamma.iter().sum::<f64>() - 1.0).abs();
    for i in 0..n {
        let r = if a[i] > 0.0 {
            (c[i] + a[i] / gamma[i] - mu).abs() / scale
        } else if gamma[i] > 0.0 {
            (c[i] - mu).abs() / scale
        } else {
            (c[i] - mu).max(0.0) / scale
        };
        res = res.max(r);
    }
    if !(res <= 1e-10) {
        return Err(Error::Convergence(format!("simplex KKT residual {res:e} exceeds 1e-10")));
    }
    let value = model.simplex_objective(theta, &gamma);
    Ok(SimplexOptimum { value, gamma, kkt_residual: res })
}

fn secular(etas: &[f64], gamma: &[f64], x: f64) -> f64 {
    etas.iter().zip(gamma).filter(|(_, g)| **g > 0.0).map(|(e, g)| g / (x - e)).sum()
}

/// Root of `Σ γ_i/(χ - η_i)` in the gap `(η_j, η_{j+1})`. When a weight at an
/// endpoint vanishes the function may keep one sign on the gap; the root is
/// then that endpoint.
fn gap_root(etas: &[f64], gamma: &[f64], j: usize) -> f64 {
    let (lo, hi) = (etas[j], etas[j + 1]);
    let f_lo = if gamma[j] > 0.0 { f64::INFINITY } else { secular(etas, gamma, lo) };
    let f_hi = if gamma[j + 1] > 0.0 { f64::NEG_INFINITY } else { secular(etas, gamma, hi) };
    if f_lo <= 0.0 {
        return lo;
    }
    if f_hi >= 0.0 {
        return hi;
    }
    let mut root = optim::bisect(|x| secular(etas, gamma, x), lo, hi);
    root = root.clamp(lo, hi);
    root
}

/// Roots of `f(χ) = Σ γ_i/(χ - η_i)`, one per gap between consecutive `etas`.
/// These are the eigenvalues of the compression of `diag(η)` to the orthogonal
/// complement of a unit vector with squared coordinates `γ`.
pub fn interlacing_roots(model: &DiscreteModel, gamma: &[f64]) -> Result<Vec<f64>> {
    let n = model.etas.len();
    if gamma.len() != n {
        return Err(Error::Shape(format!("{} weights for {n} eigenvalues", gamma.len())));
    }
    if gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return domain("weights must be finite and nonnegative");
    }
    let s: f64 = gamma.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return domain(format!("weights sum to {s}, not 1"));
    }
    Ok((0..n.saturating_sub(1)).map(|j| gap_root(&model.etas, gamma, j)).collect())
}

/// Settings for [`conditional_oracle_2d_with`].
#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Number of Nelder–Mead starts: one near `α`, the rest Dirichlet draws.
    pub starts: usize,
    pub seed: u64,
    /// Objective tolerance of each run.
    pub ftol: f64,
    pub max_evals: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { starts: 8, seed: 0x5eed, ftol: 1e-10, max_evals: 200_000 }
    }
}

/// `sup_γ { J(μ, θ₂, χ(γ)) + Σ_bulk α_i ln(γ_i/α_i) + θ₁ Σ η_i γ_i }`, where
/// `χ(γ)` is the largest interlacing root. Should equal
/// `J(μ, θ₁, η_top) + J(μ, θ₂, η_{top-1})`.
pub fn conditional_oracle_2d(model: &DiscreteModel, theta1: f64, theta2: f64) -> Result<f64> {
    conditional_oracle_2d_with(model, theta1, theta2, &OracleOptions::default())
}

pub fn conditional_oracle_2d_with(
    model: &DiscreteModel,
    theta1: f64,
    theta2: f64,
    opts: &OracleOptions,
) -> Result<f64> {
    if !(theta1 >= theta2 && theta2 >= 0.0 && theta1.is_finite()) {
        return domain("need theta1 >= theta2 >= 0");
    }
    let n = model.etas.len();
    let top = n - 1;
    let repeated_top = model.mult[top] >= 2;
    if model.is_bulk(top) || (!repeated_top && model.is_bulk(top - 1)) {
        return domain("need two top outliers, or one top outlier of multiplicity >= 2");
    }
    if theta1 == 0.0 {
        return Ok(0.0);
    }
    let mu = model.bulk_measure();
    let a = model.alphas();
    let objective = |y: &[f64]| -> f64 {
        let m = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ex: Vec<f64> = y.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = ex.iter().sum();
        let gamma: Vec<f64> = ex.iter().map(|e| e / s).collect();
        let chi = if repeated_top { model.etas[top] } else { gap_root(&model.etas, &gamma, top - 1) };
        let j2 = match j_one(&mu, theta2, chi) {
            Ok(b) => b.value,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut v = j2;
        for i in 0..n {
            v += theta1 * model.etas[i] * gamma[i];
            if a[i] > 0.0 {
                // ln(γ_i) straight from the logits avoids underflow.
                v += a[i] * ((y[i] - m) - s.ln() - a[i].ln());
            }
        }
        v
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.starts.max(1));
    starts.push(a.iter().map(|&ai| (0.9 * ai + 0.1 / n as f64).ln()).collect());
    let shape = Gamma::<f64>::new(1.0, 1.0).expect("valid gamma law");
    while starts.len() < opts.starts.max(1) {
        starts.push((0..n).map(|_| shape.sample(&mut rng).max(1e-300).ln()).collect());
    }
    let results: Vec<f64> = starts
        .par_iter()
        .map(|x0| {
            let run = optim::nelder_mead(|y| -objective(y), x0, 1.0, opts.ftol, opts.max_evals);
            -run.value
        })
        .collect();
    let best = results.into_iter().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::Convergence("no start produced a finite objective".into()));
    }
    Ok(best)
}

/// Residual of the transport identity
/// `J(λ_hi) = J(λ_lo) + Σ α_i ln(|η_i - λ_lo| / |η_i - λ_hi|) + θ(λ_hi - λ_lo)`
/// for a discrete `mu` with both points in the tilt-binding regime.
pub fn transport_identity_check(mu: &SpectralMeasure, theta: f64, lam_low: f64, lam_high: f64) -> Result<f64> {
    let SpectralMeasure::Atoms { positions, weights } = mu else {
        return domain("the transport identity is stated for discrete measures");
    };
    let r = mu.edges().right;
    if !(r <= lam_low && lam_low <= lam_high) {
        return domain("need r_mu <= lam_low <= lam_high");
    }
    if lam_low == r || theta < mu.stieltjes(lam_low)? {
        return domain("theta must be at least G_mu(lam_low) so both points are tilt-binding");
    }
    let jl = j_one(mu, theta, lam_low)?.value;
    let jh = j_one(mu, theta, lam_high)?.value;
    let logs: f64 = positions
        .iter()
        .zip(weights)
        .map(|(x, w)| w * ((lam_low - x).abs() / (lam_high - x).abs()).ln())
        .sum();
    Ok((jh - jl - logs - theta * (lam_high - lam_low)).abs())
}
