//! Large-deviation rate functions for extreme eigenvalues, their Legendre
//! duality with the spherical integral, BBP maps, annealed spherical
//! integrals and outlier interval costs.
//!
//! Every rate here is at speed `N`: `P(λ_max ≈ x) ≈ exp(-N · rate(x))`.
//! Rates return `+∞` rather than an error where the event is impossible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::measures::{semicircle_tail_area, SpectralMeasure};
use crate::spherical::{j_one, ThetaSpec};
use crate::{optim, quad, Beta, Error, Result};

/// `(β/2) ∫_2^{|x|} sqrt(t² - 4) dt`, and `+∞` for `|x| < 2`.
pub fn wigner_rate(x: f64, beta: Beta) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < 2.0 {
        return f64::INFINITY;
    }
    beta.half() * semicircle_tail_area(x.abs())
}

/// Joint rate of the `k` largest and `ℓ` smallest eigenvalues of a Wigner
/// matrix: the sum of scalar rates when
/// `x_1 ≥ … ≥ x_k ≥ 2` and `-2 ≥ y_ℓ ≥ … ≥ y_1` (`bottom[0]` smallest),
/// `+∞` otherwise.
pub fn wigner_rate_joint(top: &[f64], bottom: &[f64], beta: Beta) -> f64 {
    let ordered = top.windows(2).all(|w| w[0] >= w[1])
        && bottom.windows(2).all(|w| w[0] <= w[1])
        && top.iter().all(|&x| x >= 2.0)
        && bottom.iter().all(|&x| x <= -2.0);
    if !ordered {
        return f64::INFINITY;
    }
    top.iter().chain(bottom).map(|&x| wigner_rate(x, beta)).sum()
}

fn check_ratio(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("aspect ratio alpha must lie in (0, 1], got {alpha}"));
    }
    Ok(())
}

fn mp_edges(alpha: f64) -> (f64, f64) {
    let s = alpha.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Largest-eigenvalue rate of an `L×M` Wishart matrix with `L/M → α`:
/// `(β/(4(1+α))) ∫_{λ₊}^x sqrt((y-λ₋)(y-λ₊))/y dy`, `+∞` below `λ₊`.
pub fn wishart_rate(x: f64, alpha: f64, beta: Beta) -> Result<f64> {
    check_ratio(alpha)?;
    let (lm, lp) = mp_edges(alpha);
    if x < lp {
        return Ok(f64::INFINITY);
    }
    let f = |y: f64| ((y - lm) * (y - lp)).max(0.0).sqrt() / y;
    let integral = quad::integrate(f, lp, x, 1e-13 * (1.0 + x))?;
    Ok(beta.value() / (4.0 * (1.0 + alpha)) * integral)
}

/// Smallest-eigenvalue rate `(β/(4(1+α))) ∫_y^{λ₋} sqrt((t-λ₊)(t-λ₋))/t dt`
/// for `y ∈ (0, λ₋]`, `+∞` outside `[0, λ₋]`.
pub fn wishart_rate_lower(y: f64, alpha: f64, beta: Beta) -> Result<f64> {
    check_ratio(alpha)?;
    let (lm, lp) = mp_edges(alpha);
    if y > lm || y < 0.0 {
        return Ok(f64::INFINITY);
    }
    if y == 0.0 {
        return Ok(if alpha < 1.0 { f64::INFINITY } else { 0.0 });
    }
    let f = |t: f64| ((t - lm) * (t - lp)).max(0.0).sqrt() / t;
    let integral = quad::integrate(f, y, lm, 1e-13)?;
    Ok(beta.value() / (4.0 * (1.0 + alpha)) * integral)
}

/// `y - (1-α) ln y - 2α ∫ ln|y-t| dπ_α(t)`, the effective potential of one
/// eigenvalue in the Marchenko–Pastur Coulomb gas.
fn wishart_potential(y: f64, mp: &SpectralMeasure, alpha: f64) -> Result<f64> {
    let log_term = if alpha < 1.0 { (1.0 - alpha) * y.ln() } else { 0.0 };
    Ok(y - log_term - 2.0 * alpha * mp.log_potential(y)?)
}

/// Extreme-eigenvalue rate through the log-potential form
/// `(β/(4(1+α))) (y - (1-α) ln y - 2α ∫ ln|y-t| dπ_α - C)`, with `C` the
/// infimum of the bracket. It vanishes on `[λ₋, λ₊]` and agrees with
/// [`wishart_rate`] above and [`wishart_rate_lower`] below the support.
pub fn wishart_rate_potential(y: f64, alpha: f64, beta: Beta) -> Result<f64> {
    check_ratio(alpha)?;
    if !(y > 0.0) {
        return Ok(if y == 0.0 && alpha == 1.0 { 0.0 } else { f64::INFINITY });
    }
    let (lm, lp) = mp_edges(alpha);
    if y >= lm && y <= lp {
        return Ok(0.0);
    }
    let mp = SpectralMeasure::marchenko_pastur(alpha)?;
    // The bracket is constant on the support, where it attains its infimum.
    let c = wishart_potential(lp, &mp, alpha)?;
    let v = wishart_potential(y, &mp, alpha)? - c;
    Ok(beta.value() / (4.0 * (1.0 + alpha)) * v.max(0.0))
}

/// `sup_{θ ≥ 0} { J(σ, θ, x) - θ²/2 }` for the semicircle `σ` and `x ≥ 2`,
/// by golden-section search. Equals `∫_2^x sqrt(t² - 4) dt`.
pub fn legendre_check_wigner(x: f64) -> Result<f64> {
    if !(x >= 2.0 && x.is_finite()) {
        return domain(format!("Legendre check needs x >= 2, got {x}"));
    }
    if x == 2.0 {
        // The objective is 0 up to θ = 1 and decreasing after.
        return Ok(0.0);
    }
    let sc = SpectralMeasure::Semicircle;
    // Below θ = G_σ(x) the objective is identically 0; above θ_max it decreases.
    let lo = sc.stieltjes(x)?;
    let hi = 2.0 * theta_for_outlier(x)? + 1.0;
    let mut failure = None;
    let (_, best) = optim::golden_max(
        |t| match j_one(&sc, t, x) {
            Ok(b) => b.value - 0.5 * t * t,
            Err(e) => {
                failure = Some(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-12,
    );
    if let Some(e) = failure {
        return Err(Error::Convergence(format!("Legendre maximization failed: {e}")));
    }
    Ok(best.max(0.0))
}

/// Location `θ + 1/θ` of the outlier created by a rank-one perturbation of
/// strength `θ ≥ 1` of a Wigner matrix.
pub fn bbp_outlier(theta: f64) -> Result<f64> {
    if !(theta >= 1.0 && theta.is_finite()) {
        return domain(format!("outlier branch needs theta >= 1, got {theta}"));
    }
    Ok(theta + 1.0 / theta)
}

/// Inverse of [`bbp_outlier`]: `(x + sqrt(x² - 4))/2` for `x ≥ 2`.
pub fn theta_for_outlier(x: f64) -> Result<f64> {
    if !(x >= 2.0 && x.is_finite()) {
        return domain(format!("outlier location must be >= 2, got {x}"));
    }
    Ok(0.5 * (x + ((x - 2.0) * (x + 2.0)).sqrt()))
}

/// Argmin and value of a unimodal `f` on `[lo, hi]`, endpoints included.
fn unimodal_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    let (x, v) = optim::golden_max(|y| -f(y), lo, hi, 1e-11 * (1.0 + hi.abs()));
    let (flo, fhi) = (f(lo), f(hi));
    let mut best = (x, -v);
    if flo <= best.1 {
        best = (lo, flo);
    }
    if fhi < best.1 {
        best = (hi, fhi);
    }
    best
}

/// `I(x) - J(σ, θ, x)/2` with `I(x) = x²/4 - ∫ ln|x-y| dσ(y)`.
fn wigner_tilted_potential(x: f64, theta: f64) -> Result<f64> {
    let sc = SpectralMeasure::Semicircle;
    Ok(0.25 * x * x - sc.log_potential(x)? - 0.5 * j_one(&sc, theta, x)?.value)
}

/// Argmin and minimum of `y ↦ I(y) - J(σ, θ, y)/2` over the outlier side
/// selected by the sign of `θ`, searched on `[2, 12 + 2|θ|]` (mirrored).
pub fn perturbed_wigner_minimizer(theta: f64) -> Result<(f64, f64)> {
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    let s = if theta < 0.0 { -1.0 } else { 1.0 };
    let mut failure = None;
    let (y, v) = unimodal_min(
        |y| match wigner_tilted_potential(s * y, theta) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        },
        2.0,
        12.0 + 2.0 * theta.abs(),
    );
    if let Some(e) = failure {
        return Err(Error::Convergence(format!("inner minimization failed: {e}")));
    }
    Ok((s * y, v))
}

/// Rate of the outlier of `X + θ e e*` for a GOE/GUE matrix `X`:
/// `β I_θ(x)` with `I_θ(x) = I(x) - J(σ,θ,x)/2 - inf_y (I(y) - J(σ,θ,y)/2)`.
///
/// The `1/2` in front of `J` comes from the `exp((βN/2) θ ⟨e, X e⟩)` density
/// of the perturbed law; with it the rate vanishes at `θ + 1/θ` for `θ ≥ 1`
/// and at `θ = 0` it reduces to [`wigner_rate`]. Points on the wrong side of
/// the bulk get `+∞`.
pub fn perturbed_wigner_rate(x: f64, theta: f64, beta: Beta) -> Result<f64> {
    if !x.is_finite() || !theta.is_finite() {
        return domain("x and theta must be finite");
    }
    let upper = theta > 0.0 || (theta == 0.0 && x >= 0.0);
    if (upper && x < 2.0) || (!upper && x > -2.0) {
        return Ok(f64::INFINITY);
    }
    let (_, m) = perturbed_wigner_minimizer(if upper { theta.abs() } else { -theta.abs() })?;
    let v = wigner_tilted_potential(x, theta)? - m;
    Ok(beta.value() * v.max(0.0))
}

/// Tilt `τ = γ/(1+γ)` from the covariance `I + γ e e*`: `(I + γ e e*)^{-1} = I - τ e e*`.
pub fn wishart_tilt(gamma: f64) -> Result<f64> {
    if !(gamma > -1.0 && gamma.is_finite()) {
        return domain(format!("covariance spike gamma must be > -1, got {gamma}"));
    }
    Ok(gamma / (1.0 + gamma))
}

/// Typical location of the outlier of a spiked Wishart matrix,
/// `(1+γ)(1 + α/γ)`, when `|γ| > sqrt(α)`; otherwise the nearer bulk edge.
pub fn spiked_wishart_outlier(gamma: f64, alpha: f64) -> Result<f64> {
    check_ratio(alpha)?;
    wishart_tilt(gamma)?;
    let (lm, lp) = mp_edges(alpha);
    if gamma > alpha.sqrt() || gamma < -alpha.sqrt() {
        Ok((1.0 + gamma) * (1.0 + alpha / gamma))
    } else if gamma >= 0.0 {
        Ok(lp)
    } else {
        Ok(lm)
    }
}

fn wishart_tilted_potential(y: f64, gamma: f64, alpha: f64, beta: Beta, mp: &SpectralMeasure) -> Result<f64> {
    let tau = wishart_tilt(gamma)?;
    let j = j_one(mp, tau / alpha, y)?.value;
    Ok(wishart_rate_potential(y, alpha, beta)? - alpha / (1.0 + alpha) * beta.value() / 4.0 * j)
}

/// Rate of an outlier of `(1/M) Σ^{1/2} G G* Σ^{1/2}` with `Σ = I + γ e e*`:
/// `I_{γ,α}(x) = I_α(x) - (α/(1+α))(β/4) J(π_α, τ/α, x) - inf_y(…)` with
/// `τ = γ/(1+γ)` and `I_α` from [`wishart_rate_potential`].
///
/// The tilt comes from `exp(-(β/2) M Tr(W Σ^{-1}))`: a spherical integral in
/// dimension `L = αM` at strength `τ/α`, rescaled from speed `L` to speed
/// `N = L + M`, with the same `1/2` convention as [`wishart_rate`]. The rate
/// vanishes at [`spiked_wishart_outlier`]. Positive `γ` governs the largest
/// eigenvalue (`x ≥ λ₊`), negative `γ` the smallest (`0 < x ≤ λ₋`); `γ = 0`
/// is the unperturbed rate on both sides.
pub fn perturbed_wishart_rate(x: f64, gamma: f64, alpha: f64, beta: Beta) -> Result<f64> {
    check_ratio(alpha)?;
    wishart_tilt(gamma)?;
    if !x.is_finite() {
        return domain("x must be finite");
    }
    if gamma == 0.0 {
        return wishart_rate_potential(x, alpha, beta);
    }
    let (lm, lp) = mp_edges(alpha);
    if (gamma > 0.0 && x < lp) || (gamma < 0.0 && (x > lm || x <= 0.0)) {
        return Ok(f64::INFINITY);
    }
    let (_, m) = perturbed_wishart_minimizer(gamma, alpha, beta)?;
    let mp = SpectralMeasure::marchenko_pastur(alpha)?;
    Ok((wishart_tilted_potential(x, gamma, alpha, beta, &mp)? - m).max(0.0))
}

/// Argmin and minimum of the tilted Wishart potential for `γ ≠ 0`, searched on
/// `[λ₊, λ₊ + 10 + 2|τ/α|]` for `γ > 0` and on `(0, λ₋]` for `γ < 0`.
pub fn perturbed_wishart_minimizer(gamma: f64, alpha: f64, beta: Beta) -> Result<(f64, f64)> {
    check_ratio(alpha)?;
    let tau = wishart_tilt(gamma)?;
    if gamma == 0.0 {
        return domain("the unperturbed rate has a whole interval of minimizers");
    }
    let (lm, lp) = mp_edges(alpha);
    let (lo, hi) = if gamma > 0.0 {
        (lp, lp + 10.0 + 2.0 * (tau / alpha).abs())
    } else {
        if lm <= 0.0 {
            return domain("a negative spike needs alpha < 1 so the spectrum has a gap at 0");
        }
        (1e-9 * lm, lm)
    };
    let mp = SpectralMeasure::marchenko_pastur(alpha)?;
    let mut failure = None;
    let best = unimodal_min(
        |y| match wishart_tilted_potential(y, gamma, alpha, beta, &mp) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
    );
    if let Some(e) = failure {
        return Err(Error::Convergence(format!("inner minimization failed: {e}")));
    }
    Ok(best)
}

/// Finite-rank perturbation of a Wigner or Wishart ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbationSpec {
    /// `X + Σ θ_i e_i e_i*`.
    Wigner { thetas: ThetaSpec },
    /// Covariance `I + Σ γ_i e_i e_i*`, spikes sorted decreasingly, all `> -1`.
    Wishart { gammas: Vec<f64>, alpha: f64 },
}

impl PerturbationSpec {
    pub fn wishart(gammas: Vec<f64>, alpha: f64) -> Result<Self> {
        check_ratio(alpha)?;
        if gammas.iter().any(|&g| !(g > -1.0 && g.is_finite())) {
            return domain("spikes must be finite and > -1");
        }
        if gammas.windows(2).any(|w| w[0] < w[1]) {
            return domain("spikes must be nonincreasing");
        }
        Ok(PerturbationSpec::Wishart { gammas, alpha })
    }

    /// Joint rate of the extreme eigenvalues matching the perturbation:
    /// one coordinate per tilt, in the order of the tilts (top tilts then
    /// bottom tilts, or the spikes in their order). `+∞` off the ordered cone.
    pub fn rate(&self, xs: &[f64], beta: Beta) -> Result<f64> {
        match self {
            PerturbationSpec::Wigner { thetas } => {
                if xs.len() != thetas.len() {
                    return Err(Error::Shape(format!("{} points for {} tilts", xs.len(), thetas.len())));
                }
                let (top, bottom) = xs.split_at(thetas.top.len());
                if wigner_rate_joint(top, bottom, beta).is_infinite() {
                    return Ok(f64::INFINITY);
                }
                let mut total = 0.0;
                for (x, t) in xs.iter().zip(thetas.iter()) {
                    total += perturbed_wigner_rate(*x, t, beta)?;
                }
                Ok(total)
            }
            PerturbationSpec::Wishart { gammas, alpha } => {
                if xs.len() != gammas.len() {
                    return Err(Error::Shape(format!("{} points for {} spikes", xs.len(), gammas.len())));
                }
                let (lm, lp) = mp_edges(*alpha);
                let ell = gammas.iter().filter(|&&g| g >= 0.0).count();
                let (top, bottom) = xs.split_at(ell);
                let ok = top.windows(2).all(|w| w[0] >= w[1])
                    && bottom.windows(2).all(|w| w[0] >= w[1])
                    && top.iter().all(|&x| x >= lp)
                    && bottom.iter().all(|&x| x <= lm && x >= 0.0);
                if !ok {
                    return Ok(f64::INFINITY);
                }
                let mut total = 0.0;
                for (x, g) in xs.iter().zip(gammas) {
                    total += perturbed_wishart_rate(*x, *g, *alpha, beta)?;
                }
                Ok(total)
            }
        }
    }
}

/// Annealed spherical integral of a Wishart matrix,
/// `Λ(θ) = sup_{a∈(0,1)} θ² a(1-a) + α' ln(a/α') + (1-α') ln((1-a)/(1-α'))`
/// with `α' = 1/(1+α)`. Returns `(Λ(θ), x_{θ,α})`.
///
/// The objective is strictly concave in `a`, so the maximizer is the root of
/// `θ²(1-2a) + α'/a - (1-α')/(1-a)`, found by bisection to adjacent floats.
pub fn annealed_lambda_wishart(theta: f64, alpha: f64) -> Result<(f64, f64)> {
    check_ratio(alpha)?;
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    let ap = 1.0 / (1.0 + alpha);
    if theta == 0.0 {
        return Ok((0.0, ap));
    }
    let t2 = theta * theta;
    let a = optim::bisect(|a| annealed_wishart_residual(t2, ap, a), 0.0, 1.0);
    let res = annealed_wishart_residual(t2, ap, a).abs();
    if !(res <= 1e-10) || a <= 0.0 || a >= 1.0 {
        return Err(Error::Convergence(format!("annealed Wishart residual {res:e} at a = {a}")));
    }
    let value = t2 * a * (1.0 - a) + ap * (a / ap).ln() + (1.0 - ap) * ((1.0 - a) / (1.0 - ap)).ln();
    Ok((value, a))
}

/// First-order condition of [`annealed_lambda_wishart`] at `a`.
pub fn annealed_wishart_residual(theta_sq: f64, alpha_prime: f64, a: f64) -> f64 {
    theta_sq * (1.0 - 2.0 * a) + alpha_prime / a - (1.0 - alpha_prime) / (1.0 - a)
}

/// Piecewise-constant variance profile: `r[i][j] = σ²` between blocks `i` and
/// `j`, with block proportions `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct VarianceProfile {
    r: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    r: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

impl TryFrom<RawProfile> for VarianceProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        VarianceProfile::new(raw.r, raw.alpha)
    }
}

/// Outcome of [`assumption_neg_status`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NegStatus {
    /// Negative definite on the complement of the constant vector.
    Negative,
    /// Negative semidefinite with a null direction (within 1e-10); accepted,
    /// but the maximizer need not be unique.
    Boundary,
    /// Some direction orthogonal to the constants is positive.
    Fails,
}

impl VarianceProfile {
    pub fn new(r: Vec<Vec<f64>>, alpha: Vec<f64>) -> Result<Self> {
        let p = alpha.len();
        if p == 0 || r.len() != p || r.iter().any(|row| row.len() != p) {
            return Err(Error::Shape(format!("profile needs a {p}x{p} matrix")));
        }
        if r.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return domain("profile entries must be finite and nonnegative");
        }
        for i in 0..p {
            for j in 0..i {
                if (r[i][j] - r[j][i]).abs() > 1e-12 * (1.0 + r[i][j].abs()) {
                    return domain("profile matrix must be symmetric");
                }
            }
        }
        if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return domain("block weights must be positive");
        }
        let s: f64 = alpha.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return domain(format!("block weights sum to {s}, not 1"));
        }
        Ok(VarianceProfile { r, alpha })
    }

    pub fn r(&self) -> &[Vec<f64>] {
        &self.r
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn size(&self) -> usize {
        self.alpha.len()
    }

    fn matrix(&self) -> DMatrix<f64> {
        let p = self.size();
        DMatrix::from_fn(p, p, |i, j| self.r[i][j])
    }

    /// Block index of row `i` out of `n`, with blocks of sizes `≈ α_k n`.
    pub fn block_of(&self, i: usize, n: usize) -> usize {
        let mut acc = 0.0;
        for (k, a) in self.alpha.iter().enumerate() {
            acc += a;
            if ((i as f64) + 0.5) < acc * n as f64 {
                return k;
            }
        }
        self.size() - 1
    }

    fn objective(&self, theta: f64, psi: &[f64]) -> f64 {
        let p = self.size();
        let mut q = 0.0;
        for i in 0..p {
            for j in 0..p {
                q += psi[i] * self.r[i][j] * psi[j];
            }
        }
        let ent: f64 = (0..p).map(|i| self.alpha[i] * (psi[i] / self.alpha[i]).ln()).sum();
        0.5 * theta * theta * q + ent
    }
}

/// Largest eigenvalue of `ψ ↦ ⟨ψ, Rψ⟩` restricted to the orthogonal
/// complement of the constant vector, and its classification.
pub fn assumption_neg_status(profile: &VarianceProfile) -> (NegStatus, f64) {
    let p = profile.size();
    if p == 1 {
        return (NegStatus::Negative, f64::NEG_INFINITY);
    }
    // Helmert basis of 1^⊥.
    let mut basis = DMatrix::<f64>::zeros(p, p - 1);
    for k in 1..p {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            basis[(i, k - 1)] = 1.0 / norm;
        }
        basis[(k, k - 1)] = -(k as f64) / norm;
    }
    let projected = basis.transpose() * profile.matrix() * &basis;
    let top = SymmetricEigen::new(projected).eigenvalues.max();
    let status = if top < -1e-10 {
        NegStatus::Negative
    } else if top <= 1e-10 {
        NegStatus::Boundary
    } else {
        NegStatus::Fails
    };
    (status, top)
}

/// Whether `⟨ψ, Rψ⟩` is negative on the complement of the constants, with the
/// semidefinite boundary accepted.
pub fn assumption_neg_check(profile: &VarianceProfile) -> bool {
    assumption_neg_status(profile).0 != NegStatus::Fails
}

/// Maximizer of the variance-profile annealed objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptimum {
    /// `sup_ψ (θ²/2)⟨ψ, Rψ⟩ + Σ α_i ln(ψ_i/α_i)`, without the `β/2` factor.
    pub value: f64,
    pub psi: Vec<f64>,
    pub kkt_residual: f64,
    /// Set when the profile sits on the semidefinite boundary.
    pub boundary: bool,
}

/// Annealed spherical integral of a variance-profile matrix divided by `β/2`:
/// `sup_{ψ ∈ simplex} (θ²/2)⟨ψ, Rψ⟩ + Σ α_i ln(ψ_i/α_i)`.
///
/// Requires the negativity assumption, which makes the objective strictly
/// concave; otherwise returns [`Error::Assumption`].
pub fn annealed_lambda_profile(theta: f64, profile: &VarianceProfile) -> Result<ProfileOptimum> {
    let (status, top) = assumption_neg_status(profile);
    if status == NegStatus::Fails {
        return Err(Error::Assumption(format!(
            "profile form has eigenvalue {top:e} > 0 on the complement of the constants"
        )));
    }
    let mut opt = maximize_profile_objective(theta, profile)?;
    opt.boundary = status == NegStatus::Boundary;
    Ok(opt)
}

/// Local maximizer of the profile objective without the concavity check:
/// damped Newton steps on the simplex, falling back to projected gradient
/// steps where the Hessian is not negative on the tangent space.
pub fn maximize_profile_objective(theta: f64, profile: &VarianceProfile) -> Result<ProfileOptimum> {
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    let p = profile.size();
    let alpha = profile.alpha.clone();
    if theta == 0.0 || p == 1 {
        let value = profile.objective(theta, &alpha);
        return Ok(ProfileOptimum { value: if theta == 0.0 { 0.0 } else { value }, psi: alpha, kkt_residual: 0.0, boundary: false });
    }
    let t2 = theta * theta;
    let r = profile.matrix();
    let mut psi = DVector::from_vec(alpha.clone());
    let grad = |psi: &DVector<f64>| -> DVector<f64> {
        let rp = &r * psi;
        DVector::from_fn(p, |i, _| t2 * rp[i] + alpha[i] / psi[i])
    };
    let residual = |g: &DVector<f64>, psi: &DVector<f64>| -> f64 {
        let mu = g.dot(psi);
        g.iter().map(|gi| (gi - mu).abs()).fold(0.0, f64::max) / (1.0 + mu.abs())
    };
    let mut f = profile.objective(theta, psi.as_slice());
    for _ in 0..500 {
        let g = grad(&psi);
        if residual(&g, &psi) <= 1e-14 {
            break;
        }
        let mut kkt = DMatrix::<f64>::zeros(p + 1, p + 1);
        for i in 0..p {
            for j in 0..p {
                kkt[(i, j)] = t2 * r[(i, j)];
            }
            kkt[(i, i)] -= alpha[i] / (psi[i] * psi[i]);
            kkt[(i, p)] = 1.0;
            kkt[(p, i)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(p + 1);
        for i in 0..p {
            rhs[i] = -g[i];
        }
        let newton = kkt.lu().solve(&rhs).map(|s| s.rows(0, p).into_owned());
        let mean = g.mean();
        let projected = DVector::from_fn(p, |i, _| g[i] - mean);
        let dir = match newton {
            Some(d) if g.dot(&d) > 0.0 => d,
            _ => projected,
        };
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..80 {
            let cand = &psi + t * &dir;
            if cand.iter().all(|v| *v > 0.0) {
                let fc = profile.objective(theta, cand.as_slice());
                if fc >= f {
                    moved = fc > f || cand != psi;
                    psi = cand;
                    break;
                }
            }
            t *= 0.5;
        }
        let s = psi.sum();
        psi /= s;
        f = profile.objective(theta, psi.as_slice());
        if !moved {
            break;
        }
    }
    let res = residual(&grad(&psi), &psi);
    if !(res <= 1e-8) {
        return Err(Error::Convergence(format!("profile KKT residual {res:e} exceeds 1e-8")));
    }
    Ok(ProfileOptimum { value: f, psi: psi.as_slice().to_vec(), kkt_residual: res, boundary: false })
}

/// Block averages `R_ij = p² ∫∫_{cell ij} σ²(x, y) dx dy` of a variance
/// profile on `[0,1]²`, with equal block weights `1/p`.
///
/// Each cell uses a 16-point tensor Gauss rule, checked against an 8-point
/// rule; a relative disagreement above 1e-8 is reported as a numerical error.
pub fn profile_discretize<F: Fn(f64, f64) -> f64>(sigma: F, p: usize) -> Result<VarianceProfile> {
    if p == 0 {
        return domain("need at least one block");
    }
    let rule = |n: usize| quad::gauss_legendre(n);
    let (x16, w16) = rule(16);
    let (x8, w8) = rule(8);
    let h = 1.0 / p as f64;
    let cell = |i: usize, j: usize, x: &[f64], w: &[f64]| -> f64 {
        let mut total = 0.0;
        for (xa, wa) in x.iter().zip(w) {
            for (xb, wb) in x.iter().zip(w) {
                let u = (i as f64 + 0.5 * (xa + 1.0)) * h;
                let v = (j as f64 + 0.5 * (xb + 1.0)) * h;
                let s = sigma(u, v);
                total += 0.25 * wa * wb * s * s;
            }
        }
        total
    };
    let mut r = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            let fine = cell(i, j, &x16, &w16);
            let coarse = cell(i, j, &x8, &w8);
            if !fine.is_finite() || (fine - coarse).abs() > 1e-8 * (1.0 + fine.abs()) {
                return Err(Error::Numerical(format!("cell ({i}, {j}) quadrature did not settle")));
            }
            r[i][j] = fine;
        }
    }
    for i in 0..p {
        for j in 0..i {
            let m = 0.5 * (r[i][j] + r[j][i]);
            r[i][j] = m;
            r[j][i] = m;
        }
    }
    VarianceProfile::new(r, vec![1.0 / p as f64; p])
}

/// Cost `Σ n_i inf_{[a_i, b_i]} rate` of finding `n_i` outliers in each
/// interval above the bulk edge `edge`.
///
/// The infimum is found by golden section on each interval, with the left
/// endpoint compared explicitly since the rates of interest increase away
/// from the edge.
pub fn outlier_interval_cost<F: Fn(f64) -> f64>(
    intervals: &[(f64, f64)],
    counts: &[u32],
    edge: f64,
    rate: F,
) -> Result<f64> {
    if intervals.len() != counts.len() {
        return Err(Error::Shape(format!("{} intervals but {} counts", intervals.len(), counts.len())));
    }
    let mut sorted: Vec<(f64, f64)> = intervals.to_vec();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    for &(a, b) in &sorted {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return domain(format!("interval [{a}, {b}] is not a finite interval"));
        }
        if a <= edge {
            return domain(format!("interval [{a}, {b}] reaches the bulk edge {edge}"));
        }
    }
    if sorted.windows(2).any(|w| w[1].0 <= w[0].1) {
        return domain("intervals overlap");
    }
    let mut total = 0.0;
    for (&(a, b), &n) in intervals.iter().zip(counts) {
        if n == 0 {
            continue;
        }
        let (_, m) = unimodal_min(&rate, a, b);
        total += n as f64 * m;
    }
    Ok(total)
}

/// Single-eigenvalue rate functions selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateModel {
    Wigner,
    Wishart { alpha: f64 },
    PerturbedWigner { theta: f64 },
    PerturbedWishart { gamma: f64, alpha: f64 },
}

impl RateModel {
    /// Rate at `x`, including its `β` prefactor. Wishart rates use the
    /// upper-tail form above `λ₊`, the lower-tail form below `λ₋` and vanish
    /// on the support.
    pub fn rate(&self, x: f64, beta: Beta) -> Result<f64> {
        if !x.is_finite() {
            return domain("x must be finite");
        }
        match *self {
            RateModel::Wigner => Ok(wigner_rate(x, beta)),
            RateModel::Wishart { alpha } => {
                check_ratio(alpha)?;
                let (lm, lp) = mp_edges(alpha);
                if x >= lp {
                    wishart_rate(x, alpha, beta)
                } else if x <= lm {
                    wishart_rate_lower(x, alpha, beta)
                } else {
                    Ok(0.0)
                }
            }
            RateModel::PerturbedWigner { theta } => perturbed_wigner_rate(x, theta, beta),
            RateModel::PerturbedWishart { gamma, alpha } => perturbed_wishart_rate(x, gamma, alpha, beta),
        }
    }

    /// Right edge of the limiting bulk.
    pub fn upper_edge(&self) -> Result<f64> {
        match *self {
            RateModel::Wigner | RateModel::PerturbedWigner { .. } => Ok(2.0),
            RateModel::Wishart { alpha } | RateModel::PerturbedWishart { alpha, .. } => {
                check_ratio(alpha)?;
                Ok(mp_edges(alpha).1)
            }
        }
    }
}
