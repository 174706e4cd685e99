//! Compactly supported spectral measures and the transforms the spherical
//! integral formulas need: Stieltjes transform off the support, its inverse,
//! the log-potential, support edges and ε-discretization.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::domain;
use crate::quad;
use crate::{Error, Result};

/// A compactly supported probability measure on the real line.
///
/// Build values with the checked constructors or by deserializing; both
/// validate the invariants. Serialized form is tagged by `"type"`:
///
/// ```json
/// {"type": "atoms", "positions": [-1, 1], "weights": [0.5, 0.5]}
/// {"type": "semicircle"}
/// {"type": "mp", "alpha": 0.25}
/// {"type": "density", "support": [0, 1], "values": [1, 1]}
/// ```
///
/// `density` values sit on a uniform grid spanning `support` and are
/// interpolated linearly between grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "RawMeasure")]
pub enum SpectralMeasure {
    Atoms { positions: Vec<f64>, weights: Vec<f64> },
    Semicircle,
    #[serde(rename = "mp")]
    MarchenkoPastur { alpha: f64 },
    Density { support: [f64; 2], values: Vec<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawMeasure {
    Atoms { positions: Vec<f64>, weights: Vec<f64> },
    Semicircle,
    #[serde(rename = "mp")]
    MarchenkoPastur { alpha: f64 },
    Density { support: [f64; 2], values: Vec<f64> },
}

impl TryFrom<RawMeasure> for SpectralMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        match raw {
            RawMeasure::Atoms { positions, weights } => SpectralMeasure::atoms(positions, weights),
            RawMeasure::Semicircle => Ok(SpectralMeasure::Semicircle),
            RawMeasure::MarchenkoPastur { alpha } => SpectralMeasure::marchenko_pastur(alpha),
            RawMeasure::Density { support, values } => SpectralMeasure::density(support, values),
        }
    }
}

/// Leftmost and rightmost points of the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportEdges {
    pub left: f64,
    pub right: f64,
}

/// Which end of the support a one-sided limit is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

const QUAD_TOL: f64 = 1e-12;

/// `∫_2^t sqrt(s² - 4) ds` for `t ≥ 2`.
pub(crate) fn semicircle_tail_area(t: f64) -> f64 {
    let s = ((t - 2.0) * (t + 2.0)).max(0.0).sqrt();
    0.5 * t * s - 2.0 * ((t + s) / 2.0).ln()
}

impl SpectralMeasure {
    /// Discrete measure `Σ w_i δ_{x_i}`. Positions are sorted and coincident
    /// atoms merged; weights must be positive and sum to 1 within 1e-12.
    pub fn atoms(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if positions.is_empty() {
            return domain("a discrete measure needs at least one atom");
        }
        if positions.iter().chain(&weights).any(|v| !v.is_finite()) {
            return domain("atoms must be finite");
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return domain("atom weights must be strictly positive");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return domain(format!("atom weights sum to {total}, not 1"));
        }
        let mut pairs: Vec<(f64, f64)> = positions.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pos: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut wts: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if pos.last() == Some(&x) {
                *wts.last_mut().unwrap() += w;
            } else {
                pos.push(x);
                wts.push(w);
            }
        }
        Ok(SpectralMeasure::Atoms { positions: pos, weights: wts })
    }

    /// Equal-weight atoms, e.g. an empirical spectrum.
    pub fn empirical(positions: &[f64]) -> Result<Self> {
        let w = 1.0 / positions.len().max(1) as f64;
        let n = positions.len();
        let weights = vec![w; n];
        // Rounding in n * (1/n) can exceed the 1e-12 check for huge n.
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|x| x / total).collect();
        Self::atoms(positions.to_vec(), weights)
    }

    /// Marchenko–Pastur law with ratio `alpha ∈ (0, 1]`.
    pub fn marchenko_pastur(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return domain(format!("Marchenko–Pastur ratio must lie in (0, 1], got {alpha}"));
        }
        Ok(SpectralMeasure::MarchenkoPastur { alpha })
    }

    /// Piecewise-linear density through `values` on a uniform grid of `support`.
    pub fn density(support: [f64; 2], values: Vec<f64>) -> Result<Self> {
        let [a, b] = support;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return domain("density support must be a finite interval [a, b] with a < b");
        }
        if values.len() < 2 {
            return domain("density needs at least two grid values");
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return domain("density values must be finite and nonnegative");
        }
        let h = (b - a) / (values.len() - 1) as f64;
        let total: f64 = values.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        if (total - 1.0).abs() > 1e-8 {
            return domain(format!("density integrates to {total}, not 1"));
        }
        Ok(SpectralMeasure::Density { support, values })
    }

    /// Parses a JSON object or one of the inline names `semicircle`, `mp:<alpha>`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t == "semicircle" {
            return Ok(SpectralMeasure::Semicircle);
        }
        if let Some(a) = t.strip_prefix("mp:") {
            let alpha: f64 = a
                .parse()
                .map_err(|_| Error::Domain(format!("bad Marchenko–Pastur ratio {a:?}")))?;
            return Self::marchenko_pastur(alpha);
        }
        serde_json::from_str(t).map_err(|e| Error::Domain(format!("invalid measure: {e}")))
    }

    pub fn edges(&self) -> SupportEdges {
        match self {
            SpectralMeasure::Atoms { positions, .. } => SupportEdges {
                left: positions[0],
                right: positions[positions.len() - 1],
            },
            SpectralMeasure::Semicircle => SupportEdges { left: -2.0, right: 2.0 },
            SpectralMeasure::MarchenkoPastur { alpha } => {
                let s = alpha.sqrt();
                SupportEdges { left: (1.0 - s).powi(2), right: (1.0 + s).powi(2) }
            }
            SpectralMeasure::Density { support, .. } => {
                SupportEdges { left: support[0], right: support[1] }
            }
        }
    }

    /// Grid of a tabulated density.
    fn grid(support: &[f64; 2], n: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = (support[1] - support[0]) / (n - 1) as f64;
        (0..n - 1).map(move |j| {
            let x0 = support[0] + j as f64 * h;
            let x1 = if j + 2 == n { support[1] } else { x0 + h };
            (x0, x1)
        })
    }

    /// Angle parametrization of the two named laws: `x(φ)` and the density
    /// in `φ ∈ [0, π]`, smooth at both edges.
    fn angular(&self) -> Option<(f64, f64, f64)> {
        match self {
            SpectralMeasure::Semicircle => Some((0.0, 2.0, 0.0)),
            SpectralMeasure::MarchenkoPastur { alpha } => Some((1.0 + alpha, 2.0 * alpha.sqrt(), *alpha)),
            _ => None,
        }
    }

    fn angular_weight(rad: f64, alpha: f64, phi: f64) -> f64 {
        let s = phi.sin();
        if alpha == 0.0 {
            2.0 / PI * s * s
        } else {
            // x = λ₋ + rad(1 + cos φ), written so that it keeps full relative
            // precision near λ₋ ≈ 0 when α is close to 1.
            let lm = (1.0 - alpha.sqrt()).powi(2);
            let x = lm + 2.0 * rad * (0.5 * phi).cos().powi(2);
            rad * rad * s * s / (2.0 * PI * alpha * x)
        }
    }

    /// `∫ f dμ`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match self {
            SpectralMeasure::Atoms { positions, weights } => {
                Ok(positions.iter().zip(weights).map(|(x, w)| w * f(*x)).sum())
            }
            SpectralMeasure::Density { support, values } => {
                let mut total = 0.0;
                for (j, (x0, x1)) in Self::grid(support, values.len()).enumerate() {
                    let (f0, f1) = (values[j], values[j + 1]);
                    let g = |x: f64| f(x) * (f0 + (f1 - f0) * (x - x0) / (x1 - x0));
                    total += quad::integrate(g, x0, x1, QUAD_TOL * (x1 - x0))?;
                }
                Ok(total)
            }
            _ => {
                let (mid, rad, alpha) = self.angular().unwrap();
                quad::integrate(
                    |p| f(mid + rad * p.cos()) * Self::angular_weight(rad, alpha, p),
                    0.0,
                    PI,
                    QUAD_TOL,
                )
            }
        }
    }

    /// Stieltjes transform `G_μ(z) = ∫ (z - x)^{-1} dμ(x)` for `z` off the
    /// closed support.
    pub fn stieltjes(&self, z: f64) -> Result<f64> {
        let e = self.edges();
        if !z.is_finite() || (z >= e.left && z <= e.right) {
            return domain(format!(
                "Stieltjes transform evaluated at {z}, inside the support [{}, {}]",
                e.left, e.right
            ));
        }
        Ok(self.stieltjes_unchecked(z))
    }

    fn stieltjes_unchecked(&self, z: f64) -> f64 {
        match self {
            SpectralMeasure::Atoms { positions, weights } => {
                positions.iter().zip(weights).map(|(x, w)| w / (z - x)).sum()
            }
            SpectralMeasure::Semicircle => {
                let s = ((z - 2.0) * (z + 2.0)).max(0.0).sqrt();
                2.0 / (z + z.signum() * s)
            }
            SpectralMeasure::MarchenkoPastur { alpha } => {
                let e = self.edges();
                let s = ((z - e.left) * (z - e.right)).max(0.0).sqrt();
                let sign = if z >= e.right { 1.0 } else { -1.0 };
                2.0 / (z + alpha - 1.0 + sign * s)
            }
            SpectralMeasure::Density { support, values } => {
                let mut total = 0.0;
                for (j, (x0, x1)) in Self::grid(support, values.len()).enumerate() {
                    let (f0, f1) = (values[j], values[j + 1]);
                    let slope = (f1 - f0) / (x1 - x0);
                    let fz = f0 + slope * (z - x0);
                    let log_ratio = if z == x1 || z == x0 {
                        if fz == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY * (z - 0.5 * (x0 + x1)).signum()
                        }
                    } else {
                        ((x1 - x0) / (z - x1)).ln_1p()
                    };
                    let term = if fz == 0.0 { 0.0 } else { fz * log_ratio };
                    total += term - slope * (x1 - x0);
                }
                total
            }
        }
    }

    /// One-sided limit of `G_μ` at a support edge; may be infinite.
    pub fn edge_stieltjes(&self, side: Side) -> f64 {
        let e = self.edges();
        let sign = if side == Side::Right { 1.0 } else { -1.0 };
        match self {
            SpectralMeasure::Atoms { .. } => sign * f64::INFINITY,
            SpectralMeasure::Semicircle => sign,
            SpectralMeasure::MarchenkoPastur { alpha } => {
                let s = alpha.sqrt();
                match side {
                    Side::Right => 1.0 / (s * (1.0 + s)),
                    Side::Left if s >= 1.0 => f64::NEG_INFINITY,
                    Side::Left => 1.0 / (s * (s - 1.0)),
                }
            }
            SpectralMeasure::Density { values, .. } => {
                let (edge_value, z) = match side {
                    Side::Right => (values[values.len() - 1], e.right),
                    Side::Left => (values[0], e.left),
                };
                if edge_value > 0.0 {
                    sign * f64::INFINITY
                } else {
                    self.stieltjes_unchecked(z)
                }
            }
        }
    }

    /// Inverse Stieltjes transform on the side of the support selected by the
    /// sign of `theta`.
    ///
    /// For `theta > 0` returns the unique `v > r_μ` with `G_μ(v) = theta` when
    /// `theta < G_μ(r_μ+)`, and `r_μ` itself otherwise; mirrored for `theta < 0`.
    pub fn stieltjes_inverse(&self, theta: f64) -> Result<f64> {
        if theta == 0.0 || !theta.is_finite() {
            return domain("inverse Stieltjes transform needs a finite nonzero theta");
        }
        let e = self.edges();
        let inv = 1.0 / theta.abs();
        let (mut lo, mut hi) = if theta > 0.0 {
            if theta >= self.edge_stieltjes(Side::Right) {
                return Ok(e.right);
            }
            (e.right.max(e.left + inv), e.right + inv)
        } else {
            if theta <= self.edge_stieltjes(Side::Left) {
                return Ok(e.left);
            }
            (e.left - inv, e.left.min(e.right - inv))
        };
        // G is decreasing on each side of the support.
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = self.stieltjes_unchecked(mid);
            if g > theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // The root is strictly off the support, so never return the edge itself.
        if theta > 0.0 && lo == e.right {
            return Ok(hi);
        }
        if theta < 0.0 && hi == e.left {
            return Ok(lo);
        }
        let (glo, ghi) = (self.stieltjes_unchecked(lo), self.stieltjes_unchecked(hi));
        Ok(if (glo - theta).abs() <= (ghi - theta).abs() { lo } else { hi })
    }

    /// Log-potential `∫ ln|v - x| dμ(x)`. Equals `-∞` at an atom.
    pub fn log_potential(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return domain("log-potential needs a finite point");
        }
        match self {
            SpectralMeasure::Atoms { positions, weights } => Ok(positions
                .iter()
                .zip(weights)
                .map(|(x, w)| w * (v - x).abs().ln())
                .sum()),
            SpectralMeasure::Semicircle => {
                let t = v.abs();
                if t <= 2.0 {
                    return Ok(0.25 * v * v - 0.5);
                }
                // With w = 1/G(|v|) the value is ln w + 1/(2w²), free of the
                // cancellation in v²/4 - (tail area)/2 for large |v|.
                let w = 0.5 * (t + ((t - 2.0) * (t + 2.0)).sqrt());
                Ok(w.ln() + 0.5 / (w * w))
            }
            SpectralMeasure::MarchenkoPastur { alpha } => {
                let (mid, rad, alpha) = (1.0 + alpha, 2.0 * alpha.sqrt(), *alpha);
                let f = |p: f64| {
                    let d = (v - (mid + rad * p.cos())).abs();
                    // The log singularity at a single node carries no mass.
                    if d == 0.0 {
                        return 0.0;
                    }
                    d.ln() * Self::angular_weight(rad, alpha, p)
                };
                let c = (v - mid) / rad;
                let breaks: Vec<f64> = if c > -1.0 && c < 1.0 {
                    vec![0.0, c.acos(), PI]
                } else {
                    vec![0.0, PI]
                };
                quad::integrate_breaks(f, &breaks, 1e-11)
                    .map_err(|e| Error::Numerical(format!("log-potential at {v}: {e}")))
            }
            SpectralMeasure::Density { support, values } => {
                let l1 = |u: f64| if u == 0.0 { 0.0 } else { u * u.abs().ln() - u };
                let l2 = |u: f64| if u == 0.0 { 0.0 } else { 0.5 * u * u * u.abs().ln() - 0.25 * u * u };
                let mut total = 0.0;
                for (j, (x0, x1)) in Self::grid(support, values.len()).enumerate() {
                    let (f0, f1) = (values[j], values[j + 1]);
                    let slope = (f1 - f0) / (x1 - x0);
                    let fv = f0 + slope * (v - x0);
                    let (u0, u1) = (x0 - v, x1 - v);
                    total += fv * (l1(u1) - l1(u0)) + slope * (l2(u1) - l2(u0));
                }
                Ok(total)
            }
        }
    }

    /// `μ((-∞, x])`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let e = self.edges();
        if x < e.left {
            return Ok(0.0);
        }
        if x >= e.right {
            return Ok(1.0);
        }
        match self {
            SpectralMeasure::Atoms { positions, weights } => Ok(positions
                .iter()
                .zip(weights)
                .filter(|(p, _)| **p <= x)
                .map(|(_, w)| w)
                .sum()),
            SpectralMeasure::Semicircle => {
                Ok(0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI)
            }
            SpectralMeasure::MarchenkoPastur { alpha } => {
                let (mid, rad, alpha) = (1.0 + alpha, 2.0 * alpha.sqrt(), *alpha);
                let phi = ((x - mid) / rad).clamp(-1.0, 1.0).acos();
                let w = |p: f64| Self::angular_weight(rad, alpha, p);
                quad::integrate(w, phi, PI, 1e-14)
            }
            SpectralMeasure::Density { support, values } => {
                let mut total = 0.0;
                for (j, (x0, x1)) in Self::grid(support, values.len()).enumerate() {
                    let (f0, f1) = (values[j], values[j + 1]);
                    if x >= x1 {
                        total += 0.5 * (x1 - x0) * (f0 + f1);
                    } else {
                        let fx = f0 + (f1 - f0) * (x - x0) / (x1 - x0);
                        total += 0.5 * (x - x0) * (f0 + fx);
                        break;
                    }
                }
                Ok(total)
            }
        }
    }

    /// Smallest `x` with `μ((-∞, x]) ≥ p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("quantile level {p} outside [0, 1]"));
        }
        if let SpectralMeasure::Atoms { positions, weights } = self {
            let mut acc = 0.0;
            for (x, w) in positions.iter().zip(weights) {
                acc += w;
                if acc >= p - 1e-15 {
                    return Ok(*x);
                }
            }
            return Ok(positions[positions.len() - 1]);
        }
        let e = self.edges();
        let (mut lo, mut hi) = (e.left, e.right);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid)? >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Bins `[lo + jε, lo + (j+1)ε)` collapsed onto their left edges. The last
    /// bin is closed so the right edge of the support keeps its mass.
    pub fn discretize(&self, lo: f64, epsilon: f64) -> Result<SpectralMeasure> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return domain(format!("discretization step must be positive, got {epsilon}"));
        }
        let e = self.edges();
        if !(lo <= e.left) {
            return domain(format!("discretization origin {lo} lies above the left edge {}", e.left));
        }
        let bin_of = |x: f64| {
            let t = (x - lo) / epsilon;
            let k = t.round();
            if (t - k).abs() <= 1e-9 * t.abs().max(1.0) { k } else { t.floor() }
        };
        let nbins = bin_of(e.right) as usize + 1;
        if nbins > 50_000_000 {
            return domain("discretization would need more than 5e7 bins");
        }
        let mut mass = vec![0.0; nbins];
        match self {
            SpectralMeasure::Atoms { positions, weights } => {
                for (x, w) in positions.iter().zip(weights) {
                    mass[(bin_of(*x) as usize).min(nbins - 1)] += w;
                }
            }
            _ => {
                let mut prev = 0.0;
                for (j, m) in mass.iter_mut().enumerate() {
                    let next = if j + 1 == nbins { 1.0 } else { self.cdf(lo + (j + 1) as f64 * epsilon)? };
                    *m = (next - prev).max(0.0);
                    prev = next;
                }
            }
        }
        let total: f64 = mass.iter().sum();
        let (pos, wts): (Vec<f64>, Vec<f64>) = mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(|(j, m)| (lo + j as f64 * epsilon, m / total))
            .unzip();
        let norm: f64 = wts.iter().sum();
        SpectralMeasure::atoms(pos, wts.into_iter().map(|w| w / norm).collect())
    }

    /// Push-forward under `x ↦ c·x` for `c > 0`. Only discrete and tabulated
    /// measures are closed under dilation.
    pub fn dilate(&self, c: f64) -> Result<SpectralMeasure> {
        if !(c > 0.0 && c.is_finite()) {
            return domain("dilation factor must be positive");
        }
        match self {
            SpectralMeasure::Atoms { positions, weights } => Ok(SpectralMeasure::Atoms {
                positions: positions.iter().map(|x| c * x).collect(),
                weights: weights.clone(),
            }),
            SpectralMeasure::Density { support, values } => Ok(SpectralMeasure::Density {
                support: [c * support[0], c * support[1]],
                values: values.iter().map(|v| v / c).collect(),
            }),
            _ => domain("dilation of a named law is not representable"),
        }
    }

    /// Push-forward under `x ↦ -x`.
    pub fn reflect(&self) -> Result<SpectralMeasure> {
        match self {
            SpectralMeasure::Atoms { positions, weights } => Ok(SpectralMeasure::Atoms {
                positions: positions.iter().rev().map(|x| -x).collect(),
                weights: weights.iter().rev().copied().collect(),
            }),
            SpectralMeasure::Semicircle => Ok(SpectralMeasure::Semicircle),
            SpectralMeasure::Density { support, values } => Ok(SpectralMeasure::Density {
                support: [-support[1], -support[0]],
                values: values.iter().rev().copied().collect(),
            }),
            SpectralMeasure::MarchenkoPastur { .. } => {
                domain("the reflected Marchenko–Pastur law is not representable")
            }
        }
    }
}
