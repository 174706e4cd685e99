//! Limits of spherical integrals and the large-deviation rate functions of
//! extreme eigenvalues built on them.
//!
//! The rank-one limit is
//!
//! ```text
//! J(mu, theta, lambda) = lim (1/N) log E[exp((beta N / 2) theta <e, X e>)] * (2 / beta)
//! ```
//!
//! for a matrix `X` with spectral law `mu` and top outlier `lambda`, and the
//! k-dimensional version is the sum of rank-one terms. Every value in this crate
//! is reported without the `beta/2` prefactor unless a function says otherwise.
//!
//! * [`measures`]: spectral measures, Stieltjes transforms, log-potentials.
//! * [`spherical`]: closed-form `J` plus two oracles that recompute it.
//! * [`ldp`]: rate functions, Legendre duality, annealed integrals.
//! * [`randmat`]: samplers and Monte-Carlo estimators at finite `N`.

pub mod error;
pub mod ldp;
pub mod measures;
pub mod optim;
pub mod quad;
pub mod randmat;
pub mod spherical;

pub use error::{Error, Result};
pub use ldp::{PerturbationSpec, RateModel, VarianceProfile};
pub use measures::{SpectralMeasure, SupportEdges};
pub use randmat::{FrameSample, Hermitian, McConfig, McEstimate};
pub use spherical::{DiscreteModel, JBreakdown, OutlierSpec, Regime, ThetaSpec};

use serde::{Deserialize, Serialize};

/// Symmetry class of the ensemble: 1 for real/orthogonal, 2 for complex/unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    Real,
    Complex,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Real => 1.0,
            Beta::Complex => 2.0,
        }
    }

    /// The `beta/2` factor in front of every spherical-integral limit.
    pub fn half(self) -> f64 {
        self.value() / 2.0
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;

    fn try_from(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            _ => error::domain(format!("beta must be 1 or 2, got {b}")),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        match b {
            Beta::Real => 1,
            Beta::Complex => 2,
        }
    }
}
