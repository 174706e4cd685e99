//! Fixed inputs shared by the criterion benchmarks.

use sphint_core::randmat::quantile_diagonal;
use sphint_core::{DiscreteModel, SpectralMeasure, ThetaSpec};

/// Semicircle-quantile spectrum of size `n` with outliers at 3.0 and 2.6.
pub fn desk_spectrum(n: usize) -> Vec<f64> {
    quantile_diagonal(&SpectralMeasure::Semicircle, n, &[3.0, 2.6]).expect("valid quantile spectrum")
}

pub fn desk_thetas() -> ThetaSpec {
    ThetaSpec::new(vec![1.5, 1.0], vec![]).expect("ordered tilts")
}

/// Six bulk atoms and two top outliers with unit multiplicities scaled by `scale`.
pub fn small_model(scale: u64) -> DiscreteModel {
    let etas = vec![-1.5, -0.9, -0.2, 0.4, 1.0, 1.6, 2.4, 3.1];
    let mult = vec![3 * scale, 5 * scale, 4 * scale, 6 * scale, 2 * scale, 5 * scale, 1, 1];
    DiscreteModel::new(etas, mult, [0, 5]).expect("valid model")
}
