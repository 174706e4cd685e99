mod common;

use common::{grid_max, j_formula, mp_integral, sc_g, sc_logpot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphint_core::spherical::{
    conditional_oracle_2d, interlacing_roots, j_multi, j_one, simplex_optimum, simplex_oracle_1d,
    transport_identity_check, v_star,
};
use sphint_core::{DiscreteModel, Error, OutlierSpec, Regime, SpectralMeasure, ThetaSpec};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn delta0() -> SpectralMeasure {
    SpectralMeasure::atoms(vec![0.0], vec![1.0]).unwrap()
}

fn sc() -> SpectralMeasure {
    SpectralMeasure::Semicircle
}

#[test]
fn v_star_examples() {
    assert_eq!(v_star(&delta0(), 2.0, 1.0).unwrap(), (1.0, Regime::TiltBinds));
    let (v, r) = v_star(&delta0(), 0.5, 1.0).unwrap();
    close(v, 2.0, 1e-12);
    assert_eq!(r, Regime::InverseBinds);
    // G(3) ≈ 0.382 ≤ 0.5, so the tilt binds at λ = 3.
    assert_eq!(v_star(&sc(), 0.5, 3.0).unwrap(), (3.0, Regime::TiltBinds));
    // G(2.2) ≈ 0.642 > 0.5, so v* = G^{-1}(0.5) = 2.5.
    let (v, r) = v_star(&sc(), 0.5, 2.2).unwrap();
    close(v, 2.5, 1e-12);
    assert_eq!(r, Regime::InverseBinds);
    // At the semicircle edge G is finite, so a large tilt binds there.
    assert_eq!(v_star(&sc(), 2.0, 2.0).unwrap(), (2.0, Regime::TiltBinds));
    // At an atom G is infinite and the inverse branch applies.
    let (v, r) = v_star(&delta0(), 1.0, 0.0).unwrap();
    close(v, 1.0, 1e-12);
    assert_eq!(r, Regime::InverseBinds);
}

#[test]
fn v_star_sign_mismatch_is_a_domain_error() {
    assert!(matches!(v_star(&sc(), 1.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(v_star(&sc(), -1.0, -1.0), Err(Error::Domain(_))));
    assert!(matches!(v_star(&sc(), -1.0, 3.0), Err(Error::Domain(_))));
    assert!(matches!(j_one(&sc(), 1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn j_one_examples() {
    let z = j_one(&sc(), 0.0, 3.0).unwrap();
    assert_eq!((z.value, z.regime), (0.0, Regime::ZeroTilt));
    close(j_one(&delta0(), 1.0, 1.0).unwrap().value, 0.0, 1e-15);
    close(j_one(&delta0(), 2.0, 1.0).unwrap().value, 1.0 - 2f64.ln(), 1e-15);
}

#[test]
fn j_one_semicircle_against_closed_forms() {
    // Frozen 30-digit values; the independent closed-form oracle reproduces them.
    let cases = [
        (1.5, 3.0, 2.059_162_224_897_471),
        (1.0, 2.6, 0.733_428_191_322_390_1),
        (0.5, 3.0, 0.157_774_513_565_580_7),
    ];
    for (theta, lambda, frozen) in cases {
        let oracle = j_formula(theta, lambda, sc_g, |t| t + 1.0 / t, sc_logpot);
        close(oracle, frozen, 1e-13);
        close(j_one(&sc(), theta, lambda).unwrap().value, frozen, 1e-12);
    }
}

#[test]
fn j_one_marchenko_pastur_against_quadrature() {
    let a = 0.25;
    let mp = SpectralMeasure::marchenko_pastur(a).unwrap();
    let g = |z: f64| mp_integral(a, |x| 1.0 / (z - x), 4000);
    let lp = |z: f64| mp_integral(a, |x| (z - x).ln(), 4000);
    let g_inv = |t: f64| common::bisect(|z| g(z) - t, 2.25 + 1e-12, 50.0);
    let frozen = 0.896_466_048_512_264_4;
    close(j_formula(0.8, 2.6, g, g_inv, lp), frozen, 1e-9);
    close(j_one(&mp, 0.8, 2.6).unwrap().value, frozen, 1e-9);
    // At the edge with a large tilt.
    close(j_one(&mp, 2.0, 2.25).unwrap().value, 2.716_395_324_324_493, 1e-9);
}

#[test]
fn negative_tilts_follow_the_mirror_rule() {
    let mu = SpectralMeasure::atoms(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
    let r = mu.reflect().unwrap();
    for (theta, lambda) in [(0.3, 2.5), (2.0, 3.0), (0.05, 2.1), (5.0, 2.0)] {
        let pos = j_one(&r, theta, lambda).unwrap().value;
        let neg = j_one(&mu, -theta, -lambda).unwrap().value;
        close(neg, pos, 1e-12);
    }
    close(j_one(&sc(), -0.5, -3.0).unwrap().value, 0.157_774_513_565_580_7, 1e-12);
}

#[test]
fn j_one_is_continuous_at_zero_tilt() {
    for mu in [sc(), SpectralMeasure::marchenko_pastur(0.5).unwrap()] {
        let lambda = mu.edges().right + 0.7;
        let small = j_one(&mu, 1e-7, lambda).unwrap().value;
        assert!(small.abs() < 1e-6, "{small}");
        let small = j_one(&mu, -1e-7, mu.edges().left - 0.7).unwrap().value;
        assert!(small.abs() < 1e-6, "{small}");
    }
}

#[test]
fn j_multi_examples() {
    let zero = ThetaSpec::new(vec![0.0, 0.0], vec![]).unwrap();
    let l = OutlierSpec::new(vec![3.0, 2.5], vec![]).unwrap();
    assert_eq!(j_multi(&sc(), &zero, &l).unwrap(), 0.0);

    let t = ThetaSpec::new(vec![2.0, 1.0], vec![]).unwrap();
    let l = OutlierSpec::new(vec![1.0, 1.0], vec![]).unwrap();
    close(j_multi(&delta0(), &t, &l).unwrap(), 1.0 - 2f64.ln(), 1e-15);

    let t = ThetaSpec::new(vec![0.7, 0.7], vec![]).unwrap();
    let l = OutlierSpec::new(vec![2.8, 2.8], vec![]).unwrap();
    close(j_multi(&sc(), &t, &l).unwrap(), 2.0 * j_one(&sc(), 0.7, 2.8).unwrap().value, 1e-14);

    let t = ThetaSpec::new(vec![1.0], vec![-0.5]).unwrap();
    let l = OutlierSpec::new(vec![2.6], vec![-3.0]).unwrap();
    close(j_multi(&sc(), &t, &l).unwrap(), 0.733_428_191_322_390_1 + 0.157_774_513_565_580_7, 1e-12);

    let l = OutlierSpec::new(vec![2.6], vec![]).unwrap();
    assert!(matches!(j_multi(&sc(), &t, &l), Err(Error::Shape(_))));
}

#[test]
fn spec_types_validate_ordering() {
    assert!(ThetaSpec::new(vec![1.0, 2.0], vec![]).is_err());
    assert!(ThetaSpec::new(vec![-1.0], vec![]).is_err());
    assert!(ThetaSpec::new(vec![], vec![-1.0, -2.0]).is_err());
    assert!(OutlierSpec::new(vec![2.0, 3.0], vec![]).is_err());
    let t = ThetaSpec::from_signed(&[0.5, -1.0, 2.0, -0.2]).unwrap();
    assert_eq!(t.top, vec![2.0, 0.5]);
    assert_eq!(t.bottom, vec![-1.0, -0.2]);
    assert!(OutlierSpec::new(vec![1.5], vec![]).unwrap().check_against(&sc()).is_err());
}

#[test]
fn simplex_oracle_examples() {
    let m = DiscreteModel::new(vec![0.0, 1.0], vec![1, 1], [0, 0]).unwrap();
    // Grid search over the mass g put on the outlier.
    for theta in [2.0, 1.0, 3.5] {
        let (_, grid) = grid_max(|g| theta * g + (1.0 - g).max(1e-300).ln(), 0.0, 1.0, 2000);
        close(simplex_oracle_1d(&m, theta).unwrap(), grid, 1e-10);
        close(simplex_oracle_1d(&m, theta).unwrap(), j_one(&delta0(), theta, 1.0).unwrap().value, 1e-12);
    }
    close(simplex_oracle_1d(&m, 2.0).unwrap(), 1.0 - 2f64.ln(), 1e-14);
    close(simplex_oracle_1d(&m, 1.0).unwrap(), 0.0, 1e-14);

    let m = DiscreteModel::new(vec![-1.0, 0.0, 2.0, 5.0], vec![3, 1, 2, 1], [0, 2]).unwrap();
    let opt = simplex_optimum(&m, 0.0).unwrap();
    assert_eq!(opt.value, 0.0);
    assert_eq!(opt.gamma, m.alphas());
}

#[test]
fn simplex_oracle_matches_j_one_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = rng.random_range(1..=6);
        let k = rng.random_range(0..=3);
        let mut etas: Vec<f64> = Vec::new();
        let mut x = rng.random_range(-2.0..0.0);
        for _ in 0..p + k {
            etas.push(x);
            x += rng.random_range(0.05..1.5);
        }
        let mult: Vec<u64> = (0..p + k).map(|_| rng.random_range(1..6)).collect();
        let m = DiscreteModel::new(etas, mult, [0, p - 1]).unwrap();
        let theta = rng.random_range(0.05..4.0);
        let expected = j_one(&m.bulk_measure(), theta, m.top()).unwrap().value;
        close(simplex_oracle_1d(&m, theta).unwrap(), expected, 1e-8);
        // Negative tilts use the smallest eigenvalue.
        let low = m.etas()[0];
        let expected = j_one(&m.bulk_measure(), -theta, low).unwrap().value;
        close(simplex_oracle_1d(&m, -theta).unwrap(), expected, 1e-8);
    }
}

#[test]
fn interlacing_root_examples() {
    let m = DiscreteModel::new(vec![-1.0, 1.0], vec![1, 1], [0, 1]).unwrap();
    close(interlacing_roots(&m, &[0.5, 0.5]).unwrap()[0], 0.0, 1e-12);
    let m = DiscreteModel::new(vec![0.0, 1.0], vec![1, 1], [0, 1]).unwrap();
    close(interlacing_roots(&m, &[0.75, 0.25]).unwrap()[0], 0.75, 1e-12);

    let etas = [0.0, 1.0, 2.0];
    let m = DiscreteModel::new(etas.to_vec(), vec![1, 1, 1], [0, 2]).unwrap();
    let g = [1.0 / 3.0; 3];
    let roots = interlacing_roots(&m, &g).unwrap();
    assert_eq!(roots.len(), 2);
    let f = |x: f64| etas.iter().map(|e| (1.0 / 3.0) / (x - e)).sum::<f64>();
    for (j, r) in roots.iter().enumerate() {
        assert!(etas[j] < *r && *r < etas[j + 1]);
        assert!(f(r - 1e-6) > 0.0 && f(r + 1e-6) < 0.0);
    }
    // Roots are symmetric: 1 ± 1/√3.
    close(roots[0], 1.0 - 1.0 / 3f64.sqrt(), 1e-12);
    close(roots[1], 1.0 + 1.0 / 3f64.sqrt(), 1e-12);

    // A zero weight on the top eigenvalue pushes the root to that endpoint.
    let m = DiscreteModel::new(vec![0.0, 1.0], vec![1, 1], [0, 1]).unwrap();
    close(interlacing_roots(&m, &[1.0, 0.0]).unwrap()[0], 1.0, 0.0);
    assert!(interlacing_roots(&m, &[0.5, 0.4]).is_err());
}

#[test]
fn conditional_oracle_examples() {
    let m = DiscreteModel::new(vec![0.0, 1.0, 2.0], vec![1, 1, 1], [0, 0]).unwrap();
    assert_eq!(conditional_oracle_2d(&m, 0.0, 0.0).unwrap(), 0.0);
    let expected = j_one(&delta0(), 3.0, 2.0).unwrap().value + j_one(&delta0(), 2.0, 1.0).unwrap().value;
    close(conditional_oracle_2d(&m, 3.0, 2.0).unwrap(), expected, 1e-4);
    close(conditional_oracle_2d(&m, 2.5, 0.0).unwrap(), simplex_oracle_1d(&m, 2.5).unwrap(), 1e-4);
    assert!(matches!(conditional_oracle_2d(&m, 1.0, 2.0), Err(Error::Domain(_))));
}

#[test]
fn conditional_oracle_is_additive_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let p = rng.random_range(1..=3);
        let mut etas: Vec<f64> = Vec::new();
        let mut x = 0.0;
        for _ in 0..p + 2 {
            etas.push(x);
            x += rng.random_range(0.2..1.2);
        }
        let mut mult: Vec<u64> = (0..p).map(|_| rng.random_range(1..4)).collect();
        mult.extend([1, 1]);
        let m = DiscreteModel::new(etas.clone(), mult, [0, p - 1]).unwrap();
        let t1 = rng.random_range(0.5..4.0);
        let t2 = rng.random_range(0.2..t1);
        let mu = m.bulk_measure();
        let expected = j_one(&mu, t1, etas[p + 1]).unwrap().value + j_one(&mu, t2, etas[p]).unwrap().value;
        close(conditional_oracle_2d(&m, t1, t2).unwrap(), expected, 1e-4);
    }
}

#[test]
fn transport_identity_examples() {
    assert_eq!(transport_identity_check(&delta0(), 2.0, 1.0, 1.0).unwrap(), 0.0);
    assert!(transport_identity_check(&delta0(), 2.0, 1.0, 1.5).unwrap() <= 1e-10);
    let two = SpectralMeasure::atoms(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert!(transport_identity_check(&two, 5.0, 2.0, 3.0).unwrap() <= 1e-10);
    // G(1) = 1 > 0.5, so the low point is not tilt-binding.
    assert!(matches!(transport_identity_check(&delta0(), 0.5, 1.0, 2.0), Err(Error::Domain(_))));
    assert!(matches!(transport_identity_check(&sc(), 2.0, 2.5, 3.0), Err(Error::Domain(_))));
}

#[test]
fn scaling_identity_on_random_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let k = rng.random_range(1..5);
        let pos: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        let mu = SpectralMeasure::atoms(pos, w.iter().map(|x| x / s).collect()).unwrap();
        let theta = rng.random_range(0.1..3.0);
        let lambda = mu.edges().right + rng.random_range(0.0..2.0);
        let lhs = j_one(&mu, theta, lambda).unwrap().value;
        let rhs = j_one(&mu.dilate(theta).unwrap(), 1.0, theta * lambda).unwrap().value;
        close(lhs, rhs, 1e-10);
    }
}

#[test]
fn j_can_decrease_in_theta_when_the_mean_is_negative() {
    // For δ_c in the inverse regime J = θc, which decreases for c < 0.
    let mu = SpectralMeasure::atoms(vec![-1.5], vec![1.0]).unwrap();
    for theta in [0.5, 1.0, 2.0] {
        close(j_one(&mu, theta, -1.0).unwrap().value, -1.5 * theta, 1e-12);
    }
}
