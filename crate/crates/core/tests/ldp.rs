mod common;

use common::{grid_max, simpson, wigner_area};
use sphint_core::ldp::{
    annealed_lambda_profile, annealed_lambda_wishart, annealed_wishart_residual, assumption_neg_check,
    assumption_neg_status, bbp_outlier, legendre_check_wigner, maximize_profile_objective, outlier_interval_cost,
    perturbed_wigner_minimizer, perturbed_wigner_rate, perturbed_wishart_minimizer, perturbed_wishart_rate,
    profile_discretize, spiked_wishart_outlier, theta_for_outlier, wigner_rate, wigner_rate_joint, wishart_rate,
    wishart_rate_lower, wishart_rate_potential, NegStatus,
};
use sphint_core::{Beta, Error, PerturbationSpec, RateModel, ThetaSpec, VarianceProfile};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn mp_edges(alpha: f64) -> (f64, f64) {
    ((1.0 - alpha.sqrt()).powi(2), (1.0 + alpha.sqrt()).powi(2))
}

/// `∫_{λ₊}^x sqrt((y-λ₋)(y-λ₊))/y dy` with `y = λ₊ + u²`, which removes the
/// square-root singularity at the edge.
fn upper_integral(x: f64, alpha: f64) -> f64 {
    let (lm, lp) = mp_edges(alpha);
    simpson(
        |u| {
            let y = lp + u * u;
            (y - lm).sqrt() * u / y * 2.0 * u
        },
        0.0,
        (x - lp).sqrt(),
        4000,
    )
}

/// `∫_y^{λ₋} sqrt((λ₋-t)(λ₊-t))/t dt` with `t = λ₋ - u²`.
fn lower_integral(y: f64, alpha: f64) -> f64 {
    let (lm, lp) = mp_edges(alpha);
    simpson(
        |u| {
            let t = lm - u * u;
            (lp - t).sqrt() * u / t * 2.0 * u
        },
        0.0,
        (lm - y).sqrt(),
        4000,
    )
}

#[test]
fn wigner_rate_examples() {
    assert_eq!(wigner_rate(2.0, Beta::Real), 0.0);
    assert_eq!(wigner_rate(-2.0, Beta::Complex), 0.0);
    assert_eq!(wigner_rate(1.9, Beta::Real), f64::INFINITY);
    let expected = 0.5 * (3.0 * 5f64.sqrt() / 2.0 - 2.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln());
    close(wigner_rate(3.0, Beta::Real), expected, 1e-15);
    // Quadrature of sqrt(t² - 4) with t = 2 + u², dt = 2u du.
    let quad = simpson(|u| ((2.0 + u * u - 2.0) * (2.0 + u * u + 2.0)).sqrt() * 2.0 * u, 0.0, 1.0, 4000);
    close(wigner_rate(3.0, Beta::Real), 0.5 * quad, 1e-12);
    close(wigner_rate(2.5, Beta::Real), 0.244_352_819_440_054_7, 1e-15);
    close(wigner_rate(-2.5, Beta::Complex), 2.0 * 0.244_352_819_440_054_7, 1e-15);
}

#[test]
fn joint_wigner_rate_adds_and_respects_ordering() {
    let joint = wigner_rate_joint(&[3.0, 2.5], &[-4.0], Beta::Real);
    let sum = wigner_rate(3.0, Beta::Real) + wigner_rate(2.5, Beta::Real) + wigner_rate(-4.0, Beta::Real);
    close(joint, sum, 1e-15);
    assert_eq!(wigner_rate_joint(&[2.5, 3.0], &[], Beta::Real), f64::INFINITY);
    assert_eq!(wigner_rate_joint(&[3.0], &[-1.0], Beta::Real), f64::INFINITY);
}

#[test]
fn wishart_rate_examples() {
    let (_, lp) = mp_edges(0.25);
    assert_eq!(wishart_rate(lp, 0.25, Beta::Real).unwrap(), 0.0);
    assert_eq!(wishart_rate(4.0, 1.0, Beta::Real).unwrap(), 0.0);
    assert_eq!(wishart_rate(2.0, 0.25, Beta::Real).unwrap(), f64::INFINITY);
    let v = wishart_rate(5.0, 0.25, Beta::Complex).unwrap();
    assert!(v > 0.0);
    close(v, 2.0 / (4.0 * 1.25) * upper_integral(5.0, 0.25), 1e-10);
    close(wishart_rate_potential(5.0, 0.25, Beta::Complex).unwrap(), v, 1e-8);
    assert!(matches!(wishart_rate(3.0, 0.0, Beta::Real), Err(Error::Domain(_))));
    assert!(matches!(wishart_rate(3.0, 1.5, Beta::Real), Err(Error::Domain(_))));
}

#[test]
fn wishart_rate_frozen_values() {
    // Frozen from 30-digit quadrature; the substitution oracle agrees.
    close(0.2 * upper_integral(3.5, 0.25), 0.103_393_432_075_893_53, 1e-12);
    close(wishart_rate(3.5, 0.25, Beta::Real).unwrap(), 0.103_393_432_075_893_53, 1e-12);
    close(0.2 * lower_integral(0.1, 0.25), 0.074_506_846_824_111_21, 1e-12);
    close(wishart_rate_lower(0.1, 0.25, Beta::Real).unwrap(), 0.074_506_846_824_111_21, 1e-12);
    close(wishart_rate_lower(0.125, 0.25, Beta::Real).unwrap(), 0.050_276_041_443_002_44, 1e-12);
}

#[test]
fn both_forms_of_the_wishart_rate_agree() {
    for alpha in [0.1, 0.25, 0.6, 1.0] {
        let (lm, lp) = mp_edges(alpha);
        for x in [lp + 0.01, lp + 0.5, lp + 3.0] {
            let a = wishart_rate(x, alpha, Beta::Real).unwrap();
            let b = wishart_rate_potential(x, alpha, Beta::Real).unwrap();
            close(a, b, 1e-6);
        }
        if alpha < 1.0 {
            for y in [lm / 2.0, lm * 0.9, lm * 0.05] {
                let a = wishart_rate_lower(y, alpha, Beta::Real).unwrap();
                let b = wishart_rate_potential(y, alpha, Beta::Real).unwrap();
                close(a, b, 1e-6);
            }
        }
        assert_eq!(wishart_rate_potential(0.5 * (lm + lp), alpha, Beta::Real).unwrap(), 0.0);
    }
}

#[test]
fn legendre_duality() {
    assert_eq!(legendre_check_wigner(2.0).unwrap(), 0.0);
    let frozen = [
        (2.05, 0.014_962_897_371_580_488),
        (2.5, 0.488_705_638_880_109_4),
        (3.0, 1.429_254_666_011_270_8),
        (4.0, 4.294_287_436_425_876),
    ];
    for (x, v) in frozen {
        close(wigner_area(x), v, 1e-13);
        close(legendre_check_wigner(x).unwrap(), v, 1e-6);
        close(legendre_check_wigner(x).unwrap(), 2.0 * wigner_rate(x, Beta::Real), 1e-6);
    }
    let small = legendre_check_wigner(2.1).unwrap();
    assert!(small > 0.0);
    close(small, simpson(|u| (u * u * (4.0 + u * u)).sqrt() * 2.0 * u, 0.0, 0.1f64.sqrt(), 4000), 1e-6);
    assert!(matches!(legendre_check_wigner(1.9), Err(Error::Domain(_))));
}

#[test]
fn bbp_map_examples() {
    assert_eq!(bbp_outlier(2.0).unwrap(), 2.5);
    assert_eq!(bbp_outlier(1.0).unwrap(), 2.0);
    close(theta_for_outlier(2.5).unwrap(), 2.0, 1e-15);
    for t in [1.0, 1.3, 2.0, 7.5] {
        close(theta_for_outlier(bbp_outlier(t).unwrap()).unwrap(), t, 1e-12);
    }
    assert!(matches!(bbp_outlier(0.5), Err(Error::Domain(_))));
    assert!(matches!(theta_for_outlier(1.5), Err(Error::Domain(_))));
}

#[test]
fn perturbed_wigner_examples() {
    let (argmin, _) = perturbed_wigner_minimizer(2.0).unwrap();
    close(argmin, 2.5, 1e-4);
    let at_min = perturbed_wigner_rate(argmin, 2.0, Beta::Real).unwrap();
    assert!(at_min.abs() <= 1e-8, "{at_min}");
    // With no tilt the rate is the unperturbed one.
    close(perturbed_wigner_rate(3.0, 0.0, Beta::Real).unwrap(), wigner_rate(3.0, Beta::Real), 1e-8);
    close(perturbed_wigner_rate(3.0, 0.0, Beta::Complex).unwrap(), wigner_rate(3.0, Beta::Complex), 1e-8);
    assert_eq!(perturbed_wigner_rate(1.0, 2.0, Beta::Real).unwrap(), f64::INFINITY);
}

#[test]
fn bbp_consistency_of_the_perturbed_rate() {
    for theta in [1.2, 1.5, 2.0, 3.0] {
        let (argmin, min) = perturbed_wigner_minimizer(theta).unwrap();
        close(argmin, bbp_outlier(theta).unwrap(), 1e-4);
        assert!(perturbed_wigner_rate(argmin, theta, Beta::Real).unwrap().abs() <= 1e-8, "{min}");
        // Nonnegative on a grid.
        for i in 0..60 {
            let x = 2.0 + 0.1 * i as f64;
            assert!(perturbed_wigner_rate(x, theta, Beta::Real).unwrap() >= -1e-12);
        }
    }
    // Negative tilts mirror.
    let (argmin, _) = perturbed_wigner_minimizer(-2.0).unwrap();
    close(argmin, -2.5, 1e-4);
    close(
        perturbed_wigner_rate(-3.0, -2.0, Beta::Real).unwrap(),
        perturbed_wigner_rate(3.0, 2.0, Beta::Real).unwrap(),
        1e-10,
    );
    // Below the BBP threshold the outlier sticks to the edge.
    let (argmin, _) = perturbed_wigner_minimizer(0.5).unwrap();
    close(argmin, 2.0, 1e-4);
}

#[test]
fn perturbed_wishart_examples() {
    let alpha = 0.25;
    let (lm, _) = mp_edges(alpha);
    // No spike: the lower-tail rate, equal to its closed integral form.
    let r0 = perturbed_wishart_rate(lm / 2.0, 0.0, alpha, Beta::Real).unwrap();
    close(r0, 0.2 * lower_integral(lm / 2.0, alpha), 1e-6);
    close(r0, wishart_rate_lower(lm / 2.0, alpha, Beta::Real).unwrap(), 1e-6);
    // Continuity in the spike strength.
    for x in [3.0, 3.5] {
        let a = perturbed_wishart_rate(x, 1e-6, alpha, Beta::Real).unwrap();
        let b = perturbed_wishart_rate(x, 0.0, alpha, Beta::Real).unwrap();
        close(a, b, 1e-4);
    }
    let a = perturbed_wishart_rate(lm / 2.0, -1e-6, alpha, Beta::Real).unwrap();
    close(a, r0, 1e-4);
    // Zero at the numeric argmin, which is the spiked outlier location.
    for gamma in [1.0, 2.0, -0.8] {
        let (argmin, _) = perturbed_wishart_minimizer(gamma, alpha, Beta::Real).unwrap();
        close(argmin, spiked_wishart_outlier(gamma, alpha).unwrap(), 1e-4);
        assert!(perturbed_wishart_rate(argmin, gamma, alpha, Beta::Real).unwrap().abs() <= 1e-8);
    }
    assert!(matches!(perturbed_wishart_rate(3.0, -1.5, alpha, Beta::Real), Err(Error::Domain(_))));
}

#[test]
fn perturbation_spec_rates_add_up() {
    let spec = PerturbationSpec::Wigner { thetas: ThetaSpec::new(vec![2.0, 1.5], vec![-3.0]).unwrap() };
    let xs = [3.0, 2.6, -2.9];
    let sum = perturbed_wigner_rate(3.0, 2.0, Beta::Real).unwrap()
        + perturbed_wigner_rate(2.6, 1.5, Beta::Real).unwrap()
        + perturbed_wigner_rate(-2.9, -3.0, Beta::Real).unwrap();
    close(spec.rate(&xs, Beta::Real).unwrap(), sum, 1e-12);
    assert!(matches!(spec.rate(&xs[..2], Beta::Real), Err(Error::Shape(_))));

    let spec = PerturbationSpec::wishart(vec![2.0, 1.0], 0.25).unwrap();
    let sum = perturbed_wishart_rate(4.0, 2.0, 0.25, Beta::Real).unwrap()
        + perturbed_wishart_rate(3.0, 1.0, 0.25, Beta::Real).unwrap();
    close(spec.rate(&[4.0, 3.0], Beta::Real).unwrap(), sum, 1e-12);
    assert!(PerturbationSpec::wishart(vec![1.0, 2.0], 0.25).is_err());
    assert!(PerturbationSpec::wishart(vec![-1.0], 0.25).is_err());
}

fn annealed_objective(theta: f64, alpha: f64) -> impl Fn(f64) -> f64 {
    let ap = 1.0 / (1.0 + alpha);
    move |a: f64| theta * theta * a * (1.0 - a) + ap * (a / ap).ln() + (1.0 - ap) * ((1.0 - a) / (1.0 - ap)).ln()
}

#[test]
fn annealed_wishart_examples() {
    let (v, a) = annealed_lambda_wishart(0.0, 0.25).unwrap();
    assert_eq!(v, 0.0);
    close(a, 0.8, 1e-15);

    let (v, a) = annealed_lambda_wishart(1.0, 1.0).unwrap();
    close(a, 0.5, 1e-12);
    close(v, 0.25, 1e-14);

    let (v, a) = annealed_lambda_wishart(2.0, 0.25).unwrap();
    let (ga, gv) = grid_max(annealed_objective(2.0, 0.25), 1e-9, 1.0 - 1e-9, 1000);
    close(v, gv, 1e-10);
    close(a, ga, 1e-6);
    close(v, 0.868_532_208_783_825_2, 1e-13);
    close(a, 0.602_905_965_013_346_9, 1e-12);
    assert!(annealed_wishart_residual(4.0, 0.8, a).abs() <= 1e-10);
}

#[test]
fn annealed_wishart_is_convex_in_theta() {
    let vals: Vec<f64> = (0..=60).map(|i| annealed_lambda_wishart(0.1 * i as f64, 0.4).unwrap().0).collect();
    for w in vals.windows(3) {
        assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
    }
}

#[test]
fn assumption_neg_examples() {
    let ones = VarianceProfile::new(vec![vec![1.0; 2]; 2], vec![0.5, 0.5]).unwrap();
    assert!(assumption_neg_check(&ones));
    assert_eq!(assumption_neg_status(&ones).0, NegStatus::Boundary);

    let id = VarianceProfile::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
    assert!(!assumption_neg_check(&id));

    let r = VarianceProfile::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![0.5, 0.5]).unwrap();
    let (status, top) = assumption_neg_status(&r);
    assert!(!assumption_neg_check(&r));
    assert_eq!(status, NegStatus::Fails);
    // On (1, -1)/√2 the form is (2 + 2 - 2)/2 = 1.
    close(top, 1.0, 1e-12);

    let neg = VarianceProfile::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.3, 0.7]).unwrap();
    assert_eq!(assumption_neg_status(&neg).0, NegStatus::Negative);
}

#[test]
fn annealed_profile_examples() {
    let neg = VarianceProfile::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![0.3, 0.7]).unwrap();
    let opt = annealed_lambda_profile(0.0, &neg).unwrap();
    assert_eq!(opt.value, 0.0);
    assert_eq!(opt.psi, vec![0.3, 0.7]);

    let ones = VarianceProfile::new(vec![vec![1.0; 3]; 3], vec![0.2, 0.3, 0.5]).unwrap();
    let opt = annealed_lambda_profile(1.7, &ones).unwrap();
    close(opt.value, 1.7 * 1.7 / 2.0, 1e-10);
    for (p, a) in opt.psi.iter().zip([0.2, 0.3, 0.5]) {
        close(*p, a, 1e-8);
    }
    assert!(opt.boundary);

    // Dense grid over the 1-simplex.
    for theta in [0.5, 1.5, 3.0] {
        let obj = |s: f64| {
            let q = s * s + 4.0 * s * (1.0 - s) + (1.0 - s) * (1.0 - s);
            theta * theta / 2.0 * q + 0.3 * (s / 0.3).ln() + 0.7 * ((1.0 - s) / 0.7).ln()
        };
        let (gs, gv) = grid_max(obj, 1e-12, 1.0 - 1e-12, 20000);
        let opt = annealed_lambda_profile(theta, &neg).unwrap();
        close(opt.value, gv, 1e-4);
        close(opt.psi[0], gs, 1e-4);
        assert!(opt.kkt_residual <= 1e-8);
        assert!(!opt.boundary);
    }
}

#[test]
fn identity_profile_fails_the_assumption_but_can_be_maximized() {
    let id = VarianceProfile::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).unwrap();
    assert!(matches!(annealed_lambda_profile(1.0, &id), Err(Error::Assumption(_))));
    let opt = maximize_profile_objective(1.0, &id).unwrap();
    let obj = |s: f64| 0.5 * (s * s + (1.0 - s) * (1.0 - s)) + 0.5 * (2.0 * s).ln() + 0.5 * (2.0 * (1.0 - s)).ln();
    let (gs, gv) = grid_max(obj, 1e-12, 1.0 - 1e-12, 20000);
    close(opt.value, gv, 1e-4);
    close(opt.psi[0], gs, 1e-4);
    close(opt.value, 0.25, 1e-10);
    close(opt.psi[0], 0.5, 1e-8);
}

#[test]
fn profile_discretize_examples() {
    let p = profile_discretize(|_, _| 1.5, 3).unwrap();
    for row in p.r() {
        for v in row {
            close(*v, 2.25, 1e-12);
        }
    }
    for a in p.alpha() {
        close(*a, 1.0 / 3.0, 1e-15);
    }
    let p = profile_discretize(|x, y| (x + y).sqrt(), 2).unwrap();
    let expected = [[0.5, 1.0], [1.0, 1.5]];
    for i in 0..2 {
        for j in 0..2 {
            close(p.r()[i][j], expected[i][j], 1e-12);
        }
    }
    let p = profile_discretize(|x, y| (x + y).sqrt(), 1).unwrap();
    close(p.r()[0][0], 1.0, 1e-12);
    assert!(profile_discretize(|x, y| x + y, 0).is_err());
}

#[test]
fn variance_profile_validation() {
    assert!(VarianceProfile::new(vec![vec![1.0, 0.5], vec![0.4, 1.0]], vec![0.5, 0.5]).is_err());
    assert!(VarianceProfile::new(vec![vec![1.0]], vec![0.9]).is_err());
    assert!(VarianceProfile::new(vec![vec![1.0, 0.5]], vec![1.0]).is_err());
    assert!(VarianceProfile::new(vec![vec![-1.0]], vec![1.0]).is_err());
}

#[test]
fn interval_cost_examples() {
    let rate = |x: f64| wigner_rate(x, Beta::Real);
    assert_eq!(outlier_interval_cost(&[(2.5, 3.0)], &[0], 2.0, rate).unwrap(), 0.0);
    close(outlier_interval_cost(&[(2.5, 3.0)], &[2], 2.0, rate).unwrap(), 2.0 * wigner_rate(2.5, Beta::Real), 1e-12);
    let both = outlier_interval_cost(&[(2.5, 3.0), (3.5, 4.0)], &[1, 3], 2.0, rate).unwrap();
    close(both, wigner_rate(2.5, Beta::Real) + 3.0 * wigner_rate(3.5, Beta::Real), 1e-12);
    assert!(matches!(outlier_interval_cost(&[(2.5, 3.0), (2.9, 4.0)], &[1, 1], 2.0, rate), Err(Error::Domain(_))));
    assert!(matches!(outlier_interval_cost(&[(1.5, 3.0)], &[1], 2.0, rate), Err(Error::Domain(_))));
    assert!(matches!(outlier_interval_cost(&[(2.5, 3.0)], &[1, 1], 2.0, rate), Err(Error::Shape(_))));
    // A rate with an interior minimum is handled by the search.
    let (argmin, _) = perturbed_wigner_minimizer(2.0).unwrap();
    let r = |x: f64| perturbed_wigner_rate(x, 2.0, Beta::Real).unwrap();
    let c = outlier_interval_cost(&[(2.2, 3.0)], &[1], 2.0, r).unwrap();
    close(c, r(argmin), 1e-8);
}

#[test]
fn rate_model_dispatch() {
    let m: RateModel = serde_json::from_str(r#"{"kind": "wishart", "alpha": 0.25}"#).unwrap();
    close(m.rate(3.5, Beta::Real).unwrap(), 0.103_393_432_075_893_53, 1e-12);
    close(m.rate(0.1, Beta::Real).unwrap(), 0.074_506_846_824_111_21, 1e-12);
    assert_eq!(m.rate(1.0, Beta::Real).unwrap(), 0.0);
    close(m.upper_edge().unwrap(), 2.25, 1e-15);
    let m = RateModel::Wigner;
    assert_eq!(m.rate(2.5, Beta::Real).unwrap(), wigner_rate(2.5, Beta::Real));
}
