//! Small derivative-free optimizers and root finders.

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search.
/// Returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// Root of a function that changes sign on `[lo, hi]`, by bisection down to
/// adjacent floating-point numbers. `f(lo)` and `f(hi)` must have opposite signs.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo_positive = f(lo) > 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if (f(mid) > 0.0) == flo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Result of a Nelder–Mead run.
#[derive(Debug, Clone)]
pub struct Simplex {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Minimizes `f` from `x0` with the adaptive Nelder–Mead method.
///
/// Restarts a fresh simplex around the incumbent until a restart no longer
/// improves the value by more than `ftol`, which guards against the
/// premature collapse plain Nelder–Mead is prone to.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_evals: usize,
) -> Simplex {
    let mut best = Simplex { x: x0.to_vec(), value: f(x0), evals: 1 };
    loop {
        let before = best.value;
        let run = nm_once(&mut f, &best.x, step, ftol, max_evals.saturating_sub(best.evals));
        let evals = best.evals + run.evals;
        if run.value < best.value {
            best = run;
        }
        best.evals = evals;
        if before - best.value <= ftol || best.evals >= max_evals {
            return best;
        }
    }
}

fn nm_once<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], step: f64, ftol: f64, budget: usize) -> Simplex {
    let n = x0.len();
    let nf = n as f64;
    // Dimension-adaptive coefficients (Gao and Han).
    let (alpha, gamma, rho, sigma) = if n < 2 {
        (1.0, 2.0, 0.5, 0.5)
    } else {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let eval = |f: &mut F, p: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(p);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    while evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * 1e-2 {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
        let xr = along(-alpha);
        let fr = eval(f, &xr, &mut evals);
        if fr < vals[0] {
            let xe = along(-alpha * gamma);
            let fe = eval(f, &xe, &mut evals);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-alpha * rho);
                let fc = eval(f, &xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(f, &xc, &mut evals);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = (0..n).map(|j| pts[0][j] + sigma * (pts[i][j] - pts[0][j])).collect();
                    vals[i] = eval(f, &p, &mut evals);
                    pts[i] = p;
                }
            }
        }
    }
    let i = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Simplex { x: pts[i].clone(), value: vals[i], evals }
}
