//! Independent reference implementations used to validate the fast paths:
//! naive double-loop sine transforms, adaptive quadrature, an
//! endpoint-trapezoid rule for gradient integrals, and an adaptive RK45
//! integrator for scalar oscillator references. Deliberately slow and simple.

use std::f64::consts::PI;

use nlw_core::spectral::Grid;

/// Decode a flat row-major index into per-axis components (axis 0 slowest).
pub fn decode(mut flat: usize, dim: usize, extent: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    for ax in (0..dim).rev() {
        out[ax] = flat % extent;
        flat /= extent;
    }
    out
}

fn basis_value(grid: &Grid, mode: &[usize; 3], point: &[usize; 3]) -> f64 {
    let norm = (2.0 / PI).sqrt();
    let m = grid.n_quad();
    let mut b = 1.0;
    for ax in 0..grid.dim() {
        let x = (point[ax] + 1) as f64 * PI / (m + 1) as f64;
        b *= norm * ((mode[ax] + 1) as f64 * x).sin();
    }
    b
}

/// O(N^d * M^d) direct summation of the sine synthesis.
pub fn naive_synthesis(grid: &Grid, coeff: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let mut out = vec![0.0; grid.value_len()];
    for (jflat, o) in out.iter_mut().enumerate() {
        let j = decode(jflat, d, grid.n_quad());
        let mut acc = 0.0;
        for (kflat, &c) in coeff.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let k = decode(kflat, d, grid.n_modes());
            acc += c * basis_value(grid, &k, &j);
        }
        *o = acc;
    }
    out
}

/// Quadrature projection onto the basis with the uniform interior rule:
/// a_kappa = w * sum_j values[j] e_kappa(x_j).
pub fn naive_projection(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let d = grid.dim();
    let w = grid.quad_weight();
    let mut out = vec![0.0; grid.coeff_len()];
    for (kflat, a) in out.iter_mut().enumerate() {
        let k = decode(kflat, d, grid.n_modes());
        let mut acc = 0.0;
        for (jflat, &v) in values.iter().enumerate() {
            let j = decode(jflat, d, grid.n_quad());
            acc += v * basis_value(grid, &k, &j);
        }
        *a = w * acc;
    }
    out
}

/// int_0^pi |u'(x)|^2 dx for a 1-D spectral coefficient vector, by the
/// endpoint-inclusive trapezoid rule on `n_pts` subintervals. The integrand
/// is a cosine series, so endpoints must be kept.
pub fn grad_sq_trapezoid_1d(coeff: &[f64], n_pts: usize) -> f64 {
    let norm = (2.0 / PI).sqrt();
    let h = PI / n_pts as f64;
    let du = |x: f64| -> f64 {
        coeff
            .iter()
            .enumerate()
            .map(|(k, &a)| a * norm * (k + 1) as f64 * ((k + 1) as f64 * x).cos())
            .sum()
    };
    let mut s = 0.5 * (du(0.0).powi(2) + du(PI).powi(2));
    for j in 1..n_pts {
        s += du(j as f64 * h).powi(2);
    }
    s * h
}

/// Adaptive Simpson quadrature with a recursion-depth guard.
pub fn adaptive_quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Adaptive RKF45 for an autonomous 2-D system, reporting the state at each
/// requested output time (increasing, first >= 0). Used as the independent
/// reference for single-mode trajectories.
pub fn rk45_path(
    rhs: &dyn Fn([f64; 2]) -> [f64; 2],
    y0: [f64; 2],
    out_times: &[f64],
    tol: f64,
) -> Vec<[f64; 2]> {
    let mut t = 0.0;
    let mut y = y0;
    let mut h = 1e-3f64;
    let mut out = Vec::with_capacity(out_times.len());
    for &t_out in out_times {
        assert!(t_out >= t, "output times must be increasing");
        while t < t_out {
            let h_try = h.min(t_out - t);
            let (y_new, err) = rkf45_step(rhs, y, h_try);
            let scale = tol * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            if err <= scale {
                t += h_try;
                y = y_new;
            }
            let factor = if err > 0.0 {
                0.9 * (scale / err).powf(0.2)
            } else {
                4.0
            };
            h = (h_try * factor.clamp(0.2, 4.0)).min(1.0).max(1e-12);
        }
        out.push(y);
    }
    out
}

fn rkf45_step(rhs: &dyn Fn([f64; 2]) -> [f64; 2], y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    let add = |a: [f64; 2], terms: &[(f64, [f64; 2])]| -> [f64; 2] {
        let mut out = a;
        for &(c, k) in terms {
            out[0] += h * c * k[0];
            out[1] += h * c * k[1];
        }
        out
    };
    let k1 = rhs(y);
    let k2 = rhs(add(y, &[(0.25, k1)]));
    let k3 = rhs(add(y, &[(3.0 / 32.0, k1), (9.0 / 32.0, k2)]));
    let k4 = rhs(add(
        y,
        &[
            (1932.0 / 2197.0, k1),
            (-7200.0 / 2197.0, k2),
            (7296.0 / 2197.0, k3),
        ],
    ));
    let k5 = rhs(add(
        y,
        &[
            (439.0 / 216.0, k1),
            (-8.0, k2),
            (3680.0 / 513.0, k3),
            (-845.0 / 4104.0, k4),
        ],
    ));
    let k6 = rhs(add(
        y,
        &[
            (-8.0 / 27.0, k1),
            (2.0, k2),
            (-3544.0 / 2565.0, k3),
            (1859.0 / 4104.0, k4),
            (-11.0 / 40.0, k5),
        ],
    ));
    let y5 = add(
        y,
        &[
            (16.0 / 135.0, k1),
            (6656.0 / 12825.0, k3),
            (28561.0 / 56430.0, k4),
            (-9.0 / 50.0, k5),
            (2.0 / 55.0, k6),
        ],
    );
    let y4 = add(
        y,
        &[
            (25.0 / 216.0, k1),
            (1408.0 / 2565.0, k3),
            (2197.0 / 4104.0, k4),
            (-0.2, k5),
        ],
    );
    let err = ((y5[0] - y4[0]).powi(2) + (y5[1] - y4[1]).powi(2)).sqrt();
    (y5, err)
}

/// Right-hand side of the single-mode oscillator
/// a'' + lambda a + k |a'|^p a' + f(a) = 0 as a first-order system.
pub fn oscillator_rhs(
    lambda: f64,
    k: f64,
    p: f64,
    f: impl Fn(f64) -> f64 + 'static,
) -> Box<dyn Fn([f64; 2]) -> [f64; 2]> {
    Box::new(move |y: [f64; 2]| {
        let damp = if k == 0.0 {
            0.0
        } else {
            k * y[1].abs().powf(p) * y[1]
        };
        [y[1], -lambda * y[0] - damp - f(y[0])]
    })
}

/// Least-squares slope of ln(v) against ln(t) over samples with t in the
/// window and v > 0.
pub fn loglog_slope(times: &[f64], values: &[f64], window: (f64, f64)) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= window.0 && t <= window.1 && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    assert!(pts.len() >= 10, "need at least 10 points for a slope fit");
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
