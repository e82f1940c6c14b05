//! Independent oracles for the integration tests. Nothing here calls into
//! the library's algebra or special functions.

#![allow(dead_code)]

use cpkernel::TriKernel;

/// Dense lower-triangular matrix `M[n-1][j-1] = a_{n-j}^n`.
pub fn dense(a: &TriKernel) -> Vec<Vec<f64>> {
    let n = a.size();
    (1..=n)
        .map(|r| (1..=n).map(|j| if j <= r { a.get(r, r - j) } else { 0.0 }).collect())
        .collect()
}

pub fn from_dense(m: &[Vec<f64>]) -> TriKernel {
    TriKernel::from_fn(m.len(), |n, k| m[n - 1][n - 1 - k])
}

/// Plain triple-loop matrix product.
pub fn dense_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn max_abs(a: &TriKernel) -> f64 {
    a.rows().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &TriKernel, b: &TriKernel) -> f64 {
    assert_eq!(a.size(), b.size());
    a.rows()
        .flatten()
        .zip(b.rows().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Max-entry difference normalized by the largest entry of either kernel.
pub fn rel_diff(a: &TriKernel, b: &TriKernel) -> f64 {
    max_diff(a, b) / max_abs(a).max(max_abs(b)).max(f64::MIN_POSITIVE)
}

/// `ln Γ(x)` for `x > 0` by upward recurrence past 16 and the Stirling series.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    let mut y = x;
    while y < 16.0 {
        shift += y.ln();
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `erfc(x)` through the Maclaurin series of `erf` (fine for small `x`).
pub fn erfc_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 {
        n += 1.0;
        term *= -x * x / n;
        sum += term / (2.0 * n + 1.0);
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Tanh-sinh quadrature of `f` over `[a, b]`. `f` receives the node and its
/// distance to `b`, so integrands singular at `b` keep full accuracy.
/// Returns the estimate after the step change drops below `tol`.
pub fn tanh_sinh(f: impl Fn(f64, f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let hp = std::f64::consts::FRAC_PI_2;
    let eval = |t: f64| -> f64 {
        let y = hp * t.sinh();
        let from_a = 2.0 * half / (1.0 + (-2.0 * y).exp());
        let to_b = 2.0 * half / (1.0 + (2.0 * y).exp());
        if from_a <= 0.0 || to_b <= 0.0 {
            return 0.0;
        }
        let w = half * hp * t.cosh() / y.cosh().powi(2);
        let v = f(a + from_a, to_b) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // wide enough that the cut-off mass of d^{-0.9} near the end is below 1e-20
    let t_max = 6.0;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut t = h;
    while t <= t_max {
        sum += eval(t) + eval(-t);
        t += h;
    }
    let mut prev = h * sum;
    for _ in 0..14 {
        h *= 0.5;
        let mut t = h;
        while t <= t_max {
            sum += eval(t) + eval(-t);
            t += 2.0 * h;
        }
        let next = h * sum;
        if (next - prev).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Caputo derivative of order `alpha` at `t[n]` of the piecewise-linear
/// interpolant of `(t_j, u_j)`, by quadrature on every interval.
pub fn caputo_of_interpolant(t: &[f64], u: &[f64], alpha: f64, n: usize) -> f64 {
    let mut total = 0.0;
    for j in 1..=n {
        let slope = (u[j] - u[j - 1]) / (t[j] - t[j - 1]);
        let tn = t[n];
        let (a, b) = (t[j - 1], t[j]);
        let integral = if j == n {
            // distance to the singular end is passed directly
            tanh_sinh(|_, d| d.powf(-alpha), a, b, 1e-14)
        } else {
            tanh_sinh(|s, _| (tn - s).powf(-alpha), a, b, 1e-14)
        };
        total += slope * integral;
    }
    total / gamma(1.0 - alpha)
}
