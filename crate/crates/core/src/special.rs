//! Gamma and Mittag-Leffler functions.
//!
//! `E_α(-λ t^α)` is the exact solution of `D^α u = -λ u`, `u(0) = 1`, which
//! makes it the reference for the linear relaxation problem. Only real
//! `z <= 0` and `0 < α <= 1` are supported.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("argument {0} outside the supported domain")]
    DomainError(f64),
    #[error("invalid Mittag-Leffler query: {0}")]
    InvalidQuery(String),
    #[error("no evaluation route reached accuracy {requested:e}; best error bound {best:e}")]
    AccuracyNotReached { requested: f64, best: f64 },
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (original minus one)
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    s
}

/// Γ(x) for any real `x` that is not a pole; reflection below 1/2.
pub(crate) fn gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_real(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
    }
}

/// ln Γ(x) for `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln()
}

/// Γ(x) on `(0, 3)`, the range the L1 coefficients need.
pub fn gamma(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0 && x < 3.0) {
        return Err(SpecialError::DomainError(x));
    }
    Ok(gamma_real(x))
}

/// `1/Γ(x)` as `(sign, ln|1/Γ(x)|)`, or `None` at the poles.
fn recip_gamma_log(x: f64) -> Option<(f64, f64)> {
    if x > 0.0 {
        return Some((1.0, -ln_gamma(x)));
    }
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * nearest.abs().max(1.0) {
        return None;
    }
    // 1/Γ(x) = Γ(1-x) sin(πx) / π
    let s = (PI * x).sin();
    Some((s.signum(), ln_gamma(1.0 - x) + s.abs().ln() - PI.ln()))
}

pub const DEFAULT_ML_ACCURACY: f64 = 1e-10;
const MIN_ML_ACCURACY: f64 = 1e-13;
const SERIES_SWITCH: f64 = 5.0;

/// Evaluation request for `E_α(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlQuery {
    pub alpha: f64,
    pub z: f64,
    pub accuracy: f64,
}

impl MlQuery {
    pub fn new(alpha: f64, z: f64) -> Result<Self, SpecialError> {
        MlQuery::with_accuracy(alpha, z, DEFAULT_ML_ACCURACY)
    }

    pub fn with_accuracy(alpha: f64, z: f64, accuracy: f64) -> Result<Self, SpecialError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SpecialError::InvalidQuery(format!("alpha {alpha} not in (0, 1]")));
        }
        if !(z <= 0.0) || !z.is_finite() {
            return Err(SpecialError::InvalidQuery(format!("z {z} must be finite and <= 0")));
        }
        if !(accuracy >= MIN_ML_ACCURACY) || !accuracy.is_finite() {
            return Err(SpecialError::InvalidQuery(format!(
                "accuracy {accuracy:e} must be at least {MIN_ML_ACCURACY:e}"
            )));
        }
        Ok(MlQuery { alpha, z, accuracy })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MlBranch {
    Exponential,
    Series,
    Asymptotic,
    Integral,
}

/// A value with an absolute error bound and the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub branch: MlBranch,
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Power series `sum_k z^k / Γ(αk + 1)`. The bound covers truncation and the
/// cancellation among terms, which grows like `E_α(|z|)`.
pub fn ml_series(alpha: f64, z: f64) -> MlEstimate {
    const MAX_TERMS: usize = 20_000;
    let eps = f64::EPSILON;
    let ln_abs_z = z.abs().ln();
    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut last = f64::INFINITY;
    for k in 0..MAX_TERMS {
        let arg = alpha * k as f64 + 1.0;
        let term = if k == 0 {
            1.0
        } else if z == 0.0 {
            0.0
        } else if arg < 170.0 {
            z.powi(k as i32) / gamma_real(arg)
        } else {
            let sign = if k % 2 == 1 && z < 0.0 { -1.0 } else { 1.0 };
            sign * (k as f64 * ln_abs_z - ln_gamma(arg)).exp()
        };
        acc.add(term);
        abs_sum += term.abs();
        last = term.abs();
        let decreasing = last <= prev;
        prev = last;
        if k > 0 && decreasing && (last <= 1e-3 * eps * acc.value().abs() || last < 1e-300) {
            break;
        }
    }
    MlEstimate {
        value: acc.value(),
        error_bound: 16.0 * eps * abs_sum + 2.0 * last,
        branch: MlBranch::Series,
    }
}

/// Optimally truncated expansion `-sum_{k>=1} z^{-k} / Γ(1 - αk)` for
/// `z < 0`, `0 < α < 1`. The bound is the first omitted nonzero term.
pub fn ml_asymptotic(alpha: f64, z: f64) -> Option<MlEstimate> {
    const MAX_TERMS: usize = 4_000;
    if !(z < 0.0 && alpha < 1.0) {
        return None;
    }
    let ln_abs_z = z.abs().ln();
    let mut terms: Vec<f64> = Vec::new();
    let mut best = (f64::INFINITY, 0usize);
    for k in 1..=MAX_TERMS {
        let Some((sign, ln_recip)) = recip_gamma_log(1.0 - alpha * k as f64) else {
            terms.push(0.0);
            continue;
        };
        // -z^{-k}: z^{-k} has sign (-1)^k for z < 0
        let zsign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let ln_mag = ln_recip - k as f64 * ln_abs_z;
        let mag = ln_mag.exp();
        terms.push(-zsign * sign * mag);
        if mag < best.0 {
            best = (mag, k);
        } else if ln_mag > best.0.ln() + 10.0 && k > best.1 + 8 {
            break;
        }
    }
    let (bound, k_star) = best;
    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    for t in &terms[..k_star - 1] {
        acc.add(*t);
        abs_sum += t.abs();
    }
    Some(MlEstimate {
        value: acc.value(),
        error_bound: bound + 16.0 * f64::EPSILON * abs_sum,
        branch: MlBranch::Asymptotic,
    })
}

/// Integral representation for `0 < α < 1`, `x = -z >= 0`:
///
/// ```text
/// E_α(-x) = sin(απ)/(απ) ∫_0^∞ exp(-(x u)^{1/α}) / (u² + 2u cos(απ) + 1) du
///         = 1/(απ) ∫_0^{απ} exp(-(x sin φ / sin(απ - φ))^{1/α}) dφ
/// ```
///
/// The second form (from `u = sin φ / sin(απ - φ)`) has a bounded, monotone
/// integrand even when `α` is close to one. Tanh-sinh quadrature; the bound
/// is the change between the last two step halvings.
pub fn ml_integral(alpha: f64, z: f64) -> MlEstimate {
    let x = -z;
    if x == 0.0 || alpha >= 1.0 {
        return MlEstimate {
            value: if alpha >= 1.0 { z.exp() } else { 1.0 },
            error_bound: f64::EPSILON,
            branch: MlBranch::Integral,
        };
    }
    let width = alpha * PI;
    let p = 1.0 / alpha;
    // φ and απ - φ are both passed so neither end loses digits
    let f = |phi: f64, rest: f64| (-(x * phi.sin() / rest.sin()).powf(p)).exp();
    let (integral, err) = tanh_sinh(f, width, 1e-15, 12);
    MlEstimate {
        value: integral / width,
        error_bound: err / width + 8.0 * f64::EPSILON,
        branch: MlBranch::Integral,
    }
}

/// Tanh-sinh rule on `[0, w]`. `f` receives the node and its distance to
/// the right end.
fn tanh_sinh(f: impl Fn(f64, f64) -> f64, w: f64, tol: f64, max_level: u32) -> (f64, f64) {
    const T_MAX: f64 = 3.5;
    let half_pi = 0.5 * PI;
    let node = |t: f64| -> f64 {
        let y = half_pi * t.sinh();
        let left = w / (1.0 + (-2.0 * y).exp());
        let right = w / (1.0 + (2.0 * y).exp());
        if left <= 0.0 || right <= 0.0 {
            return 0.0;
        }
        // dφ/dt = w (π/2) cosh t / (2 cosh² y)
        let weight = w * half_pi * t.cosh() / (2.0 * y.cosh().powi(2));
        let v = f(left, right) * weight;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut t = h;
    while t <= T_MAX {
        sum += node(t) + node(-t);
        t += h;
    }
    let mut estimate = h * sum;
    let mut err = f64::INFINITY;
    for _ in 1..=max_level {
        h *= 0.5;
        let mut t = h;
        while t <= T_MAX {
            sum += node(t) + node(-t);
            t += 2.0 * h;
        }
        let next = h * sum;
        err = (next - estimate).abs();
        estimate = next;
        if err <= tol * estimate.abs() {
            break;
        }
    }
    (estimate, err)
}

/// Best certified evaluation of `E_α(z)`: the series for `|z| <= 5`, the
/// asymptotic expansion beyond, then the other of the two, then the integral
/// representation. The first whose bound meets the accuracy wins.
pub fn mittag_leffler_estimate(q: &MlQuery) -> Result<MlEstimate, SpecialError> {
    let MlQuery { alpha, z, accuracy } = *q;
    if alpha == 1.0 {
        return Ok(MlEstimate {
            value: z.exp(),
            error_bound: f64::EPSILON * z.exp(),
            branch: MlBranch::Exponential,
        });
    }
    if z == 0.0 {
        return Ok(MlEstimate {
            value: 1.0,
            error_bound: 0.0,
            branch: MlBranch::Series,
        });
    }
    let series = || Some(ml_series(alpha, z));
    let asymptotic = || ml_asymptotic(alpha, z);
    let integral = || Some(ml_integral(alpha, z));
    let routes: [&dyn Fn() -> Option<MlEstimate>; 3] = if z.abs() <= SERIES_SWITCH {
        [&series, &asymptotic, &integral]
    } else {
        [&asymptotic, &series, &integral]
    };
    certify(accuracy, &routes)
}

/// First route whose bound meets `accuracy`, clamped to `[0, 1]`.
fn certify(
    accuracy: f64,
    routes: &[&dyn Fn() -> Option<MlEstimate>],
) -> Result<MlEstimate, SpecialError> {
    let mut best = f64::INFINITY;
    for route in routes {
        if let Some(est) = route() {
            if est.error_bound <= accuracy && est.value.is_finite() {
                return Ok(MlEstimate {
                    value: est.value.clamp(0.0, 1.0),
                    ..est
                });
            }
            best = best.min(est.error_bound);
        }
    }
    Err(SpecialError::AccuracyNotReached {
        requested: accuracy,
        best,
    })
}

pub fn mittag_leffler(q: &MlQuery) -> Result<f64, SpecialError> {
    mittag_leffler_estimate(q).map(|e| e.value)
}
