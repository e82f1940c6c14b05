//! Implicit L1 time stepping for `D^α u ∈ -𝒜(u)`.
//!
//! Each step of the L1 scheme reads
//!
//! ```text
//! b_0^n u_n + 𝒜(u_n) = -sum_{j<n} b_{n-j}^n u_j + (sum_{j<=n} b_{n-j}^n) u_0
//! ```
//!
//! and since the history weights on the right are nonnegative and sum to
//! `b_0^n`, `u_n = J_μ(f_n)` with `μ = 1/b_0^n` and `f_n` a convex
//! combination of `u_0..u_{n-1}`. Any resolvent `J_μ = (I + μ𝒜)^{-1}` that
//! preserves the nonnegative cone therefore keeps the whole trajectory
//! nonnegative.
//!
//! The Yosida stepper instead solves the regularized relation with
//! `𝒜_λ = λ^{-1}(I - J_λ)` by the fixed-point iteration
//! `w <- f + (R_{1/λ})_0^n J_λ(w)`, a contraction with factor `(R_{1/λ})_0^n < 1`.

use serde::Serialize;
use thiserror::Error;

use crate::kernel::KernelError;
use crate::l1::L1Operator;
use crate::resolvent::resolvent;

/// Iteration budget for the scalar root finder and Newton.
pub const MAX_NEWTON_ITERATIONS: usize = 500;
/// Required ∞-norm residual of the diffusion resolvent equation.
pub const DIFFUSION_RESIDUAL_TOL: f64 = 1e-11;
/// Default bound on the per-step residual of the discrete relation.
pub const DEFAULT_STEP_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("initial state has dimension {found}, problem needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step {step}: residual {residual:e} exceeds {tol:e}")]
    ResidualExceeded { step: usize, residual: f64, tol: f64 },
    #[error("step {step}: contraction factor {factor} not in (0, 1)")]
    ContractionViolated { step: usize, factor: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Monotone nondecreasing `β` with `β(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    /// `β(u) = k u`, `k >= 0`
    Linear(f64),
    /// `β(u) = u³`
    Cubic,
}

impl Nonlinearity {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(k) => k * u,
            Nonlinearity::Cubic => u * u * u,
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear(k) => k,
            Nonlinearity::Cubic => 3.0 * u * u,
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        match *self {
            Nonlinearity::Linear(k) if !(k >= 0.0 && k.is_finite()) => Err(
                SolveError::InvalidProblem(format!("linear β slope {k} must be >= 0")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `𝒜(u) = rate · u`
    LinearScalar { rate: f64 },
    /// `𝒜(u) = β(u)`
    ScalarMonotone { beta: Nonlinearity },
    /// `𝒜(u) = -Δ_h u + β(u)` on `m` interior points of `(0, length)`,
    /// homogeneous Dirichlet boundary.
    DiffusionReaction1D {
        points: usize,
        length: f64,
        beta: Nonlinearity,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FodeProblem {
    pub kind: ProblemKind,
    pub initial: Vec<f64>,
}

impl FodeProblem {
    pub fn new(kind: ProblemKind, initial: Vec<f64>) -> Result<Self, SolveError> {
        let expected = match &kind {
            ProblemKind::LinearScalar { rate } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(SolveError::InvalidProblem(format!("rate {rate} must be >= 0")));
                }
                1
            }
            ProblemKind::ScalarMonotone { beta } => {
                beta.validate()?;
                1
            }
            ProblemKind::DiffusionReaction1D {
                points,
                length,
                beta,
            } => {
                beta.validate()?;
                if *points == 0 || !(*length > 0.0 && length.is_finite()) {
                    return Err(SolveError::InvalidProblem(format!(
                        "diffusion grid needs m >= 1 and length > 0, got m={points}, length={length}"
                    )));
                }
                *points
            }
        };
        if initial.len() != expected {
            return Err(SolveError::DimensionMismatch {
                expected,
                found: initial.len(),
            });
        }
        if initial.iter().any(|x| !x.is_finite()) {
            return Err(SolveError::InvalidProblem("initial state is not finite".into()));
        }
        Ok(FodeProblem { kind, initial })
    }

    /// Interior grid points `x_i = i ℓ / (m + 1)` for the diffusion problem.
    pub fn grid(points: usize, length: f64) -> Vec<f64> {
        let h = length / (points as f64 + 1.0);
        (1..=points).map(|i| i as f64 * h).collect()
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    /// `𝒜(w)`.
    pub fn operator(&self, w: &[f64]) -> Vec<f64> {
        match &self.kind {
            ProblemKind::LinearScalar { rate } => vec![rate * w[0]],
            ProblemKind::ScalarMonotone { beta } => vec![beta.value(w[0])],
            ProblemKind::DiffusionReaction1D {
                points,
                length,
                beta,
            } => {
                let inv_h2 = inv_h2(*points, *length);
                (0..*points)
                    .map(|i| {
                        let left = if i > 0 { w[i - 1] } else { 0.0 };
                        let right = if i + 1 < *points { w[i + 1] } else { 0.0 };
                        (2.0 * w[i] - left - right) * inv_h2 + beta.value(w[i])
                    })
                    .collect()
            }
        }
    }

    /// `J_μ(f)`: the `w` with `w + μ𝒜(w) = f`.
    pub fn resolvent_apply(&self, mu: f64, f: &[f64]) -> Result<Resolved, SolveError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(SolveError::InvalidProblem(format!("resolvent parameter {mu} must be > 0")));
        }
        if f.len() != self.dim() {
            return Err(SolveError::DimensionMismatch {
                expected: self.dim(),
                found: f.len(),
            });
        }
        match &self.kind {
            ProblemKind::LinearScalar { rate } => Ok(Resolved {
                state: vec![f[0] / (1.0 + mu * rate)],
                iterations: 0,
            }),
            ProblemKind::ScalarMonotone { beta } => {
                let (w, iterations) = scalar_resolvent(beta, mu, f[0])?;
                Ok(Resolved {
                    state: vec![w],
                    iterations,
                })
            }
            ProblemKind::DiffusionReaction1D {
                points,
                length,
                beta,
            } => diffusion_resolvent(*points, *length, beta, mu, f),
        }
    }
}

/// Convenience wrapper returning only the state.
pub fn resolvent_apply(problem: &FodeProblem, mu: f64, f: &[f64]) -> Result<Vec<f64>, SolveError> {
    problem.resolvent_apply(mu, f).map(|r| r.state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub state: Vec<f64>,
    pub iterations: usize,
}

fn inv_h2(points: usize, length: f64) -> f64 {
    let h = length / (points as f64 + 1.0);
    1.0 / (h * h)
}

/// Root of the increasing function `g(w) = w + μβ(w) - f`, bracketed by
/// `[min(0, f), max(0, f)]`; Newton steps with bisection fallback.
fn scalar_resolvent(beta: &Nonlinearity, mu: f64, f: f64) -> Result<(f64, usize), SolveError> {
    let g = |w: f64| w + mu * beta.value(w) - f;
    let tol = 1e-13 * (1.0 + f.abs());
    let (mut lo, mut hi) = if f >= 0.0 { (0.0, f) } else { (f, 0.0) };
    let mut w = f / (1.0 + mu * beta.derivative(0.0));
    for it in 0..=MAX_NEWTON_ITERATIONS {
        let r = g(w);
        if r.abs() <= tol {
            return Ok((w, it));
        }
        if r > 0.0 {
            hi = w;
        } else {
            lo = w;
        }
        let step = w - r / (1.0 + mu * beta.derivative(w));
        w = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            let r = g(w);
            if r.abs() <= tol {
                return Ok((w, it + 1));
            }
            break;
        }
    }
    Err(SolveError::NoConvergence(MAX_NEWTON_ITERATIONS))
}

/// Solves `(I + μ(-Δ_h)) w + μβ(w) = f` by damped Newton with tridiagonal
/// solves.
fn diffusion_resolvent(
    points: usize,
    length: f64,
    beta: &Nonlinearity,
    mu: f64,
    f: &[f64],
) -> Result<Resolved, SolveError> {
    let m = points;
    let k = mu * inv_h2(points, length);
    let residual = |w: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                let right = if i + 1 < m { w[i + 1] } else { 0.0 };
                w[i] + k * (2.0 * w[i] - left - right) + mu * beta.value(w[i]) - f[i]
            })
            .collect()
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let mut w = f.to_vec();
    let mut r = residual(&w);
    let mut r_norm = norm(&r);
    let floor = 4.0 * f64::EPSILON * (1.0 + norm(f));
    let mut diag = vec![0.0; m];
    let off = -k;
    for it in 0..MAX_NEWTON_ITERATIONS {
        if r_norm <= floor {
            return Ok(Resolved { state: w, iterations: it });
        }
        for (i, d) in diag.iter_mut().enumerate() {
            *d = 1.0 + 2.0 * k + mu * beta.derivative(w[i]);
        }
        let delta = solve_symmetric_tridiagonal(&diag, off, &r);
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(x, d)| x - damping * d).collect();
            let tr = residual(&trial);
            let tn = norm(&tr);
            if tn < r_norm || damping < 1e-4 {
                let step = damping * norm(&delta);
                let stalled = tn >= r_norm;
                w = trial;
                r = tr;
                r_norm = tn;
                if stalled || step <= 4.0 * f64::EPSILON * (1.0 + norm(&w)) {
                    if r_norm <= DIFFUSION_RESIDUAL_TOL {
                        return Ok(Resolved {
                            state: w,
                            iterations: it + 1,
                        });
                    }
                    if stalled {
                        return Err(SolveError::NoConvergence(it + 1));
                    }
                }
                break;
            }
            damping *= 0.5;
        }
    }
    if r_norm <= DIFFUSION_RESIDUAL_TOL {
        return Ok(Resolved {
            state: w,
            iterations: MAX_NEWTON_ITERATIONS,
        });
    }
    Err(SolveError::NoConvergence(MAX_NEWTON_ITERATIONS))
}

/// Thomas algorithm for a tridiagonal matrix with constant off-diagonal.
fn solve_symmetric_tridiagonal(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    /// One resolvent solve per step through the `B` form.
    Direct,
    /// Fixed-point iteration on the Yosida-regularized relation.
    Yosida { lambda: f64 },
}

/// Default Yosida parameter `1e-3 · min_n τ_n^α`.
pub fn default_yosida_lambda(op: &L1Operator) -> f64 {
    1e-3 * op.mesh.min_step().powf(op.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub stepper: Stepper,
    /// Per-step residual bound; exceeding it is an error.
    pub residual_tol: f64,
    /// Relative stopping tolerance of the Yosida fixed-point iteration.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            stepper: Stepper::Direct,
            residual_tol: DEFAULT_STEP_RESIDUAL_TOL,
            fixed_point_tol: 1e-13,
            max_fixed_point_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `u_0..u_N`
    pub states: Vec<Vec<f64>>,
    /// Solver iterations per step `1..=N`.
    pub iterations: Vec<usize>,
    /// ∞-norm residual per step `1..=N`.
    pub residuals: Vec<f64>,
    /// `(R_{1/λ})_0^n` per step; empty for the direct stepper.
    pub contraction_factors: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    pub fn min_entry(&self) -> f64 {
        self.states
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m: f64, &x| m.max(x))
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

pub fn solve_fode(
    op: &L1Operator,
    problem: &FodeProblem,
    options: &SolveOptions,
) -> Result<Trajectory, SolveError> {
    match options.stepper {
        Stepper::Direct => solve_direct(op, problem, options),
        Stepper::Yosida { lambda } => solve_yosida(op, problem, options, lambda),
    }
}

fn solve_direct(
    op: &L1Operator,
    problem: &FodeProblem,
    options: &SolveOptions,
) -> Result<Trajectory, SolveError> {
    let n_steps = op.num_steps();
    let dim = problem.dim();
    let u0 = &problem.initial;
    let mut states = vec![u0.clone()];
    let mut iterations = Vec::with_capacity(n_steps);
    let mut residuals = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let row = op.b.row(n);
        let b0 = row[n - 1];
        let row_sum: f64 = row.iter().sum();
        let mut f: Vec<f64> = u0.iter().map(|x| row_sum * x).collect();
        for (j, u) in states.iter().enumerate().skip(1) {
            let w = -row[j - 1];
            for (fi, ui) in f.iter_mut().zip(u) {
                *fi += w * ui;
            }
        }
        for fi in f.iter_mut() {
            *fi /= b0;
        }
        let solved = problem.resolvent_apply(1.0 / b0, &f)?;
        states.push(solved.state);

        // Σ_j b_{n-j}^n (u_j - u_0) + 𝒜(u_n)
        let mut res = problem.operator(&states[n]);
        for (j, u) in states.iter().enumerate().skip(1) {
            let bj = row[j - 1];
            for i in 0..dim {
                res[i] += bj * (u[i] - u0[i]);
            }
        }
        let residual = inf_norm(&res);
        if !(residual <= options.residual_tol) {
            return Err(SolveError::ResidualExceeded {
                step: n,
                residual,
                tol: options.residual_tol,
            });
        }
        iterations.push(solved.iterations);
        residuals.push(residual);
    }
    Ok(Trajectory {
        times: op.mesh.points().to_vec(),
        states,
        iterations,
        residuals,
        contraction_factors: Vec::new(),
    })
}

fn solve_yosida(
    op: &L1Operator,
    problem: &FodeProblem,
    options: &SolveOptions,
    lambda: f64,
) -> Result<Trajectory, SolveError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SolveError::InvalidProblem(format!("Yosida parameter {lambda} must be > 0")));
    }
    let n_steps = op.num_steps();
    let u0 = &problem.initial;
    let r = resolvent(&op.a, 1.0 / lambda)?.kernel;
    let mut states = vec![u0.clone()];
    // J_λ(u_j) for j >= 1
    let mut resolved: Vec<Vec<f64>> = vec![Vec::new()];
    let mut iterations = Vec::with_capacity(n_steps);
    let mut residuals = Vec::with_capacity(n_steps);
    let mut factors = Vec::with_capacity(n_steps);
    for n in 1..=n_steps {
        let row = r.row(n);
        let rho = row[n - 1];
        if !(rho > 0.0 && rho < 1.0) {
            return Err(SolveError::ContractionViolated { step: n, factor: rho });
        }
        let row_sum: f64 = row.iter().sum();
        let mut f: Vec<f64> = u0.iter().map(|x| (1.0 - row_sum) * x).collect();
        for j in 1..n {
            let w = row[j - 1];
            for (fi, ji) in f.iter_mut().zip(&resolved[j]) {
                *fi += w * ji;
            }
        }

        let mut w = states[n - 1].clone();
        let mut jw = problem.resolvent_apply(lambda, &w)?.state;
        let mut count = 0;
        let gain = rho / (1.0 - rho);
        loop {
            let next: Vec<f64> = f.iter().zip(&jw).map(|(fi, ji)| fi + rho * ji).collect();
            let change = next
                .iter()
                .zip(&w)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            w = next;
            jw = problem.resolvent_apply(lambda, &w)?.state;
            count += 1;
            let scale = 1.0 + inf_norm(&w);
            // the second test stops at round-off level when the a-posteriori
            // bound cannot get below the tolerance
            if gain * change <= options.fixed_point_tol * scale || change <= 2.0 * f64::EPSILON * scale {
                break;
            }
            if count >= options.max_fixed_point_iterations {
                return Err(SolveError::NoConvergence(count));
            }
        }
        let residual = w
            .iter()
            .zip(&f)
            .zip(&jw)
            .fold(0.0f64, |m, ((wi, fi), ji)| m.max((wi - fi - rho * ji).abs()));
        if !(residual <= options.residual_tol) {
            return Err(SolveError::ResidualExceeded {
                step: n,
                residual,
                tol: options.residual_tol,
            });
        }
        states.push(w);
        resolved.push(jw);
        iterations.push(count);
        residuals.push(residual);
        factors.push(rho);
    }
    Ok(Trajectory {
        times: op.mesh.points().to_vec(),
        states,
        iterations,
        residuals,
        contraction_factors: factors,
    })
}
