//! Complete-positivity verdicts.
//!
//! A kernel is completely positive when every resolvent `R_λ`, `λ > 0`, is
//! nonnegative with diagonal in `(0, 1)` and row sums at most one. That is
//! not finitely checkable directly, but it is equivalent to a sign pattern of
//! the inverse kernel `B = A^{(-1)}`:
//!
//! ```text
//! b_0^n > 0,   b_{n-j}^n <= 0 (j < n),   sum_{j=1}^n b_{n-j}^n >= 0.
//! ```
//!
//! [`check_cp_nonuniform`] certifies through the inverse. [`brute_cp_scan`]
//! evaluates the resolvent conditions on a finite `λ` grid and can only
//! falsify. [`check_cp_uniform`] is the sequence version for uniform meshes.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{KernelError, TriKernel, SINGULAR_THRESHOLD};
use crate::resolvent::resolvent;

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("leading entry a_0 is zero or below 1e-300 in magnitude")]
    SingularLeadingEntry,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sequence is empty")]
    Empty,
    #[error("sequence entry {0} is not finite")]
    NonFinite(usize),
    #[error("cannot parse sequence: {0:?}")]
    Parse(String),
}

/// Sequence kernel `(a_0, ..., a_N)` on a uniform mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqKernel(Vec<f64>);

impl SeqKernel {
    pub fn new(entries: Vec<f64>) -> Result<Self, SeqError> {
        if entries.is_empty() {
            return Err(SeqError::Empty);
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(SeqError::NonFinite(i));
        }
        Ok(SeqKernel(entries))
    }

    /// `δ_d = (1, 0, 0, ...)`.
    pub fn delta(len: usize) -> Self {
        let mut v = vec![0.0; len.max(1)];
        v[0] = 1.0;
        SeqKernel(v)
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lag-only kernel with one row per sequence entry.
    pub fn to_kernel(&self) -> TriKernel {
        TriKernel::toeplitz(&self.0, self.0.len())
    }

    /// Comma separated values on one line.
    pub fn parse(text: &str) -> Result<Self, SeqError> {
        let values = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| SeqError::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        SeqKernel::new(values)
    }
}

/// `(a * b)_n = sum_{i=0}^n a_{n-i} b_i`.
pub fn conv_seq(a: &SeqKernel, b: &SeqKernel) -> Result<SeqKernel, SeqError> {
    if a.len() != b.len() {
        return Err(SeqError::LengthMismatch(a.len(), b.len()));
    }
    let (a, b) = (&a.0, &b.0);
    Ok(SeqKernel(
        (0..a.len())
            .map(|n| {
                let mut acc = 0.0;
                for i in 0..=n {
                    acc += a[n - i] * b[i];
                }
                acc
            })
            .collect(),
    ))
}

/// Convolutional inverse, `b_m = -(1/a_0) sum_{i=0}^{m-1} a_{m-i} b_i`.
pub fn inverse_seq(a: &SeqKernel) -> Result<SeqKernel, SeqError> {
    let a = &a.0;
    if !(a[0].abs() > SINGULAR_THRESHOLD) {
        return Err(SeqError::SingularLeadingEntry);
    }
    let recip = 1.0 / a[0];
    let mut b = Vec::with_capacity(a.len());
    b.push(recip);
    for m in 1..a.len() {
        let mut acc = 0.0;
        for i in 0..m {
            acc += a[m - i] * b[i];
        }
        b.push(-acc * recip);
    }
    Ok(SeqKernel(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CompletelyPositive,
    NotCompletelyPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `b_0^n > 0`
    InverseDiagonalPositive,
    /// `b_{n-j}^n <= 0` for `j < n`
    InverseOffDiagonalNonpositive,
    /// `sum_j b_{n-j}^n >= 0`
    InverseRowSumNonnegative,
    /// `0 < (R_λ)_0^n < 1`
    ResolventDiagonalInUnitInterval,
    /// `(R_λ)_{n-j}^n >= 0`
    ResolventNonnegative,
    /// `sum_j (R_λ)_{n-j}^n <= 1`
    ResolventRowSumAtMostOne,
}

/// One violated condition. `n` is the row (or sequence index), `k` the lag
/// when the condition is entrywise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub condition: Condition,
    pub n: usize,
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    /// The offending quantity.
    pub value: f64,
    /// How far `value` lies past the tolerance-adjusted threshold.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpReport {
    pub verdict: Verdict,
    pub tol: f64,
    /// Smallest distance of any checked quantity from its exact threshold.
    /// Verdicts with `min_margin <= tol` are within rounding of the boundary.
    pub min_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    pub failures: Vec<Failure>,
}

impl CpReport {
    fn from_failures(tol: f64, min_margin: f64, mut failures: Vec<Failure>) -> Self {
        failures.sort_by(failure_order);
        let verdict = if failures.is_empty() {
            Verdict::CompletelyPositive
        } else {
            Verdict::NotCompletelyPositive
        };
        CpReport {
            verdict,
            tol,
            min_margin,
            lambda_grid: None,
            failures,
        }
    }

    pub fn is_cp(&self) -> bool {
        self.verdict == Verdict::CompletelyPositive
    }
}

fn failure_order(a: &Failure, b: &Failure) -> Ordering {
    let la = a.lambda.unwrap_or(0.0);
    let lb = b.lambda.unwrap_or(0.0);
    la.total_cmp(&lb)
        .then(a.n.cmp(&b.n))
        .then(a.k.cmp(&b.k))
        .then(a.condition.cmp(&b.condition))
}

/// Accumulates sign checks with their margins.
struct SignChecks {
    tol: f64,
    lambda: Option<f64>,
    min_margin: f64,
    failures: Vec<Failure>,
}

impl SignChecks {
    fn new(tol: f64, lambda: Option<f64>) -> Self {
        SignChecks {
            tol,
            lambda,
            min_margin: f64::INFINITY,
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, condition: Condition, n: usize, k: Option<usize>, value: f64, excess: f64) {
        self.failures.push(Failure {
            condition,
            n,
            k,
            lambda: self.lambda,
            value,
            excess,
        });
    }

    /// Requires `value > 0`, checked as `value > tol`.
    fn positive(&mut self, c: Condition, n: usize, k: Option<usize>, value: f64) {
        self.min_margin = self.min_margin.min(value.abs());
        if !(value > self.tol) {
            self.fail(c, n, k, value, self.tol - value);
        }
    }

    /// Requires `value <= 0`, relaxed to `value <= tol`.
    fn nonpositive(&mut self, c: Condition, n: usize, k: Option<usize>, value: f64) {
        self.min_margin = self.min_margin.min(value.abs());
        if !(value <= self.tol) {
            self.fail(c, n, k, value, value - self.tol);
        }
    }

    /// Requires `value <= 1`, relaxed to `value <= 1 + tol`.
    fn at_most_one(&mut self, c: Condition, n: usize, k: Option<usize>, value: f64) {
        self.min_margin = self.min_margin.min((1.0 - value).abs());
        if !(value <= 1.0 + self.tol) {
            self.fail(c, n, k, value, value - 1.0 - self.tol);
        }
    }

    /// Requires `value >= 0`, relaxed to `value >= -tol`.
    fn nonnegative(&mut self, c: Condition, n: usize, k: Option<usize>, value: f64) {
        self.min_margin = self.min_margin.min(value.abs());
        if !(value >= -self.tol) {
            self.fail(c, n, k, value, -self.tol - value);
        }
    }
}

/// Sequence criterion: `b = a^{(-1)}` must satisfy `b_0 > 0`, `b_j <= 0`
/// for `j >= 1` and `sum_{j<=n} b_j >= 0` for `n >= 1`.
pub fn check_cp_uniform(a: &SeqKernel, tol: f64) -> Result<CpReport, SeqError> {
    let b = inverse_seq(a)?;
    let b = b.entries();
    let mut checks = SignChecks::new(tol, None);
    checks.positive(Condition::InverseDiagonalPositive, 0, None, b[0]);
    let mut partial = b[0];
    for (j, &bj) in b.iter().enumerate().skip(1) {
        checks.nonpositive(Condition::InverseOffDiagonalNonpositive, j, None, bj);
        partial += bj;
        checks.nonnegative(Condition::InverseRowSumNonnegative, j, None, partial);
    }
    Ok(CpReport::from_failures(tol, checks.min_margin, checks.failures))
}

/// Checks the sign certificate on an already computed inverse kernel.
pub fn check_property_b(b: &TriKernel, tol: f64) -> CpReport {
    let mut checks = SignChecks::new(tol, None);
    for n in 1..=b.size() {
        checks.positive(Condition::InverseDiagonalPositive, n, Some(0), b.get(n, 0));
        let mut sum = b.get(n, 0);
        for k in 1..n {
            let v = b.get(n, k);
            checks.nonpositive(Condition::InverseOffDiagonalNonpositive, n, Some(k), v);
            sum += v;
        }
        checks.nonnegative(Condition::InverseRowSumNonnegative, n, None, sum);
    }
    CpReport::from_failures(tol, checks.min_margin, checks.failures)
}

/// Nonuniform criterion through the pseudo-convolutional inverse.
pub fn check_cp_nonuniform(a: &TriKernel, tol: f64) -> Result<CpReport, KernelError> {
    Ok(check_property_b(&a.inverse()?, tol))
}

/// `10^k` for `k = -3..=6`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-3..=6).map(|k| 10f64.powi(k)).collect()
}

/// Definitional falsifier: evaluates the resolvent conditions for every `λ`
/// in the grid.
pub fn brute_cp_scan(a: &TriKernel, lambda_grid: &[f64], tol: f64) -> Result<CpReport, KernelError> {
    assert!(!lambda_grid.is_empty(), "lambda grid must not be empty");
    let per_lambda: Vec<(f64, Vec<Failure>)> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let r = resolvent(a, lambda)?.kernel;
            let mut checks = SignChecks::new(tol, Some(lambda));
            for n in 1..=r.size() {
                let r0 = r.get(n, 0);
                checks.min_margin = checks.min_margin.min(r0.abs()).min((1.0 - r0).abs());
                if !(r0 > 0.0 && r0 < 1.0) {
                    let excess = if r0 <= 0.0 { -r0 } else { r0 - 1.0 };
                    checks.fail(Condition::ResolventDiagonalInUnitInterval, n, Some(0), r0, excess);
                }
                let mut sum = r0;
                for k in 1..n {
                    let v = r.get(n, k);
                    checks.nonnegative(Condition::ResolventNonnegative, n, Some(k), v);
                    sum += v;
                }
                checks.at_most_one(Condition::ResolventRowSumAtMostOne, n, None, sum);
            }
            Ok((checks.min_margin, checks.failures))
        })
        .collect::<Result<_, KernelError>>()?;
    let min_margin = per_lambda.iter().fold(f64::INFINITY, |m, (x, _)| m.min(*x));
    let failures = per_lambda.into_iter().flat_map(|(_, f)| f).collect();
    let mut report = CpReport::from_failures(tol, min_margin, failures);
    report.lambda_grid = Some(lambda_grid.to_vec());
    Ok(report)
}
