//! L1 discretization of the Caputo derivative on a nonuniform mesh.
//!
//! On each `[t_{j-1}, t_j]` the solution is replaced by its linear
//! interpolant, which gives
//!
//! ```text
//! (D_τ^α u)_n = sum_{j=1}^n c_{n-j}^n (u_j - u_{j-1}) = (C ̄* L^{(-1)} ̄* (u - u_0))_n
//! c_{n-j}^n   = [(t_n - t_{j-1})^{1-α} - (t_n - t_j)^{1-α}] / (τ_j Γ(2-α))
//! ```
//!
//! `B = C ̄* L^{(-1)}` has positive diagonal, nonpositive off-diagonal and
//! positive row sums (`c_{n-1}^n`), so `A = B^{(-1)}` is a completely
//! positive kernel.

use thiserror::Error;

use crate::cp::{check_property_b, Failure};
use crate::kernel::{KernelError, TriKernel};
use crate::mesh::Mesh;
use crate::special::gamma_real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum L1Error {
    #[error("fractional order {0} not in (0, 1)")]
    AlphaOutOfRange(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("B = C ̄* L^(-1) violates the sign certificate at row {} ({:?})", .0.n, .0.condition)]
    PropertyBViolated(Failure),
    #[error("expected {expected} states (u_0..u_N), got {found}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Tolerance used when asserting the sign certificate of `B` at construction.
pub const PROPERTY_B_TOL: f64 = 1e-12;

fn check_alpha(alpha: f64) -> Result<(), L1Error> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(L1Error::AlphaOutOfRange(alpha))
    }
}

/// `∫_{t_{j-1}}^{t_j} (t_n - s)^{-α} ds / τ_j` times `(1-α)`, i.e.
/// `(x^{1-α} - y^{1-α}) / (x - y)` with `x = t_n - t_{j-1}`, `y = t_n - t_j`.
/// Written through `expm1`/`ln_1p` so that distant intervals do not cancel.
fn secant_power(y: f64, tau: f64, p: f64) -> f64 {
    if y == 0.0 {
        tau.powf(p - 1.0)
    } else {
        y.powf(p) * (p * (tau / y).ln_1p()).exp_m1() / tau
    }
}

/// The L1 coefficient kernel `C` in closed form.
pub fn l1_coefficients(mesh: &Mesh, alpha: f64) -> Result<TriKernel, L1Error> {
    check_alpha(alpha)?;
    let p = 1.0 - alpha;
    let g = gamma_real(2.0 - alpha);
    let t = mesh.points();
    let mut c = TriKernel::zeros(mesh.num_steps());
    for n in 1..=mesh.num_steps() {
        let row = c.row_mut(n);
        for j in 1..=n {
            let tau = t[j] - t[j - 1];
            let y = if j == n { 0.0 } else { t[n] - t[j] };
            row[j - 1] = secant_power(y, tau, p) / g;
        }
    }
    Ok(c)
}

/// Assembled L1 kernels on one mesh.
#[derive(Debug, Clone)]
pub struct L1Operator {
    pub mesh: Mesh,
    pub alpha: f64,
    /// L1 coefficients
    pub c: TriKernel,
    /// `C ̄* L^{(-1)}`
    pub b: TriKernel,
    /// `B^{(-1)}`
    pub a: TriKernel,
}

impl L1Operator {
    pub fn new(mesh: &Mesh, alpha: f64) -> Result<Self, L1Error> {
        let c = l1_coefficients(mesh, alpha)?;
        let b = c.pseudo_convolve(&TriKernel::lower_ones_inverse(c.size()))?;
        let report = check_property_b(&b, PROPERTY_B_TOL);
        if let Some(f) = report.failures.into_iter().next() {
            return Err(L1Error::PropertyBViolated(f));
        }
        let a = b.inverse()?;
        Ok(L1Operator {
            mesh: mesh.clone(),
            alpha,
            c,
            b,
            a,
        })
    }

    pub fn num_steps(&self) -> usize {
        self.mesh.num_steps()
    }

    /// `(D_τ^α u)_n` for `n = 1..=N` through `C ̄* ∇_τ u`. `u` holds
    /// `u_0..u_N`, each state a vector of the same dimension.
    pub fn apply<S: AsRef<[f64]>>(&self, u: &[S]) -> Result<Vec<Vec<f64>>, L1Error> {
        let n_steps = self.num_steps();
        if u.len() != n_steps + 1 {
            return Err(L1Error::LengthMismatch {
                expected: n_steps + 1,
                found: u.len(),
            });
        }
        let dim = u[0].as_ref().len();
        let mut out = vec![vec![0.0; dim]; n_steps];
        for i in 0..dim {
            let grad: Vec<f64> = (1..=n_steps)
                .map(|j| u[j].as_ref()[i] - u[j - 1].as_ref()[i])
                .collect();
            for (n, v) in self.c.pseudo_convolve_vec(&grad)?.into_iter().enumerate() {
                out[n][i] = v;
            }
        }
        Ok(out)
    }

    /// Scalar convenience form of [`L1Operator::apply`].
    pub fn apply_scalar(&self, u: &[f64]) -> Result<Vec<f64>, L1Error> {
        let states: Vec<[f64; 1]> = u.iter().map(|&x| [x]).collect();
        Ok(self.apply(&states)?.into_iter().map(|v| v[0]).collect())
    }
}

/// `(D_τ^α u)_n`, `n = 1..=N`.
pub fn apply_l1_derivative<S: AsRef<[f64]>>(
    op: &L1Operator,
    u: &[S],
) -> Result<Vec<Vec<f64>>, L1Error> {
    op.apply(u)
}
