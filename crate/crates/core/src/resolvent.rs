//! Resolvent kernels `R_λ` with `R_λ + λ R_λ ̄* A = λ A`, and the
//! complementary kernels `C_R`, `C_L` with `A ̄* C_R = L = C_L ̄* A`.
//!
//! The defect helpers all return a max absolute entry so that a failing
//! identity can be traced to a single `(n, k)`.

use crate::kernel::{KernelError, TriKernel};

/// `R_λ` together with the `λ` it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventKernel {
    pub lambda: f64,
    pub kernel: TriKernel,
}

impl ResolventKernel {
    /// Max entry of `R + λ R ̄* A - λ A`.
    pub fn identity_defect(&self, a: &TriKernel) -> Result<f64, KernelError> {
        let ra = self.kernel.pseudo_convolve(a)?;
        let lhs = TriKernel::axpy(self.lambda, &ra, &self.kernel)?;
        Ok(lhs.max_abs_diff(&a.scale(self.lambda)))
    }
}

/// `(I + λ A)^{(-1)}`, which equals `I - R_λ`.
pub fn shifted_inverse(a: &TriKernel, lambda: f64) -> Result<TriKernel, KernelError> {
    TriKernel::axpy(lambda, a, &TriKernel::identity(a.size()))?.inverse()
}

/// `R_λ = I - (I + λ A)^{(-1)}`.
pub fn resolvent(a: &TriKernel, lambda: f64) -> Result<ResolventKernel, KernelError> {
    let g = shifted_inverse(a, lambda)?;
    let kernel = TriKernel::axpy(-1.0, &g, &TriKernel::identity(a.size()))?;
    Ok(ResolventKernel { lambda, kernel })
}

/// Max entry of `R ̄* A - A ̄* R`.
pub fn commutation_defect(a: &TriKernel, r: &TriKernel) -> Result<f64, KernelError> {
    Ok(r.pseudo_convolve(a)?.max_abs_diff(&a.pseudo_convolve(r)?))
}

/// `C_R = A^{(-1)} ̄* L`.
pub fn right_complementary(a: &TriKernel) -> Result<TriKernel, KernelError> {
    a.inverse()?
        .pseudo_convolve(&TriKernel::lower_ones(a.size()))
}

/// `C_L = L ̄* A^{(-1)}`.
pub fn left_complementary(a: &TriKernel) -> Result<TriKernel, KernelError> {
    TriKernel::lower_ones(a.size()).pseudo_convolve(&a.inverse()?)
}

/// Max entry of `R_λ ̄* (λ^{-1} C_R + L) - L`.
pub fn resolvent_right_complementary_check(a: &TriKernel, lambda: f64) -> Result<f64, KernelError> {
    let l = TriKernel::lower_ones(a.size());
    let r = resolvent(a, lambda)?;
    let comp = TriKernel::axpy(1.0 / lambda, &right_complementary(a)?, &l)?;
    Ok(r.kernel.pseudo_convolve(&comp)?.max_abs_diff(&l))
}

/// `λ (I - R_λ) - A^{(-1)}`; its entries are `O(1/λ)` as `λ → ∞`.
pub fn asymptotic_defect_kernel(a: &TriKernel, lambda: f64) -> Result<TriKernel, KernelError> {
    let scaled = shifted_inverse(a, lambda)?.scale(lambda);
    TriKernel::axpy(-1.0, &a.inverse()?, &scaled)
}

/// Max entry of [`asymptotic_defect_kernel`].
pub fn asymptotic_defect(a: &TriKernel, lambda: f64) -> Result<f64, KernelError> {
    Ok(asymptotic_defect_kernel(a, lambda)?.max_abs())
}

/// Residuals of the algebraic resolvent identities for one `(A, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResolventDefects {
    /// `R + λ R ̄* A = λ A`
    pub identity: f64,
    /// `(I - R) ̄* (I + λA) = I` and `(I + λA) ̄* (I - R) = I`
    pub two_sided: f64,
    /// `R ̄* A = A ̄* R` and `R ̄* A^{(-1)} = A^{(-1)} ̄* R`
    pub commutation: f64,
    /// `I - R = λ^{-1} R ̄* A^{(-1)}`
    pub inverse_form: f64,
    /// `R ̄* (λ^{-1} C_R + L) = L`
    pub right_complementary: f64,
    /// max entry of `λ (I - R) - A^{(-1)}`
    pub asymptotic: f64,
}

impl ResolventDefects {
    pub fn worst_identity(&self) -> f64 {
        self.identity
            .max(self.two_sided)
            .max(self.commutation)
            .max(self.inverse_form)
            .max(self.right_complementary)
    }
}

pub fn resolvent_defects(a: &TriKernel, lambda: f64) -> Result<ResolventDefects, KernelError> {
    let n = a.size();
    let id = TriKernel::identity(n);
    let r = resolvent(a, lambda)?;
    let b = a.inverse()?;
    let i_minus_r = TriKernel::axpy(-1.0, &r.kernel, &id)?;
    let shifted = TriKernel::axpy(lambda, a, &id)?;
    let two_sided = i_minus_r
        .pseudo_convolve(&shifted)?
        .max_abs_diff(&id)
        .max(shifted.pseudo_convolve(&i_minus_r)?.max_abs_diff(&id));
    let commutation = commutation_defect(a, &r.kernel)?.max(commutation_defect(&b, &r.kernel)?);
    let inverse_form = r
        .kernel
        .pseudo_convolve(&b)?
        .scale(1.0 / lambda)
        .max_abs_diff(&i_minus_r);
    Ok(ResolventDefects {
        identity: r.identity_defect(a)?,
        two_sided,
        commutation,
        inverse_form,
        right_complementary: resolvent_right_complementary_check(a, lambda)?,
        asymptotic: asymptotic_defect(a, lambda)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TriKernel {
        TriKernel::from_rows(&[
            vec![1.2],
            vec![0.4, 0.9],
            vec![-0.3, 0.5, 1.4],
            vec![0.2, -0.6, 0.1, 0.8],
            vec![0.7, 0.3, -0.2, 0.5, 1.1],
        ])
        .unwrap()
    }

    #[test]
    fn scaled_identity_resolvent() {
        for (c, lambda) in [(0.5, 1.0), (2.0, 3.0), (1.0, 1e-3)] {
            let a = TriKernel::identity(4).scale(c);
            let r = resolvent(&a, lambda).unwrap();
            let d = lambda * c / (1.0 + lambda * c);
            let want = TriKernel::identity(4).scale(d);
            assert!(r.kernel.max_abs_diff(&want) <= 1e-15);
        }
    }

    #[test]
    fn small_lambda_resolvent_is_small() {
        let a = sample();
        let r = resolvent(&a, 1e-8).unwrap();
        assert!(r.kernel.max_abs() <= 1e-7 * a.max_abs() * 1.01);
    }

    #[test]
    fn defining_relation_holds() {
        let a = sample();
        let r = resolvent(&a, 1.0).unwrap();
        assert!(r.identity_defect(&a).unwrap() <= 1e-11);
    }

    #[test]
    fn commutation_examples() {
        let d = TriKernel::from_fn(5, |n, k| if k == 0 { n as f64 } else { 0.0 });
        let r = resolvent(&d, 2.0).unwrap();
        assert_eq!(commutation_defect(&d, &r.kernel).unwrap(), 0.0);

        let a = sample();
        let r = resolvent(&a, 3.0).unwrap();
        assert!(commutation_defect(&a, &r.kernel).unwrap() <= 1e-11);

        let l = TriKernel::lower_ones(50);
        let r = resolvent(&l, 1.0).unwrap();
        assert!(commutation_defect(&l, &r.kernel).unwrap() <= 1e-11);
    }

    #[test]
    fn complementary_examples() {
        let i = TriKernel::identity(6);
        let l = TriKernel::lower_ones(6);
        assert_eq!(right_complementary(&i).unwrap(), l);
        assert_eq!(left_complementary(&i).unwrap(), l);
        assert_eq!(right_complementary(&l).unwrap(), i);
        assert_eq!(left_complementary(&l).unwrap(), i);

        let a = sample();
        let l5 = TriKernel::lower_ones(5);
        let cr = right_complementary(&a).unwrap();
        let cl = left_complementary(&a).unwrap();
        assert!(a.pseudo_convolve(&cr).unwrap().max_abs_diff(&l5) <= 1e-10);
        assert!(cl.pseudo_convolve(&a).unwrap().max_abs_diff(&l5) <= 1e-10);
    }

    #[test]
    fn right_complementary_of_resolvent() {
        // A = I, λ = 1: R = I/2 and λ^{-1} C_R + L = 2L
        assert_eq!(resolvent_right_complementary_check(&TriKernel::identity(7), 1.0).unwrap(), 0.0);
        let a = sample();
        for lambda in [0.1, 10.0] {
            assert!(resolvent_right_complementary_check(&a, lambda).unwrap() <= 1e-10);
        }
        let l = TriKernel::lower_ones(30);
        assert!(resolvent_right_complementary_check(&l, 1.0).unwrap() <= 1e-12);
    }

    #[test]
    fn asymptotic_defect_of_identity() {
        // diagonal of λ(I - R) - I is λ/(1+λ) - 1 = -1/(1+λ)
        let lambda = 1e3;
        let d = asymptotic_defect(&TriKernel::identity(5), lambda).unwrap();
        assert!((d - 1.0 / (1.0 + lambda)).abs() <= 1e-12);
    }

    #[test]
    fn asymptotic_defect_decays_like_inverse_lambda() {
        let a = sample();
        let ratio = asymptotic_defect(&a, 1e4).unwrap() / asymptotic_defect(&a, 1e3).unwrap();
        assert!((0.05..=0.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn asymptotic_defect_of_lower_ones_is_monotone() {
        let l = TriKernel::lower_ones(20);
        let mut prev = f64::INFINITY;
        for e in 1..=7 {
            let d = asymptotic_defect(&l, 10f64.powi(e)).unwrap();
            assert!(d < prev, "not decreasing at 1e{e}: {d} >= {prev}");
            prev = d;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn singular_shift_is_reported() {
        let a = TriKernel::identity(3).scale(-1.0);
        assert_eq!(resolvent(&a, 1.0).unwrap_err(), KernelError::SingularDiagonal(1));
    }

    #[test]
    fn all_defects_small() {
        let d = resolvent_defects(&sample(), 2.5).unwrap();
        assert!(d.worst_identity() <= 1e-12, "{d:?}");
    }
}
