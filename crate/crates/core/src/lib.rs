//! Pseudo-convolution algebra for lower-triangular array kernels on
//! nonuniform time meshes, complete-positivity checks for discrete memory
//! kernels, and a positivity-preserving L1 scheme for `D^α u ∈ -𝒜(u)`.
//!
//! Kernel entry `(n, k)` holds `a_k^n` for `1 <= n <= N`, `0 <= k < n`, so
//! the diagonal is `k = 0`.

pub mod cli;
pub mod cp;
pub mod fode;
pub mod generate;
pub mod kernel;
pub mod l1;
pub mod mesh;
pub mod resolvent;
pub mod special;

pub use cp::{
    brute_cp_scan, check_cp_nonuniform, check_cp_uniform, check_property_b, conv_seq, inverse_seq,
    Condition, CpReport, Failure, SeqKernel, Verdict,
};
pub use fode::{
    resolvent_apply, solve_fode, FodeProblem, Nonlinearity, ProblemKind, SolveError, SolveOptions,
    Stepper, Trajectory,
};
pub use kernel::{KernelError, TriKernel};
pub use l1::{apply_l1_derivative, l1_coefficients, L1Error, L1Operator};
pub use mesh::{Mesh, MeshError};
pub use resolvent::{
    asymptotic_defect, commutation_defect, left_complementary, resolvent, right_complementary,
    ResolventKernel,
};
pub use special::{gamma, mittag_leffler, MlQuery};
