//! Seeded random kernels, sequences and meshes for the randomized suites.
//!
//! Every generator takes an explicit RNG so that a suite is reproducible
//! from one seed; [`rng`] builds the ChaCha8 stream used throughout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cp::SeqKernel;
use crate::kernel::TriKernel;
use crate::mesh::Mesh;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Off-diagonal entries `U[-1, 1]`, diagonal `U[0.5, 1.5]`.
pub fn random_kernel<R: Rng>(rng: &mut R, size: usize) -> TriKernel {
    TriKernel::from_fn(size, |_, k| {
        if k == 0 {
            rng.gen_range(0.5..1.5)
        } else {
            rng.gen_range(-1.0..1.0)
        }
    })
}

/// A kernel `B` with the sign certificate: off-diagonal `-U[0, 1)`, diagonal
/// equal to the off-diagonal mass plus `U[0.1, 1)`.
pub fn random_certificate<R: Rng>(rng: &mut R, size: usize) -> TriKernel {
    let mut b = TriKernel::zeros(size);
    for n in 1..=size {
        let row = b.row_mut(n);
        let mut mass = 0.0;
        for x in row[..n - 1].iter_mut() {
            *x = -rng.gen_range(0.0..1.0);
            mass -= *x;
        }
        row[n - 1] = mass + rng.gen_range(0.1..1.0);
    }
    b
}

/// Which sign condition a perturbation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    PositiveOffDiagonal,
    NegativeRowSum,
    NonpositiveDiagonal,
}

/// Breaks one sign condition of a certificate at one random row.
pub fn perturb_certificate<R: Rng>(rng: &mut R, b: &TriKernel) -> (TriKernel, Violation, usize) {
    let size = b.size();
    let mut out = b.clone();
    let pick = rng.gen_range(0..3);
    let n = rng.gen_range(if pick == 2 { 1 } else { 2 }..=size);
    let violation = match pick {
        0 => {
            let k = rng.gen_range(1..n);
            *out.get_mut(n, k) = rng.gen_range(0.1..1.0);
            Violation::PositiveOffDiagonal
        }
        1 => {
            let k = rng.gen_range(1..n);
            let target = -rng.gen_range(0.1..1.0);
            let sum = out.row_sum(n);
            *out.get_mut(n, k) += target - sum;
            Violation::NegativeRowSum
        }
        _ => {
            *out.get_mut(n, 0) = -rng.gen_range(0.1..1.0);
            Violation::NonpositiveDiagonal
        }
    };
    (out, violation, n)
}

/// Sequence with `a_0 ∈ U[0.5, 1.5]` and `a_j ∈ U[-1, 1]`.
pub fn random_sequence<R: Rng>(rng: &mut R, len: usize) -> SeqKernel {
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    v[0] = rng.gen_range(0.5..1.5);
    SeqKernel::new(v).expect("leading entry is nonzero")
}

/// Inverse of a random sign-certificate sequence, hence a CP sequence up to
/// rounding.
pub fn random_cp_sequence<R: Rng>(rng: &mut R, len: usize) -> SeqKernel {
    let mut b: Vec<f64> = (0..len).map(|_| -rng.gen_range(0.0..1.0) / len as f64).collect();
    b[0] = b[1..].iter().map(|x| -x).sum::<f64>() + rng.gen_range(0.1..1.0);
    let b = SeqKernel::new(b).expect("leading entry is positive");
    crate::cp::inverse_seq(&b).expect("leading entry is positive")
}

/// Mesh with `steps` intervals whose lengths are log-uniform over
/// `decades` decades, rescaled so that `t_N = final_time`.
pub fn log_uniform_mesh<R: Rng>(rng: &mut R, steps: usize, decades: f64, final_time: f64) -> Mesh {
    let raw: Vec<f64> = (0..steps)
        .map(|_| 10f64.powf(rng.gen_range(0.0..decades)))
        .collect();
    let total: f64 = raw.iter().sum();
    let scaled: Vec<f64> = raw.iter().map(|x| x * final_time / total).collect();
    Mesh::from_steps(&scaled).expect("positive steps")
}
