//! Acceptance suite. One line per criterion:
//!
//! ```text
//! [PASS] 1 algebra laws: ...
//! ```
//!
//! The process exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cpkernel::cp::{brute_cp_scan, check_cp_nonuniform, check_cp_uniform, check_property_b, default_lambda_grid};
use cpkernel::fode::{solve_fode, FodeProblem, Nonlinearity, ProblemKind, SolveOptions, Stepper};
use cpkernel::generate::{self, log_uniform_mesh, perturb_certificate, random_certificate, random_kernel};
use cpkernel::l1::{apply_l1_derivative, l1_coefficients, L1Operator};
use cpkernel::resolvent::{
    asymptotic_defect, commutation_defect, resolvent, resolvent_right_complementary_check,
};
use cpkernel::{Mesh, TriKernel};
use rand::Rng;

use common::{caputo_of_interpolant, erfc_series, max_diff, rel_diff};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn algebra_laws() -> Outcome {
    let start = Instant::now();
    let mut rng = generate::rng(SEED);
    let (mut assoc, mut dist_left, mut dist_right) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let a = random_kernel(&mut rng, 40);
        let b = random_kernel(&mut rng, 40);
        let c = random_kernel(&mut rng, 40);
        let ab = a.pseudo_convolve(&b).unwrap();
        let bc = b.pseudo_convolve(&c).unwrap();
        let ac = a.pseudo_convolve(&c).unwrap();
        assoc = assoc.max(rel_diff(
            &ab.pseudo_convolve(&c).unwrap(),
            &a.pseudo_convolve(&bc).unwrap(),
        ));
        let a_plus_b = TriKernel::axpy(1.0, &a, &b).unwrap();
        let lhs = a_plus_b.pseudo_convolve(&c).unwrap();
        let rhs = TriKernel::axpy(1.0, &ac, &bc).unwrap();
        dist_left = dist_left.max(rel_diff(&lhs, &rhs));
        let b_plus_c = TriKernel::axpy(1.0, &b, &c).unwrap();
        let lhs = a.pseudo_convolve(&b_plus_c).unwrap();
        let rhs = TriKernel::axpy(1.0, &ab, &ac).unwrap();
        dist_right = dist_right.max(rel_diff(&lhs, &rhs));
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = assoc.max(dist_left).max(dist_right);
    outcome(
        worst <= 1e-12 && secs <= 10.0,
        format!(
            "200 triples N=40, associativity {assoc:.2e}, (A+B)C {dist_left:.2e}, A(B+C) {dist_right:.2e} (<= 1e-12), {secs:.2}s (<= 10s)"
        ),
    )
}

fn two_sided_inverse() -> Outcome {
    let mut rng = generate::rng(SEED + 1);
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for n in [40, 80, 120, 160, 200] {
        let mut worst_n = 0.0f64;
        for _ in 0..10 {
            let a = random_kernel(&mut rng, n);
            let b = a.inverse().unwrap();
            let id = TriKernel::identity(n);
            worst_n = worst_n
                .max(max_diff(&a.pseudo_convolve(&b).unwrap(), &id))
                .max(max_diff(&b.pseudo_convolve(&a).unwrap(), &id));
        }
        parts.push(format!("N={n}: {worst_n:.1e}"));
        worst = worst.max(worst_n);
    }
    outcome(
        worst <= 1e-10,
        format!("max-entry defect (<= 1e-10) {}", parts.join(", ")),
    )
}

fn resolvent_identities() -> Outcome {
    let mut rng = generate::rng(SEED + 2);
    let (mut comm, mut shifted, mut comp) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let a = random_kernel(&mut rng, 40);
        let id = TriKernel::identity(40);
        for lambda in [0.01, 1.0, 100.0] {
            let r = resolvent(&a, lambda).unwrap().kernel;
            comm = comm.max(commutation_defect(&a, &r).unwrap());
            let i_minus_r = TriKernel::axpy(-1.0, &r, &id).unwrap();
            let i_plus = TriKernel::axpy(lambda, &a, &id).unwrap();
            shifted = shifted
                .max(max_diff(&i_minus_r.pseudo_convolve(&i_plus).unwrap(), &id))
                .max(max_diff(&i_plus.pseudo_convolve(&i_minus_r).unwrap(), &id));
            comp = comp.max(resolvent_right_complementary_check(&a, lambda).unwrap());
        }
    }
    let worst = comm.max(shifted).max(comp);
    outcome(
        worst <= 1e-10,
        format!(
            "20 kernels N=40, λ ∈ {{0.01, 1, 100}}: commutation {comm:.1e}, (I-R)(I+λA)=I {shifted:.1e}, R(C_R/λ+L)=L {comp:.1e} (<= 1e-10)"
        ),
    )
}

fn asymptotics() -> Outcome {
    let mut rng = generate::rng(SEED + 3);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..50 {
        let a = random_kernel(&mut rng, 40);
        let ratio = asymptotic_defect(&a, 1e4).unwrap() / asymptotic_defect(&a, 1e3).unwrap();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    outcome(
        lo >= 0.05 && hi <= 0.2,
        format!("50 kernels N=40, defect(1e4)/defect(1e3) in [{lo:.4}, {hi:.4}] (within [0.05, 0.2])"),
    )
}

fn cp_equivalence() -> Outcome {
    let mut rng = generate::rng(SEED + 4);
    let grid = default_lambda_grid();
    let tol = 1e-12;
    let (mut compared, mut skipped, mut disagree) = (0usize, 0usize, 0usize);
    let mut misgenerated = 0usize;
    for i in 0..600 {
        let n = rng.gen_range(2..=40);
        let b = random_certificate(&mut rng, n);
        let (b, expect_cp) = if i % 2 == 0 {
            (b, true)
        } else {
            (perturb_certificate(&mut rng, &b).0, false)
        };
        let a = b.inverse().unwrap();
        let cert = check_cp_nonuniform(&a, tol).unwrap();
        if cert.is_cp() != expect_cp {
            misgenerated += 1;
        }
        if cert.min_margin <= 1e-11 {
            skipped += 1;
            continue;
        }
        compared += 1;
        if brute_cp_scan(&a, &grid, tol).unwrap().is_cp() != cert.is_cp() {
            disagree += 1;
        }
    }
    outcome(
        disagree == 0 && compared >= 500 && misgenerated == 0,
        format!(
            "600 kernels (300 CP, 300 perturbed), {compared} compared, {skipped} within 1e-11 of a threshold, {disagree} disagreements, {misgenerated} generator mismatches"
        ),
    )
}

fn uniform_reduction() -> Outcome {
    let mut rng = generate::rng(SEED + 5);
    let (mut agree, mut cp_count) = (0usize, 0usize);
    for i in 0..100 {
        let len = rng.gen_range(2..=40);
        let seq = if i % 2 == 0 {
            generate::random_cp_sequence(&mut rng, len)
        } else {
            generate::random_sequence(&mut rng, len)
        };
        let uni = check_cp_uniform(&seq, 1e-12).unwrap();
        let non = check_cp_nonuniform(&seq.to_kernel(), 1e-12).unwrap();
        if uni.verdict == non.verdict {
            agree += 1;
        }
        cp_count += uni.is_cp() as usize;
    }
    outcome(
        agree == 100,
        format!("100 sequences ({cp_count} CP), {agree}/100 identical verdicts"),
    )
}

fn l1_kernel_cp() -> Outcome {
    let mut rng = generate::rng(SEED + 6);
    let (mut failures, mut worst_margin) = (0usize, f64::INFINITY);
    for i in 1..=9 {
        let alpha = i as f64 / 10.0;
        for _ in 0..20 {
            let mesh = log_uniform_mesh(&mut rng, 100, 3.0, 1.0);
            let c = l1_coefficients(&mesh, alpha).unwrap();
            let b = c.pseudo_convolve(&TriKernel::lower_ones_inverse(100)).unwrap();
            let report = check_property_b(&b, 1e-12);
            failures += report.failures.len();
            worst_margin = worst_margin.min(report.min_margin);
        }
    }
    outcome(
        failures == 0,
        format!("α = 0.1..0.9 × 20 meshes (N=100, 3 decades): {failures} condition failures, smallest margin {worst_margin:.2e}"),
    )
}

fn linear_convergence() -> Outcome {
    let start = Instant::now();
    let oracle = std::f64::consts::E * erfc_series(1.0);
    let problem = FodeProblem::new(ProblemKind::LinearScalar { rate: 1.0 }, vec![1.0]).unwrap();
    let mut errors = Vec::new();
    for n in [32, 64, 128, 256] {
        let op = L1Operator::new(&Mesh::graded(1.0, n, 2.0).unwrap(), 0.5).unwrap();
        let traj = solve_fode(&op, &problem, &SolveOptions::default()).unwrap();
        errors.push((traj.final_state()[0] - oracle).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let last = errors[3];
    outcome(
        monotone && last <= 5e-3 && secs <= 5.0 && (oracle - 0.427_583_576_2).abs() <= 1e-10,
        format!(
            "|u_N - E_1/2(-1)| for N=32,64,128,256: {:.2e}, {:.2e}, {:.2e}, {:.2e} (monotone: {monotone}, last <= 5e-3), {secs:.2}s (<= 5s)",
            errors[0], errors[1], errors[2], errors[3]
        ),
    )
}

fn positivity() -> Outcome {
    let (m, length) = (64, 2.0);
    let h = length / (m as f64 + 1.0);
    let u0: Vec<f64> = (1..=m)
        .map(|i| (std::f64::consts::PI * i as f64 * h).sin().max(0.0))
        .collect();
    let problem = FodeProblem::new(
        ProblemKind::DiffusionReaction1D {
            points: m,
            length,
            beta: Nonlinearity::Cubic,
        },
        u0,
    )
    .unwrap();
    let mesh = Mesh::graded(1.0, 100, 2.0).unwrap();
    let (mut direct_min, mut yosida_min, mut max_factor) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let mut factors_ok = true;
    for alpha in [0.2, 0.5, 0.8] {
        let op = L1Operator::new(&mesh, alpha).unwrap();
        let direct = solve_fode(&op, &problem, &SolveOptions::default()).unwrap();
        direct_min = direct_min.min(direct.min_entry());

        let lambda = op.a.diagonal().into_iter().fold(0.0f64, f64::max);
        let options = SolveOptions {
            stepper: Stepper::Yosida { lambda },
            ..SolveOptions::default()
        };
        let yosida = solve_fode(&op, &problem, &options).unwrap();
        yosida_min = yosida_min.min(yosida.min_entry());
        factors_ok &= yosida.contraction_factors.len() == 100
            && yosida.contraction_factors.iter().all(|&r| r > 0.0 && r < 1.0);
        max_factor = yosida.contraction_factors.iter().fold(max_factor, |a, &b| a.max(b));
    }
    outcome(
        direct_min >= -1e-10 && yosida_min >= -1e-10 && factors_ok,
        format!(
            "m=64, u³, α ∈ {{0.2, 0.5, 0.8}}, N=100: direct min {direct_min:.2e}, Yosida min {yosida_min:.2e} (>= -1e-10), contraction factors in (0, 1): {factors_ok} (max {max_factor:.4})"
        ),
    )
}

fn l1_exactness() -> Outcome {
    let mut rng = generate::rng(SEED + 7);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let alpha = 0.1 + 0.08 * i as f64;
        let mesh = log_uniform_mesh(&mut rng, 30, 3.0, 1.0);
        let u: Vec<f64> = (0..=30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = L1Operator::new(&mesh, alpha).unwrap();
        let states: Vec<[f64; 1]> = u.iter().map(|&x| [x]).collect();
        let d = apply_l1_derivative(&op, &states).unwrap();
        for n in 1..=30 {
            let exact = caputo_of_interpolant(mesh.points(), &u, alpha, n);
            worst = worst.max((d[n - 1][0] - exact).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("10 meshes N=30, max |L1 - quadrature| = {worst:.2e} (<= 1e-9)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("algebra laws", algebra_laws),
        ("two-sided inverse", two_sided_inverse),
        ("resolvent identities", resolvent_identities),
        ("resolvent asymptotics", asymptotics),
        ("CP criterion equivalence", cp_equivalence),
        ("uniform reduction", uniform_reduction),
        ("L1 kernel CP", l1_kernel_cp),
        ("linear FODE convergence", linear_convergence),
        ("positivity preservation", positivity),
        ("L1 exactness", l1_exactness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {name}: {}", i + 1, o.detail);
        failed += (!o.passed) as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
