use cpkernel::fode::{
    resolvent_apply, solve_fode, FodeProblem, Nonlinearity, ProblemKind, SolveOptions, Stepper,
};
use cpkernel::generate::{self, log_uniform_mesh};
use cpkernel::{L1Operator, Mesh};
use proptest::prelude::*;

fn bump(m: usize, length: f64) -> Vec<f64> {
    let h = length / (m as f64 + 1.0);
    (1..=m)
        .map(|i| (std::f64::consts::PI * i as f64 * h).sin().max(0.0))
        .collect()
}

fn problems() -> Vec<FodeProblem> {
    vec![
        FodeProblem::new(ProblemKind::LinearScalar { rate: 2.0 }, vec![1.0]).unwrap(),
        FodeProblem::new(ProblemKind::ScalarMonotone { beta: Nonlinearity::Cubic }, vec![3.0]).unwrap(),
        FodeProblem::new(
            ProblemKind::DiffusionReaction1D {
                points: 24,
                length: 2.0,
                beta: Nonlinearity::Cubic,
            },
            bump(24, 2.0),
        )
        .unwrap(),
    ]
}

#[test]
fn history_weights_are_a_convex_combination() {
    let mut rng = generate::rng(4);
    for alpha in [0.2, 0.5, 0.8] {
        let op = L1Operator::new(&log_uniform_mesh(&mut rng, 80, 3.0, 1.0), alpha).unwrap();
        for n in 1..=80 {
            let row = op.b.row(n);
            let b0 = row[n - 1];
            let weight_u0 = row.iter().sum::<f64>() / b0;
            let weights: Vec<f64> = row[..n - 1].iter().map(|b| -b / b0).collect();
            assert!(weight_u0 >= 0.0);
            assert!(weights.iter().all(|&w| w >= 0.0));
            let total = weight_u0 + weights.iter().sum::<f64>();
            assert!((total - 1.0).abs() <= 1e-12, "n={n}: {total}");
        }
    }
}

#[test]
fn discrete_relation_holds_in_c_form() {
    let mesh = Mesh::graded(1.0, 60, 2.0).unwrap();
    let op = L1Operator::new(&mesh, 0.6).unwrap();
    for problem in problems() {
        let traj = solve_fode(&op, &problem, &SolveOptions::default()).unwrap();
        let d = op.apply(&traj.states).unwrap();
        for n in 1..=60 {
            let a = problem.operator(&traj.states[n]);
            let worst = d[n - 1]
                .iter()
                .zip(&a)
                .fold(0.0f64, |m, (x, y)| m.max((x + y).abs()));
            assert!(worst <= 1e-9, "n={n}: {worst}");
        }
    }
}

#[test]
fn yosida_converges_to_direct_on_linear_problem() {
    let op = L1Operator::new(&Mesh::graded(1.0, 20, 2.0).unwrap(), 0.5).unwrap();
    let problem = FodeProblem::new(ProblemKind::LinearScalar { rate: 1.0 }, vec![1.0]).unwrap();
    let direct = solve_fode(&op, &problem, &SolveOptions::default()).unwrap();
    let mut prev = f64::INFINITY;
    for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
        let options = SolveOptions {
            stepper: Stepper::Yosida { lambda },
            ..SolveOptions::default()
        };
        let y = solve_fode(&op, &problem, &options).unwrap();
        let gap = y
            .states
            .iter()
            .zip(&direct.states)
            .fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).abs()));
        assert!(gap < prev, "λ={lambda}: {gap} >= {prev}");
        prev = gap;
    }
    assert!(prev <= 1e-3);
}

#[test]
fn cubic_resolvent_example() {
    let p = FodeProblem::new(ProblemKind::ScalarMonotone { beta: Nonlinearity::Cubic }, vec![0.0]).unwrap();
    let w = resolvent_apply(&p, 1.0, &[2.0]).unwrap()[0];
    assert!((w + w.powi(3) - 2.0).abs() <= 1e-13 * 3.0);
    assert!((w - 1.0).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positivity_on_random_meshes(
        seed in any::<u64>(),
        n in 2..=200usize,
        which in 0..3usize,
        kind in 0..3usize,
    ) {
        let alpha = [0.2, 0.5, 0.8][which];
        let mesh = log_uniform_mesh(&mut generate::rng(seed), n, 2.0, 1.0);
        let op = L1Operator::new(&mesh, alpha).unwrap();
        let problem = &problems()[kind];
        let traj = solve_fode(&op, problem, &SolveOptions::default()).unwrap();
        prop_assert!(traj.min_entry() >= -1e-10);
        prop_assert!(traj.max_residual() <= 1e-10);
    }

    #[test]
    fn linear_decay_is_monotone(seed in any::<u64>(), rate in 0.01f64..50.0, alpha in 0.05f64..0.95) {
        let mesh = log_uniform_mesh(&mut generate::rng(seed), 60, 3.0, 2.0);
        let op = L1Operator::new(&mesh, alpha).unwrap();
        let problem = FodeProblem::new(ProblemKind::LinearScalar { rate }, vec![1.0]).unwrap();
        let traj = solve_fode(&op, &problem, &SolveOptions::default()).unwrap();
        for w in traj.states.windows(2) {
            prop_assert!(w[1][0] <= w[0][0] && w[1][0] > 0.0);
        }
    }

    #[test]
    fn scalar_resolvent_is_order_preserving(mu in 1e-4f64..1e4, f in -10.0f64..10.0, g in -10.0f64..10.0) {
        let p = FodeProblem::new(ProblemKind::ScalarMonotone { beta: Nonlinearity::Cubic }, vec![0.0]).unwrap();
        let (wf, wg) = (resolvent_apply(&p, mu, &[f]).unwrap()[0], resolvent_apply(&p, mu, &[g]).unwrap()[0]);
        prop_assert!((wf - wg) * (f - g) >= 0.0);
        prop_assert!((wf - wg).abs() <= (f - g).abs() * (1.0 + 1e-12) + 1e-13);
        prop_assert!((wf + mu * wf.powi(3) - f).abs() <= 1e-13 * (1.0 + f.abs()));
    }
}
