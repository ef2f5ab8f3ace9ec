#[path = "support/oracles.rs"]
mod oracles;

use dpdenoise_core::prox::{FidelityParams, Regularizer};
use dpdenoise_core::solver::{solve, DenoiseProblem, SolverConfig};
use dpdenoise_core::ScalarField;
use oracles::{dual_projected_gradient_1d, primal_energy_1d, OracleModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(model: &OracleModel) -> Regularizer {
    match model {
        OracleModel::Tv => Regularizer::Tv,
        OracleModel::Huber(a) => Regularizer::huber(*a).unwrap(),
        OracleModel::DoublePhase(w) => {
            // the solver keeps one weight per node; the last node has no forward difference
            let mut full = w.clone();
            full.push(0.0);
            Regularizer::double_phase(ScalarField::signal(full).unwrap()).unwrap()
        }
    }
}

fn tight() -> SolverConfig {
    SolverConfig::accelerated().with_tolerance(1e-12).with_max_iters(2_000_000)
}

#[test]
fn matches_dual_oracle_on_small_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..3 {
        let m = rng.random_range(8..=24);
        let g: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let lambda = [0.1, 0.24, 0.5][case];
        let w: Vec<f64> = (0..m - 1)
            .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { 20.0 * rng.random::<f64>() })
            .collect();
        for model in [OracleModel::Tv, OracleModel::Huber(0.05), OracleModel::DoublePhase(w.clone())] {
            let oracle = dual_projected_gradient_1d(&g, lambda, &model, 1e-10, 5_000_000);
            assert!(oracle.gap <= 1e-10, "oracle gap {}", oracle.gap);
            let problem = DenoiseProblem::new(
                FidelityParams::new(lambda, ScalarField::signal(g.clone()).unwrap()).unwrap(),
                pair(&model),
            )
            .unwrap();
            let run = solve(&problem, &tight()).unwrap();
            let energy = primal_energy_1d(run.u.values(), &g, lambda, &model);
            let rel = (energy - oracle.energy).abs() / oracle.energy.abs().max(1e-300);
            assert!(rel <= 1e-5, "case {case} {model:?}: {energy} vs {}", oracle.energy);
            let lib = problem.energy(&run.u).unwrap();
            assert!((lib - energy).abs() <= 1e-12 * energy.abs().max(1.0));
        }
    }
}

#[test]
fn two_dimensional_minimizer_beats_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = ScalarField::from_fn(12, 10, |_, _| rng.random::<f64>()).unwrap();
    let w = ScalarField::from_fn(12, 10, |i, _| if i < 6 { 0.0 } else { 5.0 }).unwrap();
    for reg in [Regularizer::Tv, Regularizer::huber(0.1).unwrap(), Regularizer::double_phase(w).unwrap()] {
        let problem = DenoiseProblem::new(FidelityParams::new(0.2, g.clone()).unwrap(), reg).unwrap();
        let run = solve(&problem, &tight()).unwrap();
        let e0 = problem.energy(&run.u).unwrap();
        for _ in 0..200 {
            let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
            let d = ScalarField::from_fn(12, 10, |_, _| eps * (rng.random::<f64>() - 0.5)).unwrap();
            let e = problem.energy(&run.u.add(&d).unwrap()).unwrap();
            assert!(e >= e0 - 1e-9 * e0.abs(), "perturbation lowered the energy: {e} < {e0}");
        }
    }
}

#[test]
fn variants_share_the_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = ScalarField::from_fn(10, 10, |_, _| rng.random::<f64>()).unwrap();
    let problem = DenoiseProblem::new(FidelityParams::new(0.3, g).unwrap(), Regularizer::Tv).unwrap();
    let acc = solve(&problem, &tight()).unwrap();
    let std = solve(&problem, &SolverConfig::standard().with_tolerance(1e-12).with_max_iters(2_000_000)).unwrap();
    let (ea, es) = (problem.energy(&acc.u).unwrap(), problem.energy(&std.u).unwrap());
    assert!((ea - es).abs() <= 1e-7 * ea);
}

#[test]
fn constant_datum_is_a_fixed_point() {
    let g = ScalarField::constant(8, 8, 0.4).unwrap();
    let problem = DenoiseProblem::new(FidelityParams::new(0.5, g.clone()).unwrap(), Regularizer::Tv).unwrap();
    let run = solve(&problem, &SolverConfig::default()).unwrap();
    assert!(run.converged);
    assert!(run.u.values().iter().all(|&v| (v - 0.4).abs() < 1e-12));
}

#[test]
fn mean_is_preserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = ScalarField::from_fn(16, 16, |_, _| rng.random::<f64>()).unwrap();
    let problem = DenoiseProblem::new(FidelityParams::new(0.2, g.clone()).unwrap(), Regularizer::huber(0.05).unwrap()).unwrap();
    let run = solve(&problem, &tight()).unwrap();
    assert!((run.u.mean() - g.mean()).abs() < 1e-9);
}
