mod common;

use cake_core::masks::{MaskFamily, MaskSequence};
use cake_core::operators::{CakeOperator, SensingOperator};
use common::{dense_cake_matrix, flat, flow_toy_objectives, toy_geometry, tv_l1_toy_objectives};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn dense_matrix_agrees_with_fft_operator() {
    let g = toy_geometry();
    for family in [MaskFamily::Rademacher, MaskFamily::PhaseShift, MaskFamily::DualScale] {
        let masks = MaskSequence::generate(family, &g, 11, (0.6, 0.8)).unwrap();
        let op = CakeOperator::with_subsampling(&masks).unwrap();
        let a = dense_cake_matrix(&masks);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let f = Array3::from_shape_simple_fn(g.scene_shape(), || rng.random::<f64>() - 0.5);
            let fast = flat(&op.forward(&f));
            let dense = &a * flat(&f);
            let err = (fast - dense).amax();
            assert!(err < 1e-12, "{}: {err}", family.name());
        }
    }
}

#[test]
fn tv_l1_solution_is_at_least_as_good_as_subgradient_oracle() {
    let (solver, oracle) = tv_l1_toy_objectives();
    assert!(solver <= oracle + 1e-6, "solver {solver} oracle {oracle}");
}

#[test]
fn flow_solver_matches_barrier_oracle_on_stacked_problem() {
    let (solver, oracle) = flow_toy_objectives();
    assert!((solver - oracle).abs() <= 1e-4 * oracle, "solver {solver} oracle {oracle}");
}
