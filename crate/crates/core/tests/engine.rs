use ion_nmpm::fock::coherent_ket;
use ion_nmpm::ion::{split_high_intensity, ExactEvolution};
use ion_nmpm::nmpm::{
    assemble_state, corrections_block_matrix, corrections_block_matrix_grid, corrections_quadrature, inverse_square_norm,
};
use ion_nmpm::{
    FockSpinState, IonParams, QuadratureConfig, QuadratureScheme, Spin, TimeGrid, TruncationConfig,
};

fn coherent_excited(alpha: f64, trunc: TruncationConfig) -> FockSpinState {
    FockSpinState::product(&coherent_ket(alpha, trunc).unwrap(), Spin::Excited)
}

#[test]
fn block_matrix_and_quadrature_agree() {
    let trunc = TruncationConfig::with_cutoff(48).unwrap();
    let psi0 = coherent_excited(2.0, trunc);
    for (eta, kappa) in [(0.05, 0.0), (0.1, 1.0)] {
        let p = IonParams::from_lambda(0.1, kappa, eta).unwrap();
        let (h0, hp) = split_high_intensity(&p, trunc);
        for tau in [0.3, 1.0, 2.0] {
            let a = corrections_block_matrix(&h0, &hp, &psi0, tau, 2, 0.1).unwrap();
            let b = corrections_quadrature(&h0, &hp, &psi0, tau, 2, QuadratureConfig::default(), 0.1).unwrap();
            for n in 0..=2 {
                let d = a.ket(n).max_abs_diff(b.ket(n));
                assert!(d <= 1e-8, "eta = {eta}, kappa = {kappa}, tau = {tau}, n = {n}: {d:e}");
            }
        }
    }
}

#[test]
fn simpson_quadrature_converges_to_the_same_kets() {
    let trunc = TruncationConfig::with_cutoff(24).unwrap();
    let psi0 = FockSpinState::number(3, Spin::Ground, trunc).unwrap();
    let p = IonParams::from_lambda(0.1, 1.0, 0.1).unwrap();
    let (h0, hp) = split_high_intensity(&p, trunc);
    let q = QuadratureConfig::new(QuadratureScheme::CompositeSimpson, 400).unwrap();
    let a = corrections_block_matrix(&h0, &hp, &psi0, 1.0, 1, 0.1).unwrap();
    let b = corrections_quadrature(&h0, &hp, &psi0, 1.0, 1, q, 0.1).unwrap();
    assert!(a.ket(1).max_abs_diff(b.ket(1)) <= 1e-8);
}

#[test]
fn partial_sum_error_scales_with_order() {
    let trunc = TruncationConfig::with_cutoff(96).unwrap();
    let psi0 = coherent_excited(4.0, trunc);
    let err = |lambda: f64, k: usize| {
        let p = IonParams::from_lambda(lambda, 0.0, 0.1).unwrap();
        let (h0, hp) = split_high_intensity(&p, trunc);
        let pk = corrections_block_matrix(&h0, &hp, &psi0, 1.0, k, lambda).unwrap();
        let exact = ExactEvolution::new(&p, trunc).unwrap().evolve_to(&psi0, 1.0).unwrap();
        pk.partial_sum().distance(&exact)
    };
    let r1 = err(0.1, 1) / err(0.05, 1);
    let r2 = err(0.1, 2) / err(0.05, 2);
    assert!((r1 / 4.0 - 1.0).abs() <= 0.3, "first-order ratio {r1}");
    assert!((r2 / 8.0 - 1.0).abs() <= 0.3, "second-order ratio {r2}");
}

#[test]
fn assembled_states_are_normalized() {
    let trunc = TruncationConfig::with_cutoff(64).unwrap();
    let p = IonParams::from_lambda(0.2, 1.0, 0.1).unwrap();
    let (h0, hp) = split_high_intensity(&p, trunc);
    for psi0 in [coherent_excited(2.0, trunc), FockSpinState::number(5, Spin::Ground, trunc).unwrap()] {
        for tau in [0.5, 3.0, 8.0] {
            for k in [1, 2] {
                let pk = corrections_block_matrix(&h0, &hp, &psi0, tau, k, 0.2).unwrap();
                let state = assemble_state(&pk).unwrap();
                assert!((state.norm() - 1.0).abs() <= 1e-10);
                let direct = pk.partial_sum().norm().powi(2);
                assert!((inverse_square_norm(&pk) - direct).abs() <= 1e-10 * direct);
            }
        }
    }
}

#[test]
fn exact_propagator_preserves_norm() {
    let trunc = TruncationConfig::with_cutoff(128).unwrap();
    let psi0 = coherent_excited(4.0, trunc);
    let p = IonParams::from_lambda(0.4, 0.0, 0.1).unwrap();
    let grid = TimeGrid::uniform(10.0, 201).unwrap();
    for psi in ExactEvolution::new(&p, trunc).unwrap().evolve(&psi0, &grid).unwrap() {
        assert!((psi.norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn grid_and_pointwise_engines_agree_on_long_runs() {
    let trunc = TruncationConfig::with_cutoff(48).unwrap();
    let psi0 = coherent_excited(2.0, trunc);
    let p = IonParams::from_lambda(0.1, 0.0, 0.1).unwrap();
    let (h0, hp) = split_high_intensity(&p, trunc);
    let grid = TimeGrid::uniform(10.0, 501).unwrap();
    let stepped = corrections_block_matrix_grid(&h0, &hp, &psi0, &grid, 2, 0.1).unwrap();
    let last = corrections_block_matrix(&h0, &hp, &psi0, 10.0, 2, 0.1).unwrap();
    for n in 0..=2 {
        assert!(stepped[500].ket(n).max_abs_diff(last.ket(n)) <= 1e-9);
    }
}
