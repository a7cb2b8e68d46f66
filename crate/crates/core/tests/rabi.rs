use ion_nmpm::closed_form::{second_order_coherent_excited, CoherentExcitedSolution};
use ion_nmpm::ion::hamiltonian_full;
use ion_nmpm::rabi::{build_t, conjugate, mapped_ion_hamiltonian, rabi_hamiltonian, transform_solution, RabiParams};
use ion_nmpm::{IonParams, TruncationConfig};

#[test]
fn t_is_unitary_on_guard_subspace() {
    let trunc = TruncationConfig::with_cutoff(64).unwrap();
    for eta in [0.0, 0.1, 0.3, 0.5] {
        let t = build_t(eta, trunc);
        let tt = &t.adjoint() * &t;
        let defect = (&tt - &ion_nmpm::DenseOperator::identity(trunc)).guard_max_abs();
        assert!(defect <= 1e-9, "eta = {eta}: {defect:e}");
    }
}

#[test]
fn conjugation_maps_ion_onto_rabi_model() {
    let trunc = TruncationConfig::with_cutoff(128).unwrap();
    let p = IonParams::new(10.0, 1.0, 0.0, 0.1).unwrap();
    let t = build_t(p.eta(), trunc);
    let image = conjugate(&t, &hamiltonian_full(&p, trunc));
    assert!(image.guard_max_abs_diff(&mapped_ion_hamiltonian(&p, trunc)) <= 1e-8);
    let bare = rabi_hamiltonian(&RabiParams::from_ion(&p), trunc);
    let offset = RabiParams::from_ion(&p).energy_offset();
    assert!((image.guard_max_abs_diff(&bare) - offset).abs() <= 1e-8);
    assert!(bare.hermiticity_defect() <= 1e-10);
}

#[test]
fn detuning_maps_onto_sigma_x() {
    let trunc = TruncationConfig::with_cutoff(96).unwrap();
    let p = IonParams::new(10.0, 1.0, 2.0, 0.1).unwrap();
    let image = conjugate(&build_t(p.eta(), trunc), &hamiltonian_full(&p, trunc));
    assert!(image.guard_max_abs_diff(&mapped_ion_hamiltonian(&p, trunc)) <= 1e-8);
}

#[test]
fn transformed_initial_state_matches_gamma_form() {
    let trunc = TruncationConfig::with_cutoff(128).unwrap();
    let p = IonParams::from_lambda(0.1, 0.0, 0.1).unwrap();
    let r = second_order_coherent_excited(&p, 4.0, 0.0, trunc).unwrap();
    let out = transform_solution(&r, 0.1).unwrap();
    assert!(out.explicit_max_abs_diff <= 1e-9);
    assert!((out.state.norm() - 1.0).abs() <= 1e-10);
    assert!((out.p_plus + out.p_minus - 1.0).abs() <= 1e-10);
    assert!((out.gamma.im - (4.0 - 0.05)).abs() < 1e-15 && out.gamma.re == 0.0);
}

#[test]
fn transformed_evolved_states_match_gamma_form() {
    let trunc = TruncationConfig::with_cutoff(128).unwrap();
    let sol = CoherentExcitedSolution::new(4.0, 0.1, trunc).unwrap();
    for (lambda, kappa, tau) in [(0.1, 0.0, 1.0), (0.05, 1.0, 2.0)] {
        let p = IonParams::from_lambda(lambda, kappa, 0.1).unwrap();
        for r in [sol.first_order(&p, tau).unwrap(), sol.second_order(&p, tau, Default::default()).unwrap()] {
            let out = transform_solution(&r, 0.1).unwrap();
            assert!(out.explicit_max_abs_diff <= 1e-6, "{}", out.explicit_max_abs_diff);
            assert!(out.deviations.is_empty());
            assert!((out.state.norm() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn mismatched_eta_is_rejected() {
    let trunc = TruncationConfig::with_cutoff(64).unwrap();
    let p = IonParams::from_lambda(0.1, 0.0, 0.1).unwrap();
    let r = second_order_coherent_excited(&p, 2.0, 0.5, trunc).unwrap();
    assert!(transform_solution(&r, 0.2).is_err());
}
