//! Unitary map from the ion onto the quantum Rabi model.
//!
//! With `D = D(iη/2)`,
//!
//! T = (1/2√2)[(D† + D) + (D† − D)σz] + (1/√2)(σ⁺D − σ⁻D†)
//!
//! maps `H_ion = ν n̂ + (δ/2)σz + Ω[σ⁺D(iη) + σ⁻D†(iη)]` onto
//!
//! T H_ion T† = H_Rabi + (g²/ω) − (δ/2)σx,
//! H_Rabi = ω n̂ + (ω₀/2)σz + ig(a − a†)(σ⁺ + σ⁻),
//!
//! with ω = ν, ω₀ = 2Ω, g = ην/2. The constant g²/ω only shifts the global
//! phase, and `T σz T† = −σx` carries the detuning term.

use std::f64::consts::SQRT_2;

use crate::closed_form::{f_coefficients_for, g_coefficients, ClosedFormResult, CoefficientSet, CoherentFamily};
use crate::error::{Error, Result};
use crate::fock::{
    build_ladder, displacement_fock, sigma_minus, sigma_plus, sigma_x, sigma_z, DenseOperator, FockSpinState,
    TruncationConfig,
};
use crate::ion::IonParams;
use crate::linalg::{C64, I};
use crate::report::{DeviationContext, DeviationRecord};

/// Largest componentwise difference tolerated between the numeric image and the γ-form.
pub const GAMMA_FORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiParams {
    /// Field frequency ω.
    pub omega_field: f64,
    /// Qubit splitting ω₀.
    pub omega_qubit: f64,
    /// Coupling g.
    pub g: f64,
}

impl RabiParams {
    /// ω = ν, ω₀ = 2Ω, g = ην/2.
    pub fn from_ion(p: &IonParams) -> Self {
        Self { omega_field: p.nu(), omega_qubit: 2.0 * p.omega(), g: p.eta() * p.nu() / 2.0 }
    }

    /// The c-number g²/ω left over by the conjugation.
    pub fn energy_offset(&self) -> f64 {
        self.g * self.g / self.omega_field
    }
}

/// The map T in the spin-major basis.
pub fn build_t(eta: f64, trunc: TruncationConfig) -> DenseOperator {
    let d = displacement_fock(C64::new(0.0, eta / 2.0), trunc);
    let dd = d.adjoint();
    let sum = DenseOperator::lift(&(&dd + &d), trunc);
    let diff = DenseOperator::lift(&(&dd - &d), trunc);
    let lifted_d = DenseOperator::lift(&d, trunc);
    let lifted_dd = DenseOperator::lift(&dd, trunc);
    let diag = &(&sum + &(&diff * &sigma_z(trunc))) * (1.0 / (2.0 * SQRT_2));
    let flip = &(&(&sigma_plus(trunc) * &lifted_d) - &(&sigma_minus(trunc) * &lifted_dd)) * (1.0 / SQRT_2);
    &diag + &flip
}

/// `ω n̂ + (ω₀/2)σz + ig(a − a†)(σ⁺ + σ⁻)`.
pub fn rabi_hamiltonian(rp: &RabiParams, trunc: TruncationConfig) -> DenseOperator {
    let l = build_ladder(trunc);
    let coupling = &(&(&l.a - &l.a_dag) * &sigma_x(trunc)) * (I * rp.g);
    &(&(&l.num * rp.omega_field) + &(&sigma_z(trunc) * (rp.omega_qubit / 2.0))) + &coupling
}

/// Image of the ion Hamiltonian under T predicted by the parameter map:
/// `H_Rabi + g²/ω − (δ/2)σx`.
pub fn mapped_ion_hamiltonian(p: &IonParams, trunc: TruncationConfig) -> DenseOperator {
    let rp = RabiParams::from_ion(p);
    let offset = &DenseOperator::identity(trunc) * rp.energy_offset();
    let detuning = &sigma_x(trunc) * (-p.delta() / 2.0);
    &(&rabi_hamiltonian(&rp, trunc) + &offset) + &detuning
}

/// `T A T†`.
pub fn conjugate(t: &DenseOperator, a: &DenseOperator) -> DenseOperator {
    &(t * a) * &t.adjoint()
}

/// Amplitudes in the `|±⟩ = (|g⟩ ± |e⟩)/√2` basis: first block `|+⟩`, second block `|−⟩`.
pub fn to_plus_minus(state: &FockSpinState) -> FockSpinState {
    let e = state.excited_block();
    let g = state.ground_block();
    let h = C64::new(1.0 / SQRT_2, 0.0);
    let plus = crate::fock::FockKet::combination(&[(h, &g), (h, &e)]);
    let minus = crate::fock::FockKet::combination(&[(h, &g), (-h, &e)]);
    FockSpinState::from_blocks(&plus, &minus).expect("blocks share the truncation")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedState {
    /// `T ψ` in the `|±⟩` basis (first block `|+⟩`, second `|−⟩`).
    pub state: FockSpinState,
    /// γ = i(α − η/2).
    pub gamma: C64,
    /// The γ-form expansion of the same state, normalized with the ion-frame factor.
    pub explicit: FockSpinState,
    /// max |state − explicit| componentwise.
    pub explicit_max_abs_diff: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub deviations: Vec<DeviationRecord>,
}

/// Applies T to a coherent-state closed-form solution and compares with its γ-form expansion.
pub fn transform_solution(ion_result: &ClosedFormResult, eta: f64) -> Result<TransformedState> {
    let prov = ion_result.provenance;
    let alpha = prov.alpha.ok_or_else(|| {
        Error::InvalidParameter("the rabi-frame expansion is defined for coherent-state solutions only".into())
    })?;
    if prov.eta != eta {
        return Err(Error::InvalidParameter(format!("solution has eta = {}, map built for eta = {eta}", prov.eta)));
    }
    let trunc = ion_result.state.trunc();
    let t = build_t(eta, trunc);
    let state = to_plus_minus(&t.apply(&ion_result.state));

    let x = alpha - eta / 2.0;
    let family = CoherentFamily::new(x, trunc)?;
    let set = prov.coefficients.unwrap_or_default();
    let (plus, minus) = gamma_form_coefficients(alpha, eta, prov.kappa, prov.lambda, prov.tau, ion_result.order, set);
    let explicit = FockSpinState::from_blocks(&family.combine(plus), &family.combine(minus))?
        .scaled(C64::new(ion_result.norm_factor, 0.0));

    let (mut worst, mut at) = (0.0_f64, 0);
    for (i, (a, b)) in state.amps().iter().zip(explicit.amps().iter()).enumerate() {
        let d = (a - b).norm();
        if d > worst {
            worst = d;
            at = i;
        }
    }
    let mut deviations = Vec::new();
    if !(worst <= GAMMA_FORM_TOL) {
        let ctx = DeviationContext {
            operation: "transform_solution",
            order: ion_result.order,
            lambda: prov.lambda,
            eta,
            kappa: prov.kappa,
            alpha,
            tau: prov.tau,
        };
        deviations.push(ctx.record("gamma_form", explicit.amps()[at].norm(), state.amps()[at].norm()));
    }
    let p_plus = state.excited_population();
    let p_minus = state.norm().powi(2) - p_plus;
    Ok(TransformedState {
        state,
        gamma: C64::new(0.0, x),
        explicit,
        explicit_max_abs_diff: worst,
        p_plus,
        p_minus,
        deviations,
    })
}

/// Coefficients of `(|γ⟩, (∂ + x)|γ⟩, (∂² + 2x∂ + x²)|γ⟩)`, x = α − η/2, on `|+⟩` and `|−⟩`.
fn gamma_form_coefficients(
    alpha: f64,
    eta: f64,
    kappa: f64,
    lambda: f64,
    tau: f64,
    order: usize,
    set: CoefficientSet,
) -> ([C64; 3], [C64; 3]) {
    let s = tau.sin();
    let c = tau.cos();
    let g = g_coefficients(alpha, tau, eta, kappa);
    let f = f_coefficients_for(set, alpha, tau, eta, kappa);
    let l = lambda;
    let l2 = if order >= 2 { lambda * lambda } else { 0.0 };
    let h = eta / 2.0;
    let minus = [
        -C64::new(c - l2 * (f.f1 + h * f.f2 + h * h * f.f3), l * (g.g1 - h * g.g2)),
        C64::new(l2 * (f.f2 + eta * f.f3), l * g.g2),
        C64::new(l2 * f.f3, 0.0),
    ];
    let plus = [
        C64::new(-l * (g.g3 - h * g.g4), l2 * (f.f4 + h * f.f5 - h * h * f.f6) - s),
        -C64::new(l * g.g4, l2 * (f.f5 - eta * f.f6)),
        C64::new(0.0, -l2 * f.f6),
    ];
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_without_recoil() {
        let trunc = TruncationConfig::with_cutoff(8).unwrap();
        let t = build_t(0.0, trunc);
        let id = DenseOperator::identity(trunc);
        let expect = &(&id * (1.0 / SQRT_2)) + &(&(&sigma_plus(trunc) - &sigma_minus(trunc)) * (1.0 / SQRT_2));
        assert!((&t - &expect).max_abs() < 1e-15);
        assert!(t.unitarity_defect() < 1e-15);
    }

    #[test]
    fn t_is_not_an_involution() {
        let trunc = TruncationConfig::with_cutoff(64).unwrap();
        let t = build_t(0.1, trunc);
        let sq = &t * &t;
        assert!((&sq - &DenseOperator::identity(trunc)).guard_max_abs() > 0.1);
    }

    #[test]
    fn sigma_z_maps_to_minus_sigma_x() {
        let trunc = TruncationConfig::with_cutoff(64).unwrap();
        let t = build_t(0.1, trunc);
        let img = conjugate(&t, &sigma_z(trunc));
        assert!(img.guard_max_abs_diff(&(&sigma_x(trunc) * -1.0)) < 1e-9);
    }

    #[test]
    fn uncoupled_rabi_hamiltonian_is_diagonal() {
        let trunc = TruncationConfig::with_cutoff(8).unwrap();
        let h = rabi_hamiltonian(&RabiParams { omega_field: 1.0, omega_qubit: 20.0, g: 0.0 }, trunc);
        for i in 0..trunc.dim() {
            for j in 0..trunc.dim() {
                if i != j {
                    assert_eq!(h.matrix()[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        let h = rabi_hamiltonian(&RabiParams { omega_field: 1.0, omega_qubit: 20.0, g: 0.05 }, trunc);
        assert!(h.hermiticity_defect() <= 1e-10);
    }

    #[test]
    fn parameter_map() {
        let p = IonParams::new(10.0, 1.0, 0.0, 0.1).unwrap();
        let rp = RabiParams::from_ion(&p);
        assert_eq!((rp.omega_field, rp.omega_qubit), (1.0, 20.0));
        assert!((rp.g - 0.05).abs() < 1e-16);
        assert!((rp.energy_offset() - 0.0025).abs() < 1e-16);
    }
}
