//! The laser-driven trapped ion.
//!
//! `H = ν n̂ + (δ/2) σz + Ω [σ⁺ D(iη) + σ⁻ D†(iη)]` with `δ = νκ`. Time is
//! rescaled to `τ = Ωt`, so the dimensionless generator is `H/Ω = h0 + λ hp`
//! with `h0 = σ⁺ D(iη) + σ⁻ D†(iη)`, `hp = n̂ + (κ/2) σz` and `λ = ν/Ω`.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::HermitianPropagator;
use crate::fock::{
    build_ladder, coherent_ket, displacement_fock, sigma_z, DenseOperator, FockKet, FockSpinState, LadderOperators,
    Spin, TruncationConfig,
};
use crate::linalg::{CMatrix, C64, I};

/// Input states must be normalized to this tolerance.
pub const NORMALIZED_TOL: f64 = 1e-10;

/// Largest boundary population tolerated in an evolved state.
pub const EVOLVED_LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParams {
    omega: f64,
    nu: f64,
    kappa: f64,
    eta: f64,
}

impl IonParams {
    /// Rabi frequency Ω, trap frequency ν, detuning multiple κ (δ = νκ), Lamb-Dicke η.
    pub fn new(omega: f64, nu: f64, kappa: f64, eta: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be finite and > 0, got {omega}")));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be finite and > 0, got {nu}")));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be finite, got {kappa}")));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be finite and >= 0, got {eta}")));
        }
        if kappa.fract() != 0.0 {
            warn!("kappa = {kappa} is not an integer; the formulas do not depend on integrality");
        }
        Ok(Self { omega, nu, kappa, eta })
    }

    /// Parameters in units of Ω (Ω = 1, ν = λ).
    pub fn from_lambda(lambda: f64, kappa: f64, eta: f64) -> Result<Self> {
        Self::new(1.0, lambda, kappa, eta)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        self.nu * self.kappa
    }

    /// λ = ν/Ω.
    pub fn lambda(&self) -> f64 {
        self.nu / self.omega
    }

    pub fn is_high_intensity(&self) -> bool {
        self.lambda() < 1.0
    }
}

/// Strictly ascending rescaled times τ = Ωt, starting at or after 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    taus: Vec<f64>,
}

impl TimeGrid {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidParameter("time grid is empty".into()));
        }
        if taus.iter().any(|t| !t.is_finite()) || taus[0] < 0.0 {
            return Err(Error::InvalidParameter("time grid must be finite and start at tau >= 0".into()));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("time grid must be strictly ascending".into()));
        }
        Ok(Self { taus })
    }

    /// `points` equally spaced samples of `[0, tau_max]`, both ends included.
    pub fn uniform(tau_max: f64, points: usize) -> Result<Self> {
        if points < 2 || !(tau_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "uniform grid needs tau_max > 0 and at least 2 points, got tau_max = {tau_max}, points = {points}"
            )));
        }
        let step = tau_max / (points - 1) as f64;
        Self::new((0..points).map(|i| if i + 1 == points { tau_max } else { i as f64 * step }).collect())
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStateSpec {
    /// |n⟩|g⟩
    FockGround { n: usize },
    /// |n⟩|e⟩
    FockExcited { n: usize },
    /// |iα⟩|e⟩, α real
    CoherentExcited { alpha: f64 },
}

impl InitialStateSpec {
    pub fn build(&self, trunc: TruncationConfig) -> Result<FockSpinState> {
        match *self {
            Self::FockGround { n } => FockSpinState::number(n, Spin::Ground, trunc),
            Self::FockExcited { n } => FockSpinState::number(n, Spin::Excited, trunc),
            Self::CoherentExcited { alpha } => Ok(FockSpinState::product(&coherent_ket(alpha, trunc)?, Spin::Excited)),
        }
    }
}

/// Operators shared by the ion-frame computations at one parameter point.
#[derive(Debug, Clone)]
pub struct IonOperators {
    pub params: IonParams,
    pub trunc: TruncationConfig,
    pub ladder: LadderOperators,
    pub sigma_z: DenseOperator,
    /// Fock-space D(iη).
    pub d_fock: CMatrix,
    pub h0: DenseOperator,
    pub hp: DenseOperator,
}

impl IonOperators {
    pub fn new(params: IonParams, trunc: TruncationConfig) -> Self {
        let d_fock = displacement_fock(C64::new(0.0, params.eta()), trunc);
        let h0 = DenseOperator::from_spin_blocks(trunc, None, Some(&d_fock), Some(&d_fock.adjoint()), None);
        let ladder = build_ladder(trunc);
        let sz = sigma_z(trunc);
        let hp = &ladder.num + &(&sz * (params.kappa() / 2.0));
        Self { params, trunc, ladder, sigma_z: sz, d_fock, h0, hp }
    }

    /// `H/Ω = h0 + λ hp`.
    pub fn scaled_hamiltonian(&self) -> DenseOperator {
        &self.h0 + &(&self.hp * self.params.lambda())
    }

    /// Full H in frequency units.
    pub fn hamiltonian(&self) -> DenseOperator {
        let p = &self.params;
        let h = &(&self.ladder.num * p.nu()) + &(&self.sigma_z * (p.delta() / 2.0));
        &h + &(&self.h0 * p.omega())
    }
}

/// `ν n̂ + (δ/2) σz + Ω [σ⁺ D(iη) + σ⁻ D†(iη)]`.
pub fn hamiltonian_full(p: &IonParams, trunc: TruncationConfig) -> DenseOperator {
    IonOperators::new(*p, trunc).hamiltonian()
}

/// `(h0, hp)` with `H/Ω = h0 + λ hp`.
pub fn split_high_intensity(p: &IonParams, trunc: TruncationConfig) -> (DenseOperator, DenseOperator) {
    if !p.is_high_intensity() {
        warn!("lambda = {} is not below 1; the high-intensity expansion is not expected to converge", p.lambda());
    }
    let ops = IonOperators::new(*p, trunc);
    (ops.h0, ops.hp)
}

/// `e^{+i h0 τ} = cos τ + i sin τ h0`, valid because `h0² = 1`.
pub fn propagator_h0(p: &IonParams, tau: f64, trunc: TruncationConfig) -> DenseOperator {
    let (h0, _) = split_high_intensity(p, trunc);
    involution_propagator(&h0, -tau)
}

/// `e^{−i h τ} = cos τ − i sin τ h` for an involution `h`.
pub fn involution_propagator(h: &DenseOperator, tau: f64) -> DenseOperator {
    let id = DenseOperator::identity(h.trunc());
    &(&id * tau.cos()) + &(h * (-I * tau.sin()))
}

/// `e^{−i(h0 + λ hp)τ}` with the spectral factorization built once.
#[derive(Debug, Clone)]
pub struct ExactEvolution {
    prop: HermitianPropagator,
    trunc: TruncationConfig,
}

impl ExactEvolution {
    pub fn new(p: &IonParams, trunc: TruncationConfig) -> Result<Self> {
        let h = IonOperators::new(*p, trunc).scaled_hamiltonian();
        Ok(Self { prop: HermitianPropagator::new(&h)?, trunc })
    }

    pub fn from_operators(ops: &IonOperators) -> Result<Self> {
        Ok(Self { prop: HermitianPropagator::new(&ops.scaled_hamiltonian())?, trunc: ops.trunc })
    }

    pub fn evolve(&self, psi0: &FockSpinState, grid: &TimeGrid) -> Result<Vec<FockSpinState>> {
        check_initial(psi0, self.trunc)?;
        let coords = self.prop.to_eigenbasis(psi0.amps());
        grid.taus()
            .par_iter()
            .map(|&tau| {
                let psi = FockSpinState::new(self.prop.evolve_coords(&coords, tau), self.trunc)?;
                psi.check_leakage(EVOLVED_LEAKAGE_LIMIT)?;
                Ok(psi)
            })
            .collect()
    }

    pub fn evolve_to(&self, psi0: &FockSpinState, tau: f64) -> Result<FockSpinState> {
        let mut out = self.evolve(psi0, &TimeGrid::new(vec![tau])?)?;
        Ok(out.remove(0))
    }
}

fn check_initial(psi0: &FockSpinState, trunc: TruncationConfig) -> Result<()> {
    if psi0.trunc() != trunc {
        return Err(Error::DimensionMismatch { expected: trunc.dim(), found: psi0.trunc().dim() });
    }
    if !psi0.is_normalized(NORMALIZED_TOL) {
        return Err(Error::InvalidParameter(format!("initial state has norm {}, expected 1", psi0.norm())));
    }
    psi0.check_leakage(crate::fock::COHERENT_LEAKAGE_LIMIT)
}

/// ψ(τ) = e^{−i(h0 + λ hp)τ} ψ0 on every grid point.
pub fn exact_evolve(p: &IonParams, psi0: &FockSpinState, grid: &TimeGrid) -> Result<Vec<FockSpinState>> {
    ExactEvolution::new(p, psi0.trunc())?.evolve(psi0, grid)
}

/// Excited-state population Σ_n |ψ_e(n)|².
pub fn p_excited(psi: &FockSpinState) -> f64 {
    psi.excited_population()
}

/// Largest guard-subspace residuals of the algebraic identities obeyed by `h0` and `hp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityDefects {
    /// `h0² − 1`.
    pub involution: f64,
    /// `[h0, n̂] + η h0 X`.
    pub commutator: f64,
    /// `h0 n̂ h0 − n̂ − η² − iη(a − a†)σz`.
    pub sandwich: f64,
    /// `e^{ih0τ} hp e^{−ih0τ}` against its four-term form, worst over the sampled τ.
    pub conjugation: f64,
}

impl IdentityDefects {
    pub fn worst(&self) -> f64 {
        self.involution.max(self.commutator).max(self.sandwich).max(self.conjugation)
    }
}

/// `X = η + i(a − a†)σz`.
pub fn x_operator(ops: &IonOperators) -> DenseOperator {
    let id = DenseOperator::identity(ops.trunc);
    let a_minus = &ops.ladder.a - &ops.ladder.a_dag;
    &(&id * ops.params.eta()) + &(&(&a_minus * &ops.sigma_z) * I)
}

/// Residuals of the h0/hp identities, with the interaction-picture form
///
/// Ĥp(τ) = n̂ − i(η/2) sin 2τ h0 X + i(κ/2) sin 2τ h0 σz + (κ/2) cos 2τ σz + η sin²τ X.
pub fn identity_defects(ops: &IonOperators, taus: &[f64]) -> IdentityDefects {
    let (eta, kappa) = (ops.params.eta(), ops.params.kappa());
    let id = DenseOperator::identity(ops.trunc);
    let h0 = &ops.h0;
    let num = &ops.ladder.num;
    let x = x_operator(ops);
    let involution = (&(h0 * h0) - &id).guard_max_abs();
    let comm = &(h0 * num) - &(num * h0);
    let commutator = (&comm + &(&(h0 * &x) * eta)).guard_max_abs();
    let a_minus = &ops.ladder.a - &ops.ladder.a_dag;
    let sandwich_rhs = &(num + &(&id * (eta * eta))) + &(&(&a_minus * &ops.sigma_z) * (I * eta));
    let sandwich = (&(&(h0 * num) * h0) - &sandwich_rhs).guard_max_abs();
    let h0x = h0 * &x;
    let h0sz = h0 * &ops.sigma_z;
    let conjugation = taus
        .iter()
        .map(|&t| {
            let lhs = &(&involution_propagator(h0, -t) * &ops.hp) * &involution_propagator(h0, t);
            let (s2, c2, s) = ((2.0 * t).sin(), (2.0 * t).cos(), t.sin());
            let rhs = &(&(&(num + &(&h0x * (-I * (eta / 2.0) * s2))) + &(&h0sz * (I * (kappa / 2.0) * s2)))
                + &(&ops.sigma_z * (kappa / 2.0 * c2)))
                + &(&x * (eta * s * s));
            (&lhs - &rhs).guard_max_abs()
        })
        .fold(0.0, f64::max);
    IdentityDefects { involution, commutator, sandwich, conjugation }
}

/// Fock ket `D(β)|m⟩` (zero for m outside the truncation).
pub(crate) fn displaced_number(d_fock: &CMatrix, m: isize, trunc: TruncationConfig) -> FockKet {
    let amps = if m < 0 || m as usize > trunc.cutoff_n() {
        crate::linalg::CVector::zeros(trunc.fock_dim())
    } else {
        d_fock.column(m as usize).into_owned()
    };
    FockKet::new(amps, trunc).expect("column length equals the Fock dimension")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sigma_x;

    fn trunc(n: usize) -> TruncationConfig {
        TruncationConfig::with_cutoff(n).unwrap()
    }

    #[test]
    fn lambda_is_ratio() {
        let p = IonParams::new(10.0, 1.0, 0.0, 0.1).unwrap();
        assert_eq!(p.lambda(), 0.1);
        assert!(p.is_high_intensity());
        assert!(IonParams::new(0.0, 1.0, 0.0, 0.1).is_err());
        assert!(IonParams::new(1.0, 1.0, 0.0, -0.1).is_err());
        assert!(IonParams::new(1.0, 1.0, 0.5, 0.1).is_ok());
    }

    #[test]
    fn hamiltonian_reduces_to_sigma_x() {
        // ν = 0 is outside the parameter domain, so build the pieces directly.
        let t = trunc(16);
        let ops = IonOperators::new(IonParams::new(1.0, 1.0, 0.0, 0.0).unwrap(), t);
        assert!((&ops.h0 - &sigma_x(t)).max_abs() < 1e-15);
    }

    #[test]
    fn ground_vacuum_diagonal_element() {
        let t = trunc(16);
        let p = IonParams::new(10.0, 1.0, 2.0, 0.1).unwrap();
        let h = hamiltonian_full(&p, t);
        let g0 = t.g_index(0);
        assert!((h.matrix()[(g0, g0)] - C64::new(-p.delta() / 2.0, 0.0)).norm() < 1e-15);
        assert!(h.hermiticity_defect() <= 1e-10);
    }

    #[test]
    fn split_reconstructs_hamiltonian() {
        let t = trunc(64);
        let p = IonParams::new(10.0, 1.0, 0.0, 0.1).unwrap();
        let (h0, hp) = split_high_intensity(&p, t);
        let lhs = &hamiltonian_full(&p, t) * (1.0 / p.omega());
        let rhs = &h0 + &(&hp * p.lambda());
        assert!((&lhs - &rhs).max_abs() <= 1e-12);
        let e3 = t.e_index(3);
        let p1 = IonParams::new(10.0, 1.0, 1.0, 0.1).unwrap();
        let (_, hp1) = split_high_intensity(&p1, t);
        assert_eq!(hp1.matrix()[(e3, e3)], C64::new(3.5, 0.0));
    }

    #[test]
    fn propagator_h0_special_times() {
        let t = trunc(64);
        let p = IonParams::from_lambda(0.1, 0.0, 0.1).unwrap();
        let (h0, _) = split_high_intensity(&p, t);
        assert!((&propagator_h0(&p, 0.0, t) - &DenseOperator::identity(t)).max_abs() < 1e-15);
        let quarter = propagator_h0(&p, std::f64::consts::FRAC_PI_2, t);
        assert!((&quarter - &(&h0 * I)).max_abs() < 1e-12);
        let spectral = crate::expm::expm_unitary(&h0, -1.3).unwrap();
        assert!(propagator_h0(&p, 1.3, t).guard_max_abs_diff(&spectral) < 1e-10);
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![-1.0, 0.0]).is_err());
        let g = TimeGrid::uniform(10.0, 1001).unwrap();
        assert_eq!(g.len(), 1001);
        assert_eq!(g.taus()[1000], 10.0);
        assert!((g.taus()[1] - 0.01).abs() < 1e-15);
        assert!(TimeGrid::uniform(10.0, 1).is_err());
    }

    #[test]
    fn initial_states() {
        let t = trunc(128);
        let s = InitialStateSpec::CoherentExcited { alpha: 4.0 }.build(t).unwrap();
        assert!((p_excited(&s) - 1.0).abs() < 1e-12);
        let s = InitialStateSpec::FockGround { n: 2 }.build(t).unwrap();
        assert_eq!(p_excited(&s), 0.0);
        let half = FockSpinState::combination(&[
            (C64::new(0.5f64.sqrt(), 0.0), &FockSpinState::number(0, Spin::Excited, t).unwrap()),
            (C64::new(0.5f64.sqrt(), 0.0), &FockSpinState::number(0, Spin::Ground, t).unwrap()),
        ]);
        assert!((p_excited(&half) - 0.5).abs() < 1e-15);
    }
}
