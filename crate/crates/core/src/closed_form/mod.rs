//! Hand-integrated first- and second-order solutions of the ion in the
//! high-intensity regime, with their explicit normalization constants.
//!
//! Every solution is assembled unnormalized, normalized by its direct norm,
//! and the explicit normalization formula is evaluated alongside. Explicit
//! values that disagree with the direct ones are returned as
//! [`DeviationRecord`]s rather than silently replaced.

mod coefficients;
mod coherent;

pub use coefficients::{
    f_coefficients, f_coefficients_for, first_order_coherent_inverse_square, first_order_fock_excited_inverse_square,
    first_order_fock_ground_inverse_square, fock_norm_difference, g_coefficients, s_fn,
    second_order_coherent_inverse_square, second_order_pe_explicit, small_rotation_pe, CoefficientSet, FCoefficients,
    GCoefficients,
};
pub use coherent::{
    first_order_coherent_excited, p_excited_second_order, p_excited_small_rotation, second_order_coherent_excited,
    second_order_coherent_excited_with, CoherentExcitedSolution, SecondOrderPe,
};

pub(crate) use coherent::CoherentFamily;

use log::warn;

use crate::error::{Error, Result};
use crate::fock::{DenseOperator, FockKet, FockSpinState, TruncationConfig};
use crate::ion::{displaced_number, IonOperators, IonParams, NORMALIZED_TOL};
use crate::linalg::{CVector, C64, I};
use crate::report::{DeviationContext, DeviationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Ok,
    /// λτ > 1: the expansion is outside its expected range.
    WarningLambdaTau,
}

impl Validity {
    pub fn assess(lambda: f64, tau: f64) -> Self {
        if lambda * tau > 1.0 {
            warn!("lambda tau = {:.3} exceeds 1; the perturbative state is not expected to be accurate", lambda * tau);
            Self::WarningLambdaTau
        } else {
            Self::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormResult {
    /// Unit-norm state.
    pub state: FockSpinState,
    /// The assembled sum before normalization.
    pub unnormalized: FockSpinState,
    /// N = 1/‖unnormalized‖.
    pub norm_factor: f64,
    /// N⁻² from the explicit closed-form expression.
    pub explicit_inverse_square: f64,
    pub order: usize,
    pub validity: Validity,
    /// Explicit expressions that disagree with their direct evaluation.
    pub deviations: Vec<DeviationRecord>,
    pub provenance: Provenance,
}

/// Parameters a closed-form state was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub lambda: f64,
    pub eta: f64,
    pub kappa: f64,
    pub tau: f64,
    /// Coherent amplitude, for the `|iα⟩|e⟩` solutions.
    pub alpha: Option<f64>,
    /// Second-order coefficients used, for the `|iα⟩|e⟩` solutions.
    pub coefficients: Option<CoefficientSet>,
}

impl ClosedFormResult {
    pub(crate) fn from_unnormalized(
        unnormalized: FockSpinState,
        explicit_inverse_square: f64,
        order: usize,
        validity: Validity,
        ctx: &DeviationContext<'_>,
        coefficients: Option<CoefficientSet>,
    ) -> Result<Self> {
        let direct = unnormalized.norm().powi(2);
        if !(direct > 0.0 && direct.is_finite()) {
            return Err(Error::NonPositiveNormSquared { value: direct });
        }
        let norm_factor = direct.sqrt().recip();
        let state = unnormalized.scaled(C64::new(norm_factor, 0.0));
        let deviations = ctx.compare("norm", explicit_inverse_square, direct).into_iter().collect();
        let provenance = Provenance {
            lambda: ctx.lambda,
            eta: ctx.eta,
            kappa: ctx.kappa,
            tau: ctx.tau,
            alpha: (!ctx.alpha.is_nan()).then_some(ctx.alpha),
            coefficients,
        };
        Ok(Self { state, unnormalized, norm_factor, explicit_inverse_square, order, validity, deviations, provenance })
    }

    /// Excited-state population of the normalized state.
    pub fn p_excited(&self) -> f64 {
        self.state.excited_population()
    }
}

fn check_initial(psi0: &FockSpinState) -> Result<()> {
    if !psi0.is_normalized(NORMALIZED_TOL) {
        return Err(Error::InvalidParameter(format!("initial state has norm {}, expected 1", psi0.norm())));
    }
    psi0.check_leakage(crate::fock::COHERENT_LEAKAGE_LIMIT)
}

fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be finite, got {tau}")));
    }
    Ok(())
}

/// First-order state for an arbitrary initial state, by operator composition:
///
/// cos τ [1 − iλτ n̂ − iλ(η/2)(τ − tan τ) X − iλ(κ/2) tan τ σz] ψ0
/// − i sin τ h0 [1 + λ(ητ/2)(a − a†)σz − iλτ(n̂ + η²/2)] ψ0,
///
/// with `X = η + i(a − a†)σz`, every `cos τ tan τ` product written out.
pub fn first_order_general(p: &IonParams, psi0: &FockSpinState, tau: f64) -> Result<ClosedFormResult> {
    first_order_general_with(&IonOperators::new(*p, psi0.trunc()), psi0, tau)
}

/// [`first_order_general`] with prebuilt operators.
pub fn first_order_general_with(ops: &IonOperators, psi0: &FockSpinState, tau: f64) -> Result<ClosedFormResult> {
    if ops.trunc != psi0.trunc() {
        return Err(Error::DimensionMismatch { expected: ops.trunc.dim(), found: psi0.trunc().dim() });
    }
    check_initial(psi0)?;
    check_tau(tau)?;
    let p = ops.params;
    let (lam, eta, kappa) = (p.lambda(), p.eta(), p.kappa());
    let (s, c) = tau.sin_cos();
    let sf = s_fn(tau);
    let t = ops.trunc;
    let id = DenseOperator::identity(t);
    let num = &ops.ladder.num;
    let a_minus = &ops.ladder.a - &ops.ladder.a_dag;
    let a_minus_sz = &a_minus * &ops.sigma_z;
    let x = &(&id * eta) + &(&a_minus_sz * I);

    let cos_branch = {
        let mut b = &id * c;
        b = &b + &(num * C64::new(0.0, -lam * tau * c));
        b = &b + &(&x * C64::new(0.0, -lam * eta / 2.0 * sf));
        &b + &(&ops.sigma_z * C64::new(0.0, -lam * kappa / 2.0 * s))
    };
    let sin_inner = {
        let mut b = id.clone();
        b = &b + &(&a_minus_sz * (lam * eta * tau / 2.0));
        &b + &(&(num + &(&id * (eta * eta / 2.0))) * C64::new(0.0, -lam * tau))
    };
    let u = &cos_branch.apply(psi0) - &(&ops.h0 * &sin_inner).apply(psi0).scaled(C64::new(0.0, s));

    let explicit = first_order_general_inverse_square(ops, psi0, tau);
    let ctx = DeviationContext {
        operation: "first_order_general",
        order: 1,
        lambda: lam,
        eta,
        kappa,
        alpha: f64::NAN,
        tau,
    };
    ClosedFormResult::from_unnormalized(u, explicit, 1, Validity::assess(lam, tau), &ctx, None)
}

/// Explicit [N⁽¹⁾]⁻² for an arbitrary initial state, from expectation values in ψ0.
pub fn first_order_general_inverse_square(ops: &IonOperators, psi0: &FockSpinState, tau: f64) -> f64 {
    let p = ops.params;
    let (lam, eta, kappa) = (p.lambda(), p.eta(), p.kappa());
    let l2 = lam * lam;
    let s = tau.sin();
    let s2t = (2.0 * tau).sin();
    let b = s * s + tau * (tau - s2t);
    let id = DenseOperator::identity(ops.trunc);
    let (a, ad, num, sz) = (&ops.ladder.a, &ops.ladder.a_dag, &ops.ladder.num, &ops.sigma_z);
    let a_minus = a - ad;
    let a_plus = a + ad;
    let a_minus_sz = &a_minus * sz;
    let x = &(&id * eta) + &(&a_minus_sz * I);
    let ev = |op: &DenseOperator| op.expectation(psi0).re;

    let mut v = 1.0 + l2 * eta * eta / 4.0 * (eta * eta + 1.0) * b + l2 * kappa * kappa / 4.0 * s * s;
    v += l2 * tau * tau * ev(&(num * num));
    let o1 = &(&(num * 2.0) - &(&(a * a) + &(ad * ad))) + &(&a_minus_sz * C64::new(0.0, 2.0 * eta));
    v += l2 * eta * eta / 4.0 * b * ev(&o1);
    let o2 = &(num * (2.0 * eta)) + &(&(&(&(&a_minus * num) * 2.0) - &a_plus) * sz).scaled(I);
    v += l2 * tau * eta / 4.0 * (2.0 * tau - s2t) * ev(&o2);
    let sin2_bracket = tau * s2t - 2.0 * s * s;
    v += l2 * kappa / 2.0 * (tau * s2t * ev(&(num * sz)) + eta / 2.0 * sin2_bracket * ev(&(&x * sz)));
    v
}

fn check_fock_level(n: usize, trunc: TruncationConfig) -> Result<()> {
    if n + 2 > trunc.guard_n() {
        return Err(Error::InvalidParameter(format!(
            "Fock level {n} must be at most guard_n - 2 = {}",
            trunc.guard_n() as isize - 2
        )));
    }
    Ok(())
}

fn number_ket(m: isize, trunc: TruncationConfig) -> FockKet {
    if m < 0 {
        FockKet::new(CVector::zeros(trunc.fock_dim()), trunc).expect("Fock dimension")
    } else {
        FockKet::number(m as usize, trunc).expect("level checked against the cutoff")
    }
}

/// `√n |n−1⟩ − √(n+1) |n+1⟩` built from `level(m)`.
fn ladder_difference(n: usize, level: impl Fn(isize) -> FockKet) -> FockKet {
    let nf = n as f64;
    FockKet::combination(&[
        (C64::new(nf.sqrt(), 0.0), &level(n as isize - 1)),
        (C64::new(-(nf + 1.0).sqrt(), 0.0), &level(n as isize + 1)),
    ])
}

/// First-order state for `|n⟩|g⟩`, expanded on number and displaced number states:
///
/// [cos τ(1 − iλτn) − iλ(η²/2)S + iλ(κ/2) sin τ] |n⟩|g⟩
/// − λ(η/2)S (√n|n−1⟩ − √(n+1)|n+1⟩)|g⟩
/// − i sin τ [1 − iλτ(n + η²/2)] |iη; n⟩|e⟩
/// + iλ(ητ/2) sin τ (√n|iη; n−1⟩ − √(n+1)|iη; n+1⟩)|e⟩,
///
/// where `S = τ cos τ − sin τ`.
pub fn first_order_fock_ground(p: &IonParams, n: usize, tau: f64, trunc: TruncationConfig) -> Result<ClosedFormResult> {
    first_order_fock(p, n, tau, trunc, true)
}

/// First-order state for `|n⟩|e⟩`; the mirror image of [`first_order_fock_ground`]
/// with `D(iη) → D†(iη)` and the signs of the κ and recoil terms flipped.
pub fn first_order_fock_excited(p: &IonParams, n: usize, tau: f64, trunc: TruncationConfig) -> Result<ClosedFormResult> {
    first_order_fock(p, n, tau, trunc, false)
}

fn first_order_fock(p: &IonParams, n: usize, tau: f64, trunc: TruncationConfig, ground: bool) -> Result<ClosedFormResult> {
    check_fock_level(n, trunc)?;
    check_tau(tau)?;
    let (lam, eta, kappa) = (p.lambda(), p.eta(), p.kappa());
    let nf = n as f64;
    let (s, c) = tau.sin_cos();
    let sf = s_fn(tau);
    let d = crate::fock::displacement_fock(C64::new(0.0, eta), trunc);
    let d = if ground { d } else { d.adjoint() };
    let sign = if ground { 1.0 } else { -1.0 };

    let diag = C64::new(c, -lam * tau * nf * c) + C64::new(0.0, -lam * eta * eta / 2.0 * sf + sign * lam * kappa / 2.0 * s);
    let same = FockKet::combination(&[
        (diag, &number_ket(n as isize, trunc)),
        (C64::new(-sign * lam * eta / 2.0 * sf, 0.0), &ladder_difference(n, |m| number_ket(m, trunc))),
    ]);
    let flip_coeff = -I * s * C64::new(1.0, -lam * tau * (nf + eta * eta / 2.0));
    let flipped = FockKet::combination(&[
        (flip_coeff, &displaced_number(&d, n as isize, trunc)),
        (
            C64::new(0.0, sign * lam * eta * tau / 2.0 * s),
            &ladder_difference(n, |m| displaced_number(&d, m, trunc)),
        ),
    ]);
    let u = if ground {
        FockSpinState::from_blocks(&flipped, &same)?
    } else {
        FockSpinState::from_blocks(&same, &flipped)?
    };
    let (explicit, operation) = if ground {
        (first_order_fock_ground_inverse_square(n, tau, lam, eta, kappa), "first_order_fock_ground")
    } else {
        (first_order_fock_excited_inverse_square(n, tau, lam, eta, kappa), "first_order_fock_excited")
    };
    let ctx = DeviationContext { operation, order: 1, lambda: lam, eta, kappa, alpha: f64::NAN, tau };
    ClosedFormResult::from_unnormalized(u, explicit, 1, Validity::assess(lam, tau), &ctx, None)
}

/// Rejects complex coherent amplitudes; the closed forms are derived for real α.
pub fn require_real_alpha(alpha: C64) -> Result<f64> {
    if alpha.im != 0.0 || !alpha.re.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "coherent amplitude alpha must be real, got {alpha}; the closed-form solutions assume real alpha"
        )));
    }
    Ok(alpha.re)
}
