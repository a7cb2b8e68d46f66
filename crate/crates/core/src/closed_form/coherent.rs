//! Solutions for the initial state `|iα⟩|e⟩`, α real.
//!
//! Writing `b = α − η`, `P₁(x) = (∂ₓ + x)|ix⟩` and
//! `P₂(x) = (∂ₓ² + 2x∂ₓ + x²)|ix⟩`, the second-order ket is
//!
//! [cos τ + iλg₁ − λ²F₁] |iα⟩|e⟩ + [−iλg₂ − λ²F₂] P₁(α)|e⟩ − λ²F₃ P₂(α)|e⟩
//! + [−i sin τ − λg₃ + iλ²F₄] |ib⟩|g⟩ + [−λg₄ − iλ²F₅] P₁(b)|g⟩ − iλ²F₆ P₂(b)|g⟩,
//!
//! and the first-order ket is the same with every F set to zero.

use crate::error::{Error, Result};
use crate::fock::{coherent_derivative_ket, coherent_ket, FockKet, FockSpinState, TruncationConfig};
use crate::ion::IonParams;
use crate::linalg::C64;
use crate::report::{DeviationContext, DeviationRecord};

use super::coefficients::{
    f_coefficients, f_coefficients_for, first_order_coherent_inverse_square, g_coefficients,
    second_order_coherent_inverse_square, second_order_pe_explicit, small_rotation_pe, CoefficientSet,
};
use super::{ClosedFormResult, Validity};

/// `|ix⟩`, `P₁(x)` and `P₂(x)`.
#[derive(Debug, Clone)]
pub(crate) struct CoherentFamily {
    ket: FockKet,
    p1: FockKet,
    p2: FockKet,
}

impl CoherentFamily {
    pub(crate) fn new(x: f64, trunc: TruncationConfig) -> Result<Self> {
        let ket = coherent_ket(x, trunc)?;
        let d1 = coherent_derivative_ket(x, 1, trunc)?;
        let d2 = coherent_derivative_ket(x, 2, trunc)?;
        let r = |v: f64| C64::new(v, 0.0);
        let p1 = FockKet::combination(&[(r(1.0), &d1), (r(x), &ket)]);
        let p2 = FockKet::combination(&[(r(1.0), &d2), (r(2.0 * x), &d1), (r(x * x), &ket)]);
        Ok(Self { ket, p1, p2 })
    }

    pub(crate) fn combine(&self, c: [C64; 3]) -> FockKet {
        FockKet::combination(&[(c[0], &self.ket), (c[1], &self.p1), (c[2], &self.p2)])
    }
}

/// Coefficients of `(|ix⟩, P₁, P₂)` in the excited (x = α) and ground (x = α − η) blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BranchCoefficients {
    pub excited: [C64; 3],
    pub ground: [C64; 3],
}

pub(crate) fn branch_coefficients(
    alpha: f64,
    eta: f64,
    kappa: f64,
    lambda: f64,
    tau: f64,
    order: usize,
    set: CoefficientSet,
) -> BranchCoefficients {
    let (s, c) = tau.sin_cos();
    let g = g_coefficients(alpha, tau, eta, kappa);
    let l = lambda;
    let l2 = if order >= 2 { lambda * lambda } else { 0.0 };
    let f = f_coefficients_for(set, alpha, tau, eta, kappa);
    BranchCoefficients {
        excited: [
            C64::new(c - l2 * f.f1, l * g.g1),
            C64::new(-l2 * f.f2, -l * g.g2),
            C64::new(-l2 * f.f3, 0.0),
        ],
        ground: [
            C64::new(-l * g.g3, -s + l2 * f.f4),
            C64::new(-l * g.g4, -l2 * f.f5),
            C64::new(0.0, -l2 * f.f6),
        ],
    }
}

/// Cached kets for one (α, η, truncation); evaluates the closed forms at any (λ, κ, τ).
#[derive(Debug, Clone)]
pub struct CoherentExcitedSolution {
    alpha: f64,
    eta: f64,
    trunc: TruncationConfig,
    excited: CoherentFamily,
    ground: CoherentFamily,
}

impl CoherentExcitedSolution {
    pub fn new(alpha: f64, eta: f64, trunc: TruncationConfig) -> Result<Self> {
        if !(alpha.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha and eta must be finite, got {alpha}, {eta}")));
        }
        Ok(Self {
            alpha,
            eta,
            trunc,
            excited: CoherentFamily::new(alpha, trunc)?,
            ground: CoherentFamily::new(alpha - eta, trunc)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn trunc(&self) -> TruncationConfig {
        self.trunc
    }

    /// The unnormalized order-1 or order-2 ket.
    pub fn unnormalized(&self, lambda: f64, kappa: f64, tau: f64, order: usize, set: CoefficientSet) -> FockSpinState {
        let b = branch_coefficients(self.alpha, self.eta, kappa, lambda, tau, order, set);
        FockSpinState::from_blocks(&self.excited.combine(b.excited), &self.ground.combine(b.ground))
            .expect("both blocks share the truncation")
    }

    /// Excited-state population of the normalized order-2 state.
    pub fn p_excited(&self, lambda: f64, kappa: f64, tau: f64, set: CoefficientSet) -> f64 {
        let u = self.unnormalized(lambda, kappa, tau, 2, set);
        u.excited_population() / u.norm().powi(2)
    }

    fn check_params(&self, p: &IonParams) -> Result<()> {
        if p.eta() != self.eta {
            return Err(Error::InvalidParameter(format!(
                "solution cached for eta = {}, parameters have eta = {}",
                self.eta,
                p.eta()
            )));
        }
        if !p.lambda().is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        Ok(())
    }

    pub fn first_order(&self, p: &IonParams, tau: f64) -> Result<ClosedFormResult> {
        self.check_params(p)?;
        let (lam, kappa) = (p.lambda(), p.kappa());
        let u = self.unnormalized(lam, kappa, tau, 1, CoefficientSet::Published);
        let explicit = first_order_coherent_inverse_square(self.alpha, tau, lam, self.eta, kappa);
        let ctx = self.context("first_order_coherent_excited", 1, p, tau);
        ClosedFormResult::from_unnormalized(
            u,
            explicit,
            1,
            Validity::assess(lam, tau),
            &ctx,
            Some(CoefficientSet::Published),
        )
    }

    pub fn second_order(&self, p: &IonParams, tau: f64, set: CoefficientSet) -> Result<ClosedFormResult> {
        self.check_params(p)?;
        let (lam, kappa) = (p.lambda(), p.kappa());
        let u = self.unnormalized(lam, kappa, tau, 2, set);
        let explicit = second_order_coherent_inverse_square(self.alpha, tau, lam, self.eta, kappa);
        let ctx = self.context("second_order_coherent_excited", 2, p, tau);
        let mut result = ClosedFormResult::from_unnormalized(u, explicit, 2, Validity::assess(lam, tau), &ctx, Some(set))?;
        result.deviations.extend(self.coefficient_deviations(&ctx, kappa, tau));
        Ok(result)
    }

    /// Published F₁, F₄ against the values that reproduce the exact second-order ket.
    fn coefficient_deviations(&self, ctx: &DeviationContext<'_>, kappa: f64, tau: f64) -> Vec<DeviationRecord> {
        let published = f_coefficients(self.alpha, tau, self.eta, kappa);
        let corrected = f_coefficients_for(CoefficientSet::Corrected, self.alpha, tau, self.eta, kappa);
        [("excited_coherent_F1", published.f1, corrected.f1), ("ground_coherent_F4", published.f4, corrected.f4)]
            .into_iter()
            .filter_map(|(branch, stated, direct)| ctx.compare(branch, stated, direct))
            .collect()
    }

    fn context<'a>(&self, operation: &'a str, order: usize, p: &IonParams, tau: f64) -> DeviationContext<'a> {
        DeviationContext {
            operation,
            order,
            lambda: p.lambda(),
            eta: self.eta,
            kappa: p.kappa(),
            alpha: self.alpha,
            tau,
        }
    }
}

/// First-order state for `|iα⟩|e⟩`.
pub fn first_order_coherent_excited(
    p: &IonParams,
    alpha: f64,
    tau: f64,
    trunc: TruncationConfig,
) -> Result<ClosedFormResult> {
    CoherentExcitedSolution::new(alpha, p.eta(), trunc)?.first_order(p, tau)
}

/// Second-order state for `|iα⟩|e⟩` with the corrected coefficients.
///
/// The published F₁ and F₄ disagree with the exact second-order correction
/// ket; their values are returned in `deviations` next to the corrected
/// ones, as is the published [N⁽²⁾]⁻² next to the direct norm.
pub fn second_order_coherent_excited(
    p: &IonParams,
    alpha: f64,
    tau: f64,
    trunc: TruncationConfig,
) -> Result<ClosedFormResult> {
    second_order_coherent_excited_with(p, alpha, tau, trunc, CoefficientSet::Corrected)
}

/// Second-order state for `|iα⟩|e⟩` with an explicit coefficient set.
pub fn second_order_coherent_excited_with(
    p: &IonParams,
    alpha: f64,
    tau: f64,
    trunc: TruncationConfig,
    set: CoefficientSet,
) -> Result<ClosedFormResult> {
    CoherentExcitedSolution::new(alpha, p.eta(), trunc)?.second_order(p, tau, set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderPe {
    /// The published closed-form Pe(τ).
    pub explicit: f64,
    /// Pe(τ) of the normalized second-order state; the authoritative value.
    pub direct: f64,
    pub deviation: Option<DeviationRecord>,
}

/// Second-order Pe(τ) for `|iα⟩|e⟩`, explicit formula and direct evaluation.
pub fn p_excited_second_order(p: &IonParams, alpha: f64, tau: f64, trunc: TruncationConfig) -> Result<SecondOrderPe> {
    let result = second_order_coherent_excited(p, alpha, tau, trunc)?;
    let direct = result.p_excited();
    let explicit = second_order_pe_explicit(alpha, tau, p.lambda(), p.eta(), p.kappa());
    let ctx = DeviationContext {
        operation: "p_excited_second_order",
        order: 2,
        lambda: p.lambda(),
        eta: p.eta(),
        kappa: p.kappa(),
        alpha,
        tau,
    };
    Ok(SecondOrderPe { explicit, direct, deviation: ctx.compare("p_excited", explicit, direct) })
}

/// Small-rotation Pe(τ) comparator with χ = −λ²η²/2.
pub fn p_excited_small_rotation(alpha: f64, eta: f64, lambda: f64, tau: f64) -> f64 {
    small_rotation_pe(alpha, eta, lambda, tau)
}
