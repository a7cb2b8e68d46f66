//! Scalar coefficient functions of the coherent-state solutions.
//!
//! Every `tan τ` in the hand-integrated expressions appears multiplied by
//! `cos τ` or `sin 2τ`, so each function is written in terms of
//! `S(τ) = τ cos τ − sin τ` (`= cos τ [τ − tan τ]`), `sin τ` and `cos τ`
//! and stays finite through `τ = π/2 + mπ`.

/// `τ cos τ − sin τ`.
pub fn s_fn(tau: f64) -> f64 {
    tau * tau.cos() - tau.sin()
}

/// `sin 2τ · (τ − tan τ) = τ sin 2τ − 2 sin² τ`.
fn sin2_bracket(tau: f64) -> f64 {
    tau * (2.0 * tau).sin() - 2.0 * tau.sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FCoefficients {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub f5: f64,
    pub f6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GCoefficients {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

/// Which second-order coefficients multiply the seven branches.
///
/// `Published` are F₁..F₆ as printed. `Corrected` replaces F₁ by F₁ + F₃ and
/// F₄ by F₄ − F₆ − (αη(1+η²)/8) τ² sin τ, which makes the closed-form state
/// coincide with the exact second-order correction ket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientSet {
    Published,
    #[default]
    Corrected,
}

/// F₁..F₆(α, τ) as published, in singularity-safe form.
pub fn f_coefficients(alpha: f64, tau: f64, eta: f64, kappa: f64) -> FCoefficients {
    let (s, c) = tau.sin_cos();
    let sf = s_fn(tau);
    let a = alpha;
    let f1 = tau * eta / 8.0 * sf * (a * a * eta + (eta * eta + 1.0) * (eta - 2.0 * a)) + tau * kappa * kappa / 8.0 * s;
    let f2 = tau / 4.0
        * (2.0 * a * tau * c + eta * (3.0 * eta * a - 2.0 * a * a - (eta * eta + 1.0)) * sf + 2.0 * a * kappa * s);
    let f3 = tau / 8.0 * (4.0 * tau * a * a * c + eta * (eta - 4.0 * a) * sf);
    let f4 = eta / 8.0
        * (tau * tau * (a * eta * (a + eta) + 3.0 * a - eta) * s
            - (2.0 * (a * kappa + eta - a) + eta * (a * a + 1.0)) * sf)
        - kappa * kappa / 8.0 * sf;
    let f5 = 0.25 * (eta * (a * eta + kappa + 1.0) * sf - (2.0 * a - eta) * (a * eta + 1.0) * tau * tau * s);
    let f6 = 0.125 * (tau * tau * (4.0 * a * (eta - a) - eta * eta) * s + eta * eta * sf);
    FCoefficients { f1, f2, f3, f4, f5, f6 }
}

/// F-coefficients for the requested set.
pub fn f_coefficients_for(set: CoefficientSet, alpha: f64, tau: f64, eta: f64, kappa: f64) -> FCoefficients {
    let f = f_coefficients(alpha, tau, eta, kappa);
    match set {
        CoefficientSet::Published => f,
        CoefficientSet::Corrected => FCoefficients {
            f1: f.f1 + f.f3,
            f4: f.f4 - f.f6 - alpha * eta * (1.0 + eta * eta) / 8.0 * tau * tau * tau.sin(),
            ..f
        },
    }
}

/// g₁..g₄(α, τ).
pub fn g_coefficients(alpha: f64, tau: f64, eta: f64, kappa: f64) -> GCoefficients {
    let (s, c) = tau.sin_cos();
    let sf = s_fn(tau);
    GCoefficients {
        g1: eta / 2.0 * (alpha - eta) * sf - kappa / 2.0 * s,
        g2: 0.5 * (2.0 * alpha * tau * c - eta * sf),
        g3: tau * alpha * eta / 2.0 * s,
        g4: tau / 2.0 * (2.0 * alpha - eta) * s,
    }
}

/// Explicit [N⁽¹⁾]⁻² for `|iα⟩|e⟩`.
pub fn first_order_coherent_inverse_square(alpha: f64, tau: f64, lambda: f64, eta: f64, kappa: f64) -> f64 {
    let (a, l2) = (alpha, lambda * lambda);
    let s = tau.sin();
    let t2 = tau * tau;
    let mut v = 1.0
        + l2 / 2.0
            * (a * eta * (a - eta) * (eta - 4.0 * a * t2) + 2.0 * a * t2 * (a * (a * a + 1.0) - eta * (eta * eta + 1.0)))
        + l2 * kappa * kappa / 4.0 * s * s;
    v -= l2 / 8.0
        * (eta * eta * ((2.0 * a - eta).powi(2) + 1.0) * (2.0 * tau).cos()
            - 2.0 * tau * eta * (2.0 * a - eta) * (eta * eta + 2.0 * a * (a - eta) + 1.0) * (2.0 * tau).sin());
    v += l2 * kappa / 4.0 * (2.0 * a * a * tau * (2.0 * tau).sin() - (2.0 * a - eta) * eta * sin2_bracket(tau));
    v += l2 * eta * eta / 8.0 * (eta * eta + 1.0) * (2.0 * t2 + 1.0);
    v
}

/// Explicit [N⁽¹⁾]⁻² for `|n⟩|g⟩`.
pub fn first_order_fock_ground_inverse_square(n: usize, tau: f64, lambda: f64, eta: f64, kappa: f64) -> f64 {
    let nf = n as f64;
    let l2 = lambda * lambda;
    let s = tau.sin();
    let e2 = eta * eta;
    1.0 + l2 / 8.0
        * (4.0 * tau * tau * nf * (e2 + 2.0 * nf)
            + 2.0 * (e2 * (e2 + 2.0 * nf + 1.0) + kappa * kappa) * s * s
            + 2.0 * tau * e2 * (e2 + 4.0 * nf + 1.0) * (tau - (2.0 * tau).sin()))
        - l2 * kappa / 4.0 * fock_detuning_bracket(n, tau, eta)
}

/// Explicit [N⁽¹⁾]⁻² for `|n⟩|e⟩`, from the ground-state value and the difference relation.
pub fn first_order_fock_excited_inverse_square(n: usize, tau: f64, lambda: f64, eta: f64, kappa: f64) -> f64 {
    first_order_fock_ground_inverse_square(n, tau, lambda, eta, kappa)
        + fock_norm_difference(n, tau, lambda, eta, kappa)
}

/// [N⁽¹⁾_{n,e}]⁻² − [N⁽¹⁾_{n,g}]⁻² = (λ²κ/2) sin 2τ {2nτ + η²[τ − tan τ]}.
pub fn fock_norm_difference(n: usize, tau: f64, lambda: f64, eta: f64, kappa: f64) -> f64 {
    lambda * lambda * kappa / 2.0 * fock_detuning_bracket(n, tau, eta)
}

fn fock_detuning_bracket(n: usize, tau: f64, eta: f64) -> f64 {
    2.0 * n as f64 * tau * (2.0 * tau).sin() + eta * eta * sin2_bracket(tau)
}

/// Explicit [N⁽²⁾]⁻² for `|iα⟩|e⟩` as published.
pub fn second_order_coherent_inverse_square(alpha: f64, tau: f64, lambda: f64, eta: f64, kappa: f64) -> f64 {
    let FCoefficients { f1, f2, f3, f4, f5, f6 } = f_coefficients(alpha, tau, eta, kappa);
    let a = alpha;
    let b = alpha - eta;
    let l2 = lambda * lambda;
    let l4 = l2 * l2;
    let s = tau.sin();
    let mut v = 1.0 - tau * tau * l2 / 4.0 * a * eta * (eta * eta + 1.0) * s * s
        + l4 * (f1 * f1 + f2 * f2 + 2.0 * (f3 * f3 + f6 * f6) + f4 * f4 + f5 * f5);
    v += a * a * l4 * (2.0 * (f1 + 2.0 * f3) * f3 + f2 * f2) + a.powi(3) * l4 * (2.0 * f2 + a * f3) * f3;
    v += 2.0 * a * l4 * (f1 + 2.0 * f3) * f2 + 2.0 * b * l4 * (2.0 * f6 - f4) * f5;
    v += b * b * l4 * (f5 * f5 - 2.0 * (f4 - 2.0 * f6) * f6) + b.powi(3) * l4 * (2.0 * f5 + b * f6) * f6;
    v
}

/// Explicit second-order Pe(τ) for `|iα⟩|e⟩` as published, with its
/// [N⁽²⁾]⁻² prefactors taken from [`second_order_coherent_inverse_square`].
pub fn second_order_pe_explicit(alpha: f64, tau: f64, lambda: f64, eta: f64, kappa: f64) -> f64 {
    let FCoefficients { f1, f2, f3, .. } = f_coefficients(alpha, tau, eta, kappa);
    let GCoefficients { g1, g2, .. } = g_coefficients(alpha, tau, eta, kappa);
    let n = second_order_coherent_inverse_square(alpha, tau, lambda, eta, kappa);
    let a = alpha;
    let c = tau.cos();
    let l2 = lambda * lambda;
    let l4 = l2 * l2;
    let mut v = n
        * (-l2 * c * (2.0 * a * a * f3 + a * f2 + 2.0 * f1)
            + l4 * (f1 * f1 + f2 * f2 + 2.0 * f3 * f3)
            + c * c
            + l2 * (g1 * g1 + (a * a + 1.0) * g2 * g2 - 2.0 * a * g1 * g2)
            + 2.0 * l4 * a.powi(3) * f2 * f3);
    v += a * a * l4 * n * (f2 * f2 + 2.0 * f3 * (f1 + 2.0 * f3));
    v += a * l4 * n * (2.0 * f2 * (f1 + 2.0 * f3) + a.powi(3) * f3 * f3);
    v
}

/// Small-rotation Pe(τ) with χ = −λ²η²/2:
/// ½{1 + exp[−2A sin²(τχ)] cos[τ(2 − χ) − A sin(2τχ)]}, A = (α − η/2)².
pub fn small_rotation_pe(alpha: f64, eta: f64, lambda: f64, tau: f64) -> f64 {
    let chi = -lambda * lambda * eta * eta / 2.0;
    let amp = (alpha - eta / 2.0).powi(2);
    0.5 * (1.0 + (-2.0 * amp * (tau * chi).sin().powi(2)).exp() * (tau * (2.0 - chi) - amp * (2.0 * tau * chi).sin()).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn all_vanish_at_zero_time() {
        let f = f_coefficients(4.0, 0.0, 0.1, 1.0);
        for v in [f.f1, f.f2, f.f3, f.f4, f.f5, f.f6] {
            assert_eq!(v, 0.0);
        }
        let g = g_coefficients(4.0, 0.0, 0.1, 1.0);
        for v in [g.g1, g.g2, g.g3, g.g4] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn matches_tangent_form_away_from_poles() {
        let (a, eta, kappa) = (4.0, 0.1, 1.0);
        for tau in [0.3, 1.0, 2.0, 4.0] {
            let (s, c, t) = (f64::sin(tau), f64::cos(tau), f64::tan(tau));
            let f = f_coefficients(a, tau, eta, kappa);
            let f1 = tau * eta / 8.0 * c * ((tau - t) * (a * a * eta + (eta * eta + 1.0) * (eta - 2.0 * a)) + kappa * kappa / eta * t);
            let f4 = eta / 8.0
                * c
                * (tau * tau * (a * eta * (a + eta) + 3.0 * a - eta) * t
                    - (2.0 * (a * kappa + eta - a) + eta * (a * a + kappa * kappa / (eta * eta) + 1.0)) * (tau - t));
            let g1 = eta * c / 2.0 * ((a - eta) * (tau - t) - kappa / eta * t);
            assert!((f.f1 - f1).abs() < 1e-12);
            assert!((f.f4 - f4).abs() < 1e-12);
            assert!((g_coefficients(a, tau, eta, kappa).g1 - g1).abs() < 1e-12);
            assert!(s.is_finite());
        }
    }

    #[test]
    fn finite_and_continuous_at_pole() {
        let f_at = f_coefficients(4.0, FRAC_PI_2, 0.1, 0.0);
        let f_near = f_coefficients(4.0, FRAC_PI_2 - 1e-9, 0.1, 0.0);
        // F3(π/2) = (π/16) η(η − 4α)(−1) with cos = 0, S = −1.
        let expect = -(FRAC_PI_2 / 8.0 * (0.1 * (0.1 - 16.0)));
        assert!((f_at.f3 - expect).abs() < 1e-12);
        assert!((f_at.f3 - f_near.f3).abs() < 1e-7);
        assert!(second_order_pe_explicit(4.0, 3.0 * FRAC_PI_2, 0.1, 0.1, 1.0).is_finite());
    }

    #[test]
    fn g2_collapses_without_recoil() {
        let g = g_coefficients(3.0, 1.1, 0.0, 0.0);
        assert!((g.g2 - 3.0 * 1.1 * 1.1f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn small_rotation_special_cases() {
        assert!((small_rotation_pe(4.0, 0.1, 0.1, 0.0) - 1.0).abs() < 1e-15);
        let (eta, lambda, tau) = (0.1_f64, 0.2_f64, 2.3_f64);
        let chi = -lambda * lambda * eta * eta / 2.0;
        let expect = 0.5 * (1.0 + (tau * (2.0 - chi)).cos());
        assert!((small_rotation_pe(eta / 2.0, eta, lambda, tau) - expect).abs() < 1e-15);
        assert!((small_rotation_pe(4.0, 0.1, 0.0, PI / 2.0) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn corrected_set_only_touches_f1_and_f4() {
        let p = f_coefficients_for(CoefficientSet::Published, 4.0, 1.3, 0.1, 1.0);
        let c = f_coefficients_for(CoefficientSet::Corrected, 4.0, 1.3, 0.1, 1.0);
        assert_eq!((p.f2, p.f3, p.f5, p.f6), (c.f2, c.f3, c.f5, c.f6));
        assert!((c.f1 - p.f1 - p.f3).abs() < 1e-15);
    }
}
