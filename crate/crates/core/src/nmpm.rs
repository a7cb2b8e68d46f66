//! Normalized matrix perturbation method for `e^{−i(h0 + λ hp)τ}`.
//!
//! The order-n correction ket ψ⁽ⁿ⁾ is the block `(0, n)` of `exp(−iMτ)`
//! applied to ψ0, where `M` is the `(k+1) × (k+1)` block upper-bidiagonal
//! matrix with `h0` on the diagonal and `hp` on the superdiagonal. The same
//! kets are the time-ordered integrals
//!
//! ψ⁽ⁿ⁾ = (−i)ⁿ e^{−i h0 τ} ∫₀^τ ds₁ ∫₀^{s₁} ds₂ … Ĥp(s₁) Ĥp(s₂) … ψ0,
//! Ĥp(s) = e^{i h0 s} hp e^{−i h0 s},
//!
//! which give an independent evaluation path. The truncated sum
//! `Σ λⁿ ψ⁽ⁿ⁾` is then rescaled to unit norm.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use gauss_quad::GaussLegendre;
use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::{expm_pade, scaling_squaring, HermitianPropagator, PadeAlgebra};
use crate::fock::{DenseOperator, FockSpinState, TruncationConfig};
use crate::ion::TimeGrid;
use crate::linalg::{self, CMatrix, CVector, C64, I, ONE};

/// Highest order exposed by the public entry points.
pub const MAX_ORDER: usize = 2;

/// Tolerance for treating `h0` as an involution (`h0² = 1`).
pub const INVOLUTION_TOL: f64 = 1e-10;

/// Largest componentwise change allowed when the quadrature density doubles.
pub const QUADRATURE_TOL: f64 = 1e-7;

/// Below this inverse-square norm the renormalization is rescuing a diverged sum.
pub const LOW_NORM_WARNING: f64 = 0.1;

/// Correction kets ψ⁽⁰⁾..ψ⁽ᵏ⁾ (not individually normalized) and the expansion parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeKets {
    kets: Vec<FockSpinState>,
    lambda: f64,
}

impl PerturbativeKets {
    pub fn new(kets: Vec<FockSpinState>, lambda: f64) -> Result<Self> {
        if kets.len() < 2 {
            return Err(Error::InvalidParameter("need at least psi^(0) and psi^(1)".into()));
        }
        let trunc = kets[0].trunc();
        if let Some(bad) = kets.iter().find(|k| k.trunc() != trunc) {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), found: bad.trunc().dim() });
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self { kets, lambda })
    }

    pub fn kets(&self) -> &[FockSpinState] {
        &self.kets
    }

    pub fn ket(&self, n: usize) -> &FockSpinState {
        &self.kets[n]
    }

    pub fn order(&self) -> usize {
        self.kets.len() - 1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn trunc(&self) -> TruncationConfig {
        self.kets[0].trunc()
    }

    /// The kets do not depend on λ; reuse them at another expansion parameter.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { kets: self.kets.clone(), lambda }
    }

    /// Keeps ψ⁽⁰⁾..ψ⁽ᵒʳᵈᵉʳ⁾.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order < 1 || order > self.order() {
            return Err(Error::InvalidParameter(format!("cannot truncate order {} to {order}", self.order())));
        }
        Ok(Self { kets: self.kets[..=order].to_vec(), lambda: self.lambda })
    }

    /// Unnormalized `Σ λⁿ ψ⁽ⁿ⁾`.
    pub fn partial_sum(&self) -> FockSpinState {
        let weights: Vec<C64> = (0..self.kets.len()).map(|n| C64::new(self.lambda.powi(n as i32), 0.0)).collect();
        let terms: Vec<(C64, &FockSpinState)> = weights.iter().copied().zip(self.kets.iter()).collect();
        FockSpinState::combination(&terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    GaussLegendreNested,
    CompositeSimpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub scheme: QuadratureScheme,
    /// Nodes per unit τ on every nesting level (at least 8).
    pub points_per_unit_tau: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { scheme: QuadratureScheme::GaussLegendreNested, points_per_unit_tau: 16 }
    }
}

impl QuadratureConfig {
    pub fn new(scheme: QuadratureScheme, points_per_unit_tau: usize) -> Result<Self> {
        if points_per_unit_tau < 8 {
            return Err(Error::InvalidParameter(format!(
                "points_per_unit_tau must be at least 8, got {points_per_unit_tau}"
            )));
        }
        Ok(Self { scheme, points_per_unit_tau })
    }
}

fn check_inputs(h0: &DenseOperator, hp: &DenseOperator, psi0: &FockSpinState, k: usize) -> Result<()> {
    if h0.dim() != hp.dim() {
        return Err(Error::DimensionMismatch { expected: h0.dim(), found: hp.dim() });
    }
    if psi0.amps().len() != h0.dim() {
        return Err(Error::DimensionMismatch { expected: h0.dim(), found: psi0.amps().len() });
    }
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(Error::InvalidParameter(format!("correction order must be 1 or 2, got {k}")));
    }
    Ok(())
}

/// Block upper-triangular Toeplitz matrix `Σ_j εʲ A_j` with `ε^{k+1} = 0`.
///
/// Products, sums and solves of such matrices stay in the algebra, so the
/// exponential of `−iMτ` only ever stores its first block row.
#[derive(Debug, Clone)]
struct BlockToeplitz {
    blocks: Vec<CMatrix>,
}

impl PadeAlgebra for BlockToeplitz {
    fn identity_like(&self) -> Self {
        let d = self.blocks[0].nrows();
        let mut blocks = vec![CMatrix::zeros(d, d); self.blocks.len()];
        blocks[0] = CMatrix::identity(d, d);
        Self { blocks }
    }

    fn product(&self, rhs: &Self) -> Self {
        let k = self.blocks.len();
        let blocks = (0..k)
            .map(|j| {
                let mut c = linalg::matmul(&self.blocks[0], &rhs.blocks[j]);
                for i in 1..=j {
                    c += linalg::matmul(&self.blocks[i], &rhs.blocks[j - i]);
                }
                c
            })
            .collect();
        Self { blocks }
    }

    fn real_combination(terms: &[(f64, &Self)]) -> Self {
        let k = terms[0].1.blocks.len();
        let blocks = (0..k)
            .map(|j| {
                let parts: Vec<(f64, &CMatrix)> = terms.iter().map(|(w, t)| (*w, &t.blocks[j])).collect();
                CMatrix::real_combination(&parts)
            })
            .collect();
        Self { blocks }
    }

    fn scaled(&self, c: f64) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b.scaled(c)).collect() }
    }

    fn norm1(&self) -> f64 {
        let d = self.blocks[0].ncols();
        (0..d)
            .map(|col| self.blocks.iter().map(|b| b.column(col).iter().map(|z| z.norm()).sum::<f64>()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn solve(lhs: &Self, rhs: &Self) -> Result<Self> {
        let q0_inv = lhs.blocks[0].clone().try_inverse().ok_or(Error::SingularMatrix)?;
        let mut x: Vec<CMatrix> = Vec::with_capacity(rhs.blocks.len());
        for j in 0..rhs.blocks.len() {
            let mut acc = rhs.blocks[j].clone();
            for i in 1..=j {
                acc -= linalg::matmul(&lhs.blocks[i], &x[j - i]);
            }
            x.push(linalg::matmul(&q0_inv, &acc));
        }
        Ok(Self { blocks: x })
    }
}

/// First block row of `exp(−iMτ)`, i.e. the blocks `E_0..E_k`.
fn block_exponential(h0: &CMatrix, hp: &CMatrix, tau: f64, k: usize) -> Result<Vec<CMatrix>> {
    let d = h0.nrows();
    let mut blocks = vec![CMatrix::zeros(d, d); k + 1];
    let scale = C64::new(0.0, -tau);
    blocks[0] = h0 * scale;
    if k >= 1 {
        blocks[1] = hp * scale;
    }
    Ok(scaling_squaring(&BlockToeplitz { blocks })?.blocks)
}

pub(crate) fn block_matrix_kets(
    h0: &DenseOperator,
    hp: &DenseOperator,
    psi0: &FockSpinState,
    tau: f64,
    k: usize,
) -> Result<Vec<FockSpinState>> {
    let e = block_exponential(h0.matrix(), hp.matrix(), tau, k)?;
    e.iter().map(|b| FockSpinState::new(linalg::matvec(b, psi0.amps()), psi0.trunc())).collect()
}

/// Order-k correction kets from the exponential of the block-bidiagonal matrix.
///
/// The exponential is computed in the block-Toeplitz algebra, which is
/// exactly the structure of `exp(−iMτ)`; see [`corrections_block_matrix_dense`]
/// for the version that materializes `M`.
pub fn corrections_block_matrix(
    h0: &DenseOperator,
    hp: &DenseOperator,
    psi0: &FockSpinState,
    tau: f64,
    k: usize,
    lambda: f64,
) -> Result<PerturbativeKets> {
    check_inputs(h0, hp, psi0, k)?;
    PerturbativeKets::new(block_matrix_kets(h0, hp, psi0, tau, k)?, lambda)
}

/// As [`corrections_block_matrix`], exponentiating the full `(k+1)d`-dimensional `M`.
pub fn corrections_block_matrix_dense(
    h0: &DenseOperator,
    hp: &DenseOperator,
    psi0: &FockSpinState,
    tau: f64,
    k: usize,
    lambda: f64,
) -> Result<PerturbativeKets> {
    check_inputs(h0, hp, psi0, k)?;
    let d = h0.dim();
    let mut m = CMatrix::zeros((k + 1) * d, (k + 1) * d);
    for i in 0..=k {
        m.view_mut((i * d, i * d), (d, d)).copy_from(h0.matrix());
        if i < k {
            m.view_mut((i * d, (i + 1) * d), (d, d)).copy_from(hp.matrix());
        }
    }
    let e = expm_pade(&(m * C64::new(0.0, -tau)))?;
    let kets = (0..=k)
        .map(|j| {
            let block = e.view((0, j * d), (d, d)).into_owned();
            FockSpinState::new(linalg::matvec(&block, psi0.amps()), psi0.trunc())
        })
        .collect::<Result<Vec<_>>>()?;
    PerturbativeKets::new(kets, lambda)
}

/// Correction kets at every point of a time grid.
///
/// The stacked vector `w = (E_k ψ0, …, E_0 ψ0)` obeys `w(τ + Δ) = exp(−iMΔ) w(τ)`,
/// so uniform grids need a single block exponential.
pub fn corrections_block_matrix_grid(
    h0: &DenseOperator,
    hp: &DenseOperator,
    psi0: &FockSpinState,
    grid: &TimeGrid,
    k: usize,
    lambda: f64,
) -> Result<Vec<PerturbativeKets>> {
    check_inputs(h0, hp, psi0, k)?;
    let trunc = psi0.trunc();
    let mut w: Vec<CVector> = vec![CVector::zeros(trunc.dim()); k + 1];
    w[k] = psi0.amps().clone();
    let mut now = 0.0;
    let mut step: Option<(f64, Vec<CMatrix>)> = None;
    let mut out = Vec::with_capacity(grid.len());
    for &tau in grid.taus() {
        let dt = tau - now;
        if dt > 0.0 {
            let reuse = matches!(&step, Some((d, _)) if (d - dt).abs() <= 1e-12 * dt.max(1.0));
            if !reuse {
                step = Some((dt, block_exponential(h0.matrix(), hp.matrix(), dt, k)?));
            }
            let e = &step.as_ref().expect("step blocks were just computed").1;
            w = (0..=k)
                .map(|i| {
                    let mut acc = linalg::matvec(&e[0], &w[i]);
                    for j in i + 1..=k {
                        acc += linalg::matvec(&e[j - i], &w[j]);
                    }
                    acc
                })
                .collect();
            now = tau;
        }
        let kets = (0..=k)
            .map(|n| FockSpinState::new(w[k - n].clone(), trunc))
            .collect::<Result<Vec<_>>>()?;
        out.push(PerturbativeKets::new(kets, lambda)?);
    }
    Ok(out)
}

/// `e^{−i h0 s}` applied to vectors, by closed form when `h0² = 1`.
enum FreePropagator<'a> {
    Involution(&'a CMatrix),
    Spectral(HermitianPropagator),
}

impl FreePropagator<'_> {
    fn new(h0: &DenseOperator) -> Result<FreePropagator<'_>> {
        let sq = linalg::matmul(h0.matrix(), h0.matrix());
        let mut defect = 0.0_f64;
        for j in 0..sq.ncols() {
            for i in 0..sq.nrows() {
                let target = if i == j { ONE } else { C64::new(0.0, 0.0) };
                defect = defect.max((sq[(i, j)] - target).norm());
            }
        }
        if defect <= INVOLUTION_TOL {
            Ok(FreePropagator::Involution(h0.matrix()))
        } else {
            Ok(FreePropagator::Spectral(HermitianPropagator::new(h0)?))
        }
    }

    /// `e^{−i h0 s} v`.
    fn apply(&self, v: &CVector, s: f64) -> CVector {
        match self {
            Self::Involution(h0) => v * C64::new(s.cos(), 0.0) + linalg::matvec(h0, v) * (-I * s.sin()),
            Self::Spectral(p) => p.apply(v, s),
        }
    }
}

type LegendreRule = Arc<Vec<(f64, f64)>>;

struct Integrand<'a> {
    free: FreePropagator<'a>,
    hp: &'a CMatrix,
    psi0: &'a CVector,
    scheme: QuadratureScheme,
    density: usize,
    /// Gauss-Legendre rules on [−1, 1] keyed by node count.
    legendre: Mutex<HashMap<usize, LegendreRule>>,
    /// Diagonal of `hp` when it has no off-diagonal entries.
    hp_diag: Option<CVector>,
    /// With `h0² = 1`, Ĥp(s)ψ0 = cos²s·p + i cos s sin s·q + sin²s·r.
    first_level: Option<[CVector; 3]>,
}

impl Integrand<'_> {
    /// Ĥp(s) v = e^{i h0 s} hp e^{−i h0 s} v.
    fn interaction_hp(&self, v: &CVector, s: f64) -> CVector {
        let w = self.apply_hp(&self.free.apply(v, s));
        self.free.apply(&w, -s)
    }

    fn apply_hp(&self, v: &CVector) -> CVector {
        match &self.hp_diag {
            Some(d) => d.component_mul(v),
            None => linalg::matvec(self.hp, v),
        }
    }

    fn rule(&self, t: f64) -> Vec<(f64, f64)> {
        if self.scheme != QuadratureScheme::GaussLegendreNested || t <= 0.0 {
            return quadrature_rule(self.scheme, self.density, t);
        }
        let n = node_count(self.density, t);
        let base = {
            let mut cache = self.legendre.lock().expect("rule cache lock");
            Arc::clone(cache.entry(n).or_insert_with(|| Arc::new(legendre_pairs(n))))
        };
        base.iter().map(|&(x, w)| (0.5 * t * (x + 1.0), 0.5 * t * w)).collect()
    }

    /// f_j(t) = ∫₀ᵗ Ĥp(s) f_{j−1}(s) ds, f_0 = ψ0.
    fn nested(&self, j: usize, t: f64) -> CVector {
        if j == 0 {
            return self.psi0.clone();
        }
        if let (1, Some([p, q, r])) = (j, &self.first_level) {
            let (mut cc, mut cs, mut ss) = (0.0, 0.0, 0.0);
            for (node, w) in self.rule(t) {
                let (sn, cn) = node.sin_cos();
                cc += w * cn * cn;
                cs += w * cn * sn;
                ss += w * sn * sn;
            }
            return p * C64::new(cc, 0.0) + q * C64::new(0.0, cs) + r * C64::new(ss, 0.0);
        }
        let terms: Vec<CVector> = self
            .rule(t)
            .into_iter()
            .map(|(s, w)| self.interaction_hp(&self.nested(j - 1, s), s) * C64::new(w, 0.0))
            .collect();
        linalg::kahan_sum(&terms, self.psi0.len())
    }

    /// f_j(t) with the outermost level evaluated in parallel.
    fn nested_par(&self, j: usize, t: f64) -> CVector {
        if j == 0 {
            return self.psi0.clone();
        }
        let terms: Vec<CVector> = self
            .rule(t)
            .into_par_iter()
            .map(|(s, w)| self.interaction_hp(&self.nested(j - 1, s), s) * C64::new(w, 0.0))
            .collect();
        linalg::kahan_sum(&terms, self.psi0.len())
    }
}

fn node_count(density: usize, t: f64) -> usize {
    density.max((density as f64 * t).ceil() as usize)
}

fn legendre_pairs(n: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("node count is positive"));
    gl.as_node_weight_pairs().to_vec()
}

/// Nodes and weights on `[0, t]`.
fn quadrature_rule(scheme: QuadratureScheme, density: usize, t: f64) -> Vec<(f64, f64)> {
    if t <= 0.0 {
        return Vec::new();
    }
    let n = node_count(density, t);
    match scheme {
        QuadratureScheme::GaussLegendreNested => {
            legendre_pairs(n).into_iter().map(|(x, w)| (0.5 * t * (x + 1.0), 0.5 * t * w)).collect()
        }
        QuadratureScheme::CompositeSimpson => {
            let m = n + n % 2;
            let h = t / m as f64;
            (0..=m)
                .map(|i| {
                    let w = if i == 0 || i == m {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    (i as f64 * h, w * h / 3.0)
                })
                .collect()
        }
    }
}

fn quadrature_kets(
    h0: &DenseOperator,
    hp: &DenseOperator,
    psi0: &FockSpinState,
    tau: f64,
    k: usize,
    scheme: QuadratureScheme,
    density: usize,
) -> Result<Vec<FockSpinState>> {
    let free = FreePropagator::new(h0)?;
    let hp_m = hp.matrix();
    let is_diagonal = (0..hp_m.ncols()).all(|j| (0..hp_m.nrows()).all(|i| i == j || hp_m[(i, j)] == C64::new(0.0, 0.0)));
    let hp_diag = is_diagonal.then(|| hp_m.diagonal());
    let mut integrand = Integrand {
        free,
        hp: hp_m,
        psi0: psi0.amps(),
        scheme,
        density,
        legendre: Mutex::new(HashMap::new()),
        hp_diag,
        first_level: None,
    };
    if let FreePropagator::Involution(h) = integrand.free {
        let a = integrand.apply_hp(psi0.amps());
        let b = integrand.apply_hp(&linalg::matvec(h, psi0.amps()));
        let q = linalg::matvec(h, &a) - &b;
        let r = linalg::matvec(h, &b);
        integrand.first_level = Some([a, q, r]);
    }
    (0..=k)
        .map(|j| {
            let f = integrand.nested_par(j, tau);
            let phase = (0..j).fold(ONE, |acc, _| acc * (-I));
            FockSpinState::new(integrand.free.apply(&f, tau) * phase, psi0.trunc())
        })
        .collect()
}

/// Order-k correction kets from nested time-ordered quadrature.
///
/// The result at `points_per_unit_tau` is compared with the result at twice
/// that density; the finer one is returned if they agree to
/// [`QUADRATURE_TOL`] componentwise.
pub fn corrections_quadrature(
    h0: &DenseOperator,
    hp: &DenseOperator,
    psi0: &FockSpinState,
    tau: f64,
    k: usize,
    q: QuadratureConfig,
    lambda: f64,
) -> Result<PerturbativeKets> {
    check_inputs(h0, hp, psi0, k)?;
    if q.points_per_unit_tau < 8 {
        return Err(Error::InvalidParameter("points_per_unit_tau must be at least 8".into()));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {tau}")));
    }
    let coarse = quadrature_kets(h0, hp, psi0, tau, k, q.scheme, q.points_per_unit_tau)?;
    let fine = quadrature_kets(h0, hp, psi0, tau, k, q.scheme, 2 * q.points_per_unit_tau)?;
    let change = coarse.iter().zip(&fine).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
    if change > QUADRATURE_TOL {
        return Err(Error::QuadratureNotConverged { change });
    }
    PerturbativeKets::new(fine, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// N⁻² = ‖Σ λⁿ ψ⁽ⁿ⁾‖² expanded over all pairs of orders.
    pub inverse_square: f64,
    /// N = (N⁻²)^{−1/2}.
    pub factor: f64,
    /// N⁻² < 0.1: the truncated series has drifted far from unit norm.
    pub low_norm_warning: bool,
}

/// N⁻² = Σₙ λ²ⁿ ⟨ψ⁽ⁿ⁾|ψ⁽ⁿ⁾⟩ + 2 Σ_{m<n} λ^{m+n} Re⟨ψ⁽ᵐ⁾|ψ⁽ⁿ⁾⟩.
pub fn inverse_square_norm(pk: &PerturbativeKets) -> f64 {
    let lam = pk.lambda();
    let k = pk.order();
    let mut total = 0.0;
    for n in 0..=k {
        total += lam.powi(2 * n as i32) * pk.ket(n).inner(pk.ket(n)).re;
        for m in 0..n {
            total += 2.0 * lam.powi((m + n) as i32) * pk.ket(m).inner(pk.ket(n)).re;
        }
    }
    total
}

pub fn normalization(pk: &PerturbativeKets) -> Result<Normalization> {
    let inverse_square = inverse_square_norm(pk);
    if !(inverse_square > 0.0 && inverse_square.is_finite()) {
        return Err(Error::NonPositiveNormSquared { value: inverse_square });
    }
    let low_norm_warning = inverse_square < LOW_NORM_WARNING;
    if low_norm_warning {
        warn!(
            "inverse-square norm {inverse_square:.3e} < {LOW_NORM_WARNING}: lambda tau is outside the validity range (lambda = {})",
            pk.lambda()
        );
    }
    Ok(Normalization { inverse_square, factor: inverse_square.sqrt().recip(), low_norm_warning })
}

/// The normalization factor N of the order-k state.
pub fn normalization_factor(pk: &PerturbativeKets) -> Result<f64> {
    Ok(normalization(pk)?.factor)
}

/// `N Σ λⁿ ψ⁽ⁿ⁾`, a unit vector.
pub fn assemble_state(pk: &PerturbativeKets) -> Result<FockSpinState> {
    let n = normalization(pk)?;
    Ok(pk.partial_sum().scaled(C64::new(n.factor, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Spin, TruncationConfig};
    use crate::ion::{split_high_intensity, IonParams};

    fn setup(n: usize, kappa: f64) -> (DenseOperator, DenseOperator, TruncationConfig) {
        let t = TruncationConfig::with_cutoff(n).unwrap();
        let p = IonParams::from_lambda(0.1, kappa, 0.1).unwrap();
        let (h0, hp) = split_high_intensity(&p, t);
        (h0, hp, t)
    }

    #[test]
    fn zero_perturbation_gives_zero_corrections() {
        let (h0, _, t) = setup(16, 0.0);
        let hp = DenseOperator::zeros(t);
        let psi0 = FockSpinState::number(2, Spin::Ground, t).unwrap();
        let bm = corrections_block_matrix(&h0, &hp, &psi0, 1.5, 2, 0.1).unwrap();
        let q = corrections_quadrature(&h0, &hp, &psi0, 1.5, 2, QuadratureConfig::default(), 0.1).unwrap();
        for n in 1..=2 {
            assert_eq!(bm.ket(n).norm(), 0.0);
            assert_eq!(q.ket(n).norm(), 0.0);
        }
        assert!((bm.ket(0).norm() - 1.0).abs() < 1e-12);
        assert_eq!(normalization_factor(&bm).unwrap(), 1.0);
    }

    #[test]
    fn toeplitz_matches_dense_block_matrix() {
        let (h0, hp, t) = setup(12, 1.0);
        let psi0 = FockSpinState::number(3, Spin::Excited, t).unwrap();
        for tau in [0.3, 2.0] {
            let a = corrections_block_matrix(&h0, &hp, &psi0, tau, 2, 0.1).unwrap();
            let b = corrections_block_matrix_dense(&h0, &hp, &psi0, tau, 2, 0.1).unwrap();
            for n in 0..=2 {
                assert!(a.ket(n).max_abs_diff(b.ket(n)) < 1e-12, "tau = {tau}, n = {n}");
            }
        }
    }

    #[test]
    fn leading_dyson_term_at_small_tau() {
        let (h0, hp, t) = setup(32, 1.0);
        let psi0 = FockSpinState::number(4, Spin::Ground, t).unwrap();
        let tau = 0.01;
        let pk = corrections_block_matrix(&h0, &hp, &psi0, tau, 1, 0.1).unwrap();
        // −i[τ hp − (iτ²/2)(h0 hp + hp h0)] ψ0
        let hp_psi = hp.apply(&psi0);
        let sym = &h0.apply(&hp_psi) + &hp.apply(&h0.apply(&psi0));
        let lead = &hp_psi.scaled(C64::new(0.0, -tau)) - &sym.scaled(C64::new(tau * tau / 2.0, 0.0));
        let rel = pk.ket(1).distance(&lead) / lead.norm();
        assert!(rel <= 1e-4, "relative error {rel:e}");
    }

    #[test]
    fn general_order_block_exponential_matches_dense() {
        let (h0, hp, t) = setup(8, 0.0);
        let e = block_exponential(h0.matrix(), hp.matrix(), 0.7, 3).unwrap();
        let d = t.dim();
        let mut m = CMatrix::zeros(4 * d, 4 * d);
        for i in 0..4 {
            m.view_mut((i * d, i * d), (d, d)).copy_from(h0.matrix());
            if i < 3 {
                m.view_mut((i * d, (i + 1) * d), (d, d)).copy_from(hp.matrix());
            }
        }
        let dense = expm_pade(&(m * C64::new(0.0, -0.7))).unwrap();
        for (j, block) in e.iter().enumerate() {
            let diff = block - dense.view((0, j * d), (d, d));
            assert!(linalg::max_abs(&diff) < 1e-11);
        }
    }

    #[test]
    fn order_outside_public_range_is_rejected() {
        let (h0, hp, t) = setup(8, 0.0);
        let psi0 = FockSpinState::number(0, Spin::Ground, t).unwrap();
        assert!(corrections_block_matrix(&h0, &hp, &psi0, 1.0, 3, 0.1).is_err());
        assert!(corrections_block_matrix(&h0, &hp, &psi0, 1.0, 0, 0.1).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (h0, _, _) = setup(8, 0.0);
        let (_, hp_big, _) = setup(10, 0.0);
        let psi0 = FockSpinState::number(0, Spin::Ground, h0.trunc()).unwrap();
        assert!(matches!(
            corrections_block_matrix(&h0, &hp_big, &psi0, 1.0, 1, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn simpson_rule_integrates_cubic_exactly() {
        let rule = quadrature_rule(QuadratureScheme::CompositeSimpson, 8, 2.0);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(3)).sum();
        assert!((s - 4.0).abs() < 1e-13);
        let rule = quadrature_rule(QuadratureScheme::GaussLegendreNested, 8, 2.0);
        assert_eq!(rule.len(), 16);
        let s: f64 = rule.iter().map(|(x, w)| w * x.cos()).sum();
        assert!((s - 2f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn first_order_normalization_three_terms() {
        let (h0, hp, t) = setup(32, 1.0);
        let psi0 = FockSpinState::number(2, Spin::Excited, t).unwrap();
        let pk = corrections_block_matrix(&h0, &hp, &psi0, 1.2, 1, 0.2).unwrap();
        let lam = 0.2;
        let expect = 1.0 + 2.0 * lam * pk.ket(0).inner(pk.ket(1)).re + lam * lam * pk.ket(1).inner(pk.ket(1)).re;
        assert!((inverse_square_norm(&pk) - expect).abs() < 1e-12);
        let state = assemble_state(&pk).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_norm_is_an_error() {
        let t = TruncationConfig::with_cutoff(4).unwrap();
        let z = FockSpinState::zeros(t);
        let pk = PerturbativeKets::new(vec![z.clone(), z], 0.1).unwrap();
        assert!(matches!(normalization_factor(&pk), Err(Error::NonPositiveNormSquared { .. })));
    }

    #[test]
    fn grid_stepping_matches_pointwise_exponentials() {
        let (h0, hp, t) = setup(16, 1.0);
        let psi0 = FockSpinState::number(2, Spin::Excited, t).unwrap();
        let grid = TimeGrid::uniform(3.0, 31).unwrap();
        let stepped = corrections_block_matrix_grid(&h0, &hp, &psi0, &grid, 2, 0.2).unwrap();
        for (tau, pk) in grid.taus().iter().zip(&stepped) {
            let direct = corrections_block_matrix(&h0, &hp, &psi0, *tau, 2, 0.2).unwrap();
            for n in 0..=2 {
                assert!(pk.ket(n).max_abs_diff(direct.ket(n)) < 1e-10, "tau = {tau}, n = {n}");
            }
        }
    }
}
