//! Truncated Fock ⊗ two-level spin space.
//!
//! Every state and operator in the crate uses the same spin-major basis:
//! indices `0..=N` hold the excited block `|n⟩|e⟩`, indices `N+1..=2N+1`
//! hold the ground block `|n⟩|g⟩`, with `e = |↑⟩ = (1, 0)` and
//! `g = |↓⟩ = (0, 1)`. σ± are then off-diagonal blocks and the excited
//! population is the squared norm of the first block.
//!
//! Truncation artifacts concentrate near the cutoff, so physics checks are
//! restricted to the guard subspace `n ≤ guard_n`.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::expm::HermitianPropagator;
use crate::linalg::{self, CMatrix, CVector, C64, I, ONE};

/// Cutoff used for the α = 4 coherent-state runs.
pub const DEFAULT_CUTOFF: usize = 128;

/// Largest population allowed above the guard level for a coherent ket.
pub const COHERENT_LEAKAGE_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncationConfig {
    cutoff_n: usize,
    guard_n: usize,
}

impl TruncationConfig {
    pub fn new(cutoff_n: usize, guard_n: usize) -> Result<Self> {
        if guard_n < 1 || guard_n >= cutoff_n {
            return Err(Error::InvalidParameter(format!(
                "truncation requires 1 <= guard_n < cutoff_n, got guard_n = {guard_n}, cutoff_n = {cutoff_n}"
            )));
        }
        Ok(Self { cutoff_n, guard_n })
    }

    /// Cutoff with the default guard level `cutoff_n / 2`.
    pub fn with_cutoff(cutoff_n: usize) -> Result<Self> {
        Self::new(cutoff_n, cutoff_n / 2)
    }

    pub fn cutoff_n(&self) -> usize {
        self.cutoff_n
    }

    pub fn guard_n(&self) -> usize {
        self.guard_n
    }

    /// Number of Fock levels kept, `N + 1`.
    pub fn fock_dim(&self) -> usize {
        self.cutoff_n + 1
    }

    /// Full Hilbert-space dimension, `2 (N + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.fock_dim()
    }

    pub fn e_index(&self, n: usize) -> usize {
        n
    }

    pub fn g_index(&self, n: usize) -> usize {
        self.fock_dim() + n
    }

    /// Indices of `|n⟩|e⟩` and `|n⟩|g⟩` for `n ≤ guard_n`.
    pub fn guard_indices(&self) -> Vec<usize> {
        (0..=self.guard_n)
            .map(|n| self.e_index(n))
            .chain((0..=self.guard_n).map(|n| self.g_index(n)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Excited,
    Ground,
}

/// A vector over the Fock factor only.
#[derive(Debug, Clone, PartialEq)]
pub struct FockKet {
    amps: CVector,
    trunc: TruncationConfig,
}

impl FockKet {
    pub fn new(amps: CVector, trunc: TruncationConfig) -> Result<Self> {
        if amps.len() != trunc.fock_dim() {
            return Err(Error::DimensionMismatch { expected: trunc.fock_dim(), found: amps.len() });
        }
        Ok(Self { amps, trunc })
    }

    pub fn number(n: usize, trunc: TruncationConfig) -> Result<Self> {
        if n > trunc.cutoff_n() {
            return Err(Error::InvalidParameter(format!("Fock level {n} above cutoff {}", trunc.cutoff_n())));
        }
        let mut amps = CVector::zeros(trunc.fock_dim());
        amps[n] = ONE;
        Ok(Self { amps, trunc })
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn trunc(&self) -> TruncationConfig {
        self.trunc
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Population above the guard level.
    pub fn leakage(&self) -> f64 {
        self.amps.iter().skip(self.trunc.guard_n() + 1).map(|z| z.norm_sqr()).sum()
    }

    pub fn check_leakage(&self, limit: f64) -> Result<()> {
        let leakage = self.leakage();
        if leakage > limit {
            return Err(Error::TruncationInsufficient { leakage, guard_n: self.trunc.guard_n(), limit });
        }
        Ok(())
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { amps: &self.amps * c, trunc: self.trunc }
    }

    /// Linear combination `Σ c_i k_i` of kets sharing one truncation.
    pub fn combination(terms: &[(C64, &FockKet)]) -> Self {
        let trunc = terms.first().expect("empty combination").1.trunc;
        let mut amps = CVector::zeros(trunc.fock_dim());
        for (c, k) in terms {
            amps.axpy(*c, &k.amps, ONE);
        }
        Self { amps, trunc }
    }
}

/// Amplitude vector over the full Fock ⊗ spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSpinState {
    amps: CVector,
    trunc: TruncationConfig,
}

impl FockSpinState {
    pub fn new(amps: CVector, trunc: TruncationConfig) -> Result<Self> {
        if amps.len() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), found: amps.len() });
        }
        Ok(Self { amps, trunc })
    }

    pub fn zeros(trunc: TruncationConfig) -> Self {
        Self { amps: CVector::zeros(trunc.dim()), trunc }
    }

    pub fn from_blocks(excited: &FockKet, ground: &FockKet) -> Result<Self> {
        if excited.trunc != ground.trunc {
            return Err(Error::InvalidParameter("spin blocks use different truncations".into()));
        }
        let trunc = excited.trunc;
        let f = trunc.fock_dim();
        let mut amps = CVector::zeros(trunc.dim());
        amps.rows_mut(0, f).copy_from(&excited.amps);
        amps.rows_mut(f, f).copy_from(&ground.amps);
        Ok(Self { amps, trunc })
    }

    /// `|k⟩ ⊗ |spin⟩`.
    pub fn product(ket: &FockKet, spin: Spin) -> Self {
        let trunc = ket.trunc;
        let f = trunc.fock_dim();
        let mut amps = CVector::zeros(trunc.dim());
        let offset = match spin {
            Spin::Excited => 0,
            Spin::Ground => f,
        };
        amps.rows_mut(offset, f).copy_from(&ket.amps);
        Self { amps, trunc }
    }

    pub fn number(n: usize, spin: Spin, trunc: TruncationConfig) -> Result<Self> {
        Ok(Self::product(&FockKet::number(n, trunc)?, spin))
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amps(self) -> CVector {
        self.amps
    }

    pub fn trunc(&self) -> TruncationConfig {
        self.trunc
    }

    pub fn excited_block(&self) -> FockKet {
        let f = self.trunc.fock_dim();
        FockKet { amps: self.amps.rows(0, f).into_owned(), trunc: self.trunc }
    }

    pub fn ground_block(&self) -> FockKet {
        let f = self.trunc.fock_dim();
        FockKet { amps: self.amps.rows(f, f).into_owned(), trunc: self.trunc }
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NonPositiveNormSquared { value: n * n });
        }
        Ok(Self { amps: &self.amps / C64::new(n, 0.0), trunc: self.trunc })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Population of Fock levels above `guard_n`, summed over both spin blocks.
    pub fn leakage(&self) -> f64 {
        self.excited_block().leakage() + self.ground_block().leakage()
    }

    pub fn check_leakage(&self, limit: f64) -> Result<()> {
        let leakage = self.leakage();
        if leakage > limit {
            return Err(Error::TruncationInsufficient { leakage, guard_n: self.trunc.guard_n(), limit });
        }
        Ok(())
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockSpinState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Sum of |amplitude|² over the excited block.
    pub fn excited_population(&self) -> f64 {
        self.amps.iter().take(self.trunc.fock_dim()).map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { amps: &self.amps * c, trunc: self.trunc }
    }

    /// Linear combination `Σ c_i ψ_i`.
    pub fn combination(terms: &[(C64, &FockSpinState)]) -> Self {
        let trunc = terms.first().expect("empty combination").1.trunc;
        let mut amps = CVector::zeros(trunc.dim());
        for (c, s) in terms {
            amps.axpy(*c, &s.amps, ONE);
        }
        Self { amps, trunc }
    }

    /// Max componentwise |self - other|.
    pub fn max_abs_diff(&self, other: &FockSpinState) -> f64 {
        linalg::max_abs_vec(&(&self.amps - &other.amps))
    }

    /// Max componentwise |self - other| over the guard subspace.
    pub fn guard_max_abs_diff(&self, other: &FockSpinState) -> f64 {
        self.trunc
            .guard_indices()
            .into_iter()
            .map(|i| (self.amps[i] - other.amps[i]).norm())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance ‖self − other‖.
    pub fn distance(&self, other: &FockSpinState) -> f64 {
        (&self.amps - &other.amps).norm()
    }
}

impl Add for &FockSpinState {
    type Output = FockSpinState;
    fn add(self, rhs: &FockSpinState) -> FockSpinState {
        FockSpinState { amps: &self.amps + &rhs.amps, trunc: self.trunc }
    }
}

impl Sub for &FockSpinState {
    type Output = FockSpinState;
    fn sub(self, rhs: &FockSpinState) -> FockSpinState {
        FockSpinState { amps: &self.amps - &rhs.amps, trunc: self.trunc }
    }
}

/// Square complex matrix on the full Fock ⊗ spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: CMatrix,
    trunc: TruncationConfig,
}

impl DenseOperator {
    pub fn new(mat: CMatrix, trunc: TruncationConfig) -> Result<Self> {
        if mat.nrows() != trunc.dim() || mat.ncols() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), found: mat.nrows().max(mat.ncols()) });
        }
        Ok(Self { mat, trunc })
    }

    pub fn identity(trunc: TruncationConfig) -> Self {
        Self { mat: CMatrix::identity(trunc.dim(), trunc.dim()), trunc }
    }

    pub fn zeros(trunc: TruncationConfig) -> Self {
        Self { mat: CMatrix::zeros(trunc.dim(), trunc.dim()), trunc }
    }

    /// `fock ⊗ 1_spin`.
    pub fn lift(fock: &CMatrix, trunc: TruncationConfig) -> Self {
        Self::from_spin_blocks(trunc, Some(fock), None, None, Some(fock))
    }

    /// Assembles `[[ee, eg], [ge, gg]]` from Fock-space blocks; `None` is a zero block.
    pub fn from_spin_blocks(
        trunc: TruncationConfig,
        ee: Option<&CMatrix>,
        eg: Option<&CMatrix>,
        ge: Option<&CMatrix>,
        gg: Option<&CMatrix>,
    ) -> Self {
        let f = trunc.fock_dim();
        let mut mat = CMatrix::zeros(trunc.dim(), trunc.dim());
        for (block, r, c) in [(ee, 0, 0), (eg, 0, f), (ge, f, 0), (gg, f, f)] {
            if let Some(b) = block {
                assert_eq!(b.shape(), (f, f), "spin block has wrong Fock dimension");
                mat.view_mut((r, c), (f, f)).copy_from(b);
            }
        }
        Self { mat, trunc }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trunc(&self) -> TruncationConfig {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn apply(&self, state: &FockSpinState) -> FockSpinState {
        assert_eq!(self.trunc, state.trunc, "operator and state use different truncations");
        FockSpinState { amps: linalg::matvec(&self.mat, &state.amps), trunc: self.trunc }
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint(), trunc: self.trunc }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { mat: &self.mat * c, trunc: self.trunc }
    }

    /// Expectation value ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, state: &FockSpinState) -> C64 {
        state.inner(&self.apply(state))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.mat)
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.mat)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.mat)
    }

    /// Max |entry| over rows and columns of the guard subspace.
    pub fn guard_max_abs(&self) -> f64 {
        linalg::max_abs_on(&self.mat, &self.trunc.guard_indices())
    }

    /// Max |entry| over rows and columns with Fock level `≤ level` in both spin blocks.
    pub fn max_abs_below(&self, level: usize) -> f64 {
        let idx: Vec<usize> = (0..=level)
            .map(|n| self.trunc.e_index(n))
            .chain((0..=level).map(|n| self.trunc.g_index(n)))
            .collect();
        linalg::max_abs_on(&self.mat, &idx)
    }

    pub fn guard_max_abs_diff(&self, other: &DenseOperator) -> f64 {
        (self - other).guard_max_abs()
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { mat: &self.mat + &rhs.mat, trunc: self.trunc }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { mat: &self.mat - &rhs.mat, trunc: self.trunc }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator { mat: linalg::matmul(&self.mat, &rhs.mat), trunc: self.trunc }
    }
}

impl Mul<C64> for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, c: C64) -> DenseOperator {
        self.scaled(c)
    }
}

impl Mul<f64> for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, c: f64) -> DenseOperator {
        self.scaled(C64::new(c, 0.0))
    }
}

/// Fock-space annihilation matrix, ⟨n−1|a|n⟩ = √n.
pub fn fock_annihilation(trunc: TruncationConfig) -> CMatrix {
    let f = trunc.fock_dim();
    let mut a = CMatrix::zeros(f, f);
    for n in 1..f {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn fock_number(trunc: TruncationConfig) -> CMatrix {
    let f = trunc.fock_dim();
    CMatrix::from_diagonal(&CVector::from_fn(f, |n, _| C64::new(n as f64, 0.0)))
}

#[derive(Debug, Clone)]
pub struct LadderOperators {
    pub a: DenseOperator,
    pub a_dag: DenseOperator,
    pub num: DenseOperator,
}

/// a, a†, n̂, each tensored with the spin identity.
pub fn build_ladder(trunc: TruncationConfig) -> LadderOperators {
    let a = fock_annihilation(trunc);
    LadderOperators {
        a_dag: DenseOperator::lift(&a.adjoint(), trunc),
        a: DenseOperator::lift(&a, trunc),
        num: DenseOperator::lift(&fock_number(trunc), trunc),
    }
}

pub fn sigma_z(trunc: TruncationConfig) -> DenseOperator {
    let id = CMatrix::identity(trunc.fock_dim(), trunc.fock_dim());
    DenseOperator::from_spin_blocks(trunc, Some(&id), None, None, Some(&(-&id)))
}

/// σ⁺ = |e⟩⟨g|.
pub fn sigma_plus(trunc: TruncationConfig) -> DenseOperator {
    let id = CMatrix::identity(trunc.fock_dim(), trunc.fock_dim());
    DenseOperator::from_spin_blocks(trunc, None, Some(&id), None, None)
}

/// σ⁻ = |g⟩⟨e|.
pub fn sigma_minus(trunc: TruncationConfig) -> DenseOperator {
    let id = CMatrix::identity(trunc.fock_dim(), trunc.fock_dim());
    DenseOperator::from_spin_blocks(trunc, None, None, Some(&id), None)
}

pub fn sigma_x(trunc: TruncationConfig) -> DenseOperator {
    &sigma_plus(trunc) + &sigma_minus(trunc)
}

/// Fock-space D(β) = exp(β a† − β* a), exponentiated inside the truncated space.
///
/// The generator is anti-hermitian, so `i(β a† − β* a)` is hermitian and the
/// spectral propagator gives an exactly unitary result.
pub fn displacement_fock(beta: C64, trunc: TruncationConfig) -> CMatrix {
    let a = fock_annihilation(trunc);
    let generator = &a.adjoint() * beta - &a * beta.conj();
    let h = &generator * I;
    HermitianPropagator::from_matrix(&h)
        .expect("i (beta a^dagger - beta^* a) is hermitian by construction")
        .matrix(1.0)
}

/// Fock-space D(β) from the analytic displaced-number-state matrix elements
///
/// ⟨m|D(β)|n⟩ = √(n!/m!) β^{m−n} e^{−|β|²/2} L_n^{(m−n)}(|β|²), m ≥ n,
///
/// and the mirrored form with −β* for m < n. Used as an independent check of
/// [`displacement_fock`]; the Laguerre recurrence is only well conditioned
/// for moderate |β|² and the two paths agree away from the cutoff.
pub fn displacement_fock_laguerre(beta: C64, trunc: TruncationConfig) -> CMatrix {
    let f = trunc.fock_dim();
    let x = beta.norm_sqr();
    let gauss = (-x / 2.0).exp();
    let mut d = CMatrix::zeros(f, f);
    for k in 0..f {
        // L_j^{(k)}(x) for j = 0..f-k via the three-term recurrence in j.
        let mut lag = vec![0.0_f64; f - k];
        lag[0] = 1.0;
        if f - k > 1 {
            lag[1] = 1.0 + k as f64 - x;
        }
        for j in 1..(f - k).saturating_sub(1) {
            let jf = j as f64;
            let kf = k as f64;
            lag[j + 1] = ((2.0 * jf + 1.0 + kf - x) * lag[j] - (jf + kf) * lag[j - 1]) / (jf + 1.0);
        }
        for (j, l) in lag.iter().enumerate() {
            let (lo, hi) = (j, j + k);
            // √(lo!/hi!) via the running product over lo+1..=hi.
            let mut ratio = 1.0_f64;
            for q in (lo + 1)..=hi {
                ratio /= (q as f64).sqrt();
            }
            let lower = beta.powu(k as u32) * (ratio * gauss * l);
            d[(hi, lo)] = lower;
            if k > 0 {
                d[(lo, hi)] = (-beta.conj()).powu(k as u32) * (ratio * gauss * l);
            }
        }
    }
    d
}

/// D(β) ⊗ 1_spin.
pub fn displacement(beta: C64, trunc: TruncationConfig) -> DenseOperator {
    DenseOperator::lift(&displacement_fock(beta, trunc), trunc)
}

/// Real-valued profile f_n(α) = α^n e^{−α²/2} / √(n!), n = 0..=N.
fn coherent_profile(alpha: f64, trunc: TruncationConfig) -> Vec<f64> {
    let f = trunc.fock_dim();
    let mut p = vec![0.0; f];
    p[0] = (-alpha * alpha / 2.0).exp();
    for n in 1..f {
        p[n] = p[n - 1] * alpha / (n as f64).sqrt();
    }
    p
}

fn i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

fn with_phases(real: &[f64], trunc: TruncationConfig) -> FockKet {
    let amps = CVector::from_fn(real.len(), |n, _| i_pow(n) * real[n]);
    FockKet { amps, trunc }
}

/// Coherent state |iα⟩ for real α: c_n = e^{−α²/2} (iα)^n / √(n!).
pub fn coherent_ket(alpha: f64, trunc: TruncationConfig) -> Result<FockKet> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("coherent amplitude must be finite, got {alpha}")));
    }
    let ket = with_phases(&coherent_profile(alpha, trunc), trunc);
    ket.check_leakage(COHERENT_LEAKAGE_LIMIT)?;
    Ok(ket)
}

/// Termwise α-derivative (order 1 or 2) of the coefficients of |iα⟩.
///
/// With f_n = α^n e^{−α²/2}/√(n!):
/// f_n'  = √n f_{n−1} − α f_n,
/// f_n'' = √(n(n−1)) f_{n−2} − 2α √n f_{n−1} + (α² − 1) f_n,
/// which stay finite at α = 0.
pub fn coherent_derivative_ket(alpha: f64, order: usize, trunc: TruncationConfig) -> Result<FockKet> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("coherent amplitude must be finite, got {alpha}")));
    }
    let p = coherent_profile(alpha, trunc);
    let at = |n: isize| if n < 0 { 0.0 } else { p[n as usize] };
    let d: Vec<f64> = match order {
        1 => (0..p.len())
            .map(|n| {
                let nf = n as f64;
                nf.sqrt() * at(n as isize - 1) - alpha * p[n]
            })
            .collect(),
        2 => (0..p.len())
            .map(|n| {
                let nf = n as f64;
                (nf * (nf - 1.0)).max(0.0).sqrt() * at(n as isize - 2) - 2.0 * alpha * nf.sqrt() * at(n as isize - 1)
                    + (alpha * alpha - 1.0) * p[n]
            })
            .collect(),
        _ => {
            return Err(Error::InvalidParameter(format!("coherent derivative order must be 1 or 2, got {order}")));
        }
    };
    let ket = with_phases(&d, trunc);
    ket.check_leakage(COHERENT_LEAKAGE_LIMIT)?;
    Ok(ket)
}
