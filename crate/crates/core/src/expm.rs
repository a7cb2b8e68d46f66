//! Matrix exponentials.
//!
//! Hermitian generators go through a spectral factorization that is built
//! once and reused for any number of times `t`. General (non-normal,
//! possibly defective) matrices use Padé-13 scaling and squaring, written
//! against a small algebra trait so the same code runs on dense matrices and
//! on the truncated block-Toeplitz algebra used by the perturbative engine.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fock::DenseOperator;
use crate::linalg::{self, CMatrix, CVector, C64};

/// Hermiticity tolerance for generators handed to the spectral path.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Reusable `t ↦ e^{−iHt}` for a hermitian `H = V diag(w) V†`.
#[derive(Debug, Clone)]
pub struct HermitianPropagator {
    values: DVector<f64>,
    vectors: CMatrix,
    vectors_adj: CMatrix,
}

impl HermitianPropagator {
    pub fn from_matrix(h: &CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
        }
        let defect = linalg::hermiticity_defect(h);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        // Symmetrize so rounding-level asymmetry cannot leak into the factorization.
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let vectors_adj = eig.eigenvectors.adjoint();
        Ok(Self { values: eig.eigenvalues, vectors: eig.eigenvectors, vectors_adj })
    }

    pub fn new(h: &DenseOperator) -> Result<Self> {
        Self::from_matrix(h.matrix())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// Dense `e^{−iHt}`.
    pub fn matrix(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -self.values[j] * t);
        }
        linalg::matmul(&scaled, &self.vectors_adj)
    }

    /// Coordinates `V† v` of a vector in the eigenbasis.
    pub fn to_eigenbasis(&self, v: &CVector) -> CVector {
        linalg::matvec(&self.vectors_adj, v)
    }

    /// `e^{−iHt} v` given eigenbasis coordinates `c = V† v`.
    pub fn evolve_coords(&self, coords: &CVector, t: f64) -> CVector {
        let phased = CVector::from_fn(coords.len(), |j, _| coords[j] * C64::from_polar(1.0, -self.values[j] * t));
        linalg::matvec(&self.vectors, &phased)
    }

    /// `e^{−iHt} v`.
    pub fn apply(&self, v: &CVector, t: f64) -> CVector {
        self.evolve_coords(&self.to_eigenbasis(v), t)
    }
}

/// `e^{−iHt}` for hermitian `H`, via eigendecomposition.
pub fn expm_unitary(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    let prop = HermitianPropagator::new(h)?;
    DenseOperator::new(prop.matrix(t), h.trunc())
}

/// `e^{−iHt}` for hermitian `H`, via Padé scaling and squaring (cross-check path).
pub fn expm_unitary_pade(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let a = h.matrix() * C64::new(0.0, -t);
    DenseOperator::new(expm_pade(&a)?, h.trunc())
}

/// `e^A` for an arbitrary square complex matrix.
pub fn expm_pade(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    scaling_squaring(a)
}

/// Operations needed by Padé scaling and squaring.
pub(crate) trait PadeAlgebra: Sized {
    fn identity_like(&self) -> Self;
    fn product(&self, rhs: &Self) -> Self;
    /// `Σ c_i X_i` over real coefficients.
    fn real_combination(terms: &[(f64, &Self)]) -> Self;
    fn scaled(&self, c: f64) -> Self;
    fn norm1(&self) -> f64;
    /// `lhs⁻¹ rhs`.
    fn solve(lhs: &Self, rhs: &Self) -> Result<Self>;
}

impl PadeAlgebra for CMatrix {
    fn identity_like(&self) -> Self {
        CMatrix::identity(self.nrows(), self.ncols())
    }

    fn product(&self, rhs: &Self) -> Self {
        linalg::matmul(self, rhs)
    }

    fn real_combination(terms: &[(f64, &Self)]) -> Self {
        let (r, c) = terms[0].1.shape();
        let mut out = CMatrix::zeros(r, c);
        for (w, m) in terms {
            out.zip_apply(*m, |o, x| *o += x * *w);
        }
        out
    }

    fn scaled(&self, c: f64) -> Self {
        self * C64::new(c, 0.0)
    }

    fn norm1(&self) -> f64 {
        self.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn solve(lhs: &Self, rhs: &Self) -> Result<Self> {
        lhs.clone().lu().solve(rhs).ok_or(Error::SingularMatrix)
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Degree-13 diagonal Padé approximant with scaling and squaring.
pub(crate) fn scaling_squaring<T: PadeAlgebra>(a: &T) -> Result<T> {
    let norm = a.norm1();
    if !norm.is_finite() {
        return Err(Error::InvalidParameter("matrix exponential of a non-finite matrix".into()));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = if s > 0 { a.scaled(0.5_f64.powi(s)) } else { a.scaled(1.0) };
    let b = &PADE13;
    let id = a.identity_like();
    let a2 = a.product(&a);
    let a4 = a2.product(&a2);
    let a6 = a4.product(&a2);

    let u_inner = a6.product(&T::real_combination(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]));
    let u_sum = T::real_combination(&[(1.0, &u_inner), (b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)]);
    let u = a.product(&u_sum);

    let v_inner = a6.product(&T::real_combination(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]));
    let v = T::real_combination(&[(1.0, &v_inner), (b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)]);

    let p = T::real_combination(&[(1.0, &v), (1.0, &u)]);
    let q = T::real_combination(&[(1.0, &v), (-1.0, &u)]);
    let mut r = T::solve(&q, &p)?;
    for _ in 0..s {
        r = r.product(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{sigma_z, TruncationConfig};
    use crate::linalg::{I, ONE};

    #[test]
    fn zero_time_is_identity() {
        let t = TruncationConfig::with_cutoff(8).unwrap();
        let u = expm_unitary(&sigma_z(t), 0.0).unwrap();
        assert!((&u - &DenseOperator::identity(t)).max_abs() < 1e-14);
    }

    #[test]
    fn sigma_z_quarter_turn() {
        let t = TruncationConfig::with_cutoff(8).unwrap();
        let u = expm_unitary(&sigma_z(t), std::f64::consts::FRAC_PI_2).unwrap();
        for n in 0..t.fock_dim() {
            assert!((u.matrix()[(t.e_index(n), t.e_index(n))] + I).norm() < 1e-14);
            assert!((u.matrix()[(t.g_index(n), t.g_index(n))] - I).norm() < 1e-14);
        }
        let p = expm_unitary_pade(&sigma_z(t), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((&u - &p).max_abs() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let t = TruncationConfig::with_cutoff(4).unwrap();
        let mut m = CMatrix::zeros(t.dim(), t.dim());
        m[(0, 1)] = ONE;
        let op = DenseOperator::new(m, t).unwrap();
        assert!(matches!(expm_unitary(&op, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pade_reproduces_nilpotent_series() {
        // exp of a strictly upper-triangular 3x3 Jordan block is I + N + N²/2.
        let mut n = CMatrix::zeros(3, 3);
        n[(0, 1)] = C64::new(2.0, 0.0);
        n[(1, 2)] = C64::new(0.0, 3.0);
        let e = expm_pade(&n).unwrap();
        let expect = CMatrix::identity(3, 3) + &n + (&n * &n) * C64::new(0.5, 0.0);
        assert!(linalg::max_abs(&(e - expect)) < 1e-13);
    }

    #[test]
    fn pade_large_norm_scalar() {
        let a = CMatrix::from_element(1, 1, C64::new(-3.0, 40.0));
        let e = expm_pade(&a).unwrap();
        assert!((e[(0, 0)] - C64::new(-3.0, 40.0).exp()).norm() < 1e-13);
    }

    #[test]
    fn propagator_reuse_matches_fresh_exponentials() {
        let h = CMatrix::from_fn(6, 6, |i, j| {
            let re = ((i + j) % 4) as f64 * 0.3;
            let im = if i == j { 0.0 } else { (i as f64 - j as f64) * 0.1 };
            C64::new(re, im)
        });
        let prop = HermitianPropagator::from_matrix(&h).unwrap();
        let v = CVector::from_fn(6, |i, _| C64::new(1.0 / (i + 1) as f64, 0.2));
        for t in [0.0, 0.4, 3.1] {
            let fresh = expm_pade(&(&h * C64::new(0.0, -t))).unwrap();
            assert!(linalg::max_abs(&(prop.matrix(t) - &fresh)) < 1e-12);
            assert!(linalg::max_abs_vec(&(prop.apply(&v, t) - &fresh * &v)) < 1e-12);
        }
    }
}
