//! Thin dense helpers shared by every module.
//!
//! Products go through `matrixmultiply`'s complex kernel; nalgebra's generic
//! complex gemm is several times slower at the sizes used here (d ~ 100-800).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// `a * b` for column-major complex matrices.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (m, k) = a.shape();
    assert_eq!(k, b.nrows(), "matmul: inner dimensions differ");
    let n = b.ncols();
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: Complex64 is #[repr(C)] { re, im }, layout-identical to [f64; 2].
    // nalgebra's dynamic storage is contiguous column-major, so element (i, j)
    // lives at offset i + j * nrows: row stride 1, column stride nrows.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// `a * v`.
pub fn matvec(a: &CMatrix, v: &CVector) -> CVector {
    let (m, k) = a.shape();
    assert_eq!(k, v.len(), "matvec: dimension mismatch");
    let mut out = CVector::zeros(m);
    if m == 0 || k == 0 {
        return out;
    }
    // SAFETY: as in `matmul`; a vector is an m x 1 column-major matrix.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            1,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            v.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Max entry of |A - A^dagger|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Max entry of |A^dagger A - I|.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let mut p = matmul(&m.adjoint(), m);
    for i in 0..p.nrows() {
        p[(i, i)] -= ONE;
    }
    max_abs(&p)
}

/// Max |m_ij| restricted to the listed rows and columns.
pub fn max_abs_on(m: &CMatrix, idx: &[usize]) -> f64 {
    let mut worst = 0.0_f64;
    for &j in idx {
        for &i in idx {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

/// Sum of complex vectors with Kahan compensation, in slice order.
pub fn kahan_sum(terms: &[CVector], len: usize) -> CVector {
    let mut sum = CVector::zeros(len);
    let mut comp = CVector::zeros(len);
    for t in terms {
        for i in 0..len {
            let y = t[i] - comp[i];
            let s = sum[i] + y;
            comp[i] = (s - sum[i]) - y;
            sum[i] = s;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, m: usize, seed: usize) -> CMatrix {
        CMatrix::from_fn(n, m, |i, j| {
            C64::new(
                ((i * 7 + j * 3 + seed) % 11) as f64 / 11.0 - 0.4,
                ((i + 2 * j + seed) % 5) as f64 / 5.0 - 0.3,
            )
        })
    }

    #[test]
    fn zgemm_matches_nalgebra_product() {
        let a = sample(17, 9, 1);
        let b = sample(9, 13, 4);
        let diff = matmul(&a, &b) - &a * &b;
        assert!(max_abs(&diff) < 1e-13);
    }

    #[test]
    fn matvec_matches_nalgebra() {
        let a = sample(12, 12, 2);
        let v = CVector::from_fn(12, |i, _| C64::new(i as f64, -(i as f64) * 0.5));
        let diff = matvec(&a, &v) - &a * &v;
        assert!(max_abs_vec(&diff) < 1e-12);
    }

    #[test]
    fn defects_of_identity_vanish() {
        let id = CMatrix::identity(6, 6);
        assert_eq!(hermiticity_defect(&id), 0.0);
        assert_eq!(unitarity_defect(&id), 0.0);
    }

    #[test]
    fn kahan_sum_is_exact_for_small_integers() {
        let terms: Vec<CVector> = (0..5).map(|k| CVector::from_element(3, C64::new(k as f64, 1.0))).collect();
        let s = kahan_sum(&terms, 3);
        assert_eq!(s[0], C64::new(10.0, 5.0));
    }
}
