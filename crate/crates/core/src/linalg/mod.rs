//! Dense complex linear algebra helpers shared across the crate.
//!
//! Dense matrices are `ndarray::Array2<Complex64>`; eigendecompositions and
//! large products are delegated to `faer`. Banded factorizations and the
//! shift-invert Lanczos solver used for large discretized operators live in
//! the submodules.

pub mod assign;
pub mod banded;
pub mod eig;
pub mod lanczos;

use ndarray::Array2;
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMat {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { C_ONE } else { C_ZERO })
}

pub fn adjoint(a: &CMat) -> CMat {
    let (r, c) = a.dim();
    Array2::from_shape_fn((c, r), |(i, j)| a[(j, i)].conj())
}

pub fn frob_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative Frobenius deviation from Hermitian symmetry.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let scale = frob_norm(a).max(1e-300);
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..=i {
            let d = a[(i, j)] - a[(j, i)].conj();
            let w = if i == j { 1.0 } else { 2.0 };
            acc += w * d.norm_sqr();
        }
    }
    acc.sqrt() / scale / 2.0
}

/// Matrix product, routed through faer above a small-size threshold.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "matmul shape mismatch");
    if m * k * n <= 32 * 32 * 32 {
        let mut out = Array2::from_elem((m, n), C_ZERO);
        for i in 0..m {
            for l in 0..k {
                let ail = a[(i, l)];
                if ail == C_ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += ail * b[(l, j)];
                }
            }
        }
        out
    } else {
        let fa = to_faer(a);
        let fb = to_faer(b);
        from_faer(&(&fa * &fb))
    }
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    &matmul(a, b) - &matmul(b, a)
}

/// Kronecker product a (x) b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Operator (spectral) norm via the Hermitian eigenproblem for A^* A.
pub fn op_norm(a: &CMat) -> f64 {
    let (r, c) = a.dim();
    if r == 0 || c == 0 {
        return 0.0;
    }
    if r == 1 && c == 1 {
        return a[(0, 0)].norm();
    }
    let ata = matmul(&adjoint(a), a);
    let (vals, _) = eig::eigh(&ata);
    vals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Defect ‖U*U − Id‖ (Frobenius).
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    let mut g = matmul(&adjoint(u), u);
    for i in 0..n {
        g[(i, i)] -= C_ONE;
    }
    frob_norm(&g)
}

pub fn to_faer(a: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn from_faer(a: &faer::Mat<Complex64>) -> CMat {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_and_matmul_agree_with_hand_values() {
        let sx = Array2::from_shape_vec((2, 2), vec![C_ZERO, C_ONE, C_ONE, C_ZERO]).unwrap();
        let sz = Array2::from_shape_vec(
            (2, 2),
            vec![C_ONE, C_ZERO, C_ZERO, Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let k = kron(&sx, &sz);
        assert_eq!(k[(0, 2)], C_ONE);
        assert_eq!(k[(1, 3)], Complex64::new(-1.0, 0.0));
        let prod = matmul(&sx, &sx);
        assert!(frob_norm(&(&prod - &identity(2))) < 1e-15);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let mut a = identity(3);
        assert!(hermiticity_defect(&a) < 1e-15);
        a[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(hermiticity_defect(&a) > 1e-3);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let d = Array2::from_shape_fn(
            (3, 3),
            |(i, j)| {
                if i == j {
                    Complex64::new(-(i as f64) - 1.0, 0.0)
                } else {
                    C_ZERO
                }
            },
        );
        assert!((op_norm(&d) - 3.0).abs() < 1e-10);
    }
}
