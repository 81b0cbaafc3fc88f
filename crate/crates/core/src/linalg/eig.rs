//! Hermitian eigendecomposition, delegated to faer.

use super::{from_faer, to_faer, CMat};
use faer::Side;

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending; columns of
/// the returned matrix are the matching orthonormal eigenvectors. No phase
/// convention is applied here.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return (Vec::new(), CMat::zeros((0, 0)));
    }
    if n == 1 {
        let v = a[(0, 0)].re;
        return (vec![v], super::identity(1));
    }
    let fa = to_faer(a);
    let evd = fa
        .self_adjoint_eigen(Side::Lower)
        .expect("hermitian eigendecomposition failed to converge");
    let s = evd.S();
    let vals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let vecs = from_faer(&evd.U().to_owned());
    debug_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    (vals, vecs)
}

/// Eigenvalues and eigenvectors of a real symmetric tridiagonal matrix
/// (used by the Lanczos solver; sizes stay small).
pub fn eigh_sym_tridiag(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = diag.len();
    let mut a = faer::Mat::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = diag[i];
        if i + 1 < m {
            a[(i, i + 1)] = off[i];
            a[(i + 1, i)] = off[i];
        }
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .expect("tridiagonal eigendecomposition failed");
    let s = evd.S();
    let u = evd.U();
    let vals: Vec<f64> = (0..m).map(|i| s[i]).collect();
    let vecs: Vec<Vec<f64>> = (0..m)
        .map(|k| (0..m).map(|i| u[(i, k)]).collect())
        .collect();
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob_norm, identity, matmul, C_ZERO};
    use ndarray::Array2;
    use num_complex::Complex64;

    #[test]
    fn eigh_reconstructs_matrix() {
        let n = 12;
        let mut state = 1234567u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut a = Array2::from_elem((n, n), C_ZERO);
        for i in 0..n {
            for j in 0..=i {
                let re = rnd();
                let im = if i == j { 0.0 } else { rnd() };
                a[(i, j)] = Complex64::new(re, im);
                a[(j, i)] = Complex64::new(re, -im);
            }
        }
        let (vals, u) = eigh(&a);
        let lam = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                Complex64::new(vals[i], 0.0)
            } else {
                C_ZERO
            }
        });
        let rebuilt = matmul(&matmul(&u, &lam), &super::super::adjoint(&u));
        assert!(frob_norm(&(&rebuilt - &a)) / frob_norm(&a) < 1e-12);
        let mut g = matmul(&super::super::adjoint(&u), &u);
        for i in 0..n {
            g[(i, i)] -= Complex64::new(1.0, 0.0);
        }
        assert!(frob_norm(&g) < 1e-12);
        let _ = identity(2);
    }

    #[test]
    fn tridiag_matches_dense() {
        let diag = vec![1.0, -2.0, 0.5, 3.0];
        let off = vec![0.3, -0.7, 0.1];
        let (vals, vecs) = eigh_sym_tridiag(&diag, &off);
        assert_eq!(vals.len(), 4);
        // residual of first eigenpair
        let m = 4;
        let v = &vecs[0];
        let mut res = 0.0;
        for i in 0..m {
            let mut acc = diag[i] * v[i];
            if i > 0 {
                acc += off[i - 1] * v[i - 1];
            }
            if i + 1 < m {
                acc += off[i] * v[i + 1];
            }
            res += (acc - vals[0] * v[i]).powi(2);
        }
        assert!(res.sqrt() < 1e-12);
    }
}
