//! Shift-invert Lanczos for interior eigenpairs of large banded Hermitian
//! matrices. Used by spectral-flow tracking on discretized Dirac operators,
//! where only the window (-lambda0, lambda0) matters and dense solves would
//! dominate the runtime.

use super::banded::{BandedLu, HermitianBanded};
use super::eig::eigh_sym_tridiag;
use num_complex::Complex64;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct WindowEigenpairs {
    pub values: Vec<f64>,
    /// Column k is the eigenvector for values[k], in the grid basis.
    pub vectors: Vec<Vec<Complex64>>,
}

/// All eigenpairs of `a` inside (-window, window), found by shift-invert
/// Lanczos about `shift` with full reorthogonalization. Completeness is
/// verified against an LDL^* inertia count; the Krylov dimension grows until
/// the window is fully resolved.
pub fn window_eigenpairs(
    a: &HermitianBanded,
    shift: f64,
    window: f64,
    residual_tol: f64,
) -> Result<WindowEigenpairs, String> {
    let n = a.n;
    let expected = count_in_window(a, window)?;
    if expected == 0 {
        return Ok(WindowEigenpairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let lu = BandedLu::factor_shifted(a, Complex64::new(shift, 0.0));
    let mut m = (4 * expected + 20).min(n);
    loop {
        let got = run_lanczos(a, &lu, shift, window, residual_tol, m, expected)?;
        if let Some(pairs) = got {
            return Ok(pairs);
        }
        if m >= n || m >= 40 * (expected + 2) {
            return Err(format!(
                "lanczos did not resolve {expected} window eigenpairs with m = {m}"
            ));
        }
        m = (2 * m).min(n);
    }
}

fn count_in_window(a: &HermitianBanded, window: f64) -> Result<usize, String> {
    let hi = inertia_with_retry(a, window)?;
    let lo = inertia_with_retry(a, -window)?;
    Ok(hi - lo)
}

/// Inertia count with small shift nudges when a pivot collapses exactly at
/// the requested shift.
pub fn inertia_with_retry(a: &HermitianBanded, shift: f64) -> Result<usize, String> {
    let scale = shift.abs().max(1.0);
    let mut nudge = 0.0;
    for _ in 0..6 {
        match a.inertia_below(shift + nudge) {
            Ok(c) => return Ok(c),
            Err(_) => {
                nudge = if nudge == 0.0 {
                    1e-9 * scale
                } else {
                    nudge * 10.0
                };
            }
        }
    }
    Err(format!("inertia count kept failing near shift {shift}"))
}

fn run_lanczos(
    a: &HermitianBanded,
    lu: &BandedLu,
    shift: f64,
    window: f64,
    residual_tol: f64,
    m: usize,
    expected: usize,
) -> Result<Option<WindowEigenpairs>, String> {
    let n = a.n;
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    // deterministic pseudo-random start vector
    let mut v = vec![C_ZERO; n];
    let mut state = 0x853C49E6748FEA9Bu64;
    for x in v.iter_mut() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let re = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let im = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        *x = Complex64::new(re, im);
    }
    normalize(&mut v);

    for _ in 0..m {
        let mut w = v.clone();
        lu.solve_in_place(&mut w);
        let alpha = real_dot(&v, &w);
        alphas.push(alpha);
        // w -= alpha v + beta v_prev, then full reorthogonalization
        for (wi, vi) in w.iter_mut().zip(v.iter()) {
            *wi -= alpha * vi;
        }
        if let Some(prev) = basis.last() {
            let b = *betas.last().unwrap();
            for (wi, pi) in w.iter_mut().zip(prev.iter()) {
                *wi -= b * pi;
            }
        }
        basis.push(v.clone());
        for q in &basis {
            let c = dot(q, &w);
            for (wi, qi) in w.iter_mut().zip(q.iter()) {
                *wi -= c * qi;
            }
        }
        let beta = norm(&w);
        if beta < 1e-14 {
            break;
        }
        betas.push(beta);
        for x in w.iter_mut() {
            *x /= beta;
        }
        v = w;
    }

    let k = alphas.len();
    let (thetas, svecs) = eigh_sym_tridiag(&alphas, &betas[..k.saturating_sub(1)]);

    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for (idx, &theta) in thetas.iter().enumerate() {
        if theta.abs() < 1e-14 {
            continue;
        }
        let lambda = shift + 1.0 / theta;
        if lambda.abs() >= window {
            continue;
        }
        // assemble the Ritz vector
        let s = &svecs[idx];
        let mut x = vec![C_ZERO; n];
        for (j, q) in basis.iter().enumerate() {
            let c = s[j];
            for (xi, qi) in x.iter_mut().zip(q.iter()) {
                *xi += c * qi;
            }
        }
        normalize(&mut x);
        // direct residual in the original operator
        let mut ax = vec![C_ZERO; n];
        a.apply(&x, &mut ax);
        let mut res = 0.0f64;
        for i in 0..n {
            res += (ax[i] - Complex64::new(lambda, 0.0) * x[i]).norm_sqr();
        }
        if res.sqrt() < residual_tol {
            values.push(lambda);
            vectors.push(x);
        }
    }

    // de-duplicate Ritz copies of the same eigenpair
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut vals = Vec::new();
    let mut vecs: Vec<Vec<Complex64>> = Vec::new();
    for &i in &order {
        let mut dup = false;
        for (v0, x0) in vals.iter().zip(vecs.iter()) {
            let v0: f64 = *v0;
            if (v0 - values[i]).abs() < 1e-10 && dot(x0, &vectors[i]).norm() > 0.9 {
                dup = true;
                break;
            }
        }
        if !dup {
            vals.push(values[i]);
            vecs.push(vectors[i].clone());
        }
    }

    if vals.len() == expected {
        Ok(Some(WindowEigenpairs {
            values: vals,
            vectors: vecs,
        }))
    } else {
        Ok(None)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    dot(a, b).re
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig::eigh;
    use crate::linalg::identity;

    #[test]
    fn finds_interior_window_eigenpairs() {
        // banded Hermitian with a known cluster near zero
        let n = 120;
        let hb = 2;
        let mut b = HermitianBanded::zeros(n, hb);
        let mut state = 42u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for j in 0..n {
            // diagonal pushed away from zero except a few sites
            let d = if j % 17 == 0 { 0.05 * rnd() } else { 2.0 + rnd() };
            b.data[(0, j)] = Complex64::new(d, 0.0);
            for dd in 1..=hb.min(n - 1 - j) {
                b.data[(dd, j)] = Complex64::new(0.1 * rnd(), 0.1 * rnd());
            }
        }
        let mut dense = identity(n);
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] = b.get(i, j);
            }
        }
        let (vals, _) = eigh(&dense);
        let window = 0.8;
        let expected: Vec<f64> = vals.iter().copied().filter(|v| v.abs() < window).collect();
        let got = window_eigenpairs(&b, 0.0, window, 1e-8).expect("lanczos failed");
        assert_eq!(got.values.len(), expected.len());
        for (a, b) in got.values.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
