//! Finite-dimensional Hermitian operator algebra: cached spectral
//! decompositions, heat operators e^{-t^2 H^2}, Cayley transforms, spectral
//! projections and window splits, operator paths and eigenbranch matching.

use crate::error::{Error, Result};
use crate::linalg::{self, assign, eig, CMat, C_I, C_ONE, C_ZERO};
use crate::policy::NumericPolicy;
use ndarray::Array2;
use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose column k is the phase-fixed eigenvector for
    /// eigenvalues[k].
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rebuild sum beta_k phi_k phi_k^*.
    pub fn reconstruct(&self) -> CMat {
        let n = self.dim();
        let u = &self.eigenvectors;
        let mut out = Array2::from_elem((n, n), C_ZERO);
        for k in 0..n {
            let b = Complex64::new(self.eigenvalues[k], 0.0);
            for i in 0..n {
                let uik = u[(i, k)];
                for j in 0..n {
                    out[(i, j)] += b * uik * u[(j, k)].conj();
                }
            }
        }
        out
    }

    /// U f(Lambda) U^* for a scalar spectral function.
    pub fn apply<F: Fn(f64) -> Complex64>(&self, f: F) -> CMat {
        let n = self.dim();
        let u = &self.eigenvectors;
        let fvals: Vec<Complex64> = self.eigenvalues.iter().map(|&b| f(b)).collect();
        let mut scaled = u.clone();
        for k in 0..n {
            for i in 0..n {
                scaled[(i, k)] *= fvals[k];
            }
        }
        linalg::matmul(&scaled, &linalg::adjoint(u))
    }

    /// Transform a matrix into this eigenbasis: U^* A U.
    pub fn to_eigenbasis(&self, a: &CMat) -> CMat {
        linalg::matmul(
            &linalg::adjoint(&self.eigenvectors),
            &linalg::matmul(a, &self.eigenvectors),
        )
    }
}

#[derive(Debug, Clone)]
pub struct HermitianOperator {
    entries: CMat,
    decomp: OnceLock<Arc<SpectralDecomposition>>,
}

impl HermitianOperator {
    /// Validates Hermiticity (relative Frobenius) before accepting the matrix.
    pub fn new(entries: CMat, policy: &NumericPolicy) -> Result<Self> {
        let asym = linalg::hermiticity_defect(&entries);
        if asym > policy.hermiticity_rtol {
            return Err(Error::NonHermitian {
                asym,
                tol: policy.hermiticity_rtol,
            });
        }
        Ok(HermitianOperator {
            entries,
            decomp: OnceLock::new(),
        })
    }

    /// Symmetrizes (A + A^*)/2 and wraps without further validation.
    pub fn from_symmetrized(a: CMat) -> Self {
        let adj = linalg::adjoint(&a);
        let sym = (&a + &adj).mapv(|z| 0.5 * z);
        HermitianOperator {
            entries: sym,
            decomp: OnceLock::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let entries = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                C_ZERO
            }
        });
        HermitianOperator {
            entries,
            decomp: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    /// Spectral decomposition, computed once and cached. Deterministic:
    /// eigenvalues ascending, eigenvector phases fixed so the largest-modulus
    /// component is real positive, degenerate groups ordered lexicographically.
    pub fn decompose(&self) -> &SpectralDecomposition {
        self.decomp.get_or_init(|| {
            let (vals, vecs) = eig::eigh(&self.entries);
            Arc::new(fix_decomposition(vals, vecs))
        })
    }

    pub fn spectral_radius(&self) -> f64 {
        let d = self.decompose();
        d.eigenvalues
            .iter()
            .fold(0.0f64, |m, &b| m.max(b.abs()))
    }

    pub fn kernel_dim(&self, policy: &NumericPolicy) -> usize {
        let tol = policy.kernel_tol(self.spectral_radius());
        self.decompose()
            .eigenvalues
            .iter()
            .filter(|b| b.abs() < tol)
            .count()
    }

    /// Heat operator e^{-t^2 H^2} via spectral calculus.
    pub fn heat(&self, t: f64) -> Result<CMat> {
        if t < 0.0 {
            return Err(Error::invalid(format!("heat scale t = {t} must be >= 0")));
        }
        let t2 = t * t;
        Ok(self
            .decompose()
            .apply(|b| Complex64::new((-t2 * b * b).exp(), 0.0)))
    }

    /// Cayley transform (H - i)(H + i)^{-1}; unitary for self-adjoint H.
    pub fn cayley(&self) -> CMat {
        self.decompose().apply(|b| {
            let z = Complex64::new(b, -1.0);
            let w = Complex64::new(b, 1.0);
            z / w
        })
    }

    fn window_gap_check(&self, lambda0: f64, policy: &NumericPolicy) -> Result<()> {
        if lambda0 <= 0.0 {
            return Err(Error::invalid("window radius must be positive"));
        }
        for &b in &self.decompose().eigenvalues {
            let d = (b.abs() - lambda0).abs();
            if d < policy.gap_check_tol {
                return Err(Error::AmbiguousWindow {
                    eigenvalue: b,
                    threshold: lambda0,
                    tol: policy.gap_check_tol,
                });
            }
        }
        Ok(())
    }

    /// Orthogonal projection onto eigenvectors with |beta| < lambda0.
    pub fn spectral_projection(&self, lambda0: f64, policy: &NumericPolicy) -> Result<CMat> {
        self.window_gap_check(lambda0, policy)?;
        Ok(self.decompose().apply(|b| {
            if b.abs() < lambda0 {
                C_ONE
            } else {
                C_ZERO
            }
        }))
    }

    /// (A, B, C) with A = H P, B = H (I - P) + P, C = H (I - P).
    pub fn split_parts(&self, lambda0: f64, policy: &NumericPolicy) -> Result<(CMat, CMat, CMat)> {
        self.window_gap_check(lambda0, policy)?;
        let d = self.decompose();
        let a = d.apply(|b| {
            if b.abs() < lambda0 {
                Complex64::new(b, 0.0)
            } else {
                C_ZERO
            }
        });
        let bb = d.apply(|b| {
            if b.abs() < lambda0 {
                C_ONE
            } else {
                Complex64::new(b, 0.0)
            }
        });
        let c = d.apply(|b| {
            if b.abs() < lambda0 {
                C_ZERO
            } else {
                Complex64::new(b, 0.0)
            }
        });
        Ok((a, bb, c))
    }

    /// Eigenvalues of B = H(I-P) + P as a plain list (window values replaced
    /// by 1), matching split_parts. Shares this operator's eigenbasis.
    pub fn window_flattened_eigenvalues(&self, lambda0: f64) -> Vec<f64> {
        self.decompose()
            .eigenvalues
            .iter()
            .map(|&b| if b.abs() < lambda0 { 1.0 } else { b })
            .collect()
    }
}

fn fix_decomposition(vals: Vec<f64>, mut vecs: CMat) -> SpectralDecomposition {
    let n = vals.len();
    // phase fixing: largest-modulus component becomes real positive
    for k in 0..n {
        let mut best = 0usize;
        let mut mag = -1.0f64;
        for i in 0..n {
            let m = vecs[(i, k)].norm();
            if m > mag + 1e-15 {
                mag = m;
                best = i;
            }
        }
        let z = vecs[(best, k)];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            for i in 0..n {
                vecs[(i, k)] *= phase;
            }
        }
    }
    // order degenerate groups lexicographically
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        match vals[a].partial_cmp(&vals[b]).unwrap() {
            std::cmp::Ordering::Equal => compare_columns(&vecs, a, b),
            o if (vals[a] - vals[b]).abs() < 1e-14 * vals[a].abs().max(1.0) => {
                // numerically degenerate: lexicographic tiebreak
                let c = compare_columns(&vecs, a, b);
                if c == std::cmp::Ordering::Equal {
                    o
                } else {
                    c
                }
            }
            o => o,
        }
    });
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = Array2::from_shape_fn((n, n), |(i, j)| vecs[(i, order[j])]);
    SpectralDecomposition {
        eigenvalues: sorted_vals,
        eigenvectors: sorted_vecs,
    }
}

fn compare_columns(vecs: &CMat, a: usize, b: usize) -> std::cmp::Ordering {
    for i in 0..vecs.nrows() {
        let (za, zb) = (vecs[(i, a)], vecs[(i, b)]);
        let c = za.re.partial_cmp(&zb.re).unwrap();
        if c != std::cmp::Ordering::Equal && (za.re - zb.re).abs() > 1e-12 {
            return c;
        }
        let c = za.im.partial_cmp(&zb.im).unwrap();
        if c != std::cmp::Ordering::Equal && (za.im - zb.im).abs() > 1e-12 {
            return c;
        }
    }
    std::cmp::Ordering::Equal
}

/// The affine family D_u = (1 - u) D0 + u D1 with constant derivative D1 - D0.
#[derive(Debug, Clone)]
pub struct OperatorPath {
    pub endpoint0: HermitianOperator,
    pub endpoint1: HermitianOperator,
    derivative: CMat,
}

impl OperatorPath {
    pub fn new(d0: HermitianOperator, d1: HermitianOperator) -> Result<Self> {
        if d0.dim() != d1.dim() {
            return Err(Error::invalid("path endpoints differ in dimension"));
        }
        let derivative = d1.entries() - d0.entries();
        Ok(OperatorPath {
            endpoint0: d0,
            endpoint1: d1,
            derivative,
        })
    }

    pub fn dim(&self) -> usize {
        self.endpoint0.dim()
    }

    pub fn derivative(&self) -> &CMat {
        &self.derivative
    }

    pub fn sample(&self, u: f64) -> HermitianOperator {
        if u == 0.0 {
            return self.endpoint0.clone();
        }
        if u == 1.0 {
            return self.endpoint1.clone();
        }
        let a = self.endpoint0.entries().mapv(|z| z * (1.0 - u));
        let b = self.endpoint1.entries().mapv(|z| z * u);
        HermitianOperator {
            entries: &a + &b,
            decomp: OnceLock::new(),
        }
    }
}

/// Permutation matching eigenbranches of `next` to those of `prev` by
/// maximizing total squared eigenvector overlap. Degenerate groups are
/// assessed by aggregated subspace overlap before the per-pair check.
pub fn match_eigenbranches(
    prev: &SpectralDecomposition,
    next: &SpectralDecomposition,
    policy: &NumericPolicy,
) -> Result<Vec<usize>> {
    let n = prev.dim();
    if n != next.dim() {
        return Err(Error::invalid("decompositions differ in dimension"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut overlap = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = C_ZERO;
            for r in 0..n {
                acc += prev.eigenvectors[(r, i)].conj() * next.eigenvectors[(r, j)];
            }
            overlap[i][j] = acc.norm_sqr();
        }
    }
    let perm = assign::max_assignment(&overlap);
    // aggregate over degenerate blocks of prev: within a block the matched
    // subspace overlap is what matters, not per-vector overlaps
    let mut quality = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n
            && (prev.eigenvalues[j] - prev.eigenvalues[i]).abs()
                < 1e-9 * prev.eigenvalues[i].abs().max(1.0)
        {
            j += 1;
        }
        // block i..j: subspace overlap with the matched columns
        let mut block = 0.0;
        for bi in i..j {
            for bj in i..j {
                block += overlap[bi][perm[bj]];
            }
        }
        quality += block.min((j - i) as f64);
        i = j;
    }
    let mean = quality / n as f64;
    if mean < policy.overlap_match_min {
        return Err(Error::StepTooLarge { overlap: mean });
    }
    Ok(perm)
}

/// Clifford generator context for graded matrices on H (x) C^{1|1}
/// (optionally with a second generator for degree 2).
#[derive(Debug, Clone)]
pub struct CliffordContext {
    pub dim: usize,
    pub parity: Vec<i8>,
    pub q: usize,
    pub generators: Vec<CMat>,
}

impl CliffordContext {
    /// Degree-1 module over a base space of dimension `base_dim`: the total
    /// space is C^{1|1} (x) base, e1 = [[0,1],[-1,0]] (x) Id.
    pub fn degree1(base_dim: usize) -> Self {
        let n = 2 * base_dim;
        let mut parity = vec![1i8; n];
        for p in parity.iter_mut().skip(base_dim) {
            *p = -1;
        }
        let mut e1 = Array2::from_elem((n, n), C_ZERO);
        for i in 0..base_dim {
            e1[(i, base_dim + i)] = C_ONE;
            e1[(base_dim + i, i)] = -C_ONE;
        }
        CliffordContext {
            dim: n,
            parity,
            q: 1,
            generators: vec![e1],
        }
    }

    /// Degree-2 module: adds e2 = [[0,i],[i,0]] (x) Id on the same factor.
    pub fn degree2(base_dim: usize) -> Self {
        let mut ctx = Self::degree1(base_dim);
        let n = ctx.dim;
        let mut e2 = Array2::from_elem((n, n), C_ZERO);
        for i in 0..base_dim {
            e2[(i, base_dim + i)] = C_I;
            e2[(base_dim + i, i)] = C_I;
        }
        ctx.q = 2;
        ctx.generators.push(e2);
        ctx
    }

    pub fn validate(&self) -> Result<()> {
        for (i, ei) in self.generators.iter().enumerate() {
            let skew = ei + &linalg::adjoint(ei);
            if linalg::frob_norm(&skew) > 1e-12 * (self.dim as f64).sqrt() {
                return Err(Error::invalid(format!("generator e{} is not skew-adjoint", i + 1)));
            }
            for (j, ej) in self.generators.iter().enumerate() {
                let mut anti = &linalg::matmul(ei, ej) + &linalg::matmul(ej, ei);
                if i == j {
                    for d in 0..self.dim {
                        anti[(d, d)] += Complex64::new(2.0, 0.0);
                    }
                }
                if linalg::frob_norm(&anti) > 1e-12 * (self.dim as f64) {
                    return Err(Error::invalid(format!(
                        "Clifford relation fails for (e{}, e{})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn supertrace(&self, m: &CMat) -> Complex64 {
        let mut acc = C_ZERO;
        for i in 0..self.dim {
            let s = Complex64::new(self.parity[i] as f64, 0.0);
            acc += s * m[(i, i)];
        }
        acc
    }

    /// Normalized supertrace Str_{(q)}: for q = 1 the factor is 1/(2 sqrt(-pi))
    /// = -i/(2 sqrt(pi)); for q = 2 it is -1/(4 pi). Returns the complex value;
    /// callers take real parts after checking the imaginary residue.
    pub fn str_q(&self, m: &CMat) -> Result<Complex64> {
        match self.q {
            1 => {
                let e1a = linalg::matmul(&self.generators[0], m);
                let c = Complex64::new(0.0, -0.5 / std::f64::consts::PI.sqrt());
                Ok(c * self.supertrace(&e1a))
            }
            2 => {
                let e12 = linalg::matmul(&self.generators[0], &self.generators[1]);
                let prod = linalg::matmul(&e12, m);
                let c = Complex64::new(-0.25 / std::f64::consts::PI, 0.0);
                Ok(c * self.supertrace(&prod))
            }
            q => Err(Error::UnsupportedDegree { q }),
        }
    }
}

/// A matrix together with its grading context.
#[derive(Debug, Clone)]
pub struct GradedMatrix {
    pub ctx: Arc<CliffordContext>,
    pub base: CMat,
}

impl GradedMatrix {
    pub fn new(ctx: Arc<CliffordContext>, base: CMat) -> Result<Self> {
        if base.nrows() != ctx.dim || base.ncols() != ctx.dim {
            return Err(Error::invalid("graded matrix dimension mismatch"));
        }
        Ok(GradedMatrix { ctx, base })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob_norm, identity, matmul, op_norm};

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
        let mut state = seed;
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
        HermitianOperator::new(a, &policy()).unwrap()
    }

    #[test]
    fn decompose_diagonal_cases() {
        let h = HermitianOperator::from_diagonal(&[2.0, -1.0]);
        let d = h.decompose();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 2.0).abs() < 1e-14);

        let mut x = Array2::from_elem((2, 2), C_ZERO);
        x[(0, 1)] = C_ONE;
        x[(1, 0)] = C_ONE;
        let h = HermitianOperator::new(x, &policy()).unwrap();
        let d = h.decompose();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decompose_reconstruction_and_determinism() {
        let h = random_hermitian(8, 11);
        let d = h.decompose();
        let rebuilt = d.reconstruct();
        let rel = frob_norm(&(&rebuilt - h.entries())) / frob_norm(h.entries());
        assert!(rel < 1e-10, "reconstruction error {rel}");
        // determinism under recomputation
        let h2 = HermitianOperator::new(h.entries().clone(), &policy()).unwrap();
        let d2 = h2.decompose();
        assert!(frob_norm(&(&d.eigenvectors - &d2.eigenvectors)) < 1e-13);
        // phase fixing: largest component of each column real positive
        for k in 0..8 {
            let mut best = 0;
            let mut mag = -1.0;
            for i in 0..8 {
                if d.eigenvectors[(i, k)].norm() > mag {
                    mag = d.eigenvectors[(i, k)].norm();
                    best = i;
                }
            }
            let z = d.eigenvectors[(best, k)];
            assert!(z.im.abs() < 1e-12 && z.re > 0.0);
        }
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let mut a = identity(3);
        a[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(matches!(
            HermitianOperator::new(a, &policy()),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn heat_identity_and_diagonal() {
        let h = random_hermitian(5, 3);
        let e0 = h.heat(0.0).unwrap();
        assert!(frob_norm(&(&e0 - &identity(5))) < 1e-12);

        let hd = HermitianOperator::from_diagonal(&[0.5, -2.0, 3.0]);
        let e = hd.heat(1.5).unwrap();
        for (i, lam) in [0.5, -2.0, 3.0].iter().enumerate() {
            let expect = (-(1.5f64 * 1.5) * lam * lam).exp();
            assert!((e[(i, i)].re - expect).abs() < 1e-14);
        }
        assert!(h.heat(-1.0).is_err());
    }

    #[test]
    fn heat_matches_taylor_series() {
        // ||t^2 H^2|| < 1: frozen truncated-Taylor oracle
        let h = random_hermitian(6, 21);
        let t = 0.4 / h.spectral_radius();
        let e = h.heat(t).unwrap();
        let m = h.entries();
        let t2h2 = matmul(m, m).mapv(|z| z * (t * t));
        let mut term = identity(6);
        let mut series = identity(6);
        for k in 1..40 {
            term = matmul(&term, &t2h2).mapv(|z| -z / (k as f64));
            series = &series + &term;
        }
        assert!(frob_norm(&(&series - &e)) < 1e-10);
    }

    #[test]
    fn heat_commutes_with_operator() {
        let h = random_hermitian(7, 5);
        for t in [0.1, 0.7, 2.0] {
            let e = h.heat(t).unwrap();
            let c = &matmul(h.entries(), &e) - &matmul(&e, h.entries());
            assert!(op_norm(&c) < 1e-10);
        }
    }

    #[test]
    fn cayley_special_values_and_unitarity() {
        let z = HermitianOperator::from_diagonal(&[0.0, 0.0]);
        let k = z.cayley();
        assert!(frob_norm(&(&k + &identity(2))) < 1e-14);

        let one = HermitianOperator::from_diagonal(&[1.0]);
        let k1 = one.cayley();
        assert!((k1[(0, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-14);

        let h = random_hermitian(6, 9);
        let k = h.cayley();
        assert!(linalg::unitarity_defect(&k) < 1e-10);
        // eigenphases agree with (beta - i)/(beta + i) per eigenvalue
        let d = h.decompose();
        let kd = d.to_eigenbasis(&k);
        for (i, &b) in d.eigenvalues.iter().enumerate() {
            let expect = Complex64::new(b, -1.0) / Complex64::new(b, 1.0);
            assert!((kd[(i, i)] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_examples() {
        let h = HermitianOperator::from_diagonal(&[0.1, 2.0]);
        let p = h.spectral_projection(1.0, &policy()).unwrap();
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(p[(1, 1)].norm() < 1e-14);

        let p_full = h.spectral_projection(5.0, &policy()).unwrap();
        assert!(frob_norm(&(&p_full - &identity(2))) < 1e-12);

        // threshold collision
        assert!(matches!(
            h.spectral_projection(2.0, &policy()),
            Err(Error::AmbiguousWindow { .. })
        ));

        let h = random_hermitian(8, 33);
        let lambda0 = 0.4;
        let p = h.spectral_projection(lambda0, &policy()).unwrap();
        let count = h
            .decompose()
            .eigenvalues
            .iter()
            .filter(|b| b.abs() < lambda0)
            .count();
        let rank: f64 = (0..8).map(|i| p[(i, i)].re).sum();
        assert!((rank - count as f64).abs() < 1e-10);
        // idempotent and self-adjoint
        assert!(frob_norm(&(&matmul(&p, &p) - &p)) < 1e-12);
        assert!(frob_norm(&(&linalg::adjoint(&p) - &p)) < 1e-12);
    }

    #[test]
    fn split_parts_examples() {
        let h = HermitianOperator::from_diagonal(&[0.1, 2.0]);
        let (a, b, c) = h.split_parts(1.0, &policy()).unwrap();
        assert!((a[(0, 0)].re - 0.1).abs() < 1e-14 && a[(1, 1)].norm() < 1e-14);
        assert!((b[(0, 0)].re - 1.0).abs() < 1e-14 && (b[(1, 1)].re - 2.0).abs() < 1e-14);
        assert!(c[(0, 0)].norm() < 1e-14 && (c[(1, 1)].re - 2.0).abs() < 1e-14);

        // full window: A = H, C = 0, B = Id
        let (a, b, c) = h.split_parts(10.0, &policy()).unwrap();
        assert!(frob_norm(&(&a - h.entries())) < 1e-12);
        assert!(frob_norm(&(&b - &identity(2))) < 1e-12);
        assert!(frob_norm(&c) < 1e-12);

        // A + C = H on random instances
        for seed in 0..5 {
            let h = random_hermitian(6, 100 + seed);
            let (a, _b, c) = h.split_parts(0.5, &policy()).unwrap();
            assert!(frob_norm(&(&(&a + &c) - h.entries())) < 1e-12);
            // P C = C P = 0
            let p = h.spectral_projection(0.5, &policy()).unwrap();
            assert!(op_norm(&matmul(&p, &c)) < 1e-12);
            assert!(op_norm(&matmul(&c, &p)) < 1e-12);
        }
    }

    #[test]
    fn branch_matching() {
        let h = random_hermitian(6, 55);
        let d = h.decompose();
        let perm = match_eigenbranches(d, d, &policy()).unwrap();
        assert_eq!(perm, vec![0, 1, 2, 3, 4, 5]);

        // swap two columns of a copy: matching recovers the transposition
        let mut swapped_vecs = d.eigenvectors.clone();
        for r in 0..6 {
            let t = swapped_vecs[(r, 1)];
            swapped_vecs[(r, 1)] = swapped_vecs[(r, 4)];
            swapped_vecs[(r, 4)] = t;
        }
        let mut vals = d.eigenvalues.clone();
        vals.swap(1, 4);
        let swapped = SpectralDecomposition {
            eigenvalues: vals,
            eigenvectors: swapped_vecs,
        };
        let perm = match_eigenbranches(d, &swapped, &policy()).unwrap();
        assert_eq!(perm, vec![0, 4, 2, 3, 1, 5]);
    }

    #[test]
    fn branch_matching_analytic_family() {
        // D_u = diag(u - 0.5, 0.3) sampled at u = 0.4, 0.6: branches continue
        // without swap even though the sorted order changes
        let d04 = HermitianOperator::from_diagonal(&[0.4 - 0.5, 0.3]);
        let d06 = HermitianOperator::from_diagonal(&[0.6 - 0.5, 0.3]);
        let s04 = d04.decompose();
        let s06 = d06.decompose();
        let perm = match_eigenbranches(s04, s06, &policy()).unwrap();
        // at u=0.4 sorted eigenvalues are [-0.1, 0.3] (branch 1, branch 2);
        // at u=0.6 they are [0.1, 0.3] in the same branch order
        assert_eq!(perm, vec![0, 1]);
        // branch values continue smoothly
        assert!((s04.eigenvalues[0] + 0.1).abs() < 1e-14);
        assert!((s06.eigenvalues[perm[0]] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn branch_matching_rejects_unrelated() {
        let a = random_hermitian(6, 1).decompose().clone();
        let b = random_hermitian(6, 2).decompose().clone();
        // unrelated bases: mean overlap ~ 1/n, well below 0.5
        match match_eigenbranches(&a, &b, &policy()) {
            Err(Error::StepTooLarge { overlap }) => assert!(overlap < 0.5),
            other => panic!("expected StepTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn operator_path_samples_exactly() {
        let d0 = random_hermitian(5, 8);
        let d1 = random_hermitian(5, 9);
        let path = OperatorPath::new(d0.clone(), d1.clone()).unwrap();
        assert!(frob_norm(&(path.sample(0.0).entries() - d0.entries())) == 0.0);
        assert!(frob_norm(&(path.sample(1.0).entries() - d1.entries())) == 0.0);
        let mid = path.sample(0.25);
        let expect = d0.entries().mapv(|z| z * 0.75) + d1.entries().mapv(|z| z * 0.25);
        assert!(frob_norm(&(mid.entries() - &expect)) < 1e-15);
    }

    #[test]
    fn trace_cyclicity_control() {
        // Tr(XY) = Tr(YX) for finite matrices: the matrix model is the
        // vanishing-defect control group.
        let x = random_hermitian(6, 41);
        let y = random_hermitian(6, 42);
        let xy = matmul(x.entries(), y.entries());
        let yx = matmul(y.entries(), x.entries());
        let tr = |m: &CMat| -> Complex64 { (0..6).map(|i| m[(i, i)]).sum() };
        assert!((tr(&xy) - tr(&yx)).norm() < 1e-12);
    }

    #[test]
    fn clifford_contexts_validate() {
        let c1 = CliffordContext::degree1(3);
        c1.validate().unwrap();
        let c2 = CliffordContext::degree2(3);
        c2.validate().unwrap();
        // supertrace of identity = 0 on C^{1|1} (x) base
        assert!(c1.supertrace(&identity(6)).norm() < 1e-15);
    }
}
