//! The b-JLO odd cochain in reduced D-form and its t-derivative (dt) component.
//!
//! bCh^{2k+1}(D, t)(a_0, ..., a_{2k+1})
//!   = ((-1)^k / sqrt(pi)) <a_0, [tD, a_1], ..., [tD, a_{2k+1}]>_t
//! with the heat bracket over e^{-sigma t^2 D^2}. For the b-trace backend the
//! regularized trace is the diagonal weight operator L folded into the first
//! slot; everything else is the plain matrix machinery.

use super::bracket::{bracket, BracketInput};
use crate::bgeom::{BGeometry1D, RegWeights};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operator::SpectralDecomposition;
use crate::policy::NumericPolicy;
use num_complex::Complex64;

#[derive(Clone)]
pub enum TraceSide<'a> {
    /// Honest matrix trace (closed-model control group).
    Matrix,
    /// Regularized b-trace over the given geometry.
    BTrace {
        geom: &'a BGeometry1D,
        weights: &'a RegWeights,
        fiber_dim: usize,
    },
}

pub struct JloEvaluator<'a> {
    pub decomp: &'a SpectralDecomposition,
    pub trace: TraceSide<'a>,
    pub policy: &'a NumericPolicy,
    /// Eigenbasis restriction |beta| <= basis_cut (None keeps everything).
    pub basis_cut: Option<f64>,
    // cached data in the (restricted) eigenbasis
    kept: Vec<usize>,
    nodes_unit: Vec<f64>, // -beta_k^2 (scaled by t^2 at evaluation time)
    fold: Option<CMat>,   // U^* L U restricted, for the b-trace backend
}

impl<'a> JloEvaluator<'a> {
    pub fn new(
        decomp: &'a SpectralDecomposition,
        trace: TraceSide<'a>,
        policy: &'a NumericPolicy,
        basis_cut: Option<f64>,
    ) -> Self {
        let kept: Vec<usize> = match basis_cut {
            None => (0..decomp.dim()).collect(),
            Some(c) => (0..decomp.dim())
                .filter(|&k| decomp.eigenvalues[k].abs() <= c)
                .collect(),
        };
        let nodes_unit: Vec<f64> = kept
            .iter()
            .map(|&k| -decomp.eigenvalues[k] * decomp.eigenvalues[k])
            .collect();
        let fold = match &trace {
            TraceSide::Matrix => None,
            TraceSide::BTrace {
                geom,
                weights,
                fiber_dim,
            } => {
                // U^* L U with L the diagonal site-weight operator
                let n = geom.n();
                let dim = decomp.dim();
                assert_eq!(dim, n * fiber_dim);
                let u = &decomp.eigenvectors;
                let mut lu = CMat::zeros((dim, kept.len()));
                for (col, &k) in kept.iter().enumerate() {
                    for j in 0..n {
                        let w = weights.diag_multiplier[j];
                        for f in 0..*fiber_dim {
                            let row = j * fiber_dim + f;
                            lu[(row, col)] = u[(row, k)] * w;
                        }
                    }
                }
                let mut ustar = CMat::zeros((kept.len(), dim));
                for (row, &k) in kept.iter().enumerate() {
                    for j in 0..dim {
                        ustar[(row, j)] = u[(j, k)].conj();
                    }
                }
                Some(linalg::matmul(&ustar, &lu))
            }
        };
        JloEvaluator {
            decomp,
            trace,
            policy,
            basis_cut,
            kept,
            nodes_unit,
            fold,
        }
    }

    pub fn basis_size(&self) -> usize {
        self.kept.len()
    }

    /// Transform a grid-basis matrix into the (restricted) eigenbasis.
    pub fn to_basis(&self, a: &CMat) -> CMat {
        let dim = self.decomp.dim();
        let m = self.kept.len();
        let u = &self.decomp.eigenvectors;
        let mut au = CMat::zeros((dim, m));
        // A * U_restricted
        for (col, &k) in self.kept.iter().enumerate() {
            for i in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..dim {
                    acc += a[(i, j)] * u[(j, k)];
                }
                au[(i, col)] = acc;
            }
        }
        let mut out = CMat::zeros((m, m));
        for (row, &k) in self.kept.iter().enumerate() {
            for col in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..dim {
                    acc += u[(j, k)].conj() * au[(j, col)];
                }
                out[(row, col)] = acc;
            }
        }
        out
    }

    /// Diagonal of D in the restricted basis.
    pub fn d_diag(&self) -> CMat {
        let m = self.kept.len();
        let mut d = CMat::zeros((m, m));
        for (i, &k) in self.kept.iter().enumerate() {
            d[(i, i)] = Complex64::new(self.decomp.eigenvalues[k], 0.0);
        }
        d
    }

    /// Commutator [D, a] in the restricted eigenbasis: (beta_i - beta_j) a_ij.
    pub fn commutator_with_d(&self, a_basis: &CMat) -> CMat {
        let m = self.kept.len();
        CMat::from_shape_fn((m, m), |(i, j)| {
            let bi = self.decomp.eigenvalues[self.kept[i]];
            let bj = self.decomp.eigenvalues[self.kept[j]];
            a_basis[(i, j)] * (bi - bj)
        })
    }

    /// Raw heat bracket of eigenbasis arguments at scale t (trace side folded
    /// into the first slot for the b-backend).
    pub fn raw_bracket(&self, args_basis: &[CMat], t: f64) -> Complex64 {
        let nodes: Vec<f64> = self.nodes_unit.iter().map(|&m| t * t * m).collect();
        let first = match &self.fold {
            None => args_basis[0].clone(),
            Some(w) => linalg::matmul(w, &args_basis[0]),
        };
        let mut args: Vec<CMat> = Vec::with_capacity(args_basis.len());
        args.push(first);
        args.extend_from_slice(&args_basis[1..]);
        bracket(
            &BracketInput {
                nodes: &nodes,
                args: &args,
            },
            self.policy,
        )
    }

    /// bCh^n(D, t)(a_0, ..., a_n) in reduced D-form: n must be odd.
    /// Arguments are given in the eigenbasis (use `to_basis`).
    pub fn b_jlo_cochain(&self, args_basis: &[CMat], t: f64) -> Result<Complex64> {
        let n = args_basis.len() - 1;
        if n % 2 == 0 {
            return Err(Error::EvenDegree { n });
        }
        let k = (n - 1) / 2;
        let mut full = Vec::with_capacity(n + 1);
        full.push(args_basis[0].clone());
        for a in &args_basis[1..] {
            full.push(self.commutator_with_d(a).mapv(|z| z * t));
        }
        let v = self.raw_bracket(&full, t);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Ok(v * sign / std::f64::consts::PI.sqrt())
    }

    /// dt-component of the one-form expansion: the alternating sum over
    /// insertion slots of a bare D argument,
    /// ((-1)^k/sqrt(pi)) sum_i (-1)^i <a_0, [tD,a_1], .., [tD,a_i], D, ..>.
    /// The public odd-cochain op; the parity-free version feeds the b/B-dual
    /// bookkeeping of the transgression identity.
    pub fn transgression_component(&self, args_basis: &[CMat], t: f64) -> Result<Complex64> {
        let n = args_basis.len() - 1;
        if n % 2 == 0 {
            return Err(Error::EvenDegree { n });
        }
        Ok(self.insertion_cochain_raw(args_basis, t))
    }

    pub fn insertion_cochain_raw(&self, args_basis: &[CMat], t: f64) -> Complex64 {
        let n = args_basis.len() - 1;
        let k = n / 2;
        let d = self.d_diag();
        let mut comms = Vec::with_capacity(n);
        for a in &args_basis[1..] {
            comms.push(self.commutator_with_d(a).mapv(|z| z * t));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ins in 0..=n {
            let mut full = Vec::with_capacity(n + 2);
            full.push(args_basis[0].clone());
            full.extend(comms.iter().cloned());
            // bare D inserted after slot `ins`
            full.insert(ins + 1, d.clone());
            let sign = if ins % 2 == 0 { 1.0 } else { -1.0 };
            acc += self.raw_bracket(&full, t) * sign;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc * sign / std::f64::consts::PI.sqrt()
    }
}
