//! The pairing curve alpha(t) = <bCh(D, t), Ch(g) - Ch(g^{-1})> truncated at
//! degree 2K+1. Its limits tie the lab together: 2 sf as t grows, twice the
//! de Rham pairing as t shrinks, and the gap between the limits is twice the
//! eta pairing.

use super::cochain::{JloEvaluator, TraceSide};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::operator::SpectralDecomposition;
use crate::policy::NumericPolicy;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct AlphaPoint {
    pub t: f64,
    pub value: f64,
    /// Magnitude of the highest retained degree's contribution.
    pub tail: f64,
    pub imag_residue: f64,
}

#[derive(Debug, Clone)]
pub struct AlphaCurve {
    pub points: Vec<AlphaPoint>,
    pub truncation: usize,
}

impl AlphaCurve {
    pub fn value_at_largest_t(&self) -> f64 {
        self.points.last().map(|p| p.value).unwrap_or(0.0)
    }
    pub fn value_at_smallest_t(&self) -> f64 {
        self.points.first().map(|p| p.value).unwrap_or(0.0)
    }
}

/// alpha(t) at one scale. `g` and `g_inv` are given in the grid basis;
/// the eigenbasis is restricted by the heat cut when one is supplied.
pub fn alpha_at(
    decomp: &SpectralDecomposition,
    trace: &TraceSide,
    g: &CMat,
    g_inv: &CMat,
    truncation: usize,
    t: f64,
    policy: &NumericPolicy,
    basis_cut: Option<f64>,
) -> Result<AlphaPoint> {
    let ev = JloEvaluator::new(decomp, trace.clone(), policy, basis_cut);
    let gb = ev.to_basis(g);
    let gib = ev.to_basis(g_inv);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut tail = 0.0f64;
    for k in 0..=truncation {
        let n = 2 * k + 1;
        let fact: f64 = (1..=k).map(|q| q as f64).product();
        let mut p1: Vec<CMat> = Vec::with_capacity(n + 1);
        let mut p2: Vec<CMat> = Vec::with_capacity(n + 1);
        for j in 0..=n {
            if j % 2 == 0 {
                p1.push(gib.clone());
                p2.push(gb.clone());
            } else {
                p1.push(gb.clone());
                p2.push(gib.clone());
            }
        }
        let v1 = ev.b_jlo_cochain(&p1, t)?;
        let v2 = ev.b_jlo_cochain(&p2, t)?;
        let contrib = (v1 - v2) * fact;
        acc += contrib;
        if k == truncation {
            tail = contrib.norm();
        }
    }
    Ok(AlphaPoint {
        t,
        value: acc.re,
        tail,
        imag_residue: acc.im.abs(),
    })
}

/// Heat cut for the restricted eigenbasis: eigenvalues beyond this contribute
/// less than ~1e-14 through the Gaussian weights at scale t.
pub fn heat_basis_cut(t: f64, dim: usize, degree: usize) -> f64 {
    let ln_terms = ((degree + 2) as f64) * (dim.max(2) as f64).ln() + 34.0;
    (ln_terms.sqrt() / t.max(1e-6)).max(1.0)
}

#[allow(clippy::too_many_arguments)]
pub fn alpha_curve(
    decomp: &SpectralDecomposition,
    trace: &TraceSide,
    g: &CMat,
    g_inv: &CMat,
    truncation: usize,
    t_grid: &[f64],
    policy: &NumericPolicy,
    use_heat_cut: bool,
) -> Result<AlphaCurve> {
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let cut = if use_heat_cut {
            Some(heat_basis_cut(t, decomp.dim(), 2 * truncation + 1))
        } else {
            None
        };
        points.push(alpha_at(
            decomp, trace, g, g_inv, truncation, t, policy, cut,
        )?);
    }
    Ok(AlphaCurve {
        points,
        truncation,
    })
}

/// Fourier-model circle: D = diag(m), g = shift by the winding number. Used
/// by the closed-manifold experiment; returns (D, g) as matrices in the mode
/// basis m = -cutoff ..= cutoff.
pub fn circle_model(cutoff: usize, winding: i64) -> (CMat, CMat) {
    let n = 2 * cutoff + 1;
    let mut d = CMat::zeros((n, n));
    let mut g = CMat::zeros((n, n));
    for i in 0..n {
        let m = i as i64 - cutoff as i64;
        d[(i, i)] = Complex64::new(m as f64, 0.0);
        let target = m + winding;
        if target.unsigned_abs() as usize <= cutoff {
            let j = (target + cutoff as i64) as usize;
            g[(j, i)] = Complex64::new(1.0, 0.0);
        }
    }
    (d, g)
}

/// g^{-1} for the truncated circle shift (adjoint; unitary away from the
/// cutoff edge, which the heat weights suppress).
pub fn circle_g_inv(g: &CMat) -> CMat {
    linalg::adjoint(g)
}
