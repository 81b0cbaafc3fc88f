//! The b-trace and its commutator defect.
//!
//! The regularized integral is a fixed linear functional of the kernel
//! diagonal, so the b-trace of a grid operator is tr(L M) for a diagonal
//! weight operator L assembled once per geometry. The failure of trace
//! cyclicity is measured by indicial families: for operators with
//! translation-invariant ends the defect equals a momentum integral of the
//! end symbols over the Brillouin zone.

use super::bfunction::{regularized_integral_with_margin, split_exp_with_margin};
use super::dirac::BDiracOperator;
use super::{BGeometry1D, End};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C_ZERO};
use crate::operator::CliffordContext;
use crate::policy::NumericPolicy;
use crate::quad::GaussLegendre;
use num_complex::Complex64;
use std::sync::Arc;

/// Per-site weights realizing the regularized integral as a linear functional:
/// reg(f) = sum_j ell_j f_j. `diag_multiplier[j] = ell_j / w_j` converts matrix
/// diagonal entries (kernel density times quadrature weight) directly.
#[derive(Debug, Clone)]
pub struct RegWeights {
    pub per_site: Vec<f64>,
    pub diag_multiplier: Vec<f64>,
    pub wall_margin: f64,
}

impl RegWeights {
    pub fn new(geom: &BGeometry1D, policy: &NumericPolicy) -> Self {
        Self::with_margin(geom, policy, geom.wall_margin)
    }

    /// Probe the (linear) split-and-integrate pipeline with delta functions;
    /// this keeps the weight route and the BFunction route identical by
    /// construction.
    pub fn with_margin(geom: &BGeometry1D, policy: &NumericPolicy, margin: f64) -> Self {
        let n = geom.n();
        let mut per_site = vec![0.0f64; n];
        let mut delta = vec![0.0f64; n];
        for j in 0..n {
            delta[j] = 1.0;
            let f = split_exp_with_margin(&delta, geom, policy, margin)
                .expect("delta split cannot fail");
            per_site[j] = regularized_integral_with_margin(&f, geom, margin);
            delta[j] = 0.0;
        }
        let diag_multiplier = per_site
            .iter()
            .zip(geom.weights.iter())
            .map(|(l, w)| l / w)
            .collect();
        RegWeights {
            per_site,
            diag_multiplier,
            wall_margin: margin,
        }
    }
}

/// b-trace of a grid operator with the given fiber dimension (complex value).
pub fn b_trace_complex(
    m: &CMat,
    geom: &BGeometry1D,
    fiber_dim: usize,
    weights: &RegWeights,
) -> Complex64 {
    let n = geom.n();
    assert_eq!(m.nrows(), n * fiber_dim);
    let mut acc = C_ZERO;
    for j in 0..n {
        let mut block = C_ZERO;
        for f in 0..fiber_dim {
            block += m[(j * fiber_dim + f, j * fiber_dim + f)];
        }
        acc += block * weights.diag_multiplier[j];
    }
    acc
}

/// Real b-trace; the imaginary residue must be negligible.
pub fn b_trace(m: &CMat, geom: &BGeometry1D, fiber_dim: usize, weights: &RegWeights) -> Result<f64> {
    let v = b_trace_complex(m, geom, fiber_dim, weights);
    let scale = v.norm().max(1.0);
    if v.im.abs() > 1e-8 * scale {
        return Err(Error::invalid(format!(
            "b-trace has imaginary residue {:.3e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// Normalized b-supertrace of degree q: coeff_q * bTr(e_1 ... e_q M) with the
/// fiberwise grading of `ctx`. Returns the complex value; the spinor-model
/// reductions take real parts downstream.
pub fn b_supertrace_q(
    m: &CMat,
    geom: &BGeometry1D,
    ctx: &CliffordContext,
    weights: &RegWeights,
) -> Result<Complex64> {
    let fdim = ctx.dim;
    let n = geom.n();
    assert_eq!(m.nrows(), n * fdim);
    let mut e = linalg::identity(fdim);
    for g in &ctx.generators {
        e = linalg::matmul(&e, g);
    }
    let coeff = match ctx.q {
        1 => Complex64::new(0.0, -0.5 / std::f64::consts::PI.sqrt()),
        2 => Complex64::new(-0.25 / std::f64::consts::PI, 0.0),
        q => return Err(Error::UnsupportedDegree { q }),
    };
    let mut acc = C_ZERO;
    for j in 0..n {
        // Str_fiber(E * M_jj) with grading signs
        let mut site = C_ZERO;
        for a in 0..fdim {
            let sign = Complex64::new(ctx.parity[a] as f64, 0.0);
            let mut row = C_ZERO;
            for b in 0..fdim {
                let ev = e[(a, b)];
                if ev != C_ZERO {
                    row += ev * m[(j * fdim + b, j * fdim + a)];
                }
            }
            site += sign * row;
        }
        acc += site * weights.diag_multiplier[j];
    }
    Ok(coeff * acc)
}

type SymbolFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// Indicial symbol of one end: momentum -> fiber matrix, in the global
/// x-coordinate. `Zero` marks finite-rank / interior-supported operators.
#[derive(Clone)]
pub enum IndicialSymbol {
    Zero,
    Fn(SymbolFn),
}

impl IndicialSymbol {
    pub fn eval(&self, xi: f64, fiber_dim: usize) -> CMat {
        match self {
            IndicialSymbol::Zero => CMat::zeros((fiber_dim, fiber_dim)),
            IndicialSymbol::Fn(f) => f(xi),
        }
    }
}

/// A grid operator together with its end symbols.
#[derive(Clone)]
pub struct BOp {
    pub matrix: CMat,
    pub smoothing: bool,
    pub symbols: [IndicialSymbol; 2],
    pub fiber_dim: usize,
}

impl BOp {
    /// f(D) by spectral calculus; the end symbols are f of the lattice end
    /// symbols (exact for the discretized translation-invariant cylinder).
    pub fn function_of_dirac<F>(dop: &BDiracOperator, f: F, smoothing: bool) -> Self
    where
        F: Fn(f64) -> Complex64 + Clone + Send + Sync + 'static,
    {
        let matrix = dop
            .operator
            .decompose()
            .apply(|b| f(b));
        let mk = |end: End| -> SymbolFn {
            let dop_geom_h = dop.geometry.spacing;
            let order = dop.order;
            let wilson_r = dop.wilson_r;
            let w_end = dop.w_end[end.index()].clone();
            let k = dop.fiber_k;
            let f = f.clone();
            Arc::new(move |xi: f64| {
                let p = if order == 2 {
                    (xi * dop_geom_h).sin() / dop_geom_h
                } else {
                    (8.0 * (xi * dop_geom_h).sin() - (2.0 * xi * dop_geom_h).sin())
                        / (6.0 * dop_geom_h)
                };
                let wil = wilson_r / dop_geom_h * (1.0 - (xi * dop_geom_h).cos());
                let idk = linalg::identity(k);
                let w = &w_end + &idk.mapv(|z| z * wil);
                let sym = &linalg::kron(&super::dirac::pauli(1), &idk).mapv(|z| z * p)
                    + &linalg::kron(&super::dirac::pauli(2), &w);
                let (vals, vecs) = linalg::eig::eigh(&sym);
                let n = vals.len();
                let mut out = CMat::zeros((n, n));
                for kk in 0..n {
                    let fv = f(vals[kk]);
                    for i in 0..n {
                        for j in 0..n {
                            out[(i, j)] += fv * vecs[(i, kk)] * vecs[(j, kk)].conj();
                        }
                    }
                }
                out
            })
        };
        BOp {
            matrix,
            smoothing,
            symbols: [IndicialSymbol::Fn(mk(End::Left)), IndicialSymbol::Fn(mk(End::Right))],
            fiber_dim: dop.fiber_dim(),
        }
    }

    /// Multiplication by a k x k matrix function with constant end limits.
    pub fn fiber_multiplication(dop: &BDiracOperator, g: &[CMat]) -> Self {
        let matrix = dop.lift_fiber_function(g);
        let n = dop.geometry.n();
        let mk = |gend: CMat| -> SymbolFn {
            let lifted = linalg::kron(&linalg::identity(2), &gend);
            Arc::new(move |_xi: f64| lifted.clone())
        };
        BOp {
            matrix,
            smoothing: false,
            symbols: [
                IndicialSymbol::Fn(mk(g[0].clone())),
                IndicialSymbol::Fn(mk(g[n - 1].clone())),
            ],
            fiber_dim: dop.fiber_dim(),
        }
    }

    /// Operator supported in the interior (vanishing end symbols).
    pub fn interior(matrix: CMat, fiber_dim: usize, smoothing: bool) -> Self {
        BOp {
            matrix,
            smoothing,
            symbols: [IndicialSymbol::Zero, IndicialSymbol::Zero],
            fiber_dim,
        }
    }

    pub fn compose(&self, other: &BOp) -> BOp {
        let matrix = linalg::matmul(&self.matrix, &other.matrix);
        let mk = |a: IndicialSymbol, b: IndicialSymbol, fd: usize| -> IndicialSymbol {
            match (a, b) {
                (IndicialSymbol::Zero, _) | (_, IndicialSymbol::Zero) => IndicialSymbol::Zero,
                (IndicialSymbol::Fn(fa), IndicialSymbol::Fn(fb)) => {
                    IndicialSymbol::Fn(Arc::new(move |xi| {
                        let _ = fd;
                        linalg::matmul(&fa(xi), &fb(xi))
                    }))
                }
            }
        };
        BOp {
            matrix,
            smoothing: self.smoothing || other.smoothing,
            symbols: [
                mk(self.symbols[0].clone(), other.symbols[0].clone(), self.fiber_dim),
                mk(self.symbols[1].clone(), other.symbols[1].clone(), self.fiber_dim),
            ],
            fiber_dim: self.fiber_dim,
        }
    }

    pub fn scale(&self, c: Complex64) -> BOp {
        let mk = |s: IndicialSymbol| -> IndicialSymbol {
            match s {
                IndicialSymbol::Zero => IndicialSymbol::Zero,
                IndicialSymbol::Fn(f) => {
                    IndicialSymbol::Fn(Arc::new(move |xi| f(xi).mapv(|z| z * c)))
                }
            }
        };
        BOp {
            matrix: self.matrix.mapv(|z| z * c),
            smoothing: self.smoothing,
            symbols: [mk(self.symbols[0].clone()), mk(self.symbols[1].clone())],
            fiber_dim: self.fiber_dim,
        }
    }
}

/// Relative orientation of the two ends in boundary sums: the outward
/// co-normal flips between them.
pub const END_ORIENTATION: [f64; 2] = [1.0, -1.0];

/// Two-sided b-trace commutator defect: lhs = bTr[Q, K] by direct kernel
/// computation, rhs = the indicial-family momentum integral
/// (-1/2 pi i) sum_ends s_e \int tr(d I_e(Q)/d xi * I_e(K)) d xi.
pub fn commutator_defect(
    q: &BOp,
    k: &BOp,
    dop: &BDiracOperator,
    weights: &RegWeights,
    policy: &NumericPolicy,
) -> Result<(Complex64, Complex64)> {
    if !(q.smoothing || k.smoothing) {
        return Err(Error::NotSmoothing);
    }
    let geom = &dop.geometry;
    let fdim = dop.fiber_dim();
    let comm = linalg::commutator(&q.matrix, &k.matrix);
    let lhs = b_trace_complex(&comm, geom, fdim, weights);

    let zone_edge = std::f64::consts::PI / geom.spacing;
    let mut rhs = C_ZERO;
    for end in End::BOTH {
        let e = end.index();
        let (sq, sk) = (&q.symbols[e], &k.symbols[e]);
        if matches!(sq, IndicialSymbol::Zero) || matches!(sk, IndicialSymbol::Zero) {
            continue;
        }
        let integrand = |xi: f64| -> Complex64 {
            // 4th-order central difference in momentum
            let hstep = 1e-4 * (1.0 + xi.abs());
            let qp = sq.eval(xi + hstep, fdim);
            let qm = sq.eval(xi - hstep, fdim);
            let qp2 = sq.eval(xi + 2.0 * hstep, fdim);
            let qm2 = sq.eval(xi - 2.0 * hstep, fdim);
            let dq = (&(&qm2 - &qp2).mapv(|z| z / 12.0)
                + &(&qp - &qm).mapv(|z| z * (8.0 / 12.0)))
            .mapv(|z| z / hstep);
            let kk = sk.eval(xi, fdim);
            let prod = linalg::matmul(&dq, &kk);
            (0..fdim).map(|i| prod[(i, i)]).sum()
        };
        // truncate where the integrand is negligible
        let mut cut = 1.0f64;
        let mut peak = integrand(0.0).norm();
        while cut < zone_edge {
            let v = integrand(cut).norm().max(integrand(-cut).norm());
            peak = peak.max(v);
            if v < policy.defect_cut_tol * peak.max(1e-300) {
                break;
            }
            cut *= 1.5;
        }
        let cut = cut.min(zone_edge);
        let gl = GaussLegendre::new(200);
        let mut acc = C_ZERO;
        for (x, w) in gl.scaled(-cut, cut) {
            acc += integrand(x) * w;
        }
        rhs += acc * END_ORIENTATION[e];
    }
    let minus_inv_2pi_i = Complex64::new(0.0, 1.0 / (2.0 * std::f64::consts::PI));
    rhs *= minus_inv_2pi_i;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgeom::dirac::{build_dirac, MassProfile};
    use crate::bgeom::{split_exp_with_margin, BGeometry1D};
    use ndarray::Array2;

    fn policy() -> NumericPolicy {
        NumericPolicy::default()
    }

    fn small_dop_k1() -> BDiracOperator {
        let g = BGeometry1D::new(-1.0, 1.0, 8.0, 0.1).unwrap();
        let w = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        build_dirac(&g, &MassProfile::Constant(w), 2, 1.0, &policy()).unwrap()
    }

    fn noncommuting_dop_k2() -> BDiracOperator {
        let g = BGeometry1D::new(-1.0, 1.0, 8.0, 0.1).unwrap();
        build_dirac(
            &g,
            &MassProfile::DiagSmoothstep {
                left: vec![1.0, 2.0],
                right: vec![1.0, 2.0],
                width: 0.4,
            },
            2,
            1.0,
            &policy(),
        )
        .unwrap()
    }

    #[test]
    fn weight_route_matches_bfunction_route() {
        let g = BGeometry1D::new(-1.0, 1.0, 6.0, 0.05).unwrap();
        let p = policy();
        let weights = RegWeights::with_margin(&g, &p, 1.5);
        let mut state = 5u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let raw: Vec<f64> = (0..g.n()).map(|_| rnd()).collect();
        let direct: f64 = raw
            .iter()
            .zip(weights.per_site.iter())
            .map(|(f, l)| f * l)
            .sum();
        let f = split_exp_with_margin(&raw, &g, &p, 1.5).unwrap();
        let via_split = regularized_integral_with_margin(&f, &g, 1.5);
        assert!((direct - via_split).abs() < 1e-10);
    }

    #[test]
    fn b_trace_interior_operator_is_plain_trace() {
        let dop = small_dop_k1();
        let g = &dop.geometry;
        let weights = RegWeights::new(g, &policy());
        let n = g.n();
        let fdim = 2;
        // random operator supported on interior sites
        let mut m = CMat::zeros((n * fdim, n * fdim));
        let mut state = 9u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let interior: Vec<usize> = (0..n).filter(|&j| g.grid[j].abs() < 0.8).collect();
        for &i in &interior {
            for &j in &interior {
                for a in 0..fdim {
                    for b in 0..fdim {
                        m[(i * fdim + a, j * fdim + b)] =
                            Complex64::new(rnd(), rnd()) * g.weights[i];
                    }
                }
            }
        }
        let bt = b_trace_complex(&m, g, fdim, &weights);
        let plain: Complex64 = (0..n * fdim).map(|i| m[(i, i)]).sum();
        assert!((bt - plain).norm() < 1e-8 * plain.norm().max(1.0));
    }

    #[test]
    fn b_trace_pure_cylinder_heat_drops_end_part() {
        // translation-invariant heat operator: the kernel density is the same
        // constant everywhere, so the b-trace reduces to the interior integral
        // (the naive trace would add ~density * 2L from the ends)
        let g = BGeometry1D::new(-1.0, 1.0, 14.0, 0.1).unwrap();
        let w = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        let dop = build_dirac(&g, &MassProfile::Constant(w), 2, 1.0, &policy()).unwrap();
        let g = &dop.geometry;
        let weights = RegWeights::with_margin(g, &policy(), 5.5);
        let heat = dop.operator.heat(1.0).unwrap();
        let bt = b_trace(&heat, g, 2, &weights).unwrap();
        // density from a deep-cylinder site
        let j_mid_end = g.end_ranges[0].clone().nth(g.end_ranges[0].len() / 2).unwrap();
        let density: f64 = (0..2)
            .map(|f| heat[(j_mid_end * 2 + f, j_mid_end * 2 + f)].re)
            .sum::<f64>()
            / g.weights[j_mid_end];
        let expect = density * (g.x_hi - g.x_lo);
        assert!(
            (bt - expect).abs() < 1e-3 * expect.abs().max(1.0),
            "bt = {bt}, expect = {expect}"
        );
        let naive: f64 = (0..g.n() * 2).map(|i| heat[(i, i)].re).sum();
        assert!((naive - expect).abs() > 1.0, "end part should be large in the naive trace");
    }

    #[test]
    fn defect_vanishes_for_interior_supported_pair() {
        let dop = small_dop_k1();
        let g = &dop.geometry;
        let weights = RegWeights::new(g, &policy());
        let n = g.n();
        let fdim = 2;
        let bump = |x: f64| if x.abs() < 0.7 { (1.0 - x * x / 0.49).powi(2) } else { 0.0 };
        let mut qm = CMat::zeros((n * fdim, n * fdim));
        let mut km = CMat::zeros((n * fdim, n * fdim));
        for i in 0..n {
            for j in 0..n {
                let v = bump(g.grid[i]) * bump(g.grid[j]);
                if v != 0.0 {
                    for a in 0..fdim {
                        qm[(i * fdim + a, j * fdim + a)] =
                            Complex64::new(v * g.weights[j], 0.0);
                        km[(i * fdim + a, j * fdim + ((a + 1) % fdim))] =
                            Complex64::new(0.5 * v * g.weights[j], 0.1 * v * g.weights[j]);
                    }
                }
            }
        }
        let km = {
            let adj = linalg::adjoint(&km);
            (&km + &adj).mapv(|z| 0.5 * z)
        };
        let q = BOp::interior(qm, fdim, true);
        let k = BOp::interior(km, fdim, true);
        let (lhs, rhs) = commutator_defect(&q, &k, &dop, &weights, &policy()).unwrap();
        assert!(lhs.norm() < 1e-10, "lhs = {lhs}");
        assert!(rhs.norm() < 1e-12, "rhs = {rhs}");
    }

    #[test]
    fn defect_two_sided_agreement_noncommuting() {
        // Q = D e^{-D^2}, K = g(x) e^{-D^2} with g mixing the fibers at the
        // ends: both routes computed independently
        let dop = noncommuting_dop_k2();
        let g = &dop.geometry;
        let weights = RegWeights::new(g, &policy());
        let q = BOp::function_of_dirac(&dop, |b| Complex64::new(b * (-b * b).exp(), 0.0), true);
        let heat = BOp::function_of_dirac(&dop, |b| Complex64::new((-b * b).exp(), 0.0), true);
        // fiber mult: constant sigma_x mixing, same at both ends
        let mix = {
            let mut m = CMat::zeros((2, 2));
            m[(0, 1)] = Complex64::new(0.3, 0.0);
            m[(1, 0)] = Complex64::new(0.3, 0.0);
            m[(0, 0)] = Complex64::new(1.0, 0.0);
            m[(1, 1)] = Complex64::new(1.0, 0.0);
            m
        };
        let gsamples = vec![mix; g.n()];
        let mult = BOp::fiber_multiplication(&dop, &gsamples);
        let k = mult.compose(&heat);
        let (lhs, rhs) = commutator_defect(&q, &k, &dop, &weights, &policy()).unwrap();
        assert!(
            (lhs - rhs).norm() < 1e-4,
            "lhs = {lhs}, rhs = {rhs}, diff = {:.3e}",
            (lhs - rhs).norm()
        );
        // bilinearity: defect(Q, 2K) = 2 defect(Q, K)
        let k2 = k.scale(Complex64::new(2.0, 0.0));
        let (lhs2, rhs2) = commutator_defect(&q, &k2, &dop, &weights, &policy()).unwrap();
        assert!((lhs2 - lhs * 2.0).norm() < 1e-9 * lhs.norm().max(1e-6));
        assert!((rhs2 - rhs * 2.0).norm() < 1e-9 * rhs.norm().max(1e-6));
    }

    #[test]
    fn defect_rejects_non_smoothing_pair() {
        let dop = small_dop_k1();
        let g = &dop.geometry;
        let weights = RegWeights::new(g, &policy());
        let gsamples = vec![linalg::identity(1); g.n()];
        let a = BOp::fiber_multiplication(&dop, &gsamples);
        let b = BOp::fiber_multiplication(&dop, &gsamples);
        assert!(matches!(
            commutator_defect(&a, &b, &dop, &weights, &policy()),
            Err(Error::NotSmoothing)
        ));
    }
}
