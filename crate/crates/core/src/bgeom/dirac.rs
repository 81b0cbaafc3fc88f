//! Dirac-type operators D = -i s1 (x) d/dx + s2 (x) W(x) on the discretized
//! b-line, with a Wilson term removing the lattice doubler modes. The fiber is
//! C^2 (x) C^k, site-major ordering: index = site*(2k) + spinor*k + fiber.

use super::{BGeometry1D, End};
use crate::error::{Error, Result};
use crate::linalg::banded::HermitianBanded;
use crate::linalg::{self, CMat, C_I, C_ONE, C_ZERO};
use crate::operator::HermitianOperator;
use crate::policy::NumericPolicy;
use ndarray::Array2;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub enum MassProfile {
    /// W(x) = W0 everywhere (pure cylinder).
    Constant(CMat),
    /// Scalar kink m tanh(x / width), k = 1.
    Kink { m: f64, width: f64 },
    /// Diagonal masses interpolating from `left` to `right` over the interior
    /// by a smoothstep of the given width (centered at the interior midpoint).
    DiagSmoothstep {
        left: Vec<f64>,
        right: Vec<f64>,
        width: f64,
    },
    /// Explicit k x k Hermitian sample per grid point.
    Tabulated(Vec<CMat>),
}

impl MassProfile {
    pub fn fiber_dim(&self) -> usize {
        match self {
            MassProfile::Constant(w) => w.nrows(),
            MassProfile::Kink { .. } => 1,
            MassProfile::DiagSmoothstep { left, .. } => left.len(),
            MassProfile::Tabulated(v) => v[0].nrows(),
        }
    }

    pub fn sample(&self, geom: &BGeometry1D) -> Vec<CMat> {
        match self {
            MassProfile::Constant(w) => vec![w.clone(); geom.n()],
            MassProfile::Kink { m, width } => geom
                .grid
                .iter()
                .map(|&x| {
                    let mid = 0.5 * (geom.x_lo + geom.x_hi);
                    let v = m * ((x - mid) / width).tanh();
                    Array2::from_elem((1, 1), Complex64::new(v, 0.0))
                })
                .collect(),
            MassProfile::DiagSmoothstep { left, right, width } => {
                let k = left.len();
                let mid = 0.5 * (geom.x_lo + geom.x_hi);
                geom.grid
                    .iter()
                    .map(|&x| {
                        let s = smoothstep((x - mid) / width);
                        Array2::from_shape_fn((k, k), |(i, j)| {
                            if i == j {
                                Complex64::new(left[i] + s * (right[i] - left[i]), 0.0)
                            } else {
                                C_ZERO
                            }
                        })
                    })
                    .collect()
            }
            MassProfile::Tabulated(v) => v.clone(),
        }
    }
}

/// C-infinity-flat smoothstep: 0 for t <= -1, 1 for t >= 1, exp-smooth between.
pub fn smoothstep(t: f64) -> f64 {
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let a = f(0.5 * (t + 1.0));
    let b = f(1.0 - 0.5 * (t + 1.0));
    a / (a + b)
}

#[derive(Debug, Clone)]
pub struct BDiracOperator {
    pub geometry: BGeometry1D,
    pub fiber_k: usize,
    pub mass: Vec<CMat>,
    /// End limits of the mass matrix.
    pub w_end: [CMat; 2],
    /// The discretized operator on the full grid, dim = 2k * n.
    pub operator: HermitianOperator,
    /// Boundary operator s2 (x) W_end per end (2k x 2k).
    pub boundary_op: [CMat; 2],
    /// Clifford action of the outward co-normal: -i s1 on the left end,
    /// +i s1 on the right end (tensored with Id_k).
    pub conormal: [CMat; 2],
    /// Smallest singular value of the boundary operators.
    pub gap: f64,
    pub order: usize,
    pub wilson_r: f64,
}

pub fn pauli(i: usize) -> CMat {
    let mut m = Array2::from_elem((2, 2), C_ZERO);
    match i {
        1 => {
            m[(0, 1)] = C_ONE;
            m[(1, 0)] = C_ONE;
        }
        2 => {
            m[(0, 1)] = -C_I;
            m[(1, 0)] = C_I;
        }
        3 => {
            m[(0, 0)] = C_ONE;
            m[(1, 1)] = -C_ONE;
        }
        _ => panic!("pauli index"),
    }
    m
}

pub fn build_dirac(
    geom: &BGeometry1D,
    mass: &MassProfile,
    order: usize,
    wilson_r: f64,
    policy: &NumericPolicy,
) -> Result<BDiracOperator> {
    if order != 2 && order != 4 {
        return Err(Error::invalid("discretization order must be 2 or 4"));
    }
    let k = mass.fiber_dim();
    let w_samples = mass.sample(geom);
    let n = geom.n();
    let h = geom.spacing;
    for (j, w) in w_samples.iter().enumerate() {
        if linalg::hermiticity_defect(w) > policy.hermiticity_rtol * 10.0 {
            return Err(Error::invalid(format!(
                "mass matrix at grid point {j} is not Hermitian"
            )));
        }
    }
    let w_end = [w_samples[0].clone(), w_samples[n - 1].clone()];

    // gap = min |eigenvalue of W_end| over both ends
    let mut gap = f64::INFINITY;
    for w in &w_end {
        let (vals, _) = linalg::eig::eigh(w);
        for v in vals {
            gap = gap.min(v.abs());
        }
    }
    if gap < 1e-10 {
        return Err(Error::BoundaryNotInvertible { sigma: gap });
    }

    // mass decay check at the end grid
    for end in End::BOTH {
        let we = &w_end[end.index()];
        for j in geom.end_ranges[end.index()].clone() {
            let d = geom.depth(end, j);
            if d > 0.6 * geom.end_length {
                let dev = linalg::frob_norm(&(&w_samples[j] - we));
                if dev > 1e-6 * (1.0 + linalg::frob_norm(we)) {
                    return Err(Error::invalid(format!(
                        "mass profile does not attain its end limit (deviation {dev:.2e} at depth {d:.2})"
                    )));
                }
            }
        }
    }

    let fdim = 2 * k;
    let dim = n * fdim;
    let mut d = Array2::from_elem((dim, dim), C_ZERO);
    let s1 = pauli(1);
    let s2 = pauli(2);

    // derivative stencil: antisymmetric central difference, Dirichlet walls
    let stencil: Vec<(i64, f64)> = if order == 2 {
        vec![(-1, -0.5 / h), (1, 0.5 / h)]
    } else {
        vec![
            (-2, 1.0 / (12.0 * h)),
            (-1, -8.0 / (12.0 * h)),
            (1, 8.0 / (12.0 * h)),
            (2, -1.0 / (12.0 * h)),
        ]
    };

    for j in 0..n {
        // -i s1 (x) d/dx
        for &(off, c) in &stencil {
            let jj = j as i64 + off;
            if jj < 0 || jj >= n as i64 {
                continue;
            }
            let jj = jj as usize;
            let v = -C_I * Complex64::new(c, 0.0);
            for s in 0..2 {
                for sp in 0..2 {
                    let sv = s1[(s, sp)];
                    if sv == C_ZERO {
                        continue;
                    }
                    for f in 0..k {
                        d[(j * fdim + s * k + f, jj * fdim + sp * k + f)] += v * sv;
                    }
                }
            }
        }
        // s2 (x) W(x)
        for s in 0..2 {
            for sp in 0..2 {
                let sv = s2[(s, sp)];
                if sv == C_ZERO {
                    continue;
                }
                for f in 0..k {
                    for fp in 0..k {
                        let wv = w_samples[j][(f, fp)];
                        if wv != C_ZERO {
                            d[(j * fdim + s * k + f, j * fdim + sp * k + fp)] += sv * wv;
                        }
                    }
                }
            }
        }
        // Wilson term: s2 (x) (-(r h / 2) Laplacian), removes doublers
        if wilson_r != 0.0 {
            let c0 = wilson_r / h; // -(rh/2) * (-2/h^2)
            let c1 = -wilson_r / (2.0 * h);
            for (off, c) in [(0i64, c0), (-1, c1), (1, c1)] {
                let jj = j as i64 + off;
                if jj < 0 || jj >= n as i64 {
                    continue;
                }
                let jj = jj as usize;
                for s in 0..2 {
                    for sp in 0..2 {
                        let sv = s2[(s, sp)];
                        if sv == C_ZERO {
                            continue;
                        }
                        for f in 0..k {
                            d[(j * fdim + s * k + f, jj * fdim + sp * k + f)] +=
                                sv * Complex64::new(c, 0.0);
                        }
                    }
                }
            }
        }
    }

    // Smooth s3 cap potential inside the distrusted wall zone. A Dirichlet
    // wall on a Wilson lattice hosts a spurious near-zero edge mode whenever
    // an end mass eigenvalue is negative; the cap raises the local gap to
    // sqrt(W^2 + M^2) and moves every wall-localized state out of the
    // spectral windows without touching interior states.
    {
        let s3 = pauli(3);
        let cap_width = (geom.end_length / 8.0).min(1.0).max(3.0 * h);
        let max_w = w_end
            .iter()
            .map(linalg::op_norm)
            .fold(0.0f64, f64::max);
        let m_cap = 3.0 + 2.0 * max_w;
        for j in 0..n {
            let d_left = geom.end_length - geom.depth(End::Left, j);
            let d_right = geom.end_length - geom.depth(End::Right, j);
            let dist_wall = d_left.min(d_right).max(0.0);
            if dist_wall < cap_width {
                let ramp = 0.5 * (1.0 + (std::f64::consts::PI * dist_wall / cap_width).cos());
                let v = Complex64::new(m_cap * ramp, 0.0);
                for s in 0..2 {
                    for f in 0..k {
                        d[(j * fdim + s * k + f, j * fdim + s * k + f)] += s3[(s, s)] * v;
                    }
                }
            }
        }
    }

    let operator = HermitianOperator::from_symmetrized(d);

    let idk = linalg::identity(k);
    let boundary_op = [
        linalg::kron(&s2, &linalg::matmul(&w_end[0], &idk)),
        linalg::kron(&s2, &linalg::matmul(&w_end[1], &idk)),
    ];
    let conormal = [
        linalg::kron(&s1, &idk).mapv(|z| -C_I * z),
        linalg::kron(&s1, &idk).mapv(|z| C_I * z),
    ];

    Ok(BDiracOperator {
        geometry: geom.clone(),
        fiber_k: k,
        mass: w_samples,
        w_end,
        operator,
        boundary_op,
        conormal,
        gap,
        order,
        wilson_r,
    })
}

impl BDiracOperator {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn fiber_dim(&self) -> usize {
        2 * self.fiber_k
    }

    /// Banded view of the operator matrix for shift-invert solves.
    pub fn banded(&self) -> HermitianBanded {
        let hb = (self.order / 2) * self.fiber_dim() + self.fiber_dim() - 1;
        HermitianBanded::from_dense(self.operator.entries(), hb)
    }

    /// Lift a k x k matrix function on the grid to the full space as
    /// 1_spinor (x) g(x), block diagonal over sites.
    pub fn lift_fiber_function(&self, g: &[CMat]) -> CMat {
        let n = self.geometry.n();
        let k = self.fiber_k;
        let fdim = 2 * k;
        let mut m = Array2::from_elem((n * fdim, n * fdim), C_ZERO);
        for j in 0..n {
            for s in 0..2 {
                for f in 0..k {
                    for fp in 0..k {
                        m[(j * fdim + s * k + f, j * fdim + s * k + fp)] = g[j][(f, fp)];
                    }
                }
            }
        }
        m
    }

    /// Lattice end symbol at momentum xi on the given end, in the global
    /// x-coordinate: s1 sin-stencil(xi) + s2 (x) (W_end + Wilson(xi)).
    /// Exact for the discretized translation-invariant cylinder.
    pub fn lattice_symbol(&self, end: End, xi: f64) -> CMat {
        let h = self.geometry.spacing;
        let p = if self.order == 2 {
            (xi * h).sin() / h
        } else {
            (8.0 * (xi * h).sin() - (2.0 * xi * h).sin()) / (6.0 * h)
        };
        let wil = self.wilson_r / h * (1.0 - (xi * h).cos());
        let k = self.fiber_k;
        let idk = linalg::identity(k);
        let w = &self.w_end[end.index()] + &idk.mapv(|z| z * wil);
        &linalg::kron(&pauli(1), &idk).mapv(|z| z * p) + &linalg::kron(&pauli(2), &w)
    }
}

/// The indicial family I(D, lambda) = dD + i lambda c(nu) at the chosen end
/// (continuum form; self-adjoint for real lambda).
pub fn indicial_family(dop: &BDiracOperator, lambda: f64, end: End) -> CMat {
    let e = end.index();
    &dop.boundary_op[e] + &dop.conormal[e].mapv(|z| C_I * Complex64::new(lambda, 0.0) * z)
}
