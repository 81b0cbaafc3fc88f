//! Exponentially split functions on the b-geometry and their norm and
//! regularized integral.

use super::{BGeometry1D, End};
use crate::error::Result;
use crate::linalg::{self, CMat};
use crate::policy::NumericPolicy;
use num_complex::Complex64;

/// Sample values a BFunction can carry: scalars or small matrices.
pub trait BValue: Clone {
    fn zero(proto: &Self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn norm(&self) -> f64;
}

impl BValue for f64 {
    fn zero(_: &Self) -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl BValue for Complex64 {
    fn zero(_: &Self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

impl BValue for CMat {
    fn zero(proto: &Self) -> Self {
        CMat::zeros(proto.dim())
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, s: f64) -> Self {
        self.mapv(|z| z * s)
    }
    fn norm(&self) -> f64 {
        linalg::op_norm(self)
    }
}

#[derive(Debug, Clone)]
pub struct EndSplit<T: BValue> {
    /// Estimated constant part on this end.
    pub f_const: T,
    /// Pointwise decaying coefficient e^{depth} (f - f_c), indexed like the
    /// end range of the geometry.
    pub f_inf: Vec<T>,
    /// Deep-end estimate of f_inf (used for tail extrapolation).
    pub f_inf_deep: T,
    /// Worst model remainder on the outermost quarter, relative to the
    /// function scale.
    pub remainder: f64,
}

#[derive(Debug, Clone)]
pub struct BFunction<T: BValue> {
    pub samples: Vec<T>,
    pub ends: [EndSplit<T>; 2],
    /// Set when the exponential model failed the remainder tolerance on
    /// either end; computations proceed, reports carry the flag.
    pub flagged: bool,
}

/// Split a sampled function into constant + decaying parts on each end.
/// Uses the geometry's default wall margin of zero (all end samples trusted);
/// kernel-derived functions should use [`split_exp_with_margin`].
pub fn split_exp<T: BValue>(
    raw: &[T],
    geom: &BGeometry1D,
    policy: &NumericPolicy,
) -> Result<BFunction<T>> {
    split_exp_with_margin(raw, geom, policy, 0.0)
}

pub fn split_exp_with_margin<T: BValue>(
    raw: &[T],
    geom: &BGeometry1D,
    policy: &NumericPolicy,
    wall_margin: f64,
) -> Result<BFunction<T>> {
    if raw.len() != geom.n() {
        return Err(crate::error::Error::invalid(
            "sample count does not match geometry grid",
        ));
    }
    let scale = raw.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1e-300);
    let mut ends = Vec::with_capacity(2);
    let mut flagged = false;
    for end in End::BOTH {
        let split = split_one_end(raw, geom, end, wall_margin);
        if split.remainder > policy.split_remainder_tol * scale.max(1.0) {
            flagged = true;
        }
        ends.push(split);
    }
    let ends: [EndSplit<T>; 2] = match <[EndSplit<T>; 2]>::try_from(ends) {
        Ok(a) => a,
        Err(_) => unreachable!(),
    };
    Ok(BFunction {
        samples: raw.to_vec(),
        ends,
        flagged,
    })
}

fn split_one_end<T: BValue>(
    raw: &[T],
    geom: &BGeometry1D,
    end: End,
    wall_margin: f64,
) -> EndSplit<T> {
    let range = geom.end_ranges[end.index()].clone();
    let trusted_depth = (geom.end_length - wall_margin).max(geom.spacing * 2.0);
    let indices: Vec<usize> = range.clone().collect();
    let zero = T::zero(&raw[indices[0]]);

    // two depth windows: outermost 10% of the trusted region and a band
    // around the middle; the 2x2 mean system is exact on f = c + A e^{-d}
    let win = |lo_frac: f64, hi_frac: f64| -> Vec<usize> {
        indices
            .iter()
            .copied()
            .filter(|&j| {
                let d = geom.depth(end, j);
                d >= lo_frac * trusted_depth && d <= hi_frac * trusted_depth
            })
            .collect()
    };
    let w_outer = win(0.9, 1.0);
    let w_mid = win(0.45, 0.6);

    let mean_val = |js: &[usize]| -> T {
        let mut acc = zero.clone();
        for &j in js {
            acc = acc.add(&raw[j]);
        }
        acc.scale(1.0 / js.len().max(1) as f64)
    };
    let mean_exp = |js: &[usize]| -> f64 {
        js.iter().map(|&j| (-geom.depth(end, j)).exp()).sum::<f64>() / js.len().max(1) as f64
    };

    let f_const = if w_outer.is_empty() || w_mid.is_empty() {
        mean_val(&indices)
    } else {
        let m1 = mean_val(&w_outer);
        let m2 = mean_val(&w_mid);
        let x1 = mean_exp(&w_outer);
        let x2 = mean_exp(&w_mid);
        let det = x2 - x1;
        if det.abs() < 1e-14 {
            m1
        } else {
            // f_c = (m1 x2 - m2 x1) / (x2 - x1)
            m1.scale(x2 / det).sub(&m2.scale(x1 / det))
        }
    };

    let f_inf: Vec<T> = indices
        .iter()
        .map(|&j| {
            let d = geom.depth(end, j);
            raw[j].sub(&f_const).scale(d.exp())
        })
        .collect();

    // deep estimate of f_inf from the mid window
    let f_inf_deep = if w_mid.is_empty() {
        zero.clone()
    } else {
        let mut acc = zero.clone();
        for &j in &w_mid {
            let d = geom.depth(end, j);
            acc = acc.add(&raw[j].sub(&f_const).scale(d.exp()));
        }
        acc.scale(1.0 / w_mid.len() as f64)
    };

    // model remainder |f - f_c - e^{-d} f_inf_deep| on the outermost quarter
    let mut remainder = 0.0f64;
    for &j in &indices {
        let d = geom.depth(end, j);
        if d >= 0.75 * trusted_depth && d <= trusted_depth {
            let model = f_const.add(&f_inf_deep.scale((-d).exp()));
            remainder = remainder.max(raw[j].sub(&model).norm());
        }
    }

    EndSplit {
        f_const,
        f_inf,
        f_inf_deep,
        remainder,
    }
}

/// The b-norm: C1 norm of the function plus twice the C1 norm of the decaying
/// end coefficient (sup over both ends). Discrete C1 norms are max value plus
/// max forward difference quotient.
pub fn b_norm<T: BValue>(f: &BFunction<T>, geom: &BGeometry1D) -> f64 {
    let c1_full = discrete_c1(&f.samples, geom.spacing);
    let mut c1_inf: f64 = 0.0;
    for e in 0..2 {
        let v = &f.ends[e].f_inf;
        if !v.is_empty() {
            c1_inf = c1_inf.max(discrete_c1(v, geom.spacing));
        }
    }
    c1_full + 2.0 * c1_inf
}

fn discrete_c1<T: BValue>(v: &[T], h: f64) -> f64 {
    let sup = v.iter().map(|x| x.norm()).fold(0.0f64, f64::max);
    let mut dq: f64 = 0.0;
    for w in v.windows(2) {
        dq = dq.max(w[1].sub(&w[0]).norm() / h);
    }
    sup + dq
}

/// Regularized integral: interior part plus the integral of the decaying end
/// coefficients, with an analytic e^{-d} tail correction beyond the trusted
/// region. The divergent constant part is dropped by construction.
pub fn regularized_integral<T: BValue>(f: &BFunction<T>, geom: &BGeometry1D) -> T {
    regularized_integral_with_margin(f, geom, 0.0)
}

pub fn regularized_integral_with_margin<T: BValue>(
    f: &BFunction<T>,
    geom: &BGeometry1D,
    wall_margin: f64,
) -> T {
    let zero = T::zero(&f.samples[0]);
    let h = geom.spacing;
    let mut acc = zero.clone();
    // interior trapezoid over [x_lo, x_hi]; the shared boundary samples get
    // half weight here and half on the end side
    for j in 0..geom.n() {
        if geom.is_interior(j) {
            let x = geom.grid[j];
            let w = if (x - geom.x_lo).abs() < 0.5 * h || (x - geom.x_hi).abs() < 0.5 * h {
                0.5 * h
            } else {
                h
            };
            acc = acc.add(&f.samples[j].scale(w));
        }
    }
    let trusted_depth = (geom.end_length - wall_margin).max(geom.spacing * 2.0);
    for end in End::BOTH {
        let split = &f.ends[end.index()];
        // trapezoid over depth [0, d_cut] of (f - f_c), then the analytic
        // e^{-d} tail beyond the cut
        let included: Vec<usize> = geom.end_ranges[end.index()]
            .clone()
            .filter(|&j| geom.depth(end, j) <= trusted_depth + 0.5 * h)
            .collect();
        let d_cut = included
            .iter()
            .map(|&j| geom.depth(end, j))
            .fold(0.0f64, f64::max);
        for &j in &included {
            let d = geom.depth(end, j);
            let w = if d < 0.5 * h || d > d_cut - 0.5 * h {
                0.5 * h
            } else {
                h
            };
            acc = acc.add(&f.samples[j].sub(&split.f_const).scale(w));
        }
        acc = acc.add(&split.f_inf_deep.scale((-d_cut).exp()));
    }
    acc
}
