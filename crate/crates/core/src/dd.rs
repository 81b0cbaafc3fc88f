//! Divided differences of the exponential, exp[mu_0, ..., mu_n].
//!
//! These equal the simplex integrals `\int_{\Delta^n} e^{s_0 mu_0} ... e^{s_n mu_n} ds`
//! (Hermite-Genocchi) and are the scalar kernel of every heat bracket in this
//! crate. Evaluation uses the difference recurrence on sorted nodes, switching
//! to a confluent Taylor expansion about the cluster mean whenever node gaps
//! fall below a relative threshold. A dense bidiagonal matrix exponential is
//! kept as an independent reference route.

#[derive(Debug, Clone)]
pub struct DividedDifferenceTable {
    pub nodes: Vec<f64>,
    pub value: f64,
}

impl DividedDifferenceTable {
    pub fn new(nodes: &[f64]) -> Self {
        DividedDifferenceTable {
            nodes: nodes.to_vec(),
            value: exp_divided_difference(nodes),
        }
    }
}

/// exp[mu_0, ..., mu_n] with the default cluster threshold (1e-6 relative)
/// and Taylor order 12.
pub fn exp_divided_difference(nodes: &[f64]) -> f64 {
    exp_divided_difference_with(nodes, 1e-6, 12)
}

pub fn exp_divided_difference_with(nodes: &[f64], cluster_rtol: f64, taylor_order: usize) -> f64 {
    let n = nodes.len();
    assert!(n >= 1, "at least one node required");
    if n == 1 {
        return nodes[0].exp();
    }
    let mut mu = nodes.to_vec();
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = mu.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let tol = cluster_rtol * scale;
    let mut memo = vec![f64::NAN; n * n];
    dd_rec(&mu, 0, n - 1, tol, taylor_order, &mut memo, n)
}

/// Sub-ranges of diameter below this are summed by the confluent Taylor
/// series (always convergent, full precision for radius <= 1); difference
/// quotients are only formed across wider gaps, keeping denominators large.
const TAYLOR_SPAN: f64 = 2.0;

fn dd_rec(
    mu: &[f64],
    i: usize,
    j: usize,
    tol: f64,
    order: usize,
    memo: &mut [f64],
    n: usize,
) -> f64 {
    if i == j {
        return mu[i].exp();
    }
    let key = i * n + j;
    if !memo[key].is_nan() {
        return memo[key];
    }
    let span = mu[j] - mu[i];
    let v = if span < tol {
        confluent_cluster(&mu[i..=j], order)
    } else if span < TAYLOR_SPAN {
        confluent_cluster(&mu[i..=j], order.max(34))
    } else {
        let a = dd_rec(mu, i + 1, j, tol, order, memo, n);
        let b = dd_rec(mu, i, j - 1, tol, order, memo, n);
        (a - b) / span
    };
    memo[key] = v;
    v
}

/// Confluent evaluation for a cluster of nearly equal nodes:
/// exp[x_0..x_m] = e^mean * sum_{q >= 0} h_q(d_0..d_m) / (m + q)! with
/// d_i = x_i - mean and h_q the complete homogeneous symmetric polynomials.
fn confluent_cluster(nodes: &[f64], order: usize) -> f64 {
    let m = nodes.len() - 1;
    let mean = nodes.iter().sum::<f64>() / nodes.len() as f64;
    let deltas: Vec<f64> = nodes.iter().map(|x| x - mean).collect();
    let h = complete_homogeneous(&deltas, order);
    let mut inv_fact = 1.0f64;
    for q in 1..=m {
        inv_fact /= q as f64;
    }
    // inv_fact = 1/m!, advance to 1/(m+q)! inside the loop
    let mut acc = 0.0;
    let mut f = inv_fact;
    for (q, hq) in h.iter().enumerate() {
        if q > 0 {
            f /= (m + q) as f64;
        }
        acc += hq * f;
    }
    mean.exp() * acc
}

/// h_0..h_order of the complete homogeneous symmetric polynomials in `x`.
fn complete_homogeneous(x: &[f64], order: usize) -> Vec<f64> {
    // h_r over first k variables; recurrence h_r(k) = h_r(k-1) + x_k h_{r-1}(k)
    let mut h = vec![0.0f64; order + 1];
    h[0] = 1.0;
    for &xk in x {
        for r in 1..=order {
            h[r] += xk * h[r - 1];
        }
    }
    h
}

/// Reference route: exp[mu_0..mu_n] is the top-right entry of e^M where M is
/// upper bidiagonal with the nodes on the diagonal and ones above (Opitz).
/// Slow but independent of the recurrence; kept for cross-checks.
pub fn exp_dd_bidiagonal(nodes: &[f64]) -> f64 {
    let n = nodes.len();
    let mut m = vec![0.0f64; n * n];
    for (i, &x) in nodes.iter().enumerate() {
        m[i * n + i] = x;
        if i + 1 < n {
            m[i * n + i + 1] = 1.0;
        }
    }
    let e = expm_dense(&m, n);
    e[n - 1]
}

fn expm_dense(m: &[f64], n: usize) -> Vec<f64> {
    let norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| m[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a: Vec<f64> = m.iter().map(|x| x * scale).collect();
    // Taylor series, order 20 at ||A|| <= 0.5 gives far better than 1e-16
    let mut result = vec![0.0f64; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
    }
    let mut term = result.clone();
    for k in 1..=20 {
        term = mat_mul(&term, &a, n);
        let c = 1.0 / (k as f64);
        for t in term.iter_mut() {
            *t *= c;
        }
        for (r, t) in result.iter_mut().zip(term.iter()) {
            *r += t;
        }
    }
    for _ in 0..s {
        result = mat_mul(&result, &result, n);
    }
    result
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}
