//! Simplex heat brackets <A_0, ..., A_n>_t =
//! \int_{Delta^n} Tr(A_0 e^{s_0 t^2 H} A_1 e^{s_1 t^2 H} ... A_n e^{s_n t^2 H}) ds
//! evaluated in the eigenbasis of H as tuple sums weighted by divided
//! differences of the exponential (Hermite-Genocchi). Strategy is picked by
//! size: dense enumeration with pruning, sparsity-aware enumeration, a
//! multiset transfer DP when H has few distinct eigenvalues, and a parabolic
//! block matrix exponential (Van Loan) for large dense instances.

use crate::dd::{exp_divided_difference, exp_divided_difference_with};
use crate::linalg::{self, CMat, C_ZERO};
use crate::policy::NumericPolicy;
use num_complex::Complex64;

/// The exponent nodes mu_k (typically -t^2 beta_k^2) and the arguments in the
/// same eigenbasis. The bracket closes the trace cyclically.
pub struct BracketInput<'a> {
    pub nodes: &'a [f64],
    pub args: &'a [CMat],
}

const DENSE_TUPLE_BUDGET: f64 = 2.0e8;

pub fn bracket(input: &BracketInput, policy: &NumericPolicy) -> Complex64 {
    let dim = input.nodes.len();
    let n = input.args.len() - 1;
    assert!(input.args.iter().all(|a| a.nrows() == dim && a.ncols() == dim));
    if n == 0 {
        // <A_0> = sum_k (A_0)_{kk} e^{mu_k}
        return (0..dim)
            .map(|k| input.args[0][(k, k)] * input.nodes[k].exp())
            .sum();
    }
    let distinct = distinct_clusters(input.nodes);
    let tuple_cost = (dim as f64).powi(n as i32 + 1);
    if tuple_cost <= DENSE_TUPLE_BUDGET {
        bracket_dense(input, policy)
    } else if sparse_cost(input) <= DENSE_TUPLE_BUDGET {
        bracket_sparse(input, policy)
    } else if distinct.len() <= 12 && dim <= 64 {
        bracket_clustered(input, &distinct, policy)
    } else {
        bracket_vanloan(input)
    }
}

fn distinct_clusters(nodes: &[f64]) -> Vec<f64> {
    let scale = nodes.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut sorted: Vec<f64> = nodes.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut reps = Vec::new();
    for &x in &sorted {
        if reps
            .last()
            .map(|&r: &f64| (x - r).abs() > 1e-12 * scale)
            .unwrap_or(true)
        {
            reps.push(x);
        }
    }
    reps
}

fn cluster_of(nodes_rep: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (c, &r) in nodes_rep.iter().enumerate() {
        let d = (x - r).abs();
        if d < dist {
            dist = d;
            best = c;
        }
    }
    best
}

/// Dense enumeration over index tuples with magnitude pruning: a tuple is
/// skipped when an upper bound for its divided-difference weight falls below
/// prune_rel times the maximal weight e^{mu_max}/n!.
pub fn bracket_dense(input: &BracketInput, policy: &NumericPolicy) -> Complex64 {
    let dim = input.nodes.len();
    let n = input.args.len() - 1;
    let mu_max_global = input.nodes.iter().fold(f64::MIN, |m, &x| m.max(x));
    let fact: f64 = (1..=n).map(|q| q as f64).product();
    let weight_cap = mu_max_global.exp() / fact;
    let arg_scale: f64 = input
        .args
        .iter()
        .map(|a| a.iter().fold(0.0f64, |m, z| m.max(z.norm())))
        .product();
    let cutoff = policy.prune_rel * weight_cap * arg_scale.max(1e-300);

    let mut acc = C_ZERO;
    let mut tuple = vec![0usize; n + 1];
    let mut dd_nodes = vec![0.0f64; n + 1];
    'outer: loop {
        // product of argument entries along the cycle
        let mut prod = input.args[0][(tuple[0], tuple[1 % (n + 1)])];
        if prod != C_ZERO {
            for j in 1..=n {
                prod *= input.args[j][(tuple[j], tuple[(j + 1) % (n + 1)])];
                if prod == C_ZERO {
                    break;
                }
            }
        }
        if prod != C_ZERO {
            // dd over nodes (mu_{i1}, ..., mu_{in}, mu_{i0})
            let mut mu_max = f64::MIN;
            for j in 0..=n {
                let v = input.nodes[tuple[(j + 1) % (n + 1)]];
                dd_nodes[j] = v;
                mu_max = mu_max.max(v);
            }
            let bound = mu_max.exp() / fact * prod.norm();
            if bound >= cutoff {
                let w = exp_divided_difference_with(
                    &dd_nodes,
                    policy.dd_cluster_rtol,
                    policy.dd_taylor_order,
                );
                acc += prod * w;
            }
        }
        // advance tuple
        let mut pos = 0;
        loop {
            if pos > n {
                break 'outer;
            }
            tuple[pos] += 1;
            if tuple[pos] < dim {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
    acc
}

/// Dense enumeration without pruning (reference for the pruning guard).
pub fn bracket_dense_unpruned(input: &BracketInput, policy: &NumericPolicy) -> Complex64 {
    let mut p = policy.clone();
    p.prune_rel = 0.0;
    bracket_dense(input, &p)
}

fn sparse_rows(a: &CMat, tol: f64) -> Vec<Vec<usize>> {
    let (r, c) = a.dim();
    (0..r)
        .map(|i| (0..c).filter(|&j| a[(i, j)].norm() > tol).collect())
        .collect()
}

fn sparse_cost(input: &BracketInput) -> f64 {
    let dim = input.nodes.len();
    let scale: f64 = input
        .args
        .iter()
        .map(|a| a.iter().fold(0.0f64, |m, z| m.max(z.norm())))
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-14 * scale.max(1e-300);
    let mut cost = dim as f64;
    for a in &input.args[..input.args.len() - 1] {
        let nnz: usize = (0..dim)
            .map(|i| (0..dim).filter(|&j| a[(i, j)].norm() > tol).count())
            .sum();
        let per_row = nnz as f64 / dim as f64;
        cost *= per_row.max(1e-9);
        if cost > 1e18 {
            return cost;
        }
    }
    cost
}

/// Sparsity-aware enumeration: extends partial index chains only through
/// nonzero entries.
pub fn bracket_sparse(input: &BracketInput, policy: &NumericPolicy) -> Complex64 {
    let dim = input.nodes.len();
    let n = input.args.len() - 1;
    let amax: f64 = input
        .args
        .iter()
        .map(|a| a.iter().fold(0.0f64, |m, z| m.max(z.norm())))
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-14 * amax.max(1e-300);
    let rows: Vec<Vec<Vec<usize>>> = input.args.iter().map(|a| sparse_rows(a, tol)).collect();

    let mut acc = C_ZERO;
    let mut chain = vec![0usize; n + 2];
    let mut prods = vec![C_ZERO; n + 2];

    fn descend(
        j: usize,
        n: usize,
        input: &BracketInput,
        rows: &[Vec<Vec<usize>>],
        chain: &mut [usize],
        prods: &mut [Complex64],
        acc: &mut Complex64,
        policy: &NumericPolicy,
    ) {
        if j == n + 1 {
            // close the cycle: last hop must return to i0
            let last = chain[n];
            let i0 = chain[0];
            let entry = input.args[n][(last, i0)];
            if entry == C_ZERO {
                return;
            }
            let prod = prods[n] * entry;
            let mut dd_nodes = Vec::with_capacity(n + 1);
            for q in 1..=n {
                dd_nodes.push(input.nodes[chain[q]]);
            }
            dd_nodes.push(input.nodes[i0]);
            let w = exp_divided_difference_with(
                &dd_nodes,
                policy.dd_cluster_rtol,
                policy.dd_taylor_order,
            );
            *acc += prod * w;
            return;
        }
        let prev = chain[j - 1];
        for &next in &rows[j - 1][prev] {
            chain[j] = next;
            prods[j] = prods[j - 1] * input.args[j - 1][(prev, next)];
            descend(j + 1, n, input, rows, chain, prods, acc, policy);
        }
    }

    for i0 in 0..dim {
        chain[0] = i0;
        prods[0] = Complex64::new(1.0, 0.0);
        descend(1, n, input, &rows, &mut chain, &mut prods, &mut acc, policy);
    }
    acc
}

/// Transfer DP over eigenvalue clusters: valid for any matrices, efficient
/// when the node multiset has few distinct values (boundary operators). The
/// per-multiset amplitudes are t-independent, so callers integrating over t
/// can reuse them via [`bracket_clustered_amplitudes`].
pub fn bracket_clustered(
    input: &BracketInput,
    reps: &[f64],
    policy: &NumericPolicy,
) -> Complex64 {
    let (multisets, amps) = bracket_clustered_amplitudes(input, reps);
    let mut acc = C_ZERO;
    for (m, a) in multisets.iter().zip(amps.iter()) {
        if a.norm() == 0.0 {
            continue;
        }
        let mut dd_nodes = Vec::new();
        for (c, &count) in m.iter().enumerate() {
            for _ in 0..count {
                dd_nodes.push(reps[c]);
            }
        }
        let w = exp_divided_difference_with(
            &dd_nodes,
            policy.dd_cluster_rtol,
            policy.dd_taylor_order,
        );
        acc += a * w;
    }
    acc
}

/// Aggregated amplitudes W(m) = sum over index cycles with node multiset m of
/// the argument entry product. The companion multiset list stores per-cluster
/// counts (summing to n + 1).
pub fn bracket_clustered_amplitudes(
    input: &BracketInput,
    reps: &[f64],
) -> (Vec<Vec<u8>>, Vec<Complex64>) {
    let dim = input.nodes.len();
    let n = input.args.len() - 1;
    let nc = reps.len();
    let cluster: Vec<usize> = input
        .nodes
        .iter()
        .map(|&x| cluster_of(reps, x))
        .collect();

    use std::collections::HashMap;
    // state: (current index, counts so far) -> amplitude, advanced slot by slot
    let mut totals: HashMap<Vec<u8>, Complex64> = HashMap::new();
    for i0 in 0..dim {
        let mut layer: HashMap<(usize, Vec<u8>), Complex64> = HashMap::new();
        layer.insert((i0, vec![0u8; nc]), Complex64::new(1.0, 0.0));
        for j in 0..=n {
            let mut next: HashMap<(usize, Vec<u8>), Complex64> = HashMap::new();
            for ((i, counts), amp) in layer.into_iter() {
                if j == n {
                    // last hop must close on i0; i0's node enters the multiset
                    let entry = input.args[n][(i, i0)];
                    if entry != C_ZERO {
                        let mut m = counts.clone();
                        m[cluster[i0]] += 1;
                        *totals.entry(m).or_insert(C_ZERO) += amp * entry;
                    }
                } else {
                    for i2 in 0..dim {
                        let entry = input.args[j][(i, i2)];
                        if entry == C_ZERO {
                            continue;
                        }
                        let mut m = counts.clone();
                        m[cluster[i2]] += 1;
                        *next.entry((i2, m)).or_insert(C_ZERO) += amp * entry;
                    }
                }
            }
            layer = next;
            if j == n {
                break;
            }
        }
    }
    let mut multisets = Vec::with_capacity(totals.len());
    let mut amps = Vec::with_capacity(totals.len());
    let mut items: Vec<(Vec<u8>, Complex64)> = totals.into_iter().collect();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    for (m, a) in items {
        multisets.push(m);
        amps.push(a);
    }
    (multisets, amps)
}

/// Large dense instances: the simplex integral is the top-right block of the
/// exponential of the block-bidiagonal generator with diag(nodes) on the
/// diagonal blocks and A_1, ..., A_n above (Van Loan). One scaled-and-squared
/// matrix exponential of dimension (n+1) dim replaces the tuple sum.
pub fn bracket_vanloan(input: &BracketInput) -> Complex64 {
    let dim = input.nodes.len();
    let n = input.args.len() - 1;
    let big = (n + 1) * dim;
    let mut b = faer::Mat::<Complex64>::zeros(big, big);
    for blk in 0..=n {
        for i in 0..dim {
            b[(blk * dim + i, blk * dim + i)] = Complex64::new(input.nodes[i], 0.0);
        }
        if blk < n {
            let a = &input.args[blk + 1];
            for i in 0..dim {
                for j in 0..dim {
                    let v = a[(i, j)];
                    if v != C_ZERO {
                        b[(blk * dim + i, (blk + 1) * dim + j)] = v;
                    }
                }
            }
        }
    }
    // scaling and squaring with a Taylor core
    let norm1: f64 = (0..big)
        .map(|j| (0..big).map(|i| b[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let mut bs = faer::Mat::<Complex64>::zeros(big, big);
    for i in 0..big {
        for j in 0..big {
            bs[(i, j)] = b[(i, j)] * scale;
        }
    }
    let mut result = faer::Mat::<Complex64>::identity(big, big);
    let mut term = faer::Mat::<Complex64>::identity(big, big);
    for k in 1..=24 {
        term = &term * &bs;
        let c = Complex64::new(1.0 / k as f64, 0.0);
        for i in 0..big {
            for j in 0..big {
                term[(i, j)] *= c;
            }
        }
        for i in 0..big {
            for j in 0..big {
                let t = term[(i, j)];
                result[(i, j)] += t;
            }
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    // bracket = Tr(A_0 * top-right block)
    let a0 = &input.args[0];
    let mut acc = C_ZERO;
    for i in 0..dim {
        for j in 0..dim {
            acc += a0[(i, j)] * result[(j, n * dim + i)];
        }
    }
    acc
}

fn scale_cols(a: &CMat, d: &[Complex64]) -> CMat {
    let (r, c) = a.dim();
    CMat::from_shape_fn((r, c), |(i, j)| a[(i, j)] * d[j])
}

/// Monte-Carlo simplex quadrature oracle: returns (mean, standard error).
/// Used by acceptance tests against the tuple-sum values.
pub fn bracket_monte_carlo(
    input: &BracketInput,
    samples: usize,
    seed: u64,
) -> (Complex64, f64) {
    let dim = input.nodes.len();
    let n = input.args.len() - 1;
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut rnd = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (((state >> 11) as f64) / ((1u64 << 53) as f64)).max(1e-300)
    };
    let mut mean = C_ZERO;
    let mut m2 = 0.0f64;
    for s in 0..samples {
        // uniform simplex point via exponential spacings
        let mut e: Vec<f64> = (0..=n).map(|_| -rnd().ln()).collect();
        let tot: f64 = e.iter().sum();
        for x in e.iter_mut() {
            *x /= tot;
        }
        // v = A_0 E_0 A_1 E_1 ... A_n E_n with E_j = diag(e^{sigma_j mu})
        let mut m = scale_cols(&input.args[0], &diag_exp(input.nodes, e[0]));
        for j in 1..=n {
            let aj = scale_cols(&input.args[j], &diag_exp(input.nodes, e[j]));
            m = linalg::matmul(&m, &aj);
        }
        let tr: Complex64 = (0..dim).map(|i| m[(i, i)]).sum();
        // simplex volume 1/n! absorbed: the uniform density on the simplex is
        // n!, so the plain average of the integrand estimates the integral
        // times n!; divide back
        let fact: f64 = (1..=n).map(|q| q as f64).product();
        let v = tr / fact;
        let delta = v - mean;
        mean += delta / (s as f64 + 1.0);
        m2 += (delta.conj() * (v - mean)).re;
    }
    let var = m2 / (samples as f64 - 1.0).max(1.0);
    (mean, (var / samples as f64).sqrt())
}

fn diag_exp(nodes: &[f64], sigma: f64) -> Vec<Complex64> {
    nodes
        .iter()
        .map(|&mu| Complex64::new((sigma * mu).exp(), 0.0))
        .collect()
}
