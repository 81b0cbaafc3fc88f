//! Maximum-weight assignment (Hungarian algorithm with potentials), used to
//! match eigenbranches between neighboring path parameters.

/// Returns the permutation `p` maximizing `sum_i weight[i][p[i]]`.
/// `weight` must be square.
pub fn max_assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let n = weight.len();
    if n == 0 {
        return Vec::new();
    }
    // Hungarian algorithm solves a minimization problem; negate.
    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j]: row matched to column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            perm[p[j] - 1] = j - 1;
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(weight: &[Vec<f64>]) -> f64 {
        let n = weight.len();
        let mut idx: Vec<usize> = (0..n).collect();
        let mut best = f64::NEG_INFINITY;
        permute(&mut idx, 0, weight, &mut best);
        best
    }

    fn permute(idx: &mut Vec<usize>, k: usize, w: &[Vec<f64>], best: &mut f64) {
        let n = idx.len();
        if k == n {
            let s: f64 = (0..n).map(|i| w[i][idx[i]]).sum();
            if s > *best {
                *best = s;
            }
            return;
        }
        for i in k..n {
            idx.swap(k, i);
            permute(idx, k + 1, w, best);
            idx.swap(k, i);
        }
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 17u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..20 {
            let n = 2 + (rnd() * 4.0) as usize;
            let w: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rnd()).collect()).collect();
            let perm = max_assignment(&w);
            let total: f64 = (0..n).map(|i| w[i][perm[i]]).sum();
            let best = brute_force(&w);
            assert!((total - best).abs() < 1e-12, "{total} vs {best}");
            let mut seen = vec![false; n];
            for &p in &perm {
                assert!(!seen[p]);
                seen[p] = true;
            }
        }
    }

    #[test]
    fn identity_on_diagonal_dominant() {
        let w = vec![
            vec![1.0, 0.1, 0.0],
            vec![0.2, 1.0, 0.1],
            vec![0.0, 0.1, 1.0],
        ];
        assert_eq!(max_assignment(&w), vec![0, 1, 2]);
    }
}
