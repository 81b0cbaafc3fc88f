//! Quadrature rules: Gauss-Legendre nodes/weights (Newton on Legendre
//! polynomials), panel composition, self-refining integration and the tangent
//! substitution for integrals over (0, infinity).

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            let (_, d) = legendre_and_derivative(n, 0.0);
            nodes[n / 2] = 0.0;
            weights[n / 2] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Scaled nodes and weights on [a, b], for callers that drive the
    /// evaluations themselves.
    pub fn scaled(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(x, w)| (mid + half * x, w * half))
            .collect()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate on [a, b] with Gauss order doubling (starting at `order0`) until
/// successive refinements differ by less than `tol` or `max_doublings` is hit.
/// Returns (value, last refinement difference).
pub fn integrate_refining<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    order0: usize,
    tol: f64,
    max_doublings: usize,
    f: F,
) -> (f64, f64) {
    let mut order = order0.max(2);
    let mut prev = GaussLegendre::new(order).integrate(a, b, &f);
    for _ in 0..max_doublings {
        order *= 2;
        let cur = GaussLegendre::new(order).integrate(a, b, &f);
        let diff = (cur - prev).abs();
        if diff < tol {
            return (cur, diff);
        }
        prev = cur;
    }
    (prev, f64::NAN)
}

/// Nodes and weights for `\int_0^\infty f(t) dt` via `t = tan(pi tau / 2)`:
/// the weight includes the Jacobian `(pi/2) sec^2`. Panels double until the
/// contribution of the last panel refinement drops below `tol`.
pub fn tan_substitution_nodes(order_per_panel: usize, panels: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(order_per_panel);
    let mut out = Vec::new();
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let b = (p as f64 + 1.0) / panels as f64;
        for (tau, w) in gl.scaled(a, b) {
            let half_pi = 0.5 * std::f64::consts::PI;
            let t = (half_pi * tau).tan();
            let jac = half_pi / (half_pi * tau).cos().powi(2);
            out.push((t, w * jac));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes_match_known_values() {
        let gl = GaussLegendre::new(3);
        let expect = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        for (a, b) in gl.nodes.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        let wexpect = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        for (a, b) in gl.weights.iter().zip(wexpect.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 polynomial integrated exactly by 8-point rule
        let val = gl.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4) + 1.0);
        let exact = (2.0f64.powi(16) - 1.0) / 16.0 - 3.0 * (2.0f64.powi(5) + 1.0) / 5.0 + 3.0;
        assert!((val - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn refining_gaussian() {
        let (v, d) = integrate_refining(-8.0, 8.0, 16, 1e-12, 6, |x| (-x * x).exp());
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(d < 1e-12);
    }

    #[test]
    fn tan_substitution_integrates_gaussian_tail() {
        // \int_0^infty 2 e^{-t^2} / sqrt(pi) dt = 1
        let nodes = tan_substitution_nodes(48, 4);
        let s: f64 = nodes
            .iter()
            .map(|(t, w)| w * 2.0 / std::f64::consts::PI.sqrt() * (-t * t).exp())
            .sum();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }
}
