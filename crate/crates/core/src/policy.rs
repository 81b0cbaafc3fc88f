//! Central numeric policy. All tolerances used across the crate live here so
//! that experiment drivers can tighten or relax them uniformly.

#[derive(Debug, Clone)]
pub struct NumericPolicy {
    /// Relative Frobenius asymmetry allowed when validating Hermitian input.
    pub hermiticity_rtol: f64,
    /// Relative error allowed when reconstructing a matrix from its cached
    /// spectral decomposition.
    pub reconstruction_rtol: f64,
    /// Unitarity defect allowed for eigenvector matrices and Cayley transforms.
    pub unitarity_tol: f64,
    /// Idempotency / self-adjointness tolerance for spectral projections.
    pub projection_tol: f64,
    /// Minimal distance of eigenvalues from a spectral window edge.
    pub gap_check_tol: f64,
    /// Kernel detection: |beta| < kernel_tol_factor * spectral_radius.
    pub kernel_tol_factor: f64,
    /// Minimal mean squared eigenvector overlap accepted by branch matching.
    pub overlap_match_min: f64,
    /// Tolerance on the exponential-split remainder at the outer end grid.
    pub split_remainder_tol: f64,
    /// Relative node-gap below which divided differences switch to the
    /// confluent Taylor evaluation.
    pub dd_cluster_rtol: f64,
    /// Order of the confluent Taylor expansion.
    pub dd_taylor_order: usize,
    /// Relative weight below which tuple-sum contributions are pruned.
    pub prune_rel: f64,
    /// Convergence target for self-refining quadratures.
    pub quad_refine_tol: f64,
    /// Eta quadrature upper cut: gap^2 * t_max^2 >= eta_tail_exponent.
    pub eta_tail_exponent: f64,
    /// Indicial-defect lambda integral is cut where the integrand drops below this.
    pub defect_cut_tol: f64,
    /// Maximum depth of adaptive u-interval subdivision.
    pub max_subdivision_depth: usize,
    /// Centered finite-difference step for parameter derivatives.
    pub fd_step: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            hermiticity_rtol: 1e-12,
            reconstruction_rtol: 1e-10,
            unitarity_tol: 1e-10,
            projection_tol: 1e-12,
            gap_check_tol: 1e-9,
            kernel_tol_factor: 1e-8,
            overlap_match_min: 0.5,
            split_remainder_tol: 1e-6,
            dd_cluster_rtol: 1e-6,
            dd_taylor_order: 12,
            prune_rel: 1e-16,
            quad_refine_tol: 1e-8,
            eta_tail_exponent: 40.0,
            defect_cut_tol: 1e-12,
            max_subdivision_depth: 20,
            fd_step: 1e-4,
        }
    }
}

impl NumericPolicy {
    /// Kernel threshold for an operator of the given spectral radius.
    pub fn kernel_tol(&self, spectral_radius: f64) -> f64 {
        self.kernel_tol_factor * spectral_radius.max(1e-300)
    }
}
