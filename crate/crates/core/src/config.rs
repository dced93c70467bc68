//! Numerical tolerances shared by every module.
//!
//! All thresholds live here so that the solvers, the quadrature and the
//! validation code agree on what "equal", "negative" or "converged" means.

/// Tolerance record. [`Tolerances::default`] holds the values used throughout
/// the crate; functions taking a `&Tolerances` can be driven with tighter or
/// looser settings for experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative gap under which two eigenvalues of a rank-one problem are merged.
    pub duplicate_rel: f64,
    /// Secular bisection stops once the bracket is this fraction of the initial interval.
    pub secular_bracket_rel: f64,
    /// Number of Newton polish steps after bisection.
    pub secular_newton_steps: usize,
    /// Product eigenvalues above `-product_neg_rel * ||AB||` are clamped to `clamp_floor`.
    pub product_neg_rel: f64,
    pub clamp_floor: f64,
    /// `spd_sqrt` rejects eigenvalues below `-psd_neg_rel * ||M||`.
    pub psd_neg_rel: f64,
    /// Relative distance to a pole that counts as "at the pole".
    pub pole_rel: f64,
    /// Chebyshev-substitution quadrature: starting node count, cap, relative stop.
    pub quad_initial_nodes: usize,
    pub quad_max_nodes: usize,
    pub quad_rel_tol: f64,
    /// Intervals shorter than this fraction of their right endpoint use the collapsed limit.
    pub degenerate_interval_rel: f64,
    /// Tiny negative values of `-phi/psi` tolerated before clamping.
    pub sign_slack: f64,
    /// Contour oracle: relative stop and node cap.
    pub contour_rel_tol: f64,
    pub contour_max_nodes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            duplicate_rel: 1e-12,
            secular_bracket_rel: 1e-13,
            secular_newton_steps: 2,
            product_neg_rel: 1e-10,
            clamp_floor: 1e-300,
            psd_neg_rel: 1e-8,
            pole_rel: 1e-14,
            quad_initial_nodes: 64,
            quad_max_nodes: 1 << 14,
            quad_rel_tol: 1e-8,
            degenerate_interval_rel: 1e-14,
            sign_slack: 1e-12,
            contour_rel_tol: 1e-9,
            contour_max_nodes: 1 << 16,
        }
    }
}

impl Tolerances {
    /// Settings used by the known-population objective, whose gradient is checked
    /// against finite differences and therefore needs a near-exact quadrature.
    pub fn tight() -> Self {
        Self {
            quad_rel_tol: 1e-13,
            ..Self::default()
        }
    }
}
