// SPDX-License-Identifier: Apache-2.0

//! Numeric tolerances shared by every module.

/// All tolerances in one place. [`NumericPolicy::default`] carries the
/// values the library is validated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Relative (to the largest entry magnitude) Hermiticity tolerance.
    pub hermitian_tol: f64,
    /// Absolute tolerance on the unit trace of a density matrix.
    pub trace_tol: f64,
    /// Smallest admissible eigenvalue of a density matrix is `-psd_tol`.
    pub psd_tol: f64,
    /// Absolute tolerance on the squared norm of a pure state and on ensemble weight sums.
    pub norm_tol: f64,
    /// Eigenvalues closer than `cluster_rel_tol * spread` form one degeneracy cluster.
    pub cluster_rel_tol: f64,
    /// Root-finder residual tolerance, relative to the spectral spread.
    pub solver_rel_tol: f64,
    /// Targets within `boundary_rel_tol * spread` of an extreme eigenvalue are boundary states.
    pub boundary_rel_tol: f64,
    pub max_iterations: usize,
    /// Largest |β| · spread explored while bracketing.
    pub max_beta_spread: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        NumericPolicy {
            hermitian_tol: 1e-12,
            trace_tol: 1e-12,
            psd_tol: 1e-10,
            norm_tol: 1e-12,
            cluster_rel_tol: 1e-9,
            solver_rel_tol: 1e-10,
            boundary_rel_tol: 1e-10,
            max_iterations: 200,
            max_beta_spread: 1e12,
        }
    }
}
