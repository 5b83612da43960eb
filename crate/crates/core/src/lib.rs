// SPDX-License-Identifier: Apache-2.0

//! Conditional Gibbs ensembles of pure quantum states.
//!
//! Given a Hermitian observable `M` on `C^d`, the ensemble
//! `μ_β(φ) ∝ e^{-β⟨φ|M|φ⟩}` over the unitary-invariant measure on unit
//! vectors has partition function, average, barycenter and KL divergence
//! that depend only on the spectrum of `M`. This crate evaluates those
//! quantities stably ([`partition`]), inverts the average for `β`
//! ([`solver`]), and samples the ensemble ([`sampler`]).

pub mod error;
pub mod model;
pub mod partition;
pub mod policy;
pub mod sampler;
pub mod solver;
pub mod stats;

pub use error::{BoundaryDirection, Error, Result};
pub use model::{
    density_from_ensemble, expected_value, maximally_mixed, quadratic_form, Complex, ComplexSquareMatrix,
    DensityMatrix, HermitianObservable, PureState, Spectrum, WeightedEnsemble,
};
pub use partition::{
    barycenter_weights, ensemble_average, ensemble_variance, evaluate, kl_from_uniform, log_partition,
    log_partition_gradient, sanov_error_probability, PartitionEvaluation,
};
pub use policy::NumericPolicy;
pub use sampler::{
    mc_average, mc_barycenter, mc_estimate_partition, mc_kl, sample_gibbs, sample_haar, sample_simplex_tilted,
    BarycenterEstimate, SampleBatch, SamplerConfig, SamplingMethod, SimplexBatch,
};
pub use solver::{
    beta_of_state, equalizing_check, joint_spectrum, solve_beta, solve_joint_beta, BetaSolution, EqualizingReport,
};
pub use stats::Estimate;
