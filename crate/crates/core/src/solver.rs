// SPDX-License-Identifier: Apache-2.0

//! Inverse temperature from an observed average: `β = G⁻¹(Tr Mρ)`.
//!
//! `G` is strictly decreasing with derivative `-Var`, so the solver is a
//! bracketed Newton iteration that falls back to bisection whenever a Newton
//! step would leave the bracket. Convergence is judged on the residual in
//! `G`, not on `β`, because `G` is nearly flat for large `|β|`.
//!
//! Both signs of `β` are supported: targets above the spectral mean need
//! `β < 0`.

use crate::error::{BoundaryDirection, Error, Result};
use crate::model::{expected_value, DensityMatrix, HermitianObservable, Spectrum};
use crate::partition::{moments_of, Moments};
use crate::policy::NumericPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSolution {
    pub beta: f64,
    pub target: f64,
    /// `G(beta)`.
    pub achieved: f64,
    pub residual: f64,
    /// `G(lo) >= target >= G(hi)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizingReport {
    pub beta_a: f64,
    pub beta_b: f64,
    pub beta_joint: f64,
    pub interleaved: bool,
    pub joint_dim: usize,
}

/// Interleaving tolerance for [`equalizing_check`].
pub const EQUALIZING_TOL: f64 = 1e-8;

/// A decreasing average curve `β ↦ G(β)` together with its range.
trait AverageCurve {
    fn moments(&self, beta: f64) -> Moments;
    fn min(&self) -> f64;
    fn max(&self) -> f64;
    /// `G(0)`.
    fn mean(&self) -> f64;

    fn spread(&self) -> f64 {
        self.max() - self.min()
    }
}

impl AverageCurve for Spectrum {
    fn moments(&self, beta: f64) -> Moments {
        moments_of(self.values(), beta)
    }
    fn min(&self) -> f64 {
        Spectrum::min(self)
    }
    fn max(&self) -> f64 {
        Spectrum::max(self)
    }
    fn mean(&self) -> f64 {
        Spectrum::mean(self)
    }
}

/// Non-interacting pair: `Z_joint = Z_a Z_b`, so `G_joint = G_a + G_b`.
struct Coupled<'a>(&'a Spectrum, &'a Spectrum);

impl AverageCurve for Coupled<'_> {
    fn moments(&self, beta: f64) -> Moments {
        let a = moments_of(self.0.values(), beta);
        let b = moments_of(self.1.values(), beta);
        Moments {
            log_z: a.log_z + b.log_z,
            average: a.average + b.average,
            variance: a.variance + b.variance,
        }
    }
    fn min(&self) -> f64 {
        self.0.min() + self.1.min()
    }
    fn max(&self) -> f64 {
        self.0.max() + self.1.max()
    }
    fn mean(&self) -> f64 {
        self.0.mean() + self.1.mean()
    }
}

fn check_target(curve: &impl AverageCurve, target: f64) -> Result<()> {
    if curve.spread() == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    if !(target > curve.min() && target < curve.max()) {
        return Err(Error::TargetOutOfRange {
            target,
            min: curve.min(),
            max: curve.max(),
        });
    }
    Ok(())
}

fn bracket(curve: &impl AverageCurve, target: f64, policy: &NumericPolicy) -> Result<(f64, f64)> {
    check_target(curve, target)?;
    let spread = curve.spread();
    let limit = policy.max_beta_spread / spread;
    let step = 1.0 / spread;
    let (mut lo, mut hi) = (-step, step);
    let average = |b: f64| curve.moments(b).average;
    while average(hi) > target {
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return Err(Error::BracketFailure { target });
        }
    }
    while average(lo) < target {
        hi = lo;
        lo *= 2.0;
        if lo < -limit {
            return Err(Error::BracketFailure { target });
        }
    }
    Ok((lo, hi))
}

fn solve(curve: &impl AverageCurve, target: f64, policy: &NumericPolicy) -> Result<BetaSolution> {
    let (mut lo, mut hi) = bracket(curve, target, policy)?;
    let bracket = (lo, hi);
    let tol = policy.solver_rel_tol * curve.spread();

    // The uniform ensemble already reproduces the target.
    let at_zero = curve.mean();
    if (at_zero - target).abs() <= tol {
        return Ok(BetaSolution {
            beta: 0.0,
            target,
            achieved: at_zero,
            residual: (at_zero - target).abs(),
            bracket,
            iterations: 0,
        });
    }

    let mut beta = if lo < 0.0 && hi > 0.0 { 0.0 } else { 0.5 * (lo + hi) };
    let mut m = curve.moments(beta);
    let mut best = (beta, m.average);
    let mut prev_residual = f64::INFINITY;
    let mut iterations = 0;
    let mut polishing = 0;
    while iterations < policy.max_iterations {
        iterations += 1;
        let f = m.average - target;
        let residual = f.abs();
        if residual < (best.1 - target).abs() {
            best = (beta, m.average);
        }
        if residual == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let newton = if m.variance > 0.0 {
            beta + f / m.variance
        } else {
            f64::NAN
        };
        let newton_ok = newton > lo && newton < hi && residual < 0.5 * prev_residual.max(residual * 2.0);
        if residual <= tol {
            // Keep taking Newton steps while they still help.
            if !newton_ok || residual >= prev_residual || polishing >= 3 {
                break;
            }
            polishing += 1;
        }
        prev_residual = residual;
        let next = if newton_ok { newton } else { 0.5 * (lo + hi) };
        if next == beta {
            break;
        }
        beta = next;
        m = curve.moments(beta);
    }
    let (beta, achieved) = best;
    let residual = (achieved - target).abs();
    if residual > tol {
        return Err(Error::BracketFailure { target });
    }
    Ok(BetaSolution {
        beta,
        target,
        achieved,
        residual,
        bracket,
        iterations,
    })
}

/// Bracket `(lo, hi)` with `G(lo) >= target >= G(hi)` by doubling from `±1/spread`.
pub fn bracket_beta(spectrum: &Spectrum, target: f64) -> Result<(f64, f64)> {
    bracket(spectrum, target, &NumericPolicy::default())
}

pub fn solve_beta(spectrum: &Spectrum, target: f64) -> Result<BetaSolution> {
    solve_beta_with(spectrum, target, &NumericPolicy::default())
}

pub fn solve_beta_with(spectrum: &Spectrum, target: f64, policy: &NumericPolicy) -> Result<BetaSolution> {
    solve(spectrum, target, policy)
}

fn boundary_check(lo: f64, hi: f64, target: f64, policy: &NumericPolicy) -> Result<()> {
    let tol = policy.boundary_rel_tol * (hi - lo);
    if hi - lo > 0.0 && target - lo <= tol {
        return Err(Error::PureEigenstateBoundary {
            direction: BoundaryDirection::PositiveInfinity,
        });
    }
    if hi - lo > 0.0 && hi - target <= tol {
        return Err(Error::PureEigenstateBoundary {
            direction: BoundaryDirection::NegativeInfinity,
        });
    }
    Ok(())
}

/// `β = F_M(Tr Mρ)`.
pub fn beta_of_state(observable: &HermitianObservable, rho: &DensityMatrix) -> Result<BetaSolution> {
    beta_of_state_with(observable, rho, &NumericPolicy::default())
}

pub fn beta_of_state_with(
    observable: &HermitianObservable,
    rho: &DensityMatrix,
    policy: &NumericPolicy,
) -> Result<BetaSolution> {
    let target = expected_value(observable, rho)?;
    let spectrum = observable.spectrum();
    if spectrum.is_degenerate() {
        return Err(Error::DegenerateSpectrum);
    }
    boundary_check(spectrum.min(), spectrum.max(), target, policy)?;
    solve(spectrum, target, policy)
}

/// Spectrum of `M_a ⊗ I + I ⊗ M_b`: all pairwise sums.
pub fn joint_spectrum(a: &Spectrum, b: &Spectrum) -> Spectrum {
    let sums = a
        .values()
        .iter()
        .flat_map(|x| b.values().iter().map(move |y| x + y))
        .collect();
    Spectrum::new(sums).expect("sums of finite eigenvalues are finite")
}

/// Solves `G_a(β) + G_b(β) = target` without forming the joint spectrum.
pub fn solve_joint_beta(a: &Spectrum, b: &Spectrum, target: f64) -> Result<BetaSolution> {
    solve(&Coupled(a, b), target, &NumericPolicy::default())
}

/// Inverse temperatures of two subsystems and of their non-interacting
/// composite; the composite value must lie between the two.
pub fn equalizing_check(
    observable_a: &HermitianObservable,
    rho_a: &DensityMatrix,
    observable_b: &HermitianObservable,
    rho_b: &DensityMatrix,
) -> Result<EqualizingReport> {
    let policy = NumericPolicy::default();
    let a = beta_of_state_with(observable_a, rho_a, &policy)?;
    let b = beta_of_state_with(observable_b, rho_b, &policy)?;
    let curve = Coupled(observable_a.spectrum(), observable_b.spectrum());
    let joint = solve(&curve, a.target + b.target, &policy)?;
    let (lo, hi) = (a.beta.min(b.beta), a.beta.max(b.beta));
    let tol = EQUALIZING_TOL * 1f64.max(lo.abs()).max(hi.abs());
    Ok(EqualizingReport {
        beta_a: a.beta,
        beta_b: b.beta,
        beta_joint: joint.beta,
        interleaved: lo - tol <= joint.beta && joint.beta <= hi + tol,
        joint_dim: observable_a.dim() * observable_b.dim(),
    })
}
