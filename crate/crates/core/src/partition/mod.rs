// SPDX-License-Identifier: Apache-2.0

//! Partition function of the conditional Gibbs ensemble and its derivatives.
//!
//! Under the unitary-invariant measure the squared overlaps `x_s = |⟨e_s|φ⟩|²`
//! of a pure state with the eigenbasis of `M` are uniform on the simplex, so
//!
//! ```text
//! Z(β) = E[exp(-β Σ_s m_s x_s)] = (d-1)! · exp[-β m_1, …, -β m_d]
//! ```
//!
//! where `exp[…]` is the divided difference of the exponential (Hermite–Genocchi).
//! This is the same quantity as `(d-1)! [m_1..m_d] e^{-βt} / (-β)^{d-1}`, but
//! evaluated without ever dividing by `β`.
//!
//! The ensemble average is defined as `G(β) = -d ln Z / dβ` and the barycenter
//! weights as `p_s = -(1/β) ∂ ln Z / ∂m_s = E_μ[x_s]`. Both come from the same
//! kernel analytically; nothing here differences `ln Z` numerically. Note that
//! the closed form `-(Σ m_s c_s) / (Σ c_s)` with `c_s = e^{-βm_s} / Π_{j≠s}(m_s - m_j)`
//! is *not* `-d ln Z / dβ`: for `d = 2` it misses the `(d-1)/β` term and gives
//! `1/(e^β - 1)` instead of `1/β - 1/(e^β - 1)`.

mod divided;

pub(crate) use divided::exp_divided_difference_full;
use divided::{exp_divided_differences, exp_divided_differences_along};

use crate::error::{Error, Result};
use crate::model::Spectrum;

/// Everything the kernel knows about one inverse temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEvaluation {
    pub beta: f64,
    pub log_z: f64,
    /// `G(β) = -d ln Z / dβ`.
    pub average: f64,
    /// `d² ln Z / dβ²`, the variance of `⟨φ|M|φ⟩` under the Gibbs ensemble.
    pub variance: f64,
    /// Relative entropy of the ensemble with respect to the uniform measure.
    pub kl: f64,
    /// Diagonal of the ensemble barycenter in the eigenbasis.
    pub barycenter_weights: Vec<f64>,
}

/// `ln Z`, `G` and the variance at one `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Moments {
    pub log_z: f64,
    pub average: f64,
    pub variance: f64,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Reference eigenvalue and unit-range offsets `u_s ∈ [0, 1]` such that the
/// exponent nodes `-β (m_s - ref)` are all non-positive.
struct Shifted {
    reference: f64,
    /// +1 when `m_s = ref + spread u_s`, -1 when `m_s = ref - spread u_s`.
    sign: f64,
    offsets: Vec<f64>,
    nodes: Vec<f64>,
}

fn shift(values: &[f64], beta: f64, spread: f64) -> Shifted {
    let (reference, sign) = if beta > 0.0 {
        (values.iter().copied().fold(f64::INFINITY, f64::min), 1.0)
    } else {
        (values.iter().copied().fold(f64::NEG_INFINITY, f64::max), -1.0)
    };
    let offsets: Vec<f64> = values.iter().map(|m| sign * (m - reference) / spread).collect();
    let rate = beta.abs() * spread;
    let nodes = offsets.iter().map(|u| -rate * u).collect();
    Shifted {
        reference,
        sign,
        offsets,
        nodes,
    }
}

fn spread_of(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Variance of `Σ m_s x_s` for `x` uniform on the simplex.
fn uniform_variance(values: &[f64]) -> f64 {
    let d = values.len() as f64;
    let mean = mean_of(values);
    values.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (d * (d + 1.0))
}

/// Moments over a raw eigenvalue list (need not be sorted).
pub(crate) fn moments_of(values: &[f64], beta: f64) -> Moments {
    let spread = spread_of(values);
    if spread == 0.0 {
        return Moments {
            log_z: -beta * values[0],
            average: values[0],
            variance: 0.0,
        };
    }
    if beta == 0.0 {
        return Moments {
            log_z: 0.0,
            average: mean_of(values),
            variance: uniform_variance(values),
        };
    }
    let s = shift(values, beta, spread);
    let dd = exp_divided_differences_along(&s.nodes, &s.offsets, 2);
    let e = dd.value_full();
    let mean_u = dd.first_full() / e;
    let second_u = 2.0 * dd.half_second_full() / e;
    Moments {
        log_z: -beta * s.reference + ln_factorial(values.len() - 1) + dd.log_scale + e.ln(),
        average: s.reference + s.sign * spread * mean_u,
        variance: (spread * spread * (second_u - mean_u * mean_u)).max(0.0),
    }
}

pub(crate) fn moments(spectrum: &Spectrum, beta: f64) -> Moments {
    moments_of(spectrum.values(), beta)
}

/// Divided difference of `t ↦ e^{-βt}` over `nodes`; repeated nodes give the
/// confluent (derivative) limit.
pub fn exp_divided_difference(nodes: &[f64], beta: f64) -> f64 {
    assert!(!nodes.is_empty(), "at least one node is required");
    let order = nodes.len() - 1;
    if order == 0 {
        return (-beta * nodes[0]).exp();
    }
    if beta == 0.0 {
        return 0.0;
    }
    let scaled: Vec<f64> = nodes.iter().map(|t| -beta * t).collect();
    (-beta).powi(order as i32) * exp_divided_difference_full(&scaled)
}

/// `ln Z(β)` for the normalized unitary-invariant measure.
pub fn log_partition(spectrum: &Spectrum, beta: f64) -> f64 {
    moments(spectrum, beta).log_z
}

/// `G(β) = -d ln Z / dβ`, strictly decreasing from `m_max` to `m_min`.
pub fn ensemble_average(spectrum: &Spectrum, beta: f64) -> f64 {
    moments(spectrum, beta).average
}

/// `d² ln Z / dβ² = -dG/dβ`.
pub fn ensemble_variance(spectrum: &Spectrum, beta: f64) -> f64 {
    moments(spectrum, beta).variance
}

/// `E_μ[x_s]`: eigenbasis diagonal of the ensemble barycenter.
pub fn barycenter_weights(spectrum: &Spectrum, beta: f64) -> Vec<f64> {
    let values = spectrum.values();
    let d = values.len();
    if beta == 0.0 || spectrum.is_degenerate() {
        return vec![1.0 / d as f64; d];
    }
    let s = shift(values, beta, spectrum.spread());
    // Runs of length d + 1 in the doubled node list contain every node once
    // and node `k` twice: exp[y, y_k] = ∂ exp[y] / ∂y_k.
    let doubled: Vec<f64> = s.nodes.iter().chain(&s.nodes).copied().collect();
    let dd = exp_divided_differences(&doubled);
    let full = dd.value(0, d - 1);
    (0..d).map(|k| dd.value(k, k + d) / full).collect()
}

/// `∂ ln Z / ∂m_s = -β E_μ[x_s]`.
pub fn log_partition_gradient(spectrum: &Spectrum, beta: f64) -> Vec<f64> {
    if beta == 0.0 {
        return vec![0.0; spectrum.dim()];
    }
    barycenter_weights(spectrum, beta)
        .into_iter()
        .map(|p| -beta * p)
        .collect()
}

const GAUSS_LEGENDRE_8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// `S(μ_β ‖ uniform) = -β G(β) - ln Z(β)`.
///
/// For `|β| · spread < 1` the difference cancels badly, so we integrate
/// `dS/dβ = β Var(β)` from 0 instead.
pub fn kl_from_uniform(spectrum: &Spectrum, beta: f64) -> f64 {
    let spread = spectrum.spread();
    if beta == 0.0 || spread == 0.0 {
        return 0.0;
    }
    if beta.abs() * spread < 1.0 {
        let half = 0.5 * beta;
        let integral: f64 = GAUSS_LEGENDRE_8
            .iter()
            .flat_map(|&(x, w)| [(half * (1.0 + x), w), (half * (1.0 - x), w)])
            .map(|(t, w)| w * t * ensemble_variance(spectrum, t))
            .sum();
        return (half * integral).max(0.0);
    }
    let values = spectrum.values();
    let s = shift(values, beta, spread);
    let dd = exp_divided_differences_along(&s.nodes, &s.offsets, 1);
    let e = dd.value_full();
    let mean_u = dd.first_full() / e;
    // The reference eigenvalue cancels between -βG and -ln Z.
    let kl = -beta * s.sign * spread * mean_u - (ln_factorial(values.len() - 1) + dd.log_scale + e.ln());
    kl.max(0.0)
}

/// Type-I error probability `e^{-S}` of mistaking the uniform ensemble for `μ`.
pub fn sanov_error_probability(kl: f64) -> Result<f64> {
    if kl.is_nan() || kl < 0.0 {
        return Err(Error::NegativeDivergence(kl));
    }
    Ok((-kl).exp())
}

pub fn evaluate(spectrum: &Spectrum, beta: f64) -> PartitionEvaluation {
    let m = moments(spectrum, beta);
    PartitionEvaluation {
        beta,
        log_z: m.log_z,
        average: m.average,
        variance: m.variance,
        kl: kl_from_uniform(spectrum, beta),
        barycenter_weights: barycenter_weights(spectrum, beta),
    }
}
