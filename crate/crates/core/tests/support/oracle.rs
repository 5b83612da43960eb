// SPDX-License-Identifier: Apache-2.0

//! Reference computations that share no code with the analytic kernels.
//!
//! The quadrature oracle integrates `e^{-β Σ m_s x_s}` over the simplex with
//! nested adaptive Gauss-Kronrod rules. The Monte Carlo oracle draws
//! normalized complex Gaussian vectors and evaluates `⟨φ|M|φ⟩` directly from
//! the matrix entries. Neither uses an eigendecomposition or any node shift.

use gibbs_thermo::error::{Error, Result};
use gibbs_thermo::model::{ComplexSquareMatrix, HermitianObservable, Spectrum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    pub value: f64,
    pub error_bound: f64,
    pub method: OracleMethod,
}

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights, with the
// embedded 7-point Gauss weights.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += WK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Global adaptive integration of `f` over `[a, b]` until the summed error
/// estimate drops below `abs_tol + rel_tol |I|`.
fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let (v, e) = gauss_kronrod(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol + rel_tol * total.abs() {
            break;
        }
        let worst = (0..pieces.len())
            .max_by(|&i, &j| pieces[i].3.total_cmp(&pieces[j].3))
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod(&mut f, lo, mid);
        let (v2, e2) = gauss_kronrod(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    (pieces.iter().map(|p| p.2).sum(), pieces.iter().map(|p| p.3).sum())
}

/// `∫ e^{-β Σ_{s<k} m_s x_s - β m_{k..} ...}` over the face of the simplex
/// whose first `fixed.len()` coordinates are given, times the face volume
/// factor. Returns (value, error).
fn nested(m: &[f64], beta: f64, fixed: &mut Vec<f64>, remaining: f64, tol: f64) -> (f64, f64) {
    let d = m.len();
    let k = fixed.len();
    if k == d - 1 {
        let energy: f64 = fixed.iter().zip(m).map(|(x, m)| x * m).sum::<f64>() + m[d - 1] * remaining;
        return ((-beta * energy).exp(), 0.0);
    }
    let mut inner_err = 0.0f64;
    let (value, err) = integrate(
        |x| {
            fixed.push(x);
            let (v, e) = nested(m, beta, fixed, remaining - x, tol * 1e-3);
            fixed.pop();
            inner_err = inner_err.max(e);
            v
        },
        0.0,
        remaining,
        tol,
        tol,
    );
    (value, err + inner_err * remaining)
}

/// `Z(β)` as `(d-1)!` times the simplex integral of `e^{-β Σ m_s x_s}`.
pub fn oracle_partition_quadrature(spectrum: &Spectrum, beta: f64) -> Result<OracleResult> {
    let m = spectrum.values();
    let d = m.len();
    let tol = match d {
        2 | 3 => 1e-10,
        4 => 1e-8,
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let factorial: f64 = (1..d).map(|k| k as f64).product();
    // Work at a tighter internal tolerance so the reported bound is honest.
    let (v, e) = nested(m, beta, &mut Vec::with_capacity(d), 1.0, tol * 1e-2 / factorial);
    Ok(OracleResult {
        value: v * factorial,
        error_bound: (e * factorial).max(f64::EPSILON * (v * factorial).abs()).max(1e-300),
        method: OracleMethod::Quadrature,
    })
}

fn haar_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn expectation(m: &ComplexSquareMatrix, v: &[Complex64]) -> f64 {
    let d = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..d {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc.re
}

const BLOCKS: usize = 100;

/// Per-block sums `(Σ w, Σ w·m̃, count)` with `w = e^{-β m̃}`.
fn block_sums(m: &ComplexSquareMatrix, beta: f64, samples: usize, seed: u64) -> Vec<(f64, f64)> {
    let d = m.dim();
    (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let lo = b * samples / BLOCKS;
            let hi = (b + 1) * samples / BLOCKS;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let (mut sw, mut swm) = (0.0, 0.0);
            for _ in lo..hi {
                let e = expectation(m, &haar_vector(&mut rng, d));
                let w = (-beta * e).exp();
                sw += w;
                swm += w * e;
            }
            (sw / (hi - lo) as f64, swm / (hi - lo) as f64)
        })
        .collect()
}

fn spread_of(values: &[f64]) -> f64 {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}

/// Self-normalized estimate of `E_μ[⟨φ|M|φ⟩]` from unweighted uniform draws.
pub fn oracle_average_mc(m: &HermitianObservable, beta: f64, samples: usize, seed: u64) -> OracleResult {
    assert!(samples >= 10_000, "at least 1e4 samples");
    let blocks = block_sums(m.matrix(), beta, samples, seed);
    let sw: f64 = blocks.iter().map(|b| b.0).sum();
    let swm: f64 = blocks.iter().map(|b| b.1).sum();
    let per_block: Vec<f64> = blocks.iter().map(|b| b.1 / b.0).collect();
    OracleResult {
        value: swm / sw,
        error_bound: spread_of(&per_block).max(f64::MIN_POSITIVE),
        method: OracleMethod::MonteCarlo,
    }
}

/// Plain estimate of `Z(β) = E[e^{-β⟨φ|M|φ⟩}]` from uniform draws.
pub fn oracle_partition_mc(m: &HermitianObservable, beta: f64, samples: usize, seed: u64) -> OracleResult {
    assert!(samples >= 10_000, "at least 1e4 samples");
    let blocks = block_sums(m.matrix(), beta, samples, seed);
    let per_block: Vec<f64> = blocks.iter().map(|b| b.0).collect();
    OracleResult {
        value: per_block.iter().sum::<f64>() / BLOCKS as f64,
        error_bound: spread_of(&per_block).max(f64::MIN_POSITIVE),
        method: OracleMethod::MonteCarlo,
    }
}
