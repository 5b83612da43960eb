// SPDX-License-Identifier: Apache-2.0

//! Exact and importance samplers for the uniform and the conditional Gibbs
//! ensembles.
//!
//! The Gibbs density `∝ e^{-β⟨φ|M|φ⟩}` depends on a state only through its
//! squared overlaps `x_s` with the eigenbasis of `M`, and those are uniform on
//! the simplex under the unitary-invariant measure. So a Gibbs state is
//! `U (√x_1 e^{iθ_1}, …, √x_d e^{iθ_d})` with `x` drawn from the tilted
//! simplex density `∝ e^{-β Σ m_s x_s}` and independent uniform phases.
//!
//! Randomness: ChaCha20 with the user seed; samples are produced in fixed
//! chunks of [`CHUNK`] and chunk `k` draws from ChaCha stream `k`. The
//! output is therefore identical for any number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{raw_quadratic_form, Complex, ComplexSquareMatrix, DensityMatrix, HermitianObservable, PureState, Spectrum};
use crate::partition::log_partition;
use crate::stats::{batch_means, batch_ranges, effective_sample_size, Estimate, DEFAULT_BATCHES};

/// Samples per independent random stream.
pub const CHUNK: usize = 4096;
/// Proposals used to measure the rejection acceptance rate.
pub const PILOT: usize = 4096;
const PILOT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMethod {
    /// Exact rejection sampling; falls back to importance sampling when the
    /// acceptance rate is below the configured threshold.
    Rejection,
    /// Uniform proposals with self-normalized weights.
    Importance,
}

impl SamplingMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingMethod::Rejection => "rejection",
            SamplingMethod::Importance => "importance",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub count: usize,
    pub method: SamplingMethod,
    pub rejection_fallback_threshold: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SamplerConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        SamplerConfig {
            seed,
            count,
            method: SamplingMethod::Rejection,
            rejection_fallback_threshold: 0.05,
            threads: None,
        }
    }

    pub fn with_method(mut self, method: SamplingMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidConfig("count must be at least 1".into()));
        }
        let t = self.rejection_fallback_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rejection_fallback_threshold {t} outside (0, 1)"
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        Ok(())
    }
}

/// Pure states from an ensemble, with log-weights (all zero for exact samplers).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub states: Vec<PureState>,
    /// Defined up to a common additive constant.
    pub log_weights: Vec<f64>,
    pub seed: u64,
    pub ess: f64,
    pub method: SamplingMethod,
    /// Pilot acceptance rate when rejection was attempted.
    pub acceptance_rate: Option<f64>,
}

/// Points on the probability simplex, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexBatch {
    pub dim: usize,
    pub points: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub seed: u64,
    pub ess: f64,
    pub method: SamplingMethod,
    pub acceptance_rate: Option<f64>,
}

impl SimplexBatch {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }
}

/// Empirical ensemble barycenter.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterEstimate {
    /// Barycenter in the basis the observable was given in.
    pub density: DensityMatrix,
    /// Barycenter in the eigenbasis of the observable.
    pub eigenbasis_mean: ComplexSquareMatrix,
    /// Batch-means standard errors of the real and imaginary parts, row-major.
    pub eigenbasis_stderr: Vec<(f64, f64)>,
}

fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `work(chunk_index, chunk_len, rng)` over all chunks and concatenates
/// the results in chunk order.
fn run_chunks<T, F>(cfg: &SamplerConfig, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha20Rng) -> Vec<T> + Sync,
{
    let chunks = cfg.count.div_ceil(CHUNK);
    let job = || {
        (0..chunks)
            .into_par_iter()
            .map(|k| {
                let len = CHUNK.min(cfg.count - k * CHUNK);
                let mut rng = stream(cfg.seed, k as u64);
                work(len, &mut rng)
            })
            .collect::<Vec<_>>()
    };
    let parts = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(job),
        None => job(),
    };
    parts.into_iter().flatten().collect()
}

fn uniform_simplex<R: Rng>(rng: &mut R, out: &mut [f64]) {
    let mut total = 0.0;
    for x in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *x = e;
        total += e;
    }
    for x in out.iter_mut() {
        *x /= total;
    }
}

/// Tilt `-β (Σ m_s x_s - c)` with `c` chosen so it never exceeds zero.
struct Tilt<'a> {
    values: &'a [f64],
    beta: f64,
    reference: f64,
}

impl<'a> Tilt<'a> {
    fn new(spectrum: &'a Spectrum, beta: f64) -> Self {
        let reference = if beta >= 0.0 { spectrum.min() } else { spectrum.max() };
        Tilt {
            values: spectrum.values(),
            beta,
            reference,
        }
    }

    fn log_weight(&self, x: &[f64]) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let energy: f64 = self.values.iter().zip(x).map(|(m, x)| m * x).sum();
        (-self.beta * (energy - self.reference)).min(0.0)
    }
}

/// One draw: simplex point, optional phases and log-weight.
struct Draw {
    x: Vec<f64>,
    phases: Vec<f64>,
    log_weight: f64,
}

fn draw_one<R: Rng>(rng: &mut R, tilt: &Tilt, exact: bool, with_phases: bool) -> Draw {
    let d = tilt.values.len();
    let mut x = vec![0.0; d];
    let log_weight = loop {
        uniform_simplex(rng, &mut x);
        let lw = tilt.log_weight(&x);
        if !exact {
            break lw;
        }
        if lw == 0.0 || rng.random::<f64>() < lw.exp() {
            break 0.0;
        }
    };
    let phases = if with_phases {
        (0..d).map(|_| std::f64::consts::TAU * rng.random::<f64>()).collect()
    } else {
        Vec::new()
    };
    Draw { x, phases, log_weight }
}

fn choose_method(tilt: &Tilt, cfg: &SamplerConfig) -> (SamplingMethod, Option<f64>) {
    if cfg.method == SamplingMethod::Importance {
        return (SamplingMethod::Importance, None);
    }
    if tilt.beta == 0.0 {
        return (SamplingMethod::Rejection, Some(1.0));
    }
    let mut rng = stream(cfg.seed, PILOT_STREAM);
    let d = tilt.values.len();
    let mut x = vec![0.0; d];
    let mut accepted = 0usize;
    for _ in 0..PILOT {
        uniform_simplex(&mut rng, &mut x);
        if rng.random::<f64>() < tilt.log_weight(&x).exp() {
            accepted += 1;
        }
    }
    let rate = accepted as f64 / PILOT as f64;
    if rate < cfg.rejection_fallback_threshold {
        (SamplingMethod::Importance, Some(rate))
    } else {
        (SamplingMethod::Rejection, Some(rate))
    }
}

struct GibbsDraws {
    draws: Vec<Draw>,
    method: SamplingMethod,
    acceptance_rate: Option<f64>,
}

fn draw_gibbs(spectrum: &Spectrum, beta: f64, cfg: &SamplerConfig, with_phases: bool) -> Result<GibbsDraws> {
    cfg.validate()?;
    if !beta.is_finite() {
        return Err(Error::NonFinite);
    }
    let tilt = Tilt::new(spectrum, beta);
    let (method, acceptance_rate) = choose_method(&tilt, cfg);
    let exact = method == SamplingMethod::Rejection;
    let draws = run_chunks(cfg, |len, rng| {
        (0..len).map(|_| draw_one(rng, &tilt, exact, with_phases)).collect()
    });
    Ok(GibbsDraws {
        draws,
        method,
        acceptance_rate,
    })
}

/// Points `x` with density `∝ e^{-β Σ m_s x_s}` on the simplex (exactly, or
/// as weighted uniform draws after fallback).
pub fn sample_simplex_tilted(spectrum: &Spectrum, beta: f64, cfg: &SamplerConfig) -> Result<SimplexBatch> {
    let g = draw_gibbs(spectrum, beta, cfg, false)?;
    let log_weights: Vec<f64> = g.draws.iter().map(|d| d.log_weight).collect();
    Ok(SimplexBatch {
        dim: spectrum.dim(),
        points: g.draws.into_iter().flat_map(|d| d.x).collect(),
        ess: effective_sample_size(&log_weights),
        log_weights,
        seed: cfg.seed,
        method: g.method,
        acceptance_rate: g.acceptance_rate,
    })
}

/// Uniformly distributed pure states: normalized complex Gaussian vectors.
pub fn sample_haar(d: usize, cfg: &SamplerConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    if d == 0 {
        return Err(Error::InvalidShape { dim: 0, len: 0 });
    }
    let states = run_chunks(cfg, |len, rng| {
        (0..len)
            .map(|_| loop {
                let v: Vec<Complex> = (0..d)
                    .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                if let Ok(s) = PureState::normalized(v) {
                    break s;
                }
            })
            .collect()
    });
    Ok(SampleBatch {
        log_weights: vec![0.0; states.len()],
        ess: states.len() as f64,
        states,
        seed: cfg.seed,
        method: SamplingMethod::Rejection,
        acceptance_rate: Some(1.0),
    })
}

fn eigen_amplitudes(d: &Draw) -> Vec<Complex> {
    d.x.iter()
        .zip(&d.phases)
        .map(|(x, t)| Complex::from_polar(x.sqrt(), *t))
        .collect()
}

fn rotate(basis: &ComplexSquareMatrix, v: &[Complex]) -> Vec<Complex> {
    let d = v.len();
    (0..d)
        .map(|i| (0..d).map(|k| basis[(i, k)] * v[k]).sum())
        .collect()
}

/// States from the conditional Gibbs ensemble of `observable` at `beta`.
pub fn sample_gibbs(observable: &HermitianObservable, beta: f64, cfg: &SamplerConfig) -> Result<SampleBatch> {
    let g = draw_gibbs(observable.spectrum(), beta, cfg, true)?;
    let basis = observable.eigenbasis();
    let log_weights: Vec<f64> = g.draws.iter().map(|d| d.log_weight).collect();
    let states = g
        .draws
        .iter()
        .map(|d| PureState::from_unit(rotate(basis, &eigen_amplitudes(d))))
        .collect();
    Ok(SampleBatch {
        states,
        ess: effective_sample_size(&log_weights),
        log_weights,
        seed: cfg.seed,
        method: g.method,
        acceptance_rate: g.acceptance_rate,
    })
}

/// `Z(β) = E_uniform[e^{-β Σ m_s x_s}]` from uniform simplex draws.
pub fn mc_estimate_partition(spectrum: &Spectrum, beta: f64, cfg: &SamplerConfig) -> Result<Estimate> {
    let uniform = SamplerConfig {
        method: SamplingMethod::Importance,
        ..cfg.clone()
    };
    let g = draw_gibbs(spectrum, 0.0, &uniform, false)?;
    let m = spectrum.values();
    let values: Vec<f64> = g
        .draws
        .iter()
        .map(|d| (-beta * m.iter().zip(&d.x).map(|(m, x)| m * x).sum::<f64>()).exp())
        .collect();
    Ok(batch_means(&values, None, DEFAULT_BATCHES))
}

/// Weighted mean of `f` over a Gibbs sample with a batch-means error.
pub fn mc_functional<F>(batch: &SampleBatch, f: F) -> Estimate
where
    F: Fn(&PureState) -> f64,
{
    let values: Vec<f64> = batch.states.iter().map(f).collect();
    let weighted = batch.method == SamplingMethod::Importance;
    batch_means(&values, weighted.then_some(&batch.log_weights[..]), DEFAULT_BATCHES)
}

/// Ensemble average of `⟨φ|M|φ⟩` estimated from Gibbs samples.
pub fn mc_average(observable: &HermitianObservable, beta: f64, cfg: &SamplerConfig) -> Result<Estimate> {
    let batch = sample_gibbs(observable, beta, cfg)?;
    let m = observable.matrix();
    Ok(mc_functional(&batch, |s| raw_quadratic_form(m, s.amplitudes())))
}

/// `E_μ[ln μ] = E_μ[-β⟨φ|M|φ⟩] - ln Z`, the Monte Carlo counterpart of
/// [`crate::partition::kl_from_uniform`].
pub fn mc_kl(observable: &HermitianObservable, beta: f64, cfg: &SamplerConfig) -> Result<Estimate> {
    let batch = sample_gibbs(observable, beta, cfg)?;
    let m = observable.matrix();
    let log_z = log_partition(observable.spectrum(), beta);
    Ok(mc_functional(&batch, |s| -beta * raw_quadratic_form(m, s.amplitudes()) - log_z))
}

/// Empirical `E_μ[|φ⟩⟨φ|]` with per-entry batch-means errors in the eigenbasis.
pub fn mc_barycenter(observable: &HermitianObservable, beta: f64, cfg: &SamplerConfig) -> Result<BarycenterEstimate> {
    let g = draw_gibbs(observable.spectrum(), beta, cfg, true)?;
    let d = observable.dim();
    let weighted = g.method == SamplingMethod::Importance;
    let top = g.draws.iter().map(|x| x.log_weight).fold(f64::NEG_INFINITY, f64::max);
    let ranges = batch_ranges(g.draws.len(), DEFAULT_BATCHES);

    let mut total = vec![Complex::new(0.0, 0.0); d * d];
    let mut total_w = 0.0;
    let mut batch_means_list: Vec<Vec<Complex>> = Vec::with_capacity(ranges.len());
    for r in ranges {
        let mut acc = vec![Complex::new(0.0, 0.0); d * d];
        let mut sw = 0.0;
        for draw in &g.draws[r] {
            let w = if weighted { (draw.log_weight - top).exp() } else { 1.0 };
            let v = eigen_amplitudes(draw);
            for i in 0..d {
                for j in i..d {
                    acc[i * d + j] += v[i] * v[j].conj() * w;
                }
            }
            sw += w;
        }
        for (t, a) in total.iter_mut().zip(&acc) {
            *t += a;
        }
        total_w += sw;
        batch_means_list.push(acc.into_iter().map(|a| a / sw).collect());
    }
    for i in 0..d {
        for j in 0..i {
            total[i * d + j] = total[j * d + i].conj();
        }
    }
    let mean: Vec<Complex> = total.iter().map(|t| t / total_w).collect();
    let b = batch_means_list.len() as f64;
    let stderr = (0..d * d)
        .map(|idx| {
            let (i, j) = (idx / d, idx % d);
            let k = if j >= i { idx } else { j * d + i };
            let sign = if j >= i { 1.0 } else { -1.0 };
            let m_re = batch_means_list.iter().map(|m| m[k].re).sum::<f64>() / b;
            let m_im = batch_means_list.iter().map(|m| sign * m[k].im).sum::<f64>() / b;
            let v_re = batch_means_list.iter().map(|m| (m[k].re - m_re).powi(2)).sum::<f64>() / (b - 1.0);
            let v_im = batch_means_list
                .iter()
                .map(|m| (sign * m[k].im - m_im).powi(2))
                .sum::<f64>()
                / (b - 1.0);
            ((v_re / b).sqrt(), (v_im / b).sqrt())
        })
        .collect();
    let eigenbasis_mean = ComplexSquareMatrix::new(d, mean)?;
    let basis = observable.eigenbasis();
    let rotated = basis.matmul(&eigenbasis_mean)?.matmul(&basis.conj_transpose())?;
    Ok(BarycenterEstimate {
        density: DensityMatrix::new(rotated)?,
        eigenbasis_mean,
        eigenbasis_stderr: stderr,
    })
}
