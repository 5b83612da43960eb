// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gibbs_thermo::sampler::{mc_functional, SampleBatch};
use gibbs_thermo::solver::{beta_of_state_with, solve_beta_with};
use gibbs_thermo::{
    equalizing_check, evaluate, log_partition, mc_barycenter, mc_estimate_partition, quadratic_form, sample_gibbs, sample_haar,
    ComplexSquareMatrix, DensityMatrix, Estimate, HermitianObservable, NumericPolicy, SamplerConfig,
    SamplingMethod,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::failure::{exit, Failure};
use crate::io::{load_observable, load_state, num, parse_spectrum, InputRecord};
use crate::{MethodArg, ObservableSource, Outcome, SampleFormat};

const Z_LIMIT: f64 = 4.0;

fn observable_of(
    spectrum: Option<&str>,
    file: Option<&Path>,
    inputs: &mut Vec<InputRecord>,
) -> Result<HermitianObservable, Failure> {
    match (spectrum, file) {
        (Some(s), None) => parse_spectrum(s),
        (None, Some(p)) => load_observable(p, inputs),
        _ => Err(Failure::input("give exactly one of --spectrum or --observable")),
    }
}

fn load(source: &ObservableSource, inputs: &mut Vec<InputRecord>) -> Result<HermitianObservable, Failure> {
    observable_of(source.spectrum.as_deref(), source.observable.as_deref(), inputs)
}

fn joined(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

fn policy_tolerances(policy: &NumericPolicy) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("hermitian_tol".to_string(), policy.hermitian_tol),
        ("trace_tol".to_string(), policy.trace_tol),
        ("psd_tol".to_string(), policy.psd_tol),
        ("solver_rel_tol".to_string(), policy.solver_rel_tol),
        ("boundary_rel_tol".to_string(), policy.boundary_rel_tol),
    ])
}

pub fn solve(
    source: &ObservableSource,
    state: Option<&Path>,
    target: Option<f64>,
    tol: f64,
    inputs: &mut Vec<InputRecord>,
) -> Result<Outcome, Failure> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::input(format!("--tol must be positive, got {tol}")));
    }
    let observable = load(source, inputs)?;
    let policy = NumericPolicy {
        solver_rel_tol: tol,
        ..NumericPolicy::default()
    };
    let solution = match (state, target) {
        (Some(path), None) => {
            let rho = load_state(path, inputs)?;
            beta_of_state_with(&observable, &rho, &policy)?
        }
        (None, Some(t)) => solve_beta_with(observable.spectrum(), t, &policy)?,
        _ => return Err(Failure::input("give exactly one of --state or --target")),
    };
    let mut text = String::new();
    writeln!(text, "beta {}", num(solution.beta)).unwrap();
    writeln!(text, "target {}", num(solution.target)).unwrap();
    writeln!(text, "achieved {}", num(solution.achieved)).unwrap();
    writeln!(text, "residual {}", num(solution.residual)).unwrap();
    writeln!(text, "iterations {}", solution.iterations).unwrap();
    writeln!(text, "spectrum {}", joined(observable.spectrum().values())).unwrap();
    Ok(Outcome {
        text,
        code: exit::OK,
        seed: None,
        tolerances: policy_tolerances(&policy),
    })
}

pub fn partition_curve(
    source: &ObservableSource,
    beta_min: f64,
    beta_max: f64,
    grid: usize,
    inputs: &mut Vec<InputRecord>,
) -> Result<Outcome, Failure> {
    if grid == 0 || !beta_min.is_finite() || !beta_max.is_finite() || beta_min > beta_max {
        return Err(Failure::input("need --grid >= 1 and finite --beta-min <= --beta-max"));
    }
    let observable = load(source, inputs)?;
    let mut text = String::from("beta,log_z,average,variance,kl\n");
    for i in 0..grid {
        let beta = if grid == 1 {
            beta_min
        } else {
            beta_min + (beta_max - beta_min) * i as f64 / (grid - 1) as f64
        };
        let e = evaluate(observable.spectrum(), beta);
        writeln!(
            text,
            "{},{},{},{},{}",
            num(beta),
            num(e.log_z),
            num(e.average),
            num(e.variance),
            num(e.kl)
        )
        .unwrap();
    }
    Ok(Outcome {
        text,
        code: exit::OK,
        seed: None,
        tolerances: BTreeMap::new(),
    })
}

fn config(seed: u64, count: usize, method: MethodArg, threads: Option<usize>) -> SamplerConfig {
    let method = match method {
        MethodArg::Rejection => SamplingMethod::Rejection,
        MethodArg::Importance => SamplingMethod::Importance,
    };
    SamplerConfig::new(seed, count).with_method(method).with_threads(threads)
}

fn sample_text(batch: &SampleBatch, beta: f64, format: SampleFormat) -> String {
    let d = batch.states.first().map_or(0, |s| s.dim());
    let acceptance = batch.acceptance_rate.map_or("none".to_string(), num);
    let mut text = String::new();
    match format {
        SampleFormat::Csv => {
            writeln!(text, "# seed={}", batch.seed).unwrap();
            writeln!(text, "# beta={}", num(beta)).unwrap();
            writeln!(text, "# method={}", batch.method.as_str()).unwrap();
            writeln!(text, "# ess={}", num(batch.ess)).unwrap();
            writeln!(text, "# acceptance_rate={acceptance}").unwrap();
            let mut cols: Vec<String> = (0..d).flat_map(|k| [format!("re_{k}"), format!("im_{k}")]).collect();
            cols.push("log_weight".into());
            writeln!(text, "{}", cols.join(",")).unwrap();
            for (s, w) in batch.states.iter().zip(&batch.log_weights) {
                for a in s.amplitudes() {
                    write!(text, "{},{},", num(a.re), num(a.im)).unwrap();
                }
                writeln!(text, "{}", num(*w)).unwrap();
            }
        }
        SampleFormat::Json => {
            let acceptance = batch.acceptance_rate.map_or("null".to_string(), num);
            write!(
                text,
                "{{\"seed\":{},\"beta\":{},\"method\":\"{}\",\"ess\":{},\"acceptance_rate\":{},\"dim\":{},\"states\":[",
                batch.seed,
                num(beta),
                batch.method.as_str(),
                num(batch.ess),
                acceptance,
                d
            )
            .unwrap();
            for (i, s) in batch.states.iter().enumerate() {
                let row: Vec<String> = s.amplitudes().iter().flat_map(|a| [num(a.re), num(a.im)]).collect();
                let sep = if i == 0 { "" } else { "," };
                write!(text, "{sep}[{}]", row.join(",")).unwrap();
            }
            let weights: Vec<String> = batch.log_weights.iter().map(|w| num(*w)).collect();
            writeln!(text, "],\"log_weights\":[{}]}}", weights.join(",")).unwrap();
        }
    }
    text
}

#[allow(clippy::too_many_arguments)]
pub fn sample(
    source: &ObservableSource,
    beta: Option<f64>,
    state: Option<&Path>,
    count: usize,
    seed: u64,
    format: SampleFormat,
    method: MethodArg,
    threads: Option<usize>,
    inputs: &mut Vec<InputRecord>,
) -> Result<Outcome, Failure> {
    let observable = load(source, inputs)?;
    let beta = match (beta, state) {
        (Some(b), None) => b,
        (None, Some(path)) => {
            let rho = load_state(path, inputs)?;
            beta_of_state_with(&observable, &rho, &NumericPolicy::default())?.beta
        }
        _ => return Err(Failure::input("give exactly one of --beta or --state")),
    };
    let cfg = config(seed, count, method, threads);
    let batch = if beta == 0.0 {
        sample_haar(observable.dim(), &cfg)?
    } else {
        sample_gibbs(&observable, beta, &cfg)?
    };
    Ok(Outcome {
        text: sample_text(&batch, beta, format),
        code: exit::OK,
        seed: Some(seed),
        tolerances: BTreeMap::from([("rejection_fallback_threshold".to_string(), cfg.rejection_fallback_threshold)]),
    })
}

struct Check {
    name: String,
    analytic: f64,
    estimate: Estimate,
}

pub fn verify(
    source: &ObservableSource,
    beta: f64,
    samples: usize,
    seed: u64,
    corrupt_log_z: f64,
    threads: Option<usize>,
    inputs: &mut Vec<InputRecord>,
) -> Result<Outcome, Failure> {
    if samples < 2 {
        return Err(Failure::input("--samples must be at least 2"));
    }
    if !beta.is_finite() {
        return Err(Failure::input("--beta must be finite"));
    }
    let observable = load(source, inputs)?;
    let spectrum = observable.spectrum();
    let cfg = config(seed, samples, MethodArg::Rejection, threads);
    let analytic = evaluate(spectrum, beta);
    let mut checks = Vec::new();

    let batch = sample_gibbs(&observable, beta, &cfg)?;
    checks.push(Check {
        name: "average".into(),
        analytic: analytic.average,
        estimate: mc_functional(&batch, |s| quadratic_form(&observable, s).expect("matching dimension")),
    });
    checks.push(Check {
        name: "partition".into(),
        analytic: (log_partition(spectrum, beta) + corrupt_log_z).exp(),
        estimate: mc_estimate_partition(spectrum, beta, &cfg)?,
    });
    let bary = mc_barycenter(&observable, beta, &cfg)?;
    let d = observable.dim();
    for i in 0..d {
        for j in i..d {
            let mean = bary.eigenbasis_mean[(i, j)];
            let (se_re, se_im) = bary.eigenbasis_stderr[i * d + j];
            let expected = if i == j { analytic.barycenter_weights[i] } else { 0.0 };
            checks.push(Check {
                name: format!("barycenter_re[{i},{j}]"),
                analytic: expected,
                estimate: Estimate { value: mean.re, stderr: se_re },
            });
            if i != j {
                checks.push(Check {
                    name: format!("barycenter_im[{i},{j}]"),
                    analytic: 0.0,
                    estimate: Estimate { value: mean.im, stderr: se_im },
                });
            }
        }
    }

    let mut text = String::from("check analytic estimate stderr z\n");
    let mut pass = true;
    for c in &checks {
        let z = c.estimate.z_score(c.analytic);
        pass &= z.abs() <= Z_LIMIT;
        writeln!(
            text,
            "{} {} {} {} {}",
            c.name,
            num(c.analytic),
            num(c.estimate.value),
            num(c.estimate.stderr),
            num(z)
        )
        .unwrap();
    }
    writeln!(text, "method {}", batch.method.as_str()).unwrap();
    writeln!(text, "ess {}", num(batch.ess)).unwrap();
    writeln!(text, "status {}", if pass { "PASS" } else { "FAIL" }).unwrap();
    Ok(Outcome {
        text,
        code: if pass { exit::OK } else { exit::CHECK_FAILED },
        seed: Some(seed),
        tolerances: BTreeMap::from([("z_limit".to_string(), Z_LIMIT)]),
    })
}

fn couple_line(text: &mut String, beta_a: f64, beta_b: f64, beta_joint: f64, interleaved: bool) {
    writeln!(text, "beta_a {}", num(beta_a)).unwrap();
    writeln!(text, "beta_b {}", num(beta_b)).unwrap();
    writeln!(text, "beta_joint {}", num(beta_joint)).unwrap();
    writeln!(text, "interleaved {interleaved}").unwrap();
}

type Part<'a> = (Option<&'a str>, Option<&'a Path>, Option<&'a Path>);

pub fn couple(a: Part, b: Part, inputs: &mut Vec<InputRecord>) -> Result<Outcome, Failure> {
    let mut side = |(spectrum, file, state): Part| -> Result<(HermitianObservable, DensityMatrix), Failure> {
        let observable = observable_of(spectrum, file, inputs)?;
        let state = state.ok_or_else(|| Failure::input("each side needs a --state-a/--state-b file"))?;
        Ok((observable, load_state(state, inputs)?))
    };
    let (ma, ra) = side(a)?;
    let (mb, rb) = side(b)?;
    let report = equalizing_check(&ma, &ra, &mb, &rb)?;
    let mut text = String::new();
    couple_line(&mut text, report.beta_a, report.beta_b, report.beta_joint, report.interleaved);
    writeln!(text, "joint_dim {}", report.joint_dim).unwrap();
    Ok(Outcome {
        text,
        code: if report.interleaved { exit::OK } else { exit::CHECK_FAILED },
        seed: None,
        tolerances: BTreeMap::from([("equalizing_tol".to_string(), gibbs_thermo::solver::EQUALIZING_TOL)]),
    })
}

fn random_case(rng: &mut ChaCha20Rng) -> Result<(HermitianObservable, DensityMatrix), Failure> {
    let d = rng.random_range(2..=4);
    let values: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let p: Vec<f64> = e.iter().map(|x| x / total).collect();
    let observable = HermitianObservable::from_eigenvalues(&values)?;
    let state = DensityMatrix::new(ComplexSquareMatrix::from_real_diagonal(&p))?;
    Ok((observable, state))
}

pub fn couple_random(cases: usize, seed: u64) -> Result<Outcome, Failure> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut text = String::from("case beta_a beta_b beta_joint interleaved\n");
    let mut good = 0;
    for case in 0..cases {
        let (ma, ra) = random_case(&mut rng)?;
        let (mb, rb) = random_case(&mut rng)?;
        let r = equalizing_check(&ma, &ra, &mb, &rb)?;
        good += usize::from(r.interleaved);
        writeln!(
            text,
            "{case} {} {} {} {}",
            num(r.beta_a),
            num(r.beta_b),
            num(r.beta_joint),
            r.interleaved
        )
        .unwrap();
    }
    writeln!(text, "interleaved {good}/{cases}").unwrap();
    Ok(Outcome {
        text,
        code: if good == cases { exit::OK } else { exit::CHECK_FAILED },
        seed: Some(seed),
        tolerances: BTreeMap::from([("equalizing_tol".to_string(), gibbs_thermo::solver::EQUALIZING_TOL)]),
    })
}
