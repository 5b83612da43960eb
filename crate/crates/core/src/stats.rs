// SPDX-License-Identifier: Apache-2.0

//! Batch-means standard errors for plain and self-normalized estimators.

/// Number of contiguous batches used for standard errors.
pub const DEFAULT_BATCHES: usize = 100;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `(value - reference) / stderr`; zero when both the difference and
    /// the error vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.value - reference;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// Half-open index ranges of `batches` near-equal contiguous blocks.
pub(crate) fn batch_ranges(len: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let batches = batches.min(len).max(1);
    (0..batches)
        .map(|b| (b * len / batches)..((b + 1) * len / batches))
        .collect()
}

fn normalized_weights(log_weights: &[f64]) -> Vec<f64> {
    let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    log_weights.iter().map(|lw| (lw - top).exp()).collect()
}

/// Mean (self-normalized when `log_weights` is given) with a batch-means
/// standard error over `batches` contiguous blocks.
pub fn batch_means(values: &[f64], log_weights: Option<&[f64]>, batches: usize) -> Estimate {
    assert!(!values.is_empty(), "no samples");
    let weights = log_weights.map(|lw| {
        assert_eq!(lw.len(), values.len());
        normalized_weights(lw)
    });
    let w = |i: usize| weights.as_ref().map_or(1.0, |w| w[i]);

    let ranges = batch_ranges(values.len(), batches);
    let mut total_w = 0.0;
    let mut total_wv = 0.0;
    let mut batch_values = Vec::with_capacity(ranges.len());
    for r in &ranges {
        let (mut sw, mut swv) = (0.0, 0.0);
        for i in r.clone() {
            sw += w(i);
            swv += w(i) * values[i];
        }
        total_w += sw;
        total_wv += swv;
        if sw > 0.0 {
            batch_values.push(swv / sw);
        }
    }
    let value = total_wv / total_w;
    let b = batch_values.len();
    let stderr = if b < 2 {
        f64::INFINITY
    } else {
        let mean = batch_values.iter().sum::<f64>() / b as f64;
        let var = batch_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    };
    Estimate { value, stderr }
}

/// Kish effective sample size `(Σw)² / Σw²`; exactly the count for equal weights.
pub fn effective_sample_size(log_weights: &[f64]) -> f64 {
    if log_weights.is_empty() {
        return 0.0;
    }
    let first = log_weights[0];
    if log_weights.iter().all(|&lw| lw == first) {
        return log_weights.len() as f64;
    }
    let w = normalized_weights(log_weights);
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    (s * s / s2).min(log_weights.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_have_zero_error() {
        let e = batch_means(&vec![1.0; 1000], None, 100);
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.z_score(1.0), 0.0);
    }

    #[test]
    fn ranges_cover_everything() {
        let r = batch_ranges(1003, 100);
        assert_eq!(r.len(), 100);
        assert_eq!(r[0].start, 0);
        assert_eq!(r[99].end, 1003);
        assert!(r.windows(2).all(|w| w[0].end == w[1].start));
        assert_eq!(batch_ranges(5, 100).len(), 5);
    }

    #[test]
    fn weighted_mean() {
        let values = [1.0, 2.0, 3.0, 4.0];
        let lw = [0.0, 0.0, 2f64.ln(), 2f64.ln()];
        let e = batch_means(&values, Some(&lw), 2);
        assert!((e.value - (1.0 + 2.0 + 6.0 + 8.0) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ess() {
        assert_eq!(effective_sample_size(&[0.3; 17]), 17.0);
        let e = effective_sample_size(&[0.0, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]);
        assert!((e - 2.0).abs() < 1e-12);
    }
}
