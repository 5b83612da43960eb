// SPDX-License-Identifier: Apache-2.0

//! Benchmark inputs shared by the bench targets.

use gibbs_thermo::Spectrum;

/// Evenly spaced eigenvalues on `[0, 1]` with one repeated pair.
pub fn ladder(d: usize) -> Spectrum {
    let mut values: Vec<f64> = (0..d).map(|k| k as f64 / (d.max(2) - 1) as f64).collect();
    if d >= 3 {
        values[1] = values[2];
    }
    Spectrum::new(values).expect("finite eigenvalues")
}
