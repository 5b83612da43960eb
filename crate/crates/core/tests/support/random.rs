// SPDX-License-Identifier: Apache-2.0

//! Seeded generators for test inputs.

use gibbs_thermo::model::{ComplexSquareMatrix, DensityMatrix, HermitianObservable, Spectrum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Eigenvalues drawn uniformly from `[-scale, scale]`.
pub fn spectrum<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Spectrum {
    Spectrum::new((0..d).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()).unwrap()
}

fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Gram-Schmidt orthonormalization of a complex Gaussian matrix (columns).
pub fn unitary<R: Rng>(rng: &mut R, d: usize) -> ComplexSquareMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| gaussian(rng)).collect();
        for c in &cols {
            let dot: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    let entries = (0..d * d).map(|idx| cols[idx % d][idx / d]).collect();
    ComplexSquareMatrix::new(d, entries).unwrap()
}

/// GUE-like Hermitian matrix with entries of size about `1/√d`.
pub fn hermitian<R: Rng>(rng: &mut R, d: usize) -> HermitianObservable {
    let s = 1.0 / (d as f64).sqrt();
    let mut entries = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        entries[i * d + i] = Complex64::new(s * rng.sample::<f64, _>(StandardNormal), 0.0);
        for j in i + 1..d {
            let z = gaussian(rng) * (s / 2f64.sqrt());
            entries[i * d + j] = z;
            entries[j * d + i] = z.conj();
        }
    }
    HermitianObservable::new(ComplexSquareMatrix::new(d, entries).unwrap()).unwrap()
}

/// Observable with the given eigenvalues in a random basis.
pub fn rotated(rng: &mut impl Rng, values: &[f64]) -> HermitianObservable {
    let u = unitary(rng, values.len());
    let m = ComplexSquareMatrix::conjugate_diagonal(&u, values).unwrap();
    let d = values.len();
    let sym: Vec<Complex64> = (0..d * d)
        .map(|idx| {
            let (i, j) = (idx / d, idx % d);
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        })
        .collect();
    HermitianObservable::new(ComplexSquareMatrix::new(d, sym).unwrap()).unwrap()
}

/// Random full-rank density matrix `U diag(p) U†` with Dirichlet weights.
pub fn density<R: Rng>(rng: &mut R, d: usize) -> DensityMatrix {
    let e: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = e.iter().sum();
    let p: Vec<f64> = e.iter().map(|x| x / total).collect();
    let u = unitary(rng, d);
    let m = ComplexSquareMatrix::conjugate_diagonal(&u, &p).unwrap();
    let sym: Vec<Complex64> = (0..d * d)
        .map(|idx| {
            let (i, j) = (idx / d, idx % d);
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        })
        .collect();
    let mut mat = ComplexSquareMatrix::new(d, sym).unwrap();
    let tr = mat.trace().re;
    mat = ComplexSquareMatrix::new(d, mat.entries().iter().map(|z| z / tr).collect()).unwrap();
    DensityMatrix::new(mat).unwrap()
}
