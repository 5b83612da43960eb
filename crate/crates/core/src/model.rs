// SPDX-License-Identifier: Apache-2.0

//! Matrices, observables, states and the handful of operations between them.
//!
//! Everything here is immutable once built. Observables cache their
//! eigendecomposition on first use; all ensemble math downstream works in
//! that eigenbasis.

use std::ops::{Index, Range};
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

pub type Complex = num_complex::Complex64;

/// Dense `d × d` complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSquareMatrix {
    dim: usize,
    entries: Vec<Complex>,
}

impl ComplexSquareMatrix {
    pub fn new(dim: usize, entries: Vec<Complex>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidShape {
                dim,
                len: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexSquareMatrix { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        ComplexSquareMatrix {
            dim,
            entries: vec![Complex::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.entries[i * m.dim + i] = Complex::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex] {
        &self.entries
    }

    pub fn conj_transpose(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.entries[j * d + i] = self.entries[i * d + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs.dim)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == Complex::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.entries[i * d + j] += a * rhs.entries[k * d + j];
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise distance.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if self.dim != found {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    fn is_hermitian(&self, rel_tol: f64) -> Result<()> {
        let asymmetry = self.max_asymmetry();
        if asymmetry > rel_tol * self.max_abs() {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(())
    }

    /// Average of the matrix and its conjugate transpose.
    fn hermitian_part(&self) -> DMatrix<Complex> {
        let a = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        (&a + a.adjoint()) * Complex::new(0.5, 0.0)
    }

    /// `U diag(values) U†`.
    pub fn conjugate_diagonal(basis: &Self, values: &[f64]) -> Result<Self> {
        basis.check_dim(values.len())?;
        let d = basis.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex::new(0.0, 0.0);
                for (k, &v) in values.iter().enumerate() {
                    acc += basis[(i, k)] * basis[(j, k)].conj() * v;
                }
                out.entries[i * d + j] = acc;
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for ComplexSquareMatrix {
    type Output = Complex;

    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.entries[i * self.dim + j]
    }
}

/// Sorted eigenvalues of an observable with degeneracy clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    clusters: Vec<Range<usize>>,
    spread: f64,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_cluster_tolerance(values, NumericPolicy::default().cluster_rel_tol)
    }

    /// Clusters are built greedily: a value joins the current cluster while it
    /// lies within `rel_tol * spread` of the cluster's first value.
    pub fn with_cluster_tolerance(mut values: Vec<f64>, rel_tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        values.sort_by(f64::total_cmp);
        let spread = values[values.len() - 1] - values[0];
        let gap = rel_tol * spread;
        let mut clusters = Vec::new();
        let mut start = 0;
        for i in 1..values.len() {
            if values[i] - values[start] > gap {
                clusters.push(start..i);
                start = i;
            }
        }
        clusters.push(start..values.len());
        Ok(Spectrum {
            values,
            clusters,
            spread,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `m_max - m_min`.
    pub fn spread(&self) -> f64 {
        self.spread
    }

    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    /// Arithmetic mean of the eigenvalues, i.e. `Tr M / d`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// True when every eigenvalue is the same.
    pub fn is_degenerate(&self) -> bool {
        self.spread == 0.0
    }

    pub fn shifted(&self, c: f64) -> Result<Self> {
        Spectrum::new(self.values.iter().map(|v| v + c).collect())
    }

    pub fn scaled(&self, a: f64) -> Result<Self> {
        Spectrum::new(self.values.iter().map(|v| v * a).collect())
    }
}

#[derive(Debug, Clone)]
struct Eigendecomposition {
    spectrum: Spectrum,
    basis: ComplexSquareMatrix,
}

/// Hermitian matrix with a lazily computed eigendecomposition.
#[derive(Debug)]
pub struct HermitianObservable {
    matrix: ComplexSquareMatrix,
    cluster_rel_tol: f64,
    decomposition: OnceLock<Eigendecomposition>,
}

impl Clone for HermitianObservable {
    fn clone(&self) -> Self {
        HermitianObservable {
            matrix: self.matrix.clone(),
            cluster_rel_tol: self.cluster_rel_tol,
            decomposition: self.decomposition.clone(),
        }
    }
}

impl HermitianObservable {
    pub fn new(matrix: ComplexSquareMatrix) -> Result<Self> {
        Self::with_policy(matrix, &NumericPolicy::default())
    }

    pub fn with_policy(matrix: ComplexSquareMatrix, policy: &NumericPolicy) -> Result<Self> {
        matrix.is_hermitian(policy.hermitian_tol)?;
        Ok(HermitianObservable {
            matrix,
            cluster_rel_tol: policy.cluster_rel_tol,
            decomposition: OnceLock::new(),
        })
    }

    /// Diagonal observable with the given eigenvalues (standard eigenbasis).
    pub fn from_eigenvalues(values: &[f64]) -> Result<Self> {
        let spectrum = Spectrum::new(values.to_vec())?;
        let matrix = ComplexSquareMatrix::from_real_diagonal(spectrum.values());
        let basis = ComplexSquareMatrix::identity(spectrum.dim());
        let decomposition = OnceLock::new();
        let _ = decomposition.set(Eigendecomposition { spectrum, basis });
        Ok(HermitianObservable {
            matrix,
            cluster_rel_tol: NumericPolicy::default().cluster_rel_tol,
            decomposition,
        })
    }

    pub fn matrix(&self) -> &ComplexSquareMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    fn decomposition(&self) -> &Eigendecomposition {
        self.decomposition.get_or_init(|| {
            let (spectrum, basis) = decompose(&self.matrix, self.cluster_rel_tol);
            Eigendecomposition { spectrum, basis }
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.decomposition().spectrum
    }

    /// Unitary whose columns are eigenvectors, ordered like [`Self::spectrum`].
    pub fn eigenbasis(&self) -> &ComplexSquareMatrix {
        &self.decomposition().basis
    }
}

/// Ascending eigenvalues and a unitary eigenbasis of a Hermitian matrix.
pub fn eigen_decompose(matrix: &ComplexSquareMatrix) -> Result<(Spectrum, ComplexSquareMatrix)> {
    let policy = NumericPolicy::default();
    matrix.is_hermitian(policy.hermitian_tol)?;
    Ok(decompose(matrix, policy.cluster_rel_tol))
}

fn decompose(matrix: &ComplexSquareMatrix, cluster_rel_tol: f64) -> (Spectrum, ComplexSquareMatrix) {
    let d = matrix.dim;
    let eig = matrix.hermitian_part().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut basis = ComplexSquareMatrix::zeros(d);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..d {
            basis.entries[row * d + col] = eig.eigenvectors[(row, k)];
        }
    }
    let spectrum = Spectrum::with_cluster_tolerance(values, cluster_rel_tol)
        .expect("eigenvalues of a finite Hermitian matrix are finite");
    (spectrum, basis)
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexSquareMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexSquareMatrix) -> Result<Self> {
        Self::with_policy(matrix, &NumericPolicy::default())
    }

    pub fn with_policy(matrix: ComplexSquareMatrix, policy: &NumericPolicy) -> Result<Self> {
        matrix.is_hermitian(policy.hermitian_tol)?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > policy.trace_tol || trace.im.abs() > policy.trace_tol {
            return Err(Error::InvalidTrace { trace: trace.re });
        }
        let min_eigenvalue = matrix
            .hermitian_part()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -policy.psd_tol {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn from_pure(state: &PureState) -> Self {
        DensityMatrix {
            matrix: state.projector(),
        }
    }

    pub fn matrix(&self) -> &ComplexSquareMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    /// Convex combination `λ self + (1 - λ) other`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
        self.matrix.check_dim(other.dim())?;
        let entries = self
            .matrix
            .entries
            .iter()
            .zip(&other.matrix.entries)
            .map(|(a, b)| a * lambda + b * (1.0 - lambda))
            .collect();
        DensityMatrix::new(ComplexSquareMatrix::new(self.dim(), entries)?)
    }
}

/// Unit vector in `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidShape { dim: 0, len: 0 });
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NumericPolicy::default().norm_tol {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(PureState { amplitudes })
    }

    /// Rescales a non-zero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        PureState::new(amplitudes)
    }

    /// Trusted constructor for vectors that are unit by construction.
    pub(crate) fn from_unit(amplitudes: Vec<Complex>) -> Self {
        PureState { amplitudes }
    }

    /// The standard basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex::new(0.0, 0.0); dim];
        amplitudes[k] = Complex::new(1.0, 0.0);
        PureState { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|φ⟩⟨φ|`.
    pub fn projector(&self) -> ComplexSquareMatrix {
        let d = self.dim();
        let mut m = ComplexSquareMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.entries[i * d + j] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        m
    }
}

/// Finite mixture of pure states with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    members: Vec<(f64, PureState)>,
}

impl WeightedEnsemble {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        check_weights(&members)?;
        Ok(WeightedEnsemble { members })
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }
}

fn check_weights(members: &[(f64, PureState)]) -> Result<()> {
    let Some((_, first)) = members.first() else {
        return Err(Error::InvalidWeights("ensemble is empty".into()));
    };
    if let Some((w, _)) = members.iter().find(|(w, _)| w.is_nan() || *w <= 0.0 || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
    }
    let total: f64 = members.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > NumericPolicy::default().norm_tol {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    if let Some((_, s)) = members.iter().find(|(_, s)| s.dim() != first.dim()) {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            found: s.dim(),
        });
    }
    Ok(())
}

/// `Σ_j w_j |φ_j⟩⟨φ_j|`.
pub fn density_from_ensemble(ensemble: &WeightedEnsemble) -> Result<DensityMatrix> {
    check_weights(&ensemble.members)?;
    let d = ensemble.members[0].1.dim();
    let mut acc = ComplexSquareMatrix::zeros(d);
    for (w, state) in &ensemble.members {
        let amps = state.amplitudes();
        for i in 0..d {
            for j in 0..d {
                acc.entries[i * d + j] += amps[i] * amps[j].conj() * *w;
            }
        }
    }
    DensityMatrix::new(acc)
}

/// `Tr(M ρ)`.
pub fn expected_value(observable: &HermitianObservable, rho: &DensityMatrix) -> Result<f64> {
    let m = observable.matrix();
    m.check_dim(rho.dim())?;
    let d = m.dim;
    let r = rho.matrix();
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += m[(i, j)] * r[(j, i)];
        }
    }
    Ok(acc.re)
}

/// `⟨φ|M|φ⟩`.
pub fn quadratic_form(observable: &HermitianObservable, state: &PureState) -> Result<f64> {
    let m = observable.matrix();
    m.check_dim(state.dim())?;
    Ok(raw_quadratic_form(m, state.amplitudes()))
}

pub(crate) fn raw_quadratic_form(m: &ComplexSquareMatrix, v: &[Complex]) -> f64 {
    let d = m.dim;
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..d {
        let row: Complex = m.entries[i * d..(i + 1) * d].iter().zip(v).map(|(a, x)| a * x).sum();
        acc += v[i].conj() * row;
    }
    acc.re
}

/// `I / d`.
pub fn maximally_mixed(d: usize) -> DensityMatrix {
    let mut m = ComplexSquareMatrix::identity(d);
    for z in &mut m.entries {
        *z /= d as f64;
    }
    DensityMatrix { matrix: m }
}
