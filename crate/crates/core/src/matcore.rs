//! Dense complex linear algebra used by everything else: tensor products,
//! partial operations on bipartite and multipartite states, trace norms and
//! Hermitian eigendecompositions with null spaces.
//!
//! Composite indices are row-major: for subsystem dimensions `[d0, d1, ...]`
//! the basis state `|i0 i1 ...>` sits at `i0 * (d1 * d2 ...) + i1 * (d2 ...) + ...`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Max |rho - rho^dag| accepted for a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max |Tr rho - 1| accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Relative eigenvalue threshold for membership in the null space.
pub const NULL_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn basis_vector(dim: usize, index: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[index] = c64(1.0);
    v
}

/// Builds a vector from real coefficients.
pub fn real_vector(coeffs: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(coeffs.len(), coeffs.iter().map(|&x| c64(x)))
}

pub fn normalized(v: &ComplexVector) -> ComplexVector {
    let n = v.norm();
    v / c64(n)
}

/// |v><v|
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// A density operator, optionally carrying a bipartite split `(dA, dB)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    split: Option<(usize, usize)>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity before wrapping.
    pub fn new(matrix: ComplexMatrix, split: Option<(usize, usize)>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some((da, db)) = split {
            if da * db != matrix.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "split {da}x{db} does not match dimension {}",
                    matrix.nrows()
                )));
            }
        }
        let herm = hermiticity_residual(&matrix);
        if herm >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() >= TRACE_TOL {
            return Err(Error::BadTrace(tr));
        }
        let min_ev = hermitian_eigenvalues(&matrix)[0];
        if min_ev < -PSD_TOL {
            return Err(Error::NotPsd(min_ev));
        }
        Ok(Self { matrix, split })
    }

    pub fn from_pure(v: &ComplexVector, split: Option<(usize, usize)>) -> Result<Self> {
        Self::new(outer(&normalized(v)), split)
    }

    pub fn maximally_mixed(dim: usize, split: Option<(usize, usize)>) -> Result<Self> {
        Self::new(identity(dim) / c64(dim as f64), split)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split
    }

    pub fn require_split(&self) -> Result<(usize, usize)> {
        self.split.ok_or(Error::MissingSplit)
    }

    pub fn with_split(self, da: usize, db: usize) -> Result<Self> {
        if da * db != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "split {da}x{db} does not match dimension {}",
                self.dim()
            )));
        }
        Ok(Self {
            split: Some((da, db)),
            ..self
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != total || dims.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} (product {prod}) do not match dimension {total}"
        )));
    }
    Ok(())
}

/// Splits every composite index into (index over `keep`, index over the rest).
fn split_indices(dims: &[usize], keep: &[usize]) -> (Vec<(usize, usize)>, usize, usize) {
    let total: usize = dims.iter().product();
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim = total / kept_dim;
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; dims.len()];
    for _ in 0..total {
        let (mut k, mut t) = (0usize, 0usize);
        for (s, &d) in digits.iter().enumerate() {
            if keep.contains(&s) {
                k = k * dims[s] + d;
            } else {
                t = t * dims[s] + d;
            }
        }
        map.push((k, t));
        // increment the row-major odometer
        for s in (0..dims.len()).rev() {
            digits[s] += 1;
            if digits[s] < dims[s] {
                break;
            }
            digits[s] = 0;
        }
    }
    (map, kept_dim, traced_dim)
}

fn validate_keep(dims: &[usize], keep: &[usize]) -> Result<Vec<usize>> {
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} refers to subsystems beyond {}",
            dims.len()
        )));
    }
    Ok(keep)
}

/// Partial trace of an arbitrary square matrix over every subsystem not in
/// `keep`. Kept subsystems appear in ascending order.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("partial trace of non-square matrix".into()));
    }
    check_dims(m.nrows(), dims)?;
    let keep = validate_keep(dims, keep)?;
    let (map, kept_dim, traced_dim) = split_indices(dims, &keep);
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kept_dim); traced_dim];
    for (full, &(k, t)) in map.iter().enumerate() {
        groups[t].push((k, full));
    }
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(k1, f1) in group {
            for &(k2, f2) in group {
                out[(k1, k2)] += m[(f1, f2)];
            }
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let out = partial_trace_matrix(rho.matrix(), dims, keep)?;
    let keep = validate_keep(dims, keep)?;
    let split = if keep.len() == 2 {
        Some((dims[keep[0]], dims[keep[1]]))
    } else {
        None
    };
    DensityMatrix::new(out, split)
}

/// Reduced state of a pure state: `Tr_rest |psi><psi|`, without forming the
/// full projector.
pub fn reduced_from_pure(psi: &ComplexVector, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    check_dims(psi.len(), dims)?;
    let keep = validate_keep(dims, keep)?;
    let (map, kept_dim, traced_dim) = split_indices(dims, &keep);
    // psi reshaped as a kept_dim x traced_dim matrix
    let mut a = ComplexMatrix::zeros(kept_dim, traced_dim);
    for (full, &(k, t)) in map.iter().enumerate() {
        a[(k, t)] = psi[full];
    }
    Ok(&a * a.adjoint())
}

/// Partial transpose on subsystem A: `rho^{T_A}_{ab,cd} = rho_{cb,ad}`.
pub fn partial_transpose(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let (da, db) = rho.require_split()?;
    Ok(partial_transpose_matrix(rho.matrix(), da, db))
}

pub fn partial_transpose_matrix(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da * db, da * db);
    for a in 0..da {
        for b in 0..db {
            for c in 0..da {
                for d in 0..db {
                    out[(a * db + b, c * db + d)] = m[(c * db + b, a * db + d)];
                }
            }
        }
    }
    out
}

/// Realignment `rho^R_{ab,cd} = rho_{ac,bd}`, a (dA^2) x (dB^2) matrix.
pub fn realign(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let (da, db) = rho.require_split()?;
    Ok(realign_matrix(rho.matrix(), da, db))
}

pub fn realign_matrix(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(da * da, db * db);
    for a in 0..da {
        for b in 0..da {
            for c in 0..db {
                for d in 0..db {
                    out[(a * da + b, c * db + d)] = m[(a * db + c, b * db + d)];
                }
            }
        }
    }
    out
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

fn is_real(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Retries the solve on `m + sigma I` when the plain solve returns a
/// non-finite value, which the QR iteration occasionally does on very sparse
/// inputs. Shifts do not change eigenvectors and are subtracted afterwards.
fn shifted_solve<T>(
    m: &ComplexMatrix,
    solve: impl Fn(&ComplexMatrix) -> (Vec<f64>, T),
) -> (Vec<f64>, T) {
    let first = solve(m);
    if first.0.iter().all(|l| l.is_finite()) {
        return first;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let n = m.nrows();
    for factor in [0.1, 0.37, 1.3, 2.9] {
        let sigma = factor * scale;
        let (values, extra) = solve(&(m + identity(n) * c64(sigma)));
        if values.iter().all(|l| l.is_finite()) {
            return (values.into_iter().map(|l| l - sigma).collect(), extra);
        }
    }
    first
}

fn raw_eigenvalues(m: &ComplexMatrix) -> (Vec<f64>, ()) {
    let ev = if is_real(m) {
        m.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    (ev, ())
}

fn raw_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    if is_real(m) {
        let eig = m.map(|z| z.re).symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(c64))
    } else {
        let eig = m.clone().symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order (no Hermiticity check).
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let (mut ev, ()) = shifted_solve(m, raw_eigenvalues);
    ev.sort_by(f64::total_cmp);
    ev
}

/// Rotates `v` so that its largest-magnitude component is real and positive.
pub fn fix_phase(v: &mut ComplexVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap();
    let phase = pivot.conj() / c64(pivot.norm());
    v.iter_mut().for_each(|z| *z *= phase);
}

/// Full Hermitian eigendecomposition, eigenpairs sorted by descending
/// eigenvalue, each eigenvector phase-fixed.
pub fn herm_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, Vec<ComplexVector>)> {
    let herm = hermiticity_residual(m);
    if herm >= HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let n = m.nrows();
    let (values, vectors) = shifted_solve(m, raw_eigen);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut evals = Vec::with_capacity(n);
    let mut evecs = Vec::with_capacity(n);
    for i in order {
        evals.push(values[i]);
        let mut v: ComplexVector = vectors.column(i).into_owned();
        fix_phase(&mut v);
        evecs.push(v);
    }
    Ok((evals, evecs))
}

/// Spectral decomposition of a density matrix with its numerical null space.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors in the same order as `eigenvalues`.
    pub eigenvectors: Vec<ComplexVector>,
    /// Eigenvectors whose eigenvalue falls below the null threshold.
    pub null_basis: Vec<ComplexVector>,
    pub tolerance: f64,
}

impl SpectralData {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len() - self.null_basis.len()
    }

    pub fn nullity(&self) -> usize {
        self.null_basis.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvectors[0].len();
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .fold(ComplexMatrix::zeros(n, n), |acc, (&l, v)| acc + outer(v) * c64(l))
    }
}

fn null_threshold(largest: f64, tol: f64) -> f64 {
    tol * largest.max(1.0)
}

/// Eigendecomposition of any Hermitian matrix; eigenvalues below
/// `tol * max(1, largest)` are assigned to the null basis.
pub fn herm_spectral(m: &ComplexMatrix, tol: f64) -> Result<SpectralData> {
    let (eigenvalues, eigenvectors) = herm_eigen(m)?;
    let cut = null_threshold(eigenvalues[0], tol);
    let null_basis = eigenvalues
        .iter()
        .zip(&eigenvectors)
        .filter(|(&l, _)| l < cut)
        .map(|(_, v)| v.clone())
        .collect();
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        null_basis,
        tolerance: tol,
    })
}

pub fn herm_eigendecomp(rho: &DensityMatrix, tol: f64) -> Result<SpectralData> {
    herm_spectral(rho.matrix(), tol)
}

pub fn null_space(rho: &DensityMatrix, tol: f64) -> Vec<ComplexVector> {
    // DensityMatrix is Hermitian by construction
    herm_spectral(rho.matrix(), tol)
        .map(|s| s.null_basis)
        .unwrap_or_default()
}

/// Orthogonal projector onto the span of `vectors` (assumed orthonormal).
pub fn projector(vectors: &[ComplexVector]) -> ComplexMatrix {
    let n = vectors.first().map_or(0, |v| v.len());
    vectors
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, v| acc + outer(v))
}

/// Projector onto the span of arbitrary (not necessarily orthonormal) vectors.
pub fn span_projector(vectors: &[ComplexVector], tol: f64) -> ComplexMatrix {
    let n = vectors.first().map_or(0, |v| v.len());
    let gram = vectors
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, v| acc + outer(v));
    let spectral = herm_spectral(&gram, tol).expect("Gram matrix is Hermitian");
    let range: Vec<ComplexVector> = spectral
        .eigenvalues
        .iter()
        .zip(&spectral.eigenvectors)
        .filter(|(&l, _)| l >= tol * spectral.eigenvalues[0].max(1.0))
        .map(|(_, v)| v.clone())
        .collect();
    projector(&range)
}

/// Principal square root of a Hermitian PSD matrix (tiny negative
/// eigenvalues clipped to zero).
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = herm_eigen(m)?;
    let n = m.nrows();
    Ok(values
        .iter()
        .zip(&vectors)
        .fold(ComplexMatrix::zeros(n, n), |acc, (&l, v)| {
            acc + outer(v) * c64(l.max(0.0).sqrt())
        }))
}

/// Largest deviation of the Gram matrix of `vectors` from the identity.
pub fn orthonormality_residual(vectors: &[ComplexVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((u.dotc(v) - c64(target)).norm());
        }
    }
    worst
}
