//! Exact-diagonalization oracle for short closed chains: literal expansion of
//! the paired state, Hamiltonian assembly, and ground-state checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{
    c64, hermitian_eigenvalues, kron_vec, reduced_from_pure, ComplexMatrix, ComplexVector,
    DensityMatrix,
};
use crate::parenth::{PairedGlobalState, RingHamiltonian};

/// Largest chain handled at all.
pub const MAX_SITES: usize = 10;
/// Largest chain whose Hamiltonian is stored densely and diagonalized.
pub const MAX_DENSE_SITES: usize = 6;
/// Eigenvalues below this count toward the ground space.
pub const GROUND_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FullState {
    pub sites: usize,
    pub amplitudes: ComplexVector,
}

#[derive(Clone, Debug)]
pub struct FullHamiltonian {
    pub sites: usize,
    pub matrix: ComplexMatrix,
}

fn check_sites(sites: usize, cap: usize) -> Result<()> {
    if sites > cap {
        return Err(Error::SizeCap { sites, cap });
    }
    Ok(())
}

/// Writes out `sum_i sqrt(l_i) |v_i>^{(x) N}` in the full `3^{2N}` space.
pub fn expand(state: &PairedGlobalState) -> Result<FullState> {
    let sites = state.sites();
    check_sites(sites, MAX_SITES)?;
    let dim = 3usize.pow(sites as u32);
    let mut psi = ComplexVector::zeros(dim);
    for (&l, v) in state.weights.iter().zip(&state.pair_vectors) {
        let mut term = v.clone();
        for _ in 1..state.n_pairs {
            term = kron_vec(&term, v);
        }
        psi += term * c64(l.sqrt());
    }
    let norm = psi.norm();
    Ok(FullState {
        sites,
        amplitudes: psi / c64(norm),
    })
}

/// Offsets of the 27 local basis states of `support` inside the full space,
/// and the base indices of every configuration of the remaining sites.
fn embedding(sites: usize, support: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let stride = |s: usize| 3usize.pow((sites - 1 - s) as u32);
    let local_dim = 3usize.pow(support.len() as u32);
    let offsets: Vec<usize> = (0..local_dim)
        .map(|k| {
            let mut rem = k;
            let mut off = 0;
            for &s in support.iter().rev() {
                off += (rem % 3) * stride(s);
                rem /= 3;
            }
            off
        })
        .collect();
    let dim = 3usize.pow(sites as u32);
    let bases = (0..dim)
        .filter(|&idx| support.iter().all(|&s| (idx / stride(s)) % 3 == 0))
        .collect();
    (offsets, bases)
}

/// Dense Hamiltonian of the ring (up to [`MAX_DENSE_SITES`] sites).
pub fn assemble(ring: &RingHamiltonian) -> Result<FullHamiltonian> {
    check_sites(ring.sites, MAX_DENSE_SITES)?;
    let dim = 3usize.pow(ring.sites as u32);
    let mut m = ComplexMatrix::zeros(dim, dim);
    let h = &ring.local.matrix;
    for &anchor in &ring.anchors {
        let (offsets, bases) = embedding(ring.sites, &ring.support(anchor));
        for base in bases {
            for (r, &orow) in offsets.iter().enumerate() {
                for (c, &ocol) in offsets.iter().enumerate() {
                    m[(base + orow, base + ocol)] += h[(r, c)];
                }
            }
        }
    }
    Ok(FullHamiltonian {
        sites: ring.sites,
        matrix: m,
    })
}

/// `H |psi>` without storing `H`.
pub fn apply(ring: &RingHamiltonian, psi: &ComplexVector) -> Result<ComplexVector> {
    check_sites(ring.sites, MAX_SITES)?;
    let dim = 3usize.pow(ring.sites as u32);
    if psi.len() != dim {
        return Err(Error::DimensionMismatch(format!("state has {} amplitudes, ring needs {dim}", psi.len())));
    }
    let h = &ring.local.matrix;
    let mut out = ComplexVector::zeros(dim);
    let mut local = ComplexVector::zeros(h.nrows());
    for &anchor in &ring.anchors {
        let (offsets, bases) = embedding(ring.sites, &ring.support(anchor));
        for base in bases {
            for (k, &o) in offsets.iter().enumerate() {
                local[k] = psi[base + o];
            }
            let hx = h * &local;
            for (k, &o) in offsets.iter().enumerate() {
                out[base + o] += hx[k];
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundReport {
    pub energy: f64,
    pub residual_norm: f64,
    /// `None` when the chain is too long to diagonalize densely.
    pub min_eigenvalue: Option<f64>,
    pub ground_dim: Option<usize>,
}

pub fn ground_check(h: &FullHamiltonian, psi: &FullState) -> Result<GroundReport> {
    if h.matrix.nrows() != psi.amplitudes.len() {
        return Err(Error::DimensionMismatch("Hamiltonian and state dimensions differ".into()));
    }
    let hpsi = &h.matrix * &psi.amplitudes;
    let ev = hermitian_eigenvalues(&h.matrix);
    Ok(GroundReport {
        energy: psi.amplitudes.dotc(&hpsi).re,
        residual_norm: hpsi.norm(),
        min_eigenvalue: Some(ev[0]),
        ground_dim: Some(ev.iter().filter(|&&l| l < GROUND_TOL).count()),
    })
}

/// Ground check that diagonalizes when the chain is short enough and falls
/// back to energy and residual otherwise.
pub fn ground_check_ring(ring: &RingHamiltonian, psi: &FullState) -> Result<GroundReport> {
    if ring.sites <= MAX_DENSE_SITES {
        return ground_check(&assemble(ring)?, psi);
    }
    let hpsi = apply(ring, &psi.amplitudes)?;
    Ok(GroundReport {
        energy: psi.amplitudes.dotc(&hpsi).re,
        residual_norm: hpsi.norm(),
        min_eigenvalue: None,
        ground_dim: None,
    })
}

/// Reduced state of `keep` (0-based sites, at most 3).
pub fn numeric_rdm(psi: &FullState, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() || keep.len() > 3 {
        return Err(Error::InvalidArgument(format!("keep set must hold 1 to 3 sites, got {}", keep.len())));
    }
    let dims = vec![3usize; psi.sites];
    let m = reduced_from_pure(&psi.amplitudes, &dims, keep)?;
    let split = if keep.len() == 2 { Some((3, 3)) } else { None };
    DensityMatrix::new(m, split)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub sites: usize,
    pub ground: GroundReport,
    pub energy_via_rdm: f64,
    pub rdm_pair_odd_residual: f64,
    pub rdm_pair_even_residual: f64,
    pub rdm_triple_residual: f64,
}

/// Tolerances applied by [`VerifyReport::passed`].
#[derive(Clone, Copy, Debug)]
pub struct VerifyTolerances {
    pub energy: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub rdm: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            energy: 1e-10,
            residual: 1e-8,
            min_eigenvalue: 1e-9,
            rdm: 1e-10,
        }
    }
}

impl VerifyReport {
    pub fn passed(&self, tol: &VerifyTolerances) -> bool {
        self.ground.energy.abs() < tol.energy
            && self.energy_via_rdm.abs() < tol.energy
            && self.ground.residual_norm < tol.residual
            && self.ground.min_eigenvalue.is_none_or(|l| l >= -tol.min_eigenvalue)
            && self.rdm_pair_odd_residual < tol.rdm
            && self.rdm_pair_even_residual < tol.rdm
            && self.rdm_triple_residual < tol.rdm
    }
}

/// Expands the paired state on `ring.sites` sites and checks it against the
/// ring Hamiltonian and the closed-form reduced states.
pub fn verify_ring(state: &PairedGlobalState, ring: &RingHamiltonian) -> Result<VerifyReport> {
    use crate::matcore::max_abs_diff;
    use crate::parenth::{energy_via_rdm, rdm_pair_even, rdm_pair_odd, rdm_triple};

    let psi = expand(state)?;
    let ground = ground_check_ring(ring, &psi)?;
    let odd = numeric_rdm(&psi, &[0, 1])?;
    let even = numeric_rdm(&psi, &[1, 2])?;
    let triple = numeric_rdm(&psi, &[0, 1, 2])?;
    Ok(VerifyReport {
        sites: ring.sites,
        ground,
        energy_via_rdm: energy_via_rdm(state, ring)?,
        rdm_pair_odd_residual: max_abs_diff(odd.matrix(), rdm_pair_odd(state)?.matrix()),
        rdm_pair_even_residual: max_abs_diff(even.matrix(), rdm_pair_even(state)?.matrix()),
        rdm_triple_residual: max_abs_diff(triple.matrix(), rdm_triple(state)?.matrix()),
    })
}
