//! Bipartite entanglement criteria: negativity, realignment (CCNR), the
//! symmetric realignment criterion and a concurrence lower bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eigenvalues, kron, partial_trace_matrix, partial_transpose, realign,
    realign_matrix, trace_norm, DensityMatrix,
};

/// Default tolerance on the smallest eigenvalue of the partial transpose.
pub const PPT_TOL: f64 = 1e-10;

const CLAMP_TOL: f64 = 1e-12;

fn clamp_tiny(x: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// `(||rho^{T_A}||_1 - 1) / 2` without clamping.
pub fn negativity_raw(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho)?;
    let norm: f64 = hermitian_eigenvalues(&pt).iter().map(|l| l.abs()).sum();
    Ok((norm - 1.0) / 2.0)
}

pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    negativity_raw(rho).map(clamp_tiny)
}

/// `N_R = (||rho^R||_1 - 1) / 2`; positive values witness entanglement.
pub fn realignment_measure(rho: &DensityMatrix) -> Result<f64> {
    Ok((trace_norm(&realign(rho)?) - 1.0) / 2.0)
}

/// `||(rho - rho_A (x) rho_B)^R||_1 - sqrt((1 - Tr rho_A^2)(1 - Tr rho_B^2))`.
pub fn n_sr(rho: &DensityMatrix) -> Result<f64> {
    let (da, db) = rho.require_split()?;
    let m = rho.matrix();
    let rho_a = partial_trace_matrix(m, &[da, db], &[0])?;
    let rho_b = partial_trace_matrix(m, &[da, db], &[1])?;
    let diff = m - kron(&rho_a, &rho_b);
    let purity_a = (&rho_a * &rho_a).trace().re;
    let purity_b = (&rho_b * &rho_b).trace().re;
    let mixedness = ((1.0 - purity_a) * (1.0 - purity_b)).max(0.0).sqrt();
    Ok(trace_norm(&realign_matrix(&diff, da, db)) - mixedness)
}

/// `c_M = sqrt(2 / (M (M - 1)))`.
pub fn concurrence_prefactor(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "concurrence bound needs min(dA, dB) >= 2, got {m}"
        )));
    }
    Ok((2.0 / (m * (m - 1)) as f64).sqrt())
}

/// `max(0, 2 c_M max(N, N_R))` with `M = min(dA, dB)`.
pub fn concurrence_lower_bound(rho: &DensityMatrix) -> Result<f64> {
    let (da, db) = rho.require_split()?;
    let c = concurrence_prefactor(da.min(db))?;
    let best = negativity(rho)?.max(realignment_measure(rho)?);
    Ok((2.0 * c * best).max(0.0))
}

pub fn is_ppt(rho: &DensityMatrix, tol: f64) -> Result<bool> {
    let pt = partial_transpose(rho)?;
    Ok(hermitian_eigenvalues(&pt)[0] >= -tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    pub negativity: f64,
    pub n_r: f64,
    pub n_sr: f64,
    pub concurrence_lb: f64,
    pub is_ppt: bool,
}

impl MeasureReport {
    pub fn compute(rho: &DensityMatrix, ppt_tol: f64) -> Result<Self> {
        Ok(Self {
            negativity: negativity_raw(rho)?,
            n_r: realignment_measure(rho)?,
            n_sr: n_sr(rho)?,
            concurrence_lb: concurrence_lower_bound(rho)?,
            is_ppt: is_ppt(rho, ppt_tol)?,
        })
    }

    /// Copy with values in `[-1e-12, 0)` shown as zero.
    pub fn clamped(&self) -> Self {
        Self {
            negativity: clamp_tiny(self.negativity),
            n_r: clamp_tiny(self.n_r),
            n_sr: clamp_tiny(self.n_sr),
            ..self.clone()
        }
    }
}

/// Upper cap `sqrt(2 (M - 1) / M)` on the concurrence of an M-level system.
pub fn concurrence_cap(m: usize) -> f64 {
    (2.0 * (m as f64 - 1.0) / m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{c64, outer, real_vector, ComplexMatrix, ComplexVector};
    use nalgebra::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phi_plus() -> DensityMatrix {
        let v = real_vector(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        DensityMatrix::from_pure(&v, Some((3, 3))).unwrap()
    }

    fn product() -> DensityMatrix {
        let mut v = ComplexVector::zeros(9);
        v[4] = c64(1.0);
        DensityMatrix::from_pure(&v, Some((3, 3))).unwrap()
    }

    fn random_pure(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let v = ComplexVector::from_fn(d, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        outer(&(&v / c64(v.norm())))
    }

    #[test]
    fn product_state_measures() {
        let r = MeasureReport::compute(&product(), PPT_TOL).unwrap();
        assert!(r.negativity.abs() < 1e-12);
        assert!(r.n_r.abs() < 1e-12);
        assert_eq!(r.concurrence_lb, 0.0);
        assert!(r.is_ppt);
    }

    #[test]
    fn maximally_entangled_measures() {
        let rho = phi_plus();
        assert!((negativity(&rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((realignment_measure(&rho).unwrap() - 1.0).abs() < 1e-12);
        assert!(n_sr(&rho).unwrap() > 0.0);
        assert!((concurrence_lower_bound(&rho).unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(!is_ppt(&rho, PPT_TOL).unwrap());
    }

    #[test]
    fn maximally_mixed_n_sr() {
        // rho - rho_A (x) rho_B vanishes and Tr rho_A^2 = 1/3
        let rho = DensityMatrix::maximally_mixed(9, Some((3, 3))).unwrap();
        assert!((n_sr(&rho).unwrap() + 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn prefactor_for_qutrits() {
        assert!((concurrence_prefactor(3).unwrap() - 0.577_350_269_189_625_8).abs() < 1e-15);
        assert!(concurrence_prefactor(1).is_err());
    }

    #[test]
    fn qubit_qutrit_bound_rejects_trivial_side() {
        let rho = DensityMatrix::maximally_mixed(3, Some((1, 3))).unwrap();
        assert!(matches!(
            concurrence_lower_bound(&rho),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn missing_split_is_an_error() {
        let rho = DensityMatrix::maximally_mixed(9, None).unwrap();
        assert!(matches!(negativity(&rho), Err(Error::MissingSplit)));
        assert!(matches!(n_sr(&rho), Err(Error::MissingSplit)));
    }

    #[test]
    fn separable_mixtures_pass_every_criterion() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let terms = rng.random_range(1..6);
            let mut m = ComplexMatrix::zeros(9, 9);
            let mut total = 0.0;
            for _ in 0..terms {
                let w: f64 = rng.random_range(0.05..1.0);
                total += w;
                m += kron(&random_pure(3, &mut rng), &random_pure(3, &mut rng)) * c64(w);
            }
            let rho = DensityMatrix::new(m / c64(total), Some((3, 3))).unwrap();
            assert!(negativity(&rho).unwrap() < 1e-10);
            assert!(n_sr(&rho).unwrap() <= 1e-10);
            assert!(realignment_measure(&rho).unwrap() <= 1e-10);
            assert!(is_ppt(&rho, PPT_TOL).unwrap());
        }
    }

    #[test]
    fn concurrence_bound_below_cap_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let rho = DensityMatrix::new(random_pure(9, &mut rng), Some((3, 3))).unwrap();
            assert!(concurrence_lower_bound(&rho).unwrap() <= concurrence_cap(3) + 1e-10);
            let neg = negativity(&rho).unwrap();
            assert_eq!(neg == 0.0, is_ppt(&rho, PPT_TOL).unwrap());
        }
    }
}
