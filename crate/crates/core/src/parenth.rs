//! Paired global states `sum_i sqrt(l_i) |v_i>^{(x) N}`, their reduced density
//! matrices, and 3-local parent Hamiltonians assembled from null vectors.

use std::io::{BufRead, Write};

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::families::{FamilyEval, FamilyId};
use crate::matcore::{
    c64, herm_eigen, C64, hermiticity_residual, identity, kron, orthonormality_residual, outer,
    partial_trace_matrix, trace, ComplexMatrix, ComplexVector, DensityMatrix, HERMITIAN_TOL,
};

/// Symbolic paired state on a closed chain of `2 * n_pairs` spin-1 sites.
#[derive(Clone, Debug)]
pub struct PairedGlobalState {
    pub n_pairs: usize,
    pub weights: Vec<f64>,
    pub pair_vectors: Vec<ComplexVector>,
}

impl PairedGlobalState {
    pub fn new(n_pairs: usize, weights: Vec<f64>, pair_vectors: Vec<ComplexVector>) -> Result<Self> {
        if n_pairs < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 pairs, got {n_pairs}")));
        }
        if weights.len() != pair_vectors.len() || weights.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} pair vectors",
                weights.len(),
                pair_vectors.len()
            )));
        }
        if pair_vectors.iter().any(|v| v.len() != 9) {
            return Err(Error::DimensionMismatch("pair vectors must be 9-dimensional".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() >= 1e-12 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument(format!("weights must be nonnegative and sum to 1 (sum = {total})")));
        }
        let ortho = orthonormality_residual(&pair_vectors);
        if ortho >= 1e-12 {
            return Err(Error::InvalidArgument(format!("pair vectors are not orthonormal ({ortho:.3e})")));
        }
        Ok(Self {
            n_pairs,
            weights,
            pair_vectors,
        })
    }

    pub fn sites(&self) -> usize {
        2 * self.n_pairs
    }

    /// `sqrt(l_i l_j) <v_j|v_i>^{N-2}`, the weight of `|v_i><v_j|` on two
    /// adjacent pairs after tracing out the rest of the chain.
    fn coherence(&self, i: usize, j: usize) -> C64 {
        let w = (self.weights[i] * self.weights[j]).sqrt();
        if self.n_pairs == 2 {
            c64(w)
        } else if i == j {
            c64(self.weights[i])
        } else {
            c64(0.0)
        }
    }

    fn two_pair_sum(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
        let k = self.weights.len();
        let mut out: Option<ComplexMatrix> = None;
        for i in 0..k {
            for j in 0..k {
                let c = self.coherence(i, j);
                if c == c64(0.0) {
                    continue;
                }
                let op = &self.pair_vectors[i] * self.pair_vectors[j].adjoint();
                let term = f(&op) * c;
                out = Some(match out {
                    Some(acc) => acc + term,
                    None => term,
                });
            }
        }
        out.expect("at least one weight")
    }
}

pub fn paired_state(fam: &FamilyEval, n_pairs: usize) -> Result<PairedGlobalState> {
    PairedGlobalState::new(n_pairs, fam.eigenvalues.clone(), fam.eigenvectors.clone())
}

fn keep_first(op: &ComplexMatrix) -> ComplexMatrix {
    partial_trace_matrix(op, &[3, 3], &[0]).expect("9x9 operator")
}

fn keep_second(op: &ComplexMatrix) -> ComplexMatrix {
    partial_trace_matrix(op, &[3, 3], &[1]).expect("9x9 operator")
}

/// State of sites (1, 2): `sum_i l_i |v_i><v_i|`.
pub fn rdm_pair_odd(state: &PairedGlobalState) -> Result<DensityMatrix> {
    let m = state
        .weights
        .iter()
        .zip(&state.pair_vectors)
        .fold(ComplexMatrix::zeros(9, 9), |acc, (&l, v)| acc + outer(v) * c64(l));
    DensityMatrix::new(m, Some((3, 3)))
}

/// State of sites (2, 3), straddling two pairs.
pub fn rdm_pair_even(state: &PairedGlobalState) -> Result<DensityMatrix> {
    let m = state.two_pair_sum(|op| kron(&keep_second(op), &keep_first(op)));
    DensityMatrix::new(m, Some((3, 3)))
}

/// State of sites (1, 2, 3).
pub fn rdm_triple(state: &PairedGlobalState) -> Result<DensityMatrix> {
    let m = state.two_pair_sum(|op| kron(op, &keep_first(op)));
    DensityMatrix::new(m, None)
}

/// `sum_j h_j |w_j><w_j|` acting on `arity` neighbouring sites.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub arity: usize,
    pub matrix: ComplexMatrix,
    pub generating_vectors: Vec<ComplexVector>,
    pub couplings: Vec<f64>,
}

fn arity_of(dim: usize) -> Result<usize> {
    let mut n = 1usize;
    let mut arity = 0usize;
    while n < dim {
        n *= 3;
        arity += 1;
    }
    if n != dim || arity == 0 {
        return Err(Error::DimensionMismatch(format!("dimension {dim} is not a power of 3")));
    }
    Ok(arity)
}

pub fn build_local_term(vectors: &[ComplexVector], couplings: &[f64]) -> Result<LocalTerm> {
    if vectors.is_empty() || vectors.len() != couplings.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vectors for {} couplings",
            vectors.len(),
            couplings.len()
        )));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch("generating vectors differ in dimension".into()));
    }
    if let Some((index, &value)) = couplings.iter().enumerate().find(|(_, h)| h.is_nan() || **h < 0.0) {
        return Err(Error::NegativeCoupling { index, value });
    }
    let arity = arity_of(dim)?;
    let matrix = vectors
        .iter()
        .zip(couplings)
        .fold(ComplexMatrix::zeros(dim, dim), |acc, (v, &h)| acc + outer(v) * c64(h));
    Ok(LocalTerm {
        arity,
        matrix,
        generating_vectors: vectors.to_vec(),
        couplings: couplings.to_vec(),
    })
}

impl LocalTerm {
    /// Decomposes a Hermitian PSD matrix into eigenprojectors.
    pub fn from_hermitian(matrix: ComplexMatrix) -> Result<Self> {
        let arity = arity_of(matrix.nrows())?;
        let (values, vectors) = herm_eigen(&matrix)?;
        let scale = values[0].abs().max(1.0);
        let min = *values.last().unwrap();
        if min < -1e-9 * scale {
            return Err(Error::NotPsd(min));
        }
        let (couplings, generating_vectors) = values
            .into_iter()
            .zip(vectors)
            .filter(|(l, _)| *l > 1e-12 * scale)
            .unzip();
        Ok(Self {
            arity,
            matrix,
            generating_vectors,
            couplings,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        crate::matcore::hermitian_eigenvalues(&self.matrix)[0]
    }
}

/// Local term with every coupling set to 1.
pub fn default_local_term(fam: &FamilyEval) -> Result<LocalTerm> {
    build_local_term(&fam.triple_null_selected, &vec![1.0; fam.triple_null_selected.len()])
}

/// Translation-invariant closed chain carrying one local term per odd anchor.
#[derive(Clone, Debug)]
pub struct RingHamiltonian {
    pub local: LocalTerm,
    pub sites: usize,
    /// 1-based odd anchor sites.
    pub anchors: Vec<usize>,
    pub periodic: bool,
}

impl RingHamiltonian {
    pub fn new(local: LocalTerm, sites: usize) -> Result<Self> {
        if !sites.is_multiple_of(2) || sites < 4 {
            return Err(Error::InvalidArgument(format!(
                "ring needs an even number of sites >= 4, got {sites}"
            )));
        }
        if local.arity > sites {
            return Err(Error::InvalidArgument(format!(
                "local term spans {} sites but the ring has {sites}",
                local.arity
            )));
        }
        Ok(Self {
            local,
            sites,
            anchors: (1..sites).step_by(2).collect(),
            periodic: true,
        })
    }

    /// 0-based sites covered by the term anchored at `anchor`.
    pub fn support(&self, anchor: usize) -> Vec<usize> {
        (0..self.local.arity).map(|k| (anchor - 1 + k) % self.sites).collect()
    }
}

/// `sum over anchors Tr[H_loc rho_{i,i+1,i+2}]`; every odd anchor sees the
/// same triple state.
pub fn energy_via_rdm(state: &PairedGlobalState, ring: &RingHamiltonian) -> Result<f64> {
    if ring.local.arity != 3 {
        return Err(Error::Unsupported(format!("local terms of arity {}", ring.local.arity)));
    }
    if ring.sites != state.sites() {
        return Err(Error::DimensionMismatch(format!(
            "ring has {} sites, state has {}",
            ring.sites,
            state.sites()
        )));
    }
    let rho = rdm_triple(state)?;
    Ok(ring.anchors.len() as f64 * trace(&(&ring.local.matrix * rho.matrix())).re)
}

/// Energy per anchor of the product state `|v>^{(x) N}`.
pub fn product_state_energy(local: &LocalTerm, v: &ComplexVector) -> f64 {
    let op = outer(v);
    let rho = kron(&op, &keep_first(&op));
    trace(&(&local.matrix * rho)).re
}

#[derive(Clone, Debug)]
pub struct SpinOps {
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
}

/// Spin-1 matrices in the `(|1>, |0>, |-1>)` basis.
pub fn spin1_operators() -> SpinOps {
    let r = std::f64::consts::SQRT_2;
    let mut sp = ComplexMatrix::zeros(3, 3);
    sp[(0, 1)] = c64(r);
    sp[(1, 2)] = c64(r);
    let sm = sp.adjoint();
    SpinOps {
        sx: (&sp + &sm) * c64(0.5),
        sy: (&sp - &sm) * Complex::new(0.0, -0.5),
        sz: ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c64(1.0), c64(0.0), c64(-1.0)])),
    }
}

struct TwoSite {
    ss: ComplexMatrix,
    zz: ComplexMatrix,
    z2: ComplexMatrix,
    sz: ComplexMatrix,
    sy2: ComplexMatrix,
    axy: ComplexMatrix,
    one: ComplexMatrix,
}

impl TwoSite {
    fn new() -> Self {
        let s = spin1_operators();
        let ss = kron(&s.sx, &s.sx) + kron(&s.sy, &s.sy) + kron(&s.sz, &s.sz);
        Self {
            zz: kron(&s.sz, &s.sz),
            z2: &s.sz * &s.sz,
            sy2: &s.sy * &s.sy,
            axy: &s.sx * &s.sy + &s.sy * &s.sx,
            sz: s.sz,
            one: identity(3),
            ss,
        }
    }

    fn two(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        kron(a, b)
    }

    fn anti(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        a * b + b * a
    }
}

/// The 27x27 local operator written in spin operators for families that have
/// a published closed form.
pub fn spin_form_hamiltonian(fam: FamilyId, a: f64) -> Result<LocalTerm> {
    let t = TwoSite::new();
    let two = TwoSite::two;
    let (bond, third) = match fam {
        FamilyId::Horodecki => {
            fam.eval(a)?;
            let g = ((1.0 - a) / (1.0 + a)).sqrt();
            let j1 = 4.0 * (g + 1.0);
            let j2 = 4.0 * (g - 1.0);
            let j3 = -g * (2.0 - g);
            let j4 = -g * (2.0 + g);
            let h = identity(9) * c64(8.0) + TwoSite::anti(&t.ss, &t.zz) * c64(4.0)
                - &t.ss * &t.ss * c64(4.0)
                - two(&t.z2, &t.one) * c64(j1)
                + two(&t.one, &t.z2) * c64(j2)
                + two(&t.z2, &t.sz) * c64(j3)
                + two(&t.sz, &t.z2) * c64(j4)
                + (two(&t.z2, &t.z2) - &t.zz) * c64(g * g)
                + (two(&t.one, &t.sz) + two(&t.sz, &t.one)) * c64(4.0 * g)
                + (two(&t.axy, &t.axy)
                    + (two(&(&t.z2 - &t.sz), &t.sy2) - two(&t.sy2, &(&t.z2 + &t.sz))) * c64(g))
                    * c64(4.0);
            (h, t.z2.clone())
        }
        FamilyId::Chi2a | FamilyId::Chi2b | FamilyId::Chi(_) => {
            let fe = fam.eval(a)?;
            let mu = fe.metadata["mu1"];
            let nu = fe.metadata["nu1"];
            let j1 = 2.0 * mu * nu;
            let j2 = -2.0 * (mu + nu).powi(2);
            let j3 = mu * mu - nu * nu;
            let h = (&t.ss + TwoSite::anti(&t.ss, &t.zz) - &t.zz) * c64(j1)
                + two(&t.z2, &t.z2) * c64(j2)
                + (two(&t.z2, &t.sz) - two(&t.sz, &t.z2) + two(&t.sz, &t.one) - two(&t.one, &t.sz)) * c64(j3)
                + two(&t.z2, &t.one)
                + two(&t.one, &t.z2);
            (h, &t.one - &t.z2)
        }
        FamilyId::Example3 => {
            fam.eval(a)?;
            if 1.0 + a == 0.0 {
                return Err(Error::Unsupported("spin form is singular at a = -1".into()));
            }
            let ap = 1.0 / (1.0 + a);
            if ap.abs() > 1.0 {
                return Err(Error::Unsupported(format!(
                    "spin form has complex couplings for a = {a} (|a'| > 1)"
                )));
            }
            let app = (1.0 - ap * ap).sqrt();
            let j1 = -4.0 * ap * app;
            let j2 = (ap + app).powi(2);
            let j3 = 2.0 * ap * ap - 1.0;
            let h = (identity(9) * c64(2.0) + TwoSite::anti(&t.ss, &t.zz)
                - &t.ss * &t.ss
                - two(&t.z2, &t.one)
                - two(&t.one, &t.z2)
                + two(&t.axy, &t.axy))
                * c64(j1)
                + (two(&t.z2, &t.z2) + &t.zz) * c64(j2)
                + (two(&t.z2, &t.sz) + two(&t.sz, &t.z2)) * c64(j3);
            (h, &t.one - &t.z2)
        }
    };
    let matrix = kron(&bond, &third);
    let herm = hermiticity_residual(&matrix);
    if herm >= HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    LocalTerm::from_hermitian(matrix)
}

/// Least-squares `c` minimizing `||h_spin - c h_proj||_F`, with the residual
/// relative to `||h_spin||_F`.
pub fn proportionality_check(h_spin: &LocalTerm, h_proj: &LocalTerm) -> Result<(f64, f64)> {
    if h_spin.matrix.shape() != h_proj.matrix.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            h_spin.matrix.shape(),
            h_proj.matrix.shape()
        )));
    }
    let pp = h_proj.matrix.norm_squared();
    if pp == 0.0 {
        return Err(Error::InvalidArgument("projector form is zero".into()));
    }
    let c = h_proj.matrix.dotc(&h_spin.matrix).re / pp;
    let diff = (&h_spin.matrix - &h_proj.matrix * c64(c)).norm();
    let scale = h_spin.matrix.norm();
    let residual = if scale > 0.0 { diff / scale } else { diff };
    Ok((c, residual))
}

/// Writes a matrix as `#` header lines, a `rows cols` line, then one line per
/// row of space-separated `re im` pairs.
pub fn write_local_term(
    out: &mut impl Write,
    term: &LocalTerm,
    header: &[(String, String)],
) -> Result<()> {
    writeln!(out, "# beqpt local term")?;
    for (k, v) in header {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "# arity: {}", term.arity)?;
    let couplings: Vec<String> = term.couplings.iter().map(|h| format!("{h:.16e}")).collect();
    writeln!(out, "# couplings: {}", couplings.join(" "))?;
    for (k, v) in term.generating_vectors.iter().enumerate() {
        writeln!(out, "# vector {k}: {}", complex_row(v.iter()))?;
    }
    let m = &term.matrix;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        writeln!(out, "{}", complex_row(m.row(r).iter()))?;
    }
    Ok(())
}

fn complex_row<'a>(entries: impl Iterator<Item = &'a Complex<f64>>) -> String {
    entries
        .map(|z| format!("{:.16e} {:.16e}", z.re, z.im))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Reads the matrix written by [`write_local_term`], ignoring header lines.
pub fn read_local_term(input: impl BufRead) -> Result<ComplexMatrix> {
    let mut lines = input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.starts_with('#') && !s.trim().is_empty()));
    let shape = lines
        .next()
        .ok_or_else(|| Error::Parse("missing shape line".into()))??;
    let dims: Vec<usize> = shape
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad shape `{shape}`"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("bad shape `{shape}`")));
    };
    let mut m = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing row {r}")))??;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad number `{t}` in row {r}"))))
            .collect::<Result<_>>()?;
        if vals.len() != 2 * cols {
            return Err(Error::Parse(format!("row {r} has {} numbers, expected {}", vals.len(), 2 * cols)));
        }
        for c in 0..cols {
            m[(r, c)] = Complex::new(vals[2 * c], vals[2 * c + 1]);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entmeasures::negativity;
    use crate::families::{example3_eval, horodecki_state};
    use crate::matcore::{herm_eigendecomp, max_abs_diff, span_projector, NULL_TOL};

    const MAIN: [FamilyId; 4] = [
        FamilyId::Horodecki,
        FamilyId::Chi2a,
        FamilyId::Chi2b,
        FamilyId::Example3,
    ];

    fn sample_points(f: FamilyId) -> Vec<f64> {
        let d = f.domain().unwrap();
        (0..7).map(|k| d.lo + (d.hi - d.lo) * (k as f64 + 0.5) / 7.0).collect()
    }

    #[test]
    fn spin_matrices_satisfy_algebra() {
        let s = spin1_operators();
        let i = Complex::new(0.0, 1.0);
        let comm = |a: &ComplexMatrix, b: &ComplexMatrix| a * b - b * a;
        assert!(max_abs_diff(&comm(&s.sx, &s.sy), &(&s.sz * i)) < 1e-14);
        assert!(max_abs_diff(&comm(&s.sy, &s.sz), &(&s.sx * i)) < 1e-14);
        assert!(max_abs_diff(&comm(&s.sz, &s.sx), &(&s.sy * i)) < 1e-14);
        let z2 = &s.sz * &s.sz;
        let diag = ComplexMatrix::from_diagonal(&crate::matcore::real_vector(&[1.0, 0.0, 1.0]));
        assert_eq!(z2, diag);
        let zero = ComplexMatrix::from_diagonal(&crate::matcore::real_vector(&[0.0, 1.0, 0.0]));
        assert_eq!(identity(3) - z2, zero);
    }

    #[test]
    fn pair_rdms_and_frustration_freeness() {
        for f in MAIN {
            for a in sample_points(f) {
                let fe = f.eval(a).unwrap();
                let state = paired_state(&fe, 3).unwrap();
                let odd = rdm_pair_odd(&state).unwrap();
                assert!(max_abs_diff(odd.matrix(), fe.rho_pair.matrix()) < 1e-12);
                let even = rdm_pair_even(&state).unwrap();
                assert!(negativity(&even).unwrap() < 1e-10, "{f} a={a}");
                let triple = rdm_triple(&state).unwrap();
                let local = default_local_term(&fe).unwrap();
                assert!(local.min_eigenvalue() >= -1e-12);
                let ring = RingHamiltonian::new(local.clone(), 6).unwrap();
                assert!(energy_via_rdm(&state, &ring).unwrap().abs() < 1e-10);
                for t in &fe.triple_null_selected {
                    assert!((triple.matrix() * t).norm() < 1e-10);
                }
                for v in &fe.eigenvectors {
                    assert!(product_state_energy(&local, v).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn triple_nullities() {
        let state = paired_state(&horodecki_state(0.3).unwrap(), 3).unwrap();
        let rho = rdm_triple(&state).unwrap();
        assert_eq!(herm_eigendecomp(&rho, NULL_TOL).unwrap().nullity(), 16);
        let fe = FamilyId::Chi2a.eval(0.2).unwrap();
        let rho = rdm_triple(&paired_state(&fe, 3).unwrap()).unwrap();
        assert_eq!(herm_eigendecomp(&rho, NULL_TOL).unwrap().nullity(), 13);
        let fe = example3_eval(0.5).unwrap();
        let rho = rdm_triple(&paired_state(&fe, 3).unwrap()).unwrap();
        assert_eq!(herm_eigendecomp(&rho, NULL_TOL).unwrap().nullity(), 15);
    }

    #[test]
    fn rank_one_family_point_is_a_product_state() {
        let state = paired_state(&horodecki_state(0.0).unwrap(), 4).unwrap();
        assert_eq!(state.weights, vec![1.0]);
        let even = rdm_pair_even(&state).unwrap();
        assert!((even.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_term_construction() {
        let v = crate::families::example3_u(0.4);
        let p = build_local_term(std::slice::from_ref(&v), &[1.0]).unwrap();
        assert!(max_abs_diff(&(&p.matrix * &p.matrix), &p.matrix) < 1e-14);
        assert_eq!(p.arity, 3);
        assert!(matches!(
            build_local_term(std::slice::from_ref(&v), &[-0.5]),
            Err(Error::NegativeCoupling { index: 0, .. })
        ));
        assert!(matches!(
            build_local_term(&[v, ComplexVector::zeros(9)], &[1.0, 1.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(build_local_term(&[ComplexVector::zeros(10)], &[1.0]).is_err());
    }

    #[test]
    fn ring_anchors_are_odd_sites() {
        let fe = horodecki_state(0.3).unwrap();
        let ring = RingHamiltonian::new(default_local_term(&fe).unwrap(), 4).unwrap();
        assert_eq!(ring.anchors, vec![1, 3]);
        assert_eq!(ring.support(3), vec![2, 3, 0]);
        assert!(RingHamiltonian::new(default_local_term(&fe).unwrap(), 5).is_err());
    }

    #[test]
    fn proportionality_trivial_cases() {
        let fe = horodecki_state(0.3).unwrap();
        let h = default_local_term(&fe).unwrap();
        let (c, r) = proportionality_check(&h, &h).unwrap();
        assert!((c - 1.0).abs() < 1e-14 && r < 1e-14);
        let double = build_local_term(&h.generating_vectors, &[2.0, 2.0]).unwrap();
        let (c, r) = proportionality_check(&double, &h).unwrap();
        assert!((c - 2.0).abs() < 1e-14 && r < 1e-14);
        let zero = LocalTerm {
            matrix: ComplexMatrix::zeros(27, 27),
            ..h.clone()
        };
        assert!(proportionality_check(&h, &zero).is_err());
    }

    #[test]
    fn horodecki_spin_form_is_a_multiple_of_the_projector_form() {
        for a in [0.1, 0.5, 0.9, 1.0] {
            let fe = horodecki_state(a).unwrap();
            let spin = spin_form_hamiltonian(FamilyId::Horodecki, a).unwrap();
            let (c, r) = proportionality_check(&spin, &default_local_term(&fe).unwrap()).unwrap();
            let g2 = (1.0 - a) / (1.0 + a);
            assert!((c - 4.0 * (2.0 + g2)).abs() < 1e-10, "a={a} c={c}");
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn chi_spin_forms_are_twice_the_projector_form() {
        for (f, a) in [(FamilyId::Chi2a, -0.2), (FamilyId::Chi2a, 0.3), (FamilyId::Chi2b, 0.5), (FamilyId::Chi2b, 5.0 / 6.0)] {
            let fe = f.eval(a).unwrap();
            let spin = spin_form_hamiltonian(f, a).unwrap();
            let (c, r) = proportionality_check(&spin, &default_local_term(&fe).unwrap()).unwrap();
            assert!((c - 2.0).abs() < 1e-10 && r < 1e-12, "{f} a={a}: c={c} r={r}");
        }
    }

    #[test]
    fn example3_spin_form_couplings_and_range() {
        let spin = spin_form_hamiltonian(FamilyId::Example3, 1.0).unwrap();
        // rank one; the published expression does not reproduce |U><U|
        assert_eq!(spin.couplings.len(), 1);
        let fe = example3_eval(1.0).unwrap();
        let (_, r) = proportionality_check(&spin, &default_local_term(&fe).unwrap()).unwrap();
        assert!(r > 1e-3);
        assert!(matches!(
            spin_form_hamiltonian(FamilyId::Example3, -0.5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn local_term_text_round_trip() {
        let fe = horodecki_state(0.3).unwrap();
        let h = default_local_term(&fe).unwrap();
        let mut buf = Vec::new();
        write_local_term(&mut buf, &h, &[("family".into(), "horodecki".into())]).unwrap();
        let back = read_local_term(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, h.matrix);
        assert!(read_local_term(std::io::Cursor::new("2 2\n1 0 0 0\n")).is_err());
    }

    #[test]
    fn numeric_and_selected_triple_null_spans_agree_on_selection() {
        let fe = horodecki_state(0.6).unwrap();
        let rho = rdm_triple(&paired_state(&fe, 3).unwrap()).unwrap();
        let null = herm_eigendecomp(&rho, NULL_TOL).unwrap().null_basis;
        let p_null = span_projector(&null, 1e-10);
        for t in &fe.triple_null_selected {
            assert!((&p_null * t - t).norm() < 1e-10);
        }
    }
}
