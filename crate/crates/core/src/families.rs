//! Parameterized two-qutrit state families with closed-form eigensystems,
//! pair null vectors and the triple null vectors used for local terms.
//!
//! Spin-1 labels map to basis indices as `|1> -> 0`, `|0> -> 1`, `|-1> -> 2`,
//! and a pair `|ij>` sits at index `3i + j`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{
    basis_vector, c64, identity, kron, kron_vec, max_abs_diff, normalized, outer,
    partial_transpose_matrix, real_vector, ComplexMatrix, ComplexVector, DensityMatrix,
};

/// Label `|1>`.
pub const UP: usize = 0;
/// Label `|0>`.
pub const ZERO: usize = 1;
/// Label `|-1>`.
pub const DOWN: usize = 2;

pub const EXAMPLE2A_P: f64 = 0.75;
pub const EXAMPLE2B_P: f64 = 0.76027256;

const fn pair(i: usize, j: usize) -> usize {
    3 * i + j
}

/// Sign with `sgn(0) = +1`.
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn site(label: usize) -> ComplexVector {
    basis_vector(3, label)
}

fn ket(i: usize, j: usize) -> ComplexVector {
    basis_vector(9, pair(i, j))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, a: f64) -> bool {
        a >= self.lo - 1e-12 && a <= self.hi + 1e-12
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Parameters of the modified chi family; `a` is the default parameter value
/// when the family is evaluated through its id.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiParams {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub p: f64,
    pub branch: Branch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FamilyId {
    Horodecki,
    Chi2a,
    Chi2b,
    Example3,
    Chi(ChiParams),
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyId::Horodecki => f.write_str("horodecki"),
            FamilyId::Chi2a => f.write_str("chi2a"),
            FamilyId::Chi2b => f.write_str("chi2b"),
            FamilyId::Example3 => f.write_str("example3"),
            FamilyId::Chi(c) => {
                let q = match c.branch {
                    Branch::Plus => '+',
                    Branch::Minus => '-',
                };
                write!(f, "chi:{},{},{},{},{}", c.alpha, c.beta, c.a, c.p, q)
            }
        }
    }
}

impl FromStr for FamilyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horodecki" => return Ok(FamilyId::Horodecki),
            "chi2a" => return Ok(FamilyId::Chi2a),
            "chi2b" => return Ok(FamilyId::Chi2b),
            "example3" => return Ok(FamilyId::Example3),
            _ => {}
        }
        let body = s.strip_prefix("chi:").ok_or_else(|| {
            Error::Parse(format!(
                "unknown family `{s}` (expected horodecki, chi2a, chi2b, example3 or chi:<alpha>,<beta>,<a>,<p>,<q+|q->)"
            ))
        })?;
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!(
                "raw chi family needs 5 comma-separated fields, got {}",
                parts.len()
            )));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{t}` is not a number")))
        };
        let branch = match parts[4] {
            "+" | "q+" | "plus" => Branch::Plus,
            "-" | "q-" | "minus" => Branch::Minus,
            other => return Err(Error::Parse(format!("bad q branch `{other}`"))),
        };
        Ok(FamilyId::Chi(ChiParams {
            alpha: num(parts[0])?,
            beta: num(parts[1])?,
            a: num(parts[2])?,
            p: num(parts[3])?,
            branch,
        }))
    }
}

/// Eigenvalues and analytic eigenvectors of a family member, including
/// zero-weight pairs.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
}

/// One parameter point of a family.
#[derive(Clone, Debug)]
pub struct FamilyEval {
    pub family: FamilyId,
    pub a: f64,
    pub rho_pair: DensityMatrix,
    /// Strictly positive eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Analytic eigenvectors in the gauge used by the fidelity.
    pub eigenvectors: Vec<ComplexVector>,
    pub pair_null: Vec<ComplexVector>,
    /// 27-dimensional null vectors of the triple state used for the local term.
    pub triple_null_selected: Vec<ComplexVector>,
    pub domain: Option<Domain>,
    pub metadata: BTreeMap<String, f64>,
}

impl FamilyEval {
    pub fn reconstruction(&self) -> ComplexMatrix {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .fold(ComplexMatrix::zeros(9, 9), |acc, (&l, v)| acc + outer(v) * c64(l))
    }

    pub fn reconstruction_residual(&self) -> f64 {
        max_abs_diff(&self.reconstruction(), self.rho_pair.matrix())
    }

    pub fn pair_null_residual(&self) -> f64 {
        self.pair_null
            .iter()
            .map(|w| (self.rho_pair.matrix() * w).norm())
            .fold(0.0, f64::max)
    }
}

impl FamilyId {
    /// Certified parameter interval (`None` for raw chi parameters, which are
    /// checked point by point).
    pub fn domain(&self) -> Option<Domain> {
        match self {
            FamilyId::Horodecki => Some(Domain::new(0.0, 1.0)),
            FamilyId::Chi2a => Some(*certified(&CHI2A_DOMAIN, Domain::new(-1.0, 1.0), 0.0, |a| {
                example2a_eval(a).is_ok()
            })),
            FamilyId::Chi2b => Some(*certified(&CHI2B_DOMAIN, Domain::new(-0.5, 1.5), 0.5, |a| {
                example2b_eval(a).is_ok()
            })),
            FamilyId::Example3 => Some(*certified(
                &EXAMPLE3_DOMAIN,
                Domain::new(-2.5, 1.5),
                -1.0,
                |a| example3_eval(a).is_ok(),
            )),
            FamilyId::Chi(_) => None,
        }
    }

    /// Interval on which `spectrum` is defined. For the Horodecki family this
    /// extends past `a = 1` by analytic continuation of the eigensystem.
    pub fn spectrum_domain(&self) -> Option<Domain> {
        match self {
            FamilyId::Horodecki => Some(Domain::new(0.0, 2.0)),
            other => other.domain(),
        }
    }

    fn check(&self, a: f64, domain: Option<Domain>) -> Result<()> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("parameter a = {a} is not finite")));
        }
        match domain {
            Some(d) if !d.contains(a) => Err(Error::Domain {
                family: self.to_string(),
                a,
                domain: d.to_string(),
            }),
            _ => Ok(()),
        }
    }

    pub fn spectrum(&self, a: f64) -> Result<Spectrum> {
        self.check(a, self.spectrum_domain())?;
        match self {
            FamilyId::Horodecki => Ok(horodecki_spectrum(a)),
            FamilyId::Example3 => Ok(example3_spectrum(a)),
            _ => {
                let (alpha, beta, p, branch) = self.chi_params(a);
                let parts = chi_parts(alpha, beta, a, p, branch).map_err(|e| self.pointwise(a, e))?;
                Ok(parts.spectrum)
            }
        }
    }

    pub fn eval(&self, a: f64) -> Result<FamilyEval> {
        self.check(a, self.domain())?;
        let mut fe = match self {
            FamilyId::Horodecki => horodecki_state(a)?,
            FamilyId::Example3 => example3_build(a)?,
            _ => {
                let (alpha, beta, p, branch) = self.chi_params(a);
                modified_chi_eval(alpha, beta, a, p, branch).map_err(|e| self.pointwise(a, e))?
            }
        };
        fe.family = *self;
        fe.domain = self.domain();
        Ok(fe)
    }

    fn pointwise(&self, a: f64, e: Error) -> Error {
        match self {
            FamilyId::Chi(_) => Error::Domain {
                family: self.to_string(),
                a,
                domain: format!("(no valid state: {e})"),
            },
            _ => e,
        }
    }

    /// `(alpha, beta, p, branch)` of the chi-based families at parameter `a`.
    fn chi_params(&self, a: f64) -> (f64, f64, f64, Branch) {
        match self {
            FamilyId::Chi2a => ((1.0 + a) / 6.0, (-5.0 + 7.0 * a) / 21.0, EXAMPLE2A_P, Branch::Plus),
            FamilyId::Chi2b => ((-1.0 + 3.0 * a) / 6.0, (1.0 + 3.0 * a) / 7.0, EXAMPLE2B_P, Branch::Minus),
            FamilyId::Chi(c) => (c.alpha, c.beta, c.p, c.branch),
            _ => unreachable!("not a chi family"),
        }
    }
}

static CHI2A_DOMAIN: OnceLock<Domain> = OnceLock::new();
static CHI2B_DOMAIN: OnceLock<Domain> = OnceLock::new();
static EXAMPLE3_DOMAIN: OnceLock<Domain> = OnceLock::new();

const CERTIFY_POINTS: usize = 4001;

/// Largest contiguous run of valid grid points of `window` containing `anchor`.
fn certified(
    cell: &'static OnceLock<Domain>,
    window: Domain,
    anchor: f64,
    valid: impl Fn(f64) -> bool,
) -> &'static Domain {
    cell.get_or_init(|| certify(window, anchor, valid))
}

fn certify(window: Domain, anchor: f64, valid: impl Fn(f64) -> bool) -> Domain {
    let step = (window.hi - window.lo) / (CERTIFY_POINTS - 1) as f64;
    let at = |k: usize| window.lo + k as f64 * step;
    let k0 = ((anchor - window.lo) / step).round() as usize;
    assert!(valid(at(k0)), "anchor {anchor} of a certified domain is not a valid state");
    let mut lo = k0;
    while lo > 0 && valid(at(lo - 1)) {
        lo -= 1;
    }
    let mut hi = k0;
    while hi + 1 < CERTIFY_POINTS && valid(at(hi + 1)) {
        hi += 1;
    }
    Domain::new(at(lo), at(hi))
}

fn finalize(
    a: f64,
    rho: ComplexMatrix,
    spectrum: Spectrum,
    pair_null: Vec<ComplexVector>,
    triple_null_selected: Vec<ComplexVector>,
    metadata: BTreeMap<String, f64>,
) -> Result<FamilyEval> {
    let rho_pair = DensityMatrix::new(rho, Some((3, 3)))?;
    let (eigenvalues, eigenvectors) = spectrum
        .eigenvalues
        .into_iter()
        .zip(spectrum.eigenvectors)
        .filter(|(l, _)| *l > 0.0)
        .unzip();
    Ok(FamilyEval {
        family: FamilyId::Horodecki,
        a,
        rho_pair,
        eigenvalues,
        eigenvectors,
        pair_null,
        triple_null_selected,
        domain: None,
        metadata,
    })
}

// ---------------------------------------------------------------------------
// Example I

pub fn horodecki_matrix(a: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(9, 9);
    for i in [0, 4, 8] {
        for j in [0, 4, 8] {
            m[(i, j)] = c64(a);
        }
    }
    for i in [1, 2, 3, 5, 7] {
        m[(i, i)] = c64(a);
    }
    let s = (1.0 - a * a).max(0.0).sqrt() / 2.0;
    m[(6, 6)] = c64((1.0 + a) / 2.0);
    m[(8, 8)] = c64((1.0 + a) / 2.0);
    m[(6, 8)] = c64(s);
    m[(8, 6)] = c64(s);
    m / c64(1.0 + 8.0 * a)
}

struct HorodeckiConstants {
    s: f64,
    delta_plus: f64,
    delta_minus: f64,
    gamma_plus: f64,
    gamma_minus: f64,
}

impl HorodeckiConstants {
    fn new(a: f64) -> Self {
        let s = (1.0 - 4.0 * a + 7.0 * a * a).sqrt();
        let b = 1.0 - 3.0 * a;
        // delta_+ delta_- = 2a(1-a), gamma_+ gamma_- = (1-a)(1-3a)
        let (delta_plus, delta_minus) = if b >= 0.0 {
            let dp = s + b;
            (dp, 2.0 * a * (1.0 - a) / dp)
        } else {
            let dm = s - b;
            (2.0 * a * (1.0 - a) / dm, dm)
        };
        let gamma_plus = s + 2.0 * a;
        let gamma_minus = (1.0 - a) * (1.0 - 3.0 * a) / gamma_plus;
        Self {
            s,
            delta_plus,
            delta_minus,
            gamma_plus,
            gamma_minus,
        }
    }
}

/// Eigensystem on `[0, 2]`. Past `a = 1` the square roots are continued to
/// the principal complex branch and the two entangled eigenvectors are
/// normalized by their bilinear norm.
fn horodecki_spectrum(a: f64) -> Spectrum {
    let k = HorodeckiConstants::new(a);
    let den = 1.0 + 8.0 * a;
    let small = a / den;
    let l6 = (1.0 + 3.0 * a - k.s) / (2.0 * den);
    let l7 = (1.0 + 3.0 * a + k.s) / (2.0 * den);
    let root = Complex::new((1.0 - a) * (1.0 + a), 0.0).sqrt();

    let build = |delta: f64, mid: Complex<f64>, gamma: f64| {
        let mut v = ComplexVector::zeros(9);
        v[pair(UP, UP)] = c64(delta);
        v[pair(ZERO, ZERO)] = c64(delta);
        v[pair(DOWN, UP)] = mid;
        v[pair(DOWN, DOWN)] = c64(gamma);
        let z = Complex::new((1.0 - a) * (1.0 + a) + 2.0 * delta * delta + gamma * gamma, 0.0);
        v * (c64(sgn(gamma)) / z.sqrt())
    };
    let v6 = if a == 1.0 {
        ket(DOWN, UP)
    } else {
        build(k.delta_plus, -root, k.gamma_minus)
    };
    let v7 = build(k.delta_minus, root, k.gamma_plus);

    let mut eigenvectors: Vec<ComplexVector> = [
        pair(UP, ZERO),
        pair(UP, DOWN),
        pair(ZERO, UP),
        pair(ZERO, DOWN),
        pair(DOWN, ZERO),
    ]
    .into_iter()
    .map(|i| basis_vector(9, i))
    .collect();
    eigenvectors.push(v6);
    eigenvectors.push(v7);
    Spectrum {
        eigenvalues: vec![small, small, small, small, small, l6, l7],
        eigenvectors,
    }
}

pub fn horodecki_state(a: f64) -> Result<FamilyEval> {
    FamilyId::Horodecki.check(a, FamilyId::Horodecki.domain())?;
    let k = HorodeckiConstants::new(a);
    let g = ((1.0 - a) / (1.0 + a)).sqrt();
    let g1 = -2.0 / (3.0 + a);
    let g2 = (1.0 - a * a).max(0.0).sqrt() / (3.0 + a);

    let w1 = normalized(&(ket(UP, UP) + ket(DOWN, UP) * c64(g) - ket(DOWN, DOWN)));
    let w2 = normalized(
        &(ket(UP, UP) * c64(g1) + ket(ZERO, ZERO) + ket(DOWN, UP) * c64(g2)
            - ket(DOWN, DOWN) * c64(1.0 + g1)),
    );
    let triple = vec![kron_vec(&w1, &site(UP)), kron_vec(&w1, &site(DOWN))];

    let z6 = (1.0 - a * a) + 2.0 * k.delta_plus.powi(2) + k.gamma_minus.powi(2);
    let z7 = (1.0 - a * a) + 2.0 * k.delta_minus.powi(2) + k.gamma_plus.powi(2);
    let metadata = BTreeMap::from([
        ("g".to_string(), g),
        ("g_prime".to_string(), g1),
        ("g_double_prime".to_string(), g2),
        ("delta_plus".to_string(), k.delta_plus),
        ("delta_minus".to_string(), k.delta_minus),
        ("gamma_plus".to_string(), k.gamma_plus),
        ("gamma_minus".to_string(), k.gamma_minus),
        ("z6".to_string(), z6),
        ("z7".to_string(), z7),
    ]);
    let mut fe = finalize(a, horodecki_matrix(a), horodecki_spectrum(a), vec![w1, w2], triple, metadata)?;
    fe.domain = FamilyId::Horodecki.domain();
    Ok(fe)
}

// ---------------------------------------------------------------------------
// Example II

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedPauli {
    pub m: usize,
    pub m_prime: usize,
    pub matrix: ComplexMatrix,
}

/// `U_{mm'} = sum_k w^{mk} |k><(m' + k) mod 3|` with `w = exp(2 pi i / 3)`.
pub fn gen_pauli(m: usize, m_prime: usize) -> Result<GeneralizedPauli> {
    if m > 2 || m_prime > 2 {
        return Err(Error::InvalidArgument(format!(
            "generalized Pauli indices must lie in 0..=2, got ({m}, {m_prime})"
        )));
    }
    let mut u = ComplexMatrix::zeros(3, 3);
    for k in 0..3 {
        u[(k, (m_prime + k) % 3)] = Complex::from_polar(1.0, 2.0 * PI * (m * k) as f64 / 3.0);
    }
    Ok(GeneralizedPauli { m, m_prime, matrix: u })
}

pub fn phi_plus() -> ComplexVector {
    real_vector(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]) / c64(3f64.sqrt())
}

fn bell_vector(m: usize, m_prime: usize) -> Result<ComplexVector> {
    let u = gen_pauli(m, m_prime)?.matrix;
    Ok(kron(&u, &identity(3)) * phi_plus())
}

/// `P_{mm'} = (U_{mm'} (x) 1) |Phi+><Phi+| (U_{mm'}^dag (x) 1)`.
pub fn bell_projector(m: usize, m_prime: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(outer(&bell_vector(m, m_prime)?), Some((3, 3)))
}

/// The chi matrix without a positivity check.
pub fn chi_matrix(alpha: f64, beta: f64, a: f64) -> ComplexMatrix {
    let p = |m, mp| outer(&bell_vector(m, mp).expect("indices in range"));
    identity(9) * c64((1.0 - alpha - beta - a) / 9.0)
        + p(0, 0) * c64(alpha)
        + (p(1, 0) + p(2, 0)) * c64(beta / 2.0)
        + (p(0, 1) + p(1, 1) + p(2, 1)) * c64(a / 3.0)
}

pub fn chi_state(alpha: f64, beta: f64, a: f64) -> Result<DensityMatrix> {
    DensityMatrix::new(chi_matrix(alpha, beta, a), Some((3, 3)))
}

/// `sgn(d) (n|x> + d|y>) / sqrt(n^2 + d^2)` with `n = sa*a + sr*r`, written so
/// that neither `n -> 0` cancellation nor `d -> 0` loses precision.
fn chi_pair_vector(sa: f64, sr: f64, a: f64, r: f64, d: f64, x: usize, y: usize) -> Result<ComplexVector> {
    let mut v = ComplexVector::zeros(9);
    if sa * a * sr < 0.0 {
        // n = -d^2 / m
        let m = sa * a - sr * r;
        let t = d / m;
        let norm = (1.0 + t * t).sqrt();
        v[x] = c64(-t / norm);
        v[y] = c64(1.0 / norm);
    } else {
        let n = sa * a + sr * r;
        let h = n.hypot(d);
        if h == 0.0 {
            return Err(Error::InvalidArgument(
                "chi eigenvectors are undefined at a = 0 with 2 alpha = beta".into(),
            ));
        }
        let s = sgn(d);
        v[x] = c64(s * n / h);
        v[y] = c64(s * d / h);
    }
    Ok(v)
}

struct ChiParts {
    spectrum: Spectrum,
    null_set: Vec<ComplexVector>,
    q: f64,
    r: f64,
}

const V1_SLOTS: (usize, usize) = (pair(UP, ZERO), pair(ZERO, UP));
const V2_SLOTS: (usize, usize) = (pair(UP, DOWN), pair(DOWN, UP));
const V3_SLOTS: (usize, usize) = (pair(ZERO, DOWN), pair(DOWN, ZERO));

/// The three branch-dependent vectors; `sr = +br` gives the set carrying
/// nonzero weight, `sr = -br` the null set.
fn chi_vector_set(a: f64, r: f64, d: f64, sr: f64) -> Result<Vec<ComplexVector>> {
    Ok(vec![
        chi_pair_vector(1.0, sr, a, r, d, V1_SLOTS.0, V1_SLOTS.1)?,
        chi_pair_vector(-1.0, sr, a, r, d, V2_SLOTS.0, V2_SLOTS.1)?,
        chi_pair_vector(1.0, sr, a, r, d, V3_SLOTS.0, V3_SLOTS.1)?,
    ])
}

fn chi_parts(alpha: f64, beta: f64, a: f64, p: f64, branch: Branch) -> Result<ChiParts> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (0, 1)")));
    }
    let br = branch.sign();
    let r = ((beta - 2.0 * alpha).powi(2) + a * a).sqrt();
    let d = 2.0 * alpha - beta;
    let denom = 2.0 * alpha + 2.0 * beta - a + br * 3.0 * r;
    if denom == 0.0 {
        return Err(Error::InvalidArgument("q diverges for these parameters".into()));
    }
    let q = 2.0 / denom;
    let s = alpha + beta;
    let l_nz = p * (q * (a - 2.0 * s) + 2.0 + 3.0 * q.abs() * r) / 18.0;
    let l4 = ((2.0 * q * s - q * a - 8.0) * p + 9.0) / 9.0;
    let l5 = p * (2.0 * q * s - q * a + 1.0) / 9.0;
    if !(l_nz > 0.0 && l4 > 0.0 && l5 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "nonzero eigenvalues must stay positive (lambda_1 = {l_nz:.3e}, lambda_4 = {l4:.3e}, lambda_5 = {l5:.3e})"
        )));
    }
    let mut eigenvectors = chi_vector_set(a, r, d, br)?;
    let null_set = chi_vector_set(a, r, d, -br)?;
    eigenvectors.push(real_vector(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]) / c64(3f64.sqrt()));
    eigenvectors.push(real_vector(&[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]) / c64(2f64.sqrt()));
    eigenvectors.push(real_vector(&[-1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0]) / c64(6f64.sqrt()));
    Ok(ChiParts {
        spectrum: Spectrum {
            eigenvalues: vec![l_nz, l_nz, l_nz, l4, l5, l5],
            eigenvectors,
        },
        null_set,
        q,
        r,
    })
}

/// `p [q chi^{T_A} + (1 - q)/9] + (1 - p) |Phi+><Phi+|`.
pub fn modified_chi_matrix(alpha: f64, beta: f64, a: f64, p: f64, q: f64) -> ComplexMatrix {
    let chi_pt = partial_transpose_matrix(&chi_matrix(alpha, beta, a), 3, 3);
    (chi_pt * c64(q) + identity(9) * c64((1.0 - q) / 9.0)) * c64(p) + outer(&phi_plus()) * c64(1.0 - p)
}

/// `b_1^{+-} = [a -+ sgn(q) R] / (2 alpha - beta)`, read literally.
pub fn literal_b1(alpha: f64, beta: f64, a: f64, q: f64, label: Branch) -> f64 {
    let r = ((beta - 2.0 * alpha).powi(2) + a * a).sqrt();
    (a - label.sign() * sgn(q) * r) / (2.0 * alpha - beta)
}

pub fn modified_chi_eval(alpha: f64, beta: f64, a: f64, p: f64, branch: Branch) -> Result<FamilyEval> {
    let parts = chi_parts(alpha, beta, a, p, branch)?;
    let rho = modified_chi_matrix(alpha, beta, a, p, parts.q);
    let zero = site(ZERO);
    let triple = vec![
        kron_vec(&parts.null_set[0], &zero),
        kron_vec(&parts.null_set[2], &zero),
    ];
    let null_v1 = &parts.null_set[0];
    let mut metadata = BTreeMap::from([
        ("alpha".to_string(), alpha),
        ("beta".to_string(), beta),
        ("p".to_string(), p),
        ("q".to_string(), parts.q),
        ("r".to_string(), parts.r),
        ("branch".to_string(), branch.sign()),
        ("mu1".to_string(), null_v1[V1_SLOTS.0].re),
        ("nu1".to_string(), null_v1[V1_SLOTS.1].re),
    ]);
    for (name, label) in [("plus", Branch::Plus), ("minus", Branch::Minus)] {
        let b1 = literal_b1(alpha, beta, a, parts.q, label);
        let b2 = literal_b1(alpha, beta, -a, parts.q, label);
        if b1.is_finite() {
            metadata.insert(format!("b1_{name}"), b1);
        }
        if b2.is_finite() {
            metadata.insert(format!("b2_{name}"), b2);
        }
    }
    let params = ChiParams {
        alpha,
        beta,
        a,
        p,
        branch,
    };
    let mut fe = finalize(a, rho, parts.spectrum, parts.null_set, triple, metadata)?;
    fe.family = FamilyId::Chi(params);
    Ok(fe)
}

pub fn example2a_eval(a: f64) -> Result<FamilyEval> {
    let (alpha, beta, p, branch) = FamilyId::Chi2a.chi_params(a);
    let mut fe = modified_chi_eval(alpha, beta, a, p, branch)?;
    fe.family = FamilyId::Chi2a;
    Ok(fe)
}

pub fn example2b_eval(a: f64) -> Result<FamilyEval> {
    let (alpha, beta, p, branch) = FamilyId::Chi2b.chi_params(a);
    let mut fe = modified_chi_eval(alpha, beta, a, p, branch)?;
    fe.family = FamilyId::Chi2b;
    Ok(fe)
}

// ---------------------------------------------------------------------------
// Example III

struct Example3Constants {
    g: f64,
    b: f64,
}

impl Example3Constants {
    fn new(a: f64) -> Self {
        let g = 1.0 + a + a * a;
        Self {
            g,
            b: (a + g + 1.0).sqrt(),
        }
    }
}

pub fn example3_matrix(a: f64) -> ComplexMatrix {
    let Example3Constants { g, b } = Example3Constants::new(a);
    let b2 = b * b;
    let gamma = (1.0 + g).powi(2);
    let omega = 2.0 * g * b;
    let sigma = b2 * (g - 1.0);
    let mu = (1.0 + a) * (1.0 + 3.0 * g + a);
    let nu = 2.0 * g * b2;
    let beta = 2.0 * g * b * (1.0 + a);
    let eta = -b2 * a;
    let eps = (2.0 * g + a).powi(2);
    let mut m = ComplexMatrix::zeros(9, 9);
    let mut set = |i: usize, j: usize, x: f64| {
        m[(i, j)] = c64(x);
        m[(j, i)] = c64(x);
    };
    set(0, 0, gamma);
    set(0, 1, omega);
    set(0, 4, sigma);
    set(0, 8, mu);
    set(1, 1, 2.0 * nu);
    set(1, 8, beta);
    for i in [2, 3, 5, 6, 7] {
        set(i, i, nu);
    }
    set(4, 4, b2 * b2);
    set(4, 8, eta);
    set(8, 8, eps);
    m / c64(20.0 * g * b2)
}

fn example3_spectrum(a: f64) -> Spectrum {
    let Example3Constants { b, .. } = Example3Constants::new(a);
    let s = sgn(1.0 + a);
    let lead = |sign: f64| {
        normalized(&((ket(UP, UP) + ket(UP, ZERO) * c64(sign * b) + ket(DOWN, DOWN) * c64(1.0 + a)) * c64(s)))
    };
    let v3 = normalized(
        &(ket(UP, UP) * c64(a * (a + 1.0)) + ket(ZERO, ZERO) * c64(b * b) - ket(DOWN, DOWN) * c64(a)),
    );
    let mut eigenvectors = vec![lead(1.0), lead(-1.0), v3];
    for (i, j) in [(UP, DOWN), (ZERO, UP), (ZERO, DOWN), (DOWN, UP), (DOWN, ZERO)] {
        eigenvectors.push(ket(i, j));
    }
    let mut eigenvalues = vec![0.3];
    eigenvalues.extend([0.1; 7]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// `(|11> + (1 + a)|-1-1>) (x) |0>`, the ray of `(a'|11> + |-1-1>) (x) |0>`
/// with `a' = 1/(1 + a)`, kept finite at `a = -1`.
pub fn example3_u(a: f64) -> ComplexVector {
    let two = ket(UP, UP) + ket(DOWN, DOWN) * c64(1.0 + a);
    normalized(&kron_vec(&two, &site(ZERO)))
}

fn example3_build(a: f64) -> Result<FamilyEval> {
    let Example3Constants { g, b } = Example3Constants::new(a);
    let b2 = b * b;
    let w = normalized(&(ket(UP, UP) * c64(-(1.0 + a)) + ket(ZERO, ZERO) * c64(a) + ket(DOWN, DOWN)));
    let mut metadata = BTreeMap::from([
        ("g".to_string(), g),
        ("b".to_string(), b),
        ("gamma".to_string(), (1.0 + g).powi(2)),
        ("omega".to_string(), 2.0 * g * b),
        ("sigma".to_string(), b2 * (g - 1.0)),
        ("mu".to_string(), (1.0 + a) * (1.0 + 3.0 * g + a)),
        ("nu".to_string(), 2.0 * g * b2),
        ("beta".to_string(), 2.0 * g * b * (1.0 + a)),
        ("eta".to_string(), -b2 * a),
        ("epsilon".to_string(), (2.0 * g + a).powi(2)),
    ]);
    if 1.0 + a != 0.0 {
        let ap = 1.0 / (1.0 + a);
        metadata.insert("a_prime".to_string(), ap);
        if ap.abs() <= 1.0 {
            metadata.insert("a_double_prime".to_string(), (1.0 - ap * ap).sqrt());
        }
    }
    finalize(a, example3_matrix(a), example3_spectrum(a), vec![w], vec![example3_u(a)], metadata)
}

pub fn example3_eval(a: f64) -> Result<FamilyEval> {
    let mut fe = example3_build(a)?;
    fe.family = FamilyId::Example3;
    Ok(fe)
}
