//! Ground-state fidelity of paired states in closed form, its susceptibility,
//! parameter scans and critical-point heuristics.

use std::io::Write;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entmeasures::{n_sr, negativity_raw, realignment_measure};
use crate::error::{Error, Result};
use crate::families::FamilyId;
use crate::matcore::{hermitian_eigenvalues, psd_sqrt, ComplexVector, DensityMatrix, C64};

pub const DEFAULT_FD_STEP: f64 = 1e-7;

/// `o^N` for large `N`, through `exp(N ln|o|)` and an exact parity sign for
/// real negative overlaps.
pub fn overlap_power(o: C64, n: u64) -> C64 {
    let r = o.norm();
    if r == 0.0 {
        return if n == 0 { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) };
    }
    power_with_log_magnitude(o, r.ln(), n)
}

fn power_with_log_magnitude(o: C64, ln_mag: f64, n: u64) -> C64 {
    if n == 0 {
        return Complex::new(1.0, 0.0);
    }
    let mag = (n as f64 * ln_mag).exp();
    if o.im == 0.0 {
        let sign = if o.re < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        Complex::new(sign * mag, 0.0)
    } else {
        let theta = o.im.atan2(o.re);
        // reduce the phase modulo 2 pi before scaling
        let turns = theta / std::f64::consts::TAU;
        let frac = (turns * (n % (1u64 << 52)) as f64).fract();
        Complex::from_polar(mag, frac * std::f64::consts::TAU)
    }
}

/// `ln(|<a|b>| / (|a| |b|))`. The deficit `1 - cos^2` comes from the Lagrange
/// identity so it keeps full relative precision when `a` and `b` are nearly
/// parallel, which is where large `N` amplifies rounding.
fn log_overlap_magnitude(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let mut wedge = 0.0;
    for k in 0..a.len() {
        for l in k + 1..a.len() {
            wedge += (a[k] * b[l] - a[l] * b[k]).norm_sqr();
        }
    }
    let deficit = (wedge / (a.norm_squared() * b.norm_squared())).clamp(0.0, 1.0);
    0.5 * (-deficit).ln_1p()
}

/// `ln |v|`, taken as exactly 0 when `v` is a unit vector up to rounding.
/// Continued eigenvectors past the physical domain carry a bilinear rather
/// than a Hermitian normalization and keep their true norm.
fn log_norm(v: &ComplexVector) -> f64 {
    let n2 = v.norm_squared();
    if (n2 - 1.0).abs() < 1e-10 {
        0.0
    } else {
        0.5 * n2.ln()
    }
}

/// `<a|b>^N`, with the angle between `a` and `b` resolved to full relative
/// precision.
pub fn normalized_overlap_power(a: &ComplexVector, b: &ComplexVector, n: u64) -> C64 {
    let o = a.dotc(b);
    if o.norm() == 0.0 {
        return overlap_power(o, n);
    }
    power_with_log_magnitude(o, log_overlap_magnitude(a, b) + log_norm(a) + log_norm(b), n)
}

/// `|sum_ij sqrt(l_i(a-) l_j(a+)) <v_i(a-)|v_j(a+)>^N|` with `a+- = a_c +- delta`.
pub fn gsf(fam: FamilyId, a_c: f64, delta: f64, n_pairs: u64) -> Result<f64> {
    let minus = fam.spectrum(a_c - delta)?;
    let plus = fam.spectrum(a_c + delta)?;
    let mut total = Complex::new(0.0, 0.0);
    for (&li, vi) in minus.eigenvalues.iter().zip(&minus.eigenvectors) {
        for (&lj, vj) in plus.eigenvalues.iter().zip(&plus.eigenvectors) {
            let w = (li.max(0.0) * lj.max(0.0)).sqrt();
            if w == 0.0 {
                continue;
            }
            total += normalized_overlap_power(vi, vj, n_pairs) * w;
        }
    }
    Ok(total.norm().min(1.0 + 1e-12))
}

/// `S = 2 (F(a, h) - 1) / h^2`, the second difference of `F` in `delta` at 0.
pub fn fidelity_susceptibility(fam: FamilyId, a: f64, n_pairs: u64, fd_step: f64) -> Result<f64> {
    if fd_step.is_nan() || fd_step <= 0.0 {
        return Err(Error::InvalidArgument(format!("fd_step must be positive, got {fd_step}")));
    }
    let f = gsf(fam, a, fd_step, n_pairs)?;
    Ok(2.0 * (f - 1.0) / (fd_step * fd_step))
}

/// `|F(N) - F(N + 1)|`.
pub fn parity_gap(fam: FamilyId, a: f64, delta: f64, n_pairs: u64) -> Result<f64> {
    Ok((gsf(fam, a, delta, n_pairs)? - gsf(fam, a, delta, n_pairs + 1)?).abs())
}

/// Uhlmann fidelity `Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`.
pub fn reduced_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho1.dim(), rho2.dim())));
    }
    let s = psd_sqrt(rho1.matrix())?;
    let mut inner = &s * rho2.matrix() * &s;
    // symmetrize rounding noise before the Hermitian eigensolve
    inner = (&inner + inner.adjoint()) * Complex::new(0.5, 0.0);
    let f: f64 = hermitian_eigenvalues(&inner).iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(f.min(1.0 + 1e-12))
}

#[derive(Clone, Copy, Debug)]
pub struct ScanConfig {
    pub family: FamilyId,
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
    pub delta: f64,
    pub n_pairs: u64,
    pub fd_step: f64,
}

impl ScanConfig {
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        // weighted form keeps the endpoints exact and symmetric grids symmetric
        (0..self.steps)
            .map(|k| (self.a_min * (last - k as f64) + self.a_max * k as f64) / last)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_min.is_nan() || self.a_max.is_nan() || self.a_min >= self.a_max {
            return Err(Error::InvalidArgument(format!(
                "a_min ({}) must be below a_max ({})",
                self.a_min, self.a_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidArgument(format!("steps must be at least 2, got {}", self.steps)));
        }
        if [self.delta, self.fd_step].iter().any(|x| x.is_nan() || *x <= 0.0) {
            return Err(Error::InvalidArgument("delta and fd_step must be positive".into()));
        }
        if self.n_pairs == 0 {
            return Err(Error::InvalidArgument("n_pairs must be positive".into()));
        }
        if let Some(d) = self.family.spectrum_domain() {
            let reach = self.delta.max(self.fd_step);
            for a in [self.a_min - reach, self.a_max + reach] {
                if !d.contains(a) {
                    return Err(Error::Domain {
                        family: self.family.to_string(),
                        a,
                        domain: d.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One grid point. `S_over_N` holds `|S| / N`; `s_raw` keeps the signed value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub a: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "S_over_N")]
    pub s_over_n: f64,
    pub negativity: f64,
    pub n_r: f64,
    pub n_sr: f64,
    pub parity_gap: f64,
    #[serde(skip)]
    pub s_raw: f64,
}

pub fn scan_point(config: &ScanConfig, a: f64) -> Result<ScanRecord> {
    let fam = config.family;
    let f = gsf(fam, a, config.delta, config.n_pairs)?;
    let s = fidelity_susceptibility(fam, a, config.n_pairs, config.fd_step)?;
    let gap = (f - gsf(fam, a, config.delta, config.n_pairs + 1)?).abs();
    let fe = fam.eval(a)?;
    Ok(ScanRecord {
        a,
        f,
        s_over_n: s.abs() / config.n_pairs as f64,
        negativity: negativity_raw(&fe.rho_pair)?,
        n_r: realignment_measure(&fe.rho_pair)?,
        n_sr: n_sr(&fe.rho_pair)?,
        parity_gap: gap,
        s_raw: s,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QPT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("QPT_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::InvalidArgument("QPT_THREADS must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Evaluates every grid point (in parallel, capped by `QPT_THREADS`) and
/// returns records in grid order.
pub fn scan(config: &ScanConfig) -> Result<Vec<ScanRecord>> {
    config.validate()?;
    let grid = config.grid();
    let results: Vec<Result<ScanRecord>> =
        thread_pool()?.install(|| grid.par_iter().map(|&a| scan_point(config, a)).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::GridPoint {
                index,
                a: grid[index],
                source: Box::new(e),
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "a,F,S_over_N,negativity,n_r,n_sr,parity_gap";

pub fn write_csv(out: &mut impl Write, records: &[ScanRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.a, r.f, r.s_over_n, r.negativity, r.n_r, r.n_sr, r.parity_gap
        )?;
    }
    Ok(())
}

pub fn write_json(out: &mut impl Write, records: &[ScanRecord]) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, records)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct Thresholds {
    /// A derivative spike must exceed this multiple of the median `|dF/da|`.
    pub spike_factor: f64,
    pub parity_gap: f64,
    /// Minimum depth of a fidelity dip below both neighbours.
    pub min_dip: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            spike_factor: 10.0,
            parity_gap: 1e-3,
            min_dip: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    FidelityMinimum,
    DerivativeSpike,
    ParityGap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub index: usize,
    pub a: f64,
    pub rule: Rule,
}

pub fn detect_critical_points(records: &[ScanRecord], thresholds: &Thresholds) -> Result<Vec<Candidate>> {
    let n = records.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 records, got {n}")));
    }
    let mut out = Vec::new();
    for k in 1..n - 1 {
        let f = records[k].f;
        if f < records[k - 1].f - thresholds.min_dip && f < records[k + 1].f - thresholds.min_dip {
            out.push(Candidate {
                index: k,
                a: records[k].a,
                rule: Rule::FidelityMinimum,
            });
        }
    }
    let slopes: Vec<f64> = records
        .windows(2)
        .map(|w| ((w[1].f - w[0].f) / (w[1].a - w[0].a)).abs())
        .collect();
    let mut sorted = slopes.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let limit = thresholds.spike_factor * median;
    for (k, &s) in slopes.iter().enumerate() {
        let left = if k > 0 { slopes[k - 1] } else { f64::NEG_INFINITY };
        let right = slopes.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if s > limit && s > 0.0 && s >= left && s >= right {
            // attribute the spike to the grid point with the lower fidelity
            let index = if records[k].f <= records[k + 1].f { k } else { k + 1 };
            out.push(Candidate {
                index,
                a: records[index].a,
                rule: Rule::DerivativeSpike,
            });
        }
    }
    for (k, r) in records.iter().enumerate() {
        if r.parity_gap > thresholds.parity_gap {
            out.push(Candidate {
                index: k,
                a: r.a,
                rule: Rule::ParityGap,
            });
        }
    }
    out.sort_by_key(|c| (c.index, c.rule as u8));
    Ok(out)
}
