//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or domain error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::criticality::{
    detect_critical_points, fidelity_susceptibility, gsf, scan, write_csv, write_json, ScanConfig,
    Thresholds, DEFAULT_FD_STEP,
};
use crate::edverify::{verify_ring, VerifyReport, VerifyTolerances};
use crate::entmeasures::{MeasureReport, PPT_TOL};
use crate::error::{Error, Result};
use crate::families::{FamilyEval, FamilyId};
use crate::matcore::{c64, identity};
use crate::parenth::{
    build_local_term, paired_state, proportionality_check, spin_form_hamiltonian, write_local_term,
    LocalTerm, RingHamiltonian,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "beqpt", version, about = "Parent Hamiltonians and fidelity scans for bound-entangled spin-1 chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entanglement measures and spectrum of the two-site state at `a`.
    Measures(Options),
    /// Fidelity, susceptibility and measures over a grid of `a`.
    Scan(Options),
    /// Write the three-site local term as a text matrix.
    BuildHam(Options),
    /// Exact-diagonalization check of the paired ground state on a ring.
    Verify(Options),
    /// Closed-form ground-state fidelity at one point.
    Gsf(Options),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Flags shared by every subcommand. Each one may also come from the JSON file
/// given by `--config`; flags on the command line win.
#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// horodecki, chi2a, chi2b, example3 or chi:<alpha>,<beta>,<a>,<p>,<q+|q->
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n_pairs: Option<u64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub sites: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// PPT tolerance for `measures`; base tolerance for `verify`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated couplings for the local term (default all 1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub couplings: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Adds 0.5 I to the local term (negative control for `verify`).
    #[arg(long, hide = true)]
    #[serde(skip)]
    pub corrupt_local_term: bool,
}

impl Options {
    fn merged(self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)?;
        let file: Options = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?;
        Ok(Options {
            family: self.family.or(file.family),
            a: self.a.or(file.a),
            a_min: self.a_min.or(file.a_min),
            a_max: self.a_max.or(file.a_max),
            steps: self.steps.or(file.steps),
            delta: self.delta.or(file.delta),
            n_pairs: self.n_pairs.or(file.n_pairs),
            fd_step: self.fd_step.or(file.fd_step),
            sites: self.sites.or(file.sites),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            tol: self.tol.or(file.tol),
            couplings: self.couplings.or(file.couplings),
            config: self.config,
            corrupt_local_term: self.corrupt_local_term,
        })
    }

    fn family(&self) -> Result<FamilyId> {
        self.family
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("--family is required".into()))?
            .parse()
    }

    fn a(&self, fam: FamilyId) -> Result<f64> {
        match (self.a, fam) {
            (Some(a), _) => Ok(a),
            (None, FamilyId::Chi(c)) => Ok(c.a),
            _ => Err(Error::InvalidArgument("--a is required".into())),
        }
    }

    fn format(&self, allowed: &[Format], default: Format) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Error::InvalidArgument(format!("format {f:?} is not available here")))
        }
    }

    fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>> {
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(Error::InvalidArgument(format!("--{name} must be positive, got {x}")))
            }
            _ => Ok(v),
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

enum Outcome {
    Ok,
    VerifyFailed,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::VerifyFailed) => EXIT_VERIFY_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Measures(o) => run_measures(o.merged()?),
        Command::Scan(o) => run_scan(o.merged()?),
        Command::BuildHam(o) => run_build(o.merged()?),
        Command::Verify(o) => run_verify(o.merged()?),
        Command::Gsf(o) => run_gsf(o.merged()?),
    }
}

#[derive(Serialize)]
struct MeasuresOutput {
    family: String,
    a: f64,
    #[serde(flatten)]
    report: MeasureReport,
    purity: f64,
    eigenvalues: Vec<f64>,
}

fn run_measures(o: Options) -> Result<Outcome> {
    let fam = o.family()?;
    let a = o.a(fam)?;
    let tol = Options::positive("tol", o.tol)?.unwrap_or(PPT_TOL);
    let format = o.format(&[Format::Text, Format::Json], Format::Text)?;
    let fe = fam.eval(a)?;
    let report = MeasureReport::compute(&fe.rho_pair, tol)?.clamped();
    let out = MeasuresOutput {
        family: fam.to_string(),
        a,
        report,
        purity: fe.rho_pair.purity(),
        eigenvalues: fe.eigenvalues.clone(),
    };
    let mut w = open_output(o.out.as_deref())?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &out)?;
            writeln!(w)?;
        }
        _ => {
            writeln!(w, "family {}", out.family)?;
            writeln!(w, "a {:.16e}", a)?;
            writeln!(w, "negativity {:.16e}", out.report.negativity)?;
            writeln!(w, "n_r {:.16e}", out.report.n_r)?;
            writeln!(w, "n_sr {:.16e}", out.report.n_sr)?;
            writeln!(w, "concurrence_lb {:.16e}", out.report.concurrence_lb)?;
            writeln!(w, "is_ppt {}", out.report.is_ppt)?;
            writeln!(w, "purity {:.16e}", out.purity)?;
            let ev: Vec<String> = out.eigenvalues.iter().map(|l| format!("{l:.16e}")).collect();
            writeln!(w, "eigenvalues {}", ev.join(" "))?;
        }
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

/// Per-family scan defaults: `(a_min, a_max, steps, n_pairs, delta)`.
pub fn scan_defaults(fam: FamilyId) -> Option<(f64, f64, usize, u64, f64)> {
    match fam {
        FamilyId::Horodecki => Some((1.0 / 300.0, 1.0, 300, 100_000_000, 1e-6)),
        FamilyId::Chi2a => Some((-0.99, 0.99, 199, 1_000_000_000, 1e-5)),
        FamilyId::Chi2b => Some((0.0, 1.0, 1201, 10_001, 1e-6)),
        FamilyId::Example3 => Some((-2.0, 0.0, 201, 10_001, 0.01)),
        FamilyId::Chi(_) => None,
    }
}

pub fn scan_config(o: &Options) -> Result<ScanConfig> {
    let fam = o.family()?;
    let d = scan_defaults(fam);
    let need = |name: &str| Error::InvalidArgument(format!("--{name} is required for family {fam}"));
    let config = ScanConfig {
        family: fam,
        a_min: o.a_min.or(d.map(|d| d.0)).ok_or_else(|| need("a-min"))?,
        a_max: o.a_max.or(d.map(|d| d.1)).ok_or_else(|| need("a-max"))?,
        steps: o.steps.or(d.map(|d| d.2)).ok_or_else(|| need("steps"))?,
        n_pairs: o.n_pairs.or(d.map(|d| d.3)).ok_or_else(|| need("n-pairs"))?,
        delta: Options::positive("delta", o.delta)?
            .or(d.map(|d| d.4))
            .ok_or_else(|| need("delta"))?,
        fd_step: Options::positive("fd-step", o.fd_step)?.unwrap_or(DEFAULT_FD_STEP),
    };
    config.validate()?;
    Ok(config)
}

fn run_scan(o: Options) -> Result<Outcome> {
    let config = scan_config(&o)?;
    let format = o.format(&[Format::Csv, Format::Json], Format::Csv)?;
    let records = scan(&config)?;
    let mut w = open_output(o.out.as_deref())?;
    match format {
        Format::Json => write_json(&mut w, &records)?,
        _ => write_csv(&mut w, &records)?,
    }
    w.flush()?;
    if records.len() >= 5 {
        for c in detect_critical_points(&records, &Thresholds::default())? {
            eprintln!("candidate a = {:.10} ({:?})", c.a, c.rule);
        }
    }
    Ok(Outcome::Ok)
}

fn local_term(o: &Options, fe: &FamilyEval) -> Result<LocalTerm> {
    let vectors = &fe.triple_null_selected;
    let couplings = match &o.couplings {
        Some(h) => h.clone(),
        None => vec![1.0; vectors.len()],
    };
    let mut term = build_local_term(vectors, &couplings)?;
    if o.corrupt_local_term {
        let n = term.dim();
        term.matrix += identity(n) * c64(0.5);
    }
    Ok(term)
}

fn run_build(o: Options) -> Result<Outcome> {
    let fam = o.family()?;
    let a = o.a(fam)?;
    o.format(&[Format::Text], Format::Text)?;
    let fe = fam.eval(a)?;
    let term = local_term(&o, &fe)?;
    let mut header = vec![("family".to_string(), fam.to_string()), ("a".to_string(), format!("{a:.16e}"))];
    match spin_form_hamiltonian(fam, a).and_then(|spin| proportionality_check(&spin, &term)) {
        Ok((c, r)) => {
            header.push(("spin_form_scale".into(), format!("{c:.16e}")));
            header.push(("spin_form_residual".into(), format!("{r:.16e}")));
        }
        Err(e) => header.push(("spin_form".into(), format!("unavailable ({e})"))),
    }
    let mut w = open_output(o.out.as_deref())?;
    write_local_term(&mut w, &term, &header)?;
    w.flush()?;
    Ok(Outcome::Ok)
}

fn verify_tolerances(tol: Option<f64>) -> Result<VerifyTolerances> {
    Ok(match Options::positive("tol", tol)? {
        None => VerifyTolerances::default(),
        Some(t) => VerifyTolerances {
            energy: t,
            residual: 100.0 * t,
            min_eigenvalue: 10.0 * t,
            rdm: t,
        },
    })
}

fn run_verify(o: Options) -> Result<Outcome> {
    let fam = o.family()?;
    let a = o.a(fam)?;
    let sites = o.sites.unwrap_or(6);
    let tol = verify_tolerances(o.tol)?;
    let format = o.format(&[Format::Text, Format::Json], Format::Text)?;
    let fe = fam.eval(a)?;
    let ring = RingHamiltonian::new(local_term(&o, &fe)?, sites)?;
    let state = paired_state(&fe, sites / 2)?;
    let report = verify_ring(&state, &ring)?;
    let passed = report.passed(&tol);
    let mut w = open_output(o.out.as_deref())?;
    write_verify(&mut w, &report, passed, format)?;
    w.flush()?;
    Ok(if passed { Outcome::Ok } else { Outcome::VerifyFailed })
}

fn write_verify(w: &mut impl Write, r: &VerifyReport, passed: bool, format: Format) -> Result<()> {
    if format == Format::Json {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(flatten)]
            report: &'a VerifyReport,
            passed: bool,
        }
        serde_json::to_writer_pretty(&mut *w, &Out { report: r, passed })?;
        writeln!(w)?;
        return Ok(());
    }
    writeln!(w, "sites {}", r.sites)?;
    writeln!(w, "energy {:.16e}", r.ground.energy)?;
    writeln!(w, "energy_via_rdm {:.16e}", r.energy_via_rdm)?;
    writeln!(w, "residual_norm {:.16e}", r.ground.residual_norm)?;
    match r.ground.min_eigenvalue {
        Some(l) => writeln!(w, "min_eigenvalue {l:.16e}")?,
        None => writeln!(w, "min_eigenvalue n/a")?,
    }
    match r.ground.ground_dim {
        Some(d) => writeln!(w, "ground_dim {d}")?,
        None => writeln!(w, "ground_dim n/a")?,
    }
    writeln!(w, "rdm_pair_odd_residual {:.16e}", r.rdm_pair_odd_residual)?;
    writeln!(w, "rdm_pair_even_residual {:.16e}", r.rdm_pair_even_residual)?;
    writeln!(w, "rdm_triple_residual {:.16e}", r.rdm_triple_residual)?;
    writeln!(w, "result {}", if passed { "PASS" } else { "FAIL" })?;
    Ok(())
}

#[derive(Serialize)]
struct GsfOutput {
    family: String,
    a: f64,
    delta: f64,
    n_pairs: u64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "F_next")]
    f_next: f64,
    parity_gap: f64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "S_over_N")]
    s_over_n: f64,
}

fn run_gsf(o: Options) -> Result<Outcome> {
    let fam = o.family()?;
    let a = o.a(fam)?;
    let delta = Options::positive("delta", o.delta)?.unwrap_or(1e-6);
    let n_pairs = o.n_pairs.unwrap_or(100_000_000);
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("--n-pairs must be positive".into()));
    }
    let fd_step = Options::positive("fd-step", o.fd_step)?.unwrap_or(DEFAULT_FD_STEP);
    let format = o.format(&[Format::Text, Format::Json], Format::Text)?;
    let f = gsf(fam, a, delta, n_pairs)?;
    let f_next = gsf(fam, a, delta, n_pairs + 1)?;
    let s = fidelity_susceptibility(fam, a, n_pairs, fd_step)?;
    let out = GsfOutput {
        family: fam.to_string(),
        a,
        delta,
        n_pairs,
        f,
        f_next,
        parity_gap: (f - f_next).abs(),
        s,
        s_over_n: s / n_pairs as f64,
    };
    let mut w = open_output(o.out.as_deref())?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &out)?;
            writeln!(w)?;
        }
        _ => {
            writeln!(w, "family {}", out.family)?;
            writeln!(w, "a {:.16e}", out.a)?;
            writeln!(w, "delta {:.16e}", out.delta)?;
            writeln!(w, "n_pairs {}", out.n_pairs)?;
            writeln!(w, "F {:.16e}", out.f)?;
            writeln!(w, "F_next {:.16e}", out.f_next)?;
            writeln!(w, "parity_gap {:.16e}", out.parity_gap)?;
            writeln!(w, "S {:.16e}", out.s)?;
            writeln!(w, "S_over_N {:.16e}", out.s_over_n)?;
        }
    }
    w.flush()?;
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("beqpt").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn parses_negative_parameters() {
        let Command::Gsf(o) = parse(&["gsf", "--family", "example3", "--a", "-1", "--n-pairs", "7"]) else {
            panic!("wrong subcommand");
        };
        assert_eq!(o.a, Some(-1.0));
        assert_eq!(o.n_pairs, Some(7));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(main_with_args(["beqpt", "scan", "--bogus"].map(OsString::from)), EXIT_USAGE);
    }

    #[test]
    fn config_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"family": "chi2a", "a": 0.25, "steps": 9}"#).unwrap();
        let o = Options {
            a: Some(0.1),
            config: Some(path),
            ..Default::default()
        }
        .merged()
        .unwrap();
        assert_eq!(o.family.as_deref(), Some("chi2a"));
        assert_eq!(o.a, Some(0.1));
        assert_eq!(o.steps, Some(9));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"famliy": "chi2a"}"#).unwrap();
        let o = Options {
            config: Some(path),
            ..Default::default()
        };
        assert!(o.merged().is_err());
    }

    #[test]
    fn scan_defaults_fill_missing_flags() {
        let o = Options {
            family: Some("chi2b".into()),
            ..Default::default()
        };
        let c = scan_config(&o).unwrap();
        assert_eq!((c.steps, c.n_pairs), (1201, 10_001));
        let raw = Options {
            family: Some("chi:0.1,0.2,0.3,0.5,-".into()),
            ..Default::default()
        };
        assert!(scan_config(&raw).is_err());
    }
}
