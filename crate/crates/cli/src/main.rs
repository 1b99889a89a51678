use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use quadcert::certificate::{
    compute_terms, tightness_bounds, BallCertificate, CertificateTerms, TightnessBounds,
};
use quadcert::oracle::{newton_multistart, SolveReport, NEWTON_TOL};
use quadcert::powerflow::{build_model, read_case, PowerFlowModel};
use quadcert::quadform::{make_nominal, SystemSpec};
use quadcert::scan::{
    direction_scan, direction_scan_with_threads, export_zeta_jsonl, merge_relaxation,
    random_directions, read_relaxation_csv, rotation_scan, summarize, write_csv,
    write_rotation_csv, RecordStatus,
};
use serde::Serialize;

/// Multistart grid density used by `certify --verify`.
const VERIFY_GRID: usize = 7;

#[derive(Parser)]
#[command(
    name = "quadcert",
    version,
    about = "Solvability certificates for quadratic systems and AC power flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify that f(x, u) = 0 has a solution for a given u.
    Certify(CertifyArgs),
    /// Certified and prior loadability margins along random injection directions.
    Scan(ScanArgs),
    /// Margins along one direction rotated through a full turn of phase.
    Rotate(RotateArgs),
    /// Summary of the reduced power-flow model of a case.
    CaseInfo(CaseArgs),
}

#[derive(Args)]
struct CertifyArgs {
    /// System description (JSON).
    #[arg(long)]
    system: PathBuf,
    /// Parameter vector, comma separated; defaults to the nominal u*.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    u: Option<Vec<f64>>,
    /// Radius of the ball around x*; without it the unbounded certificate is used.
    #[arg(long)]
    r: Option<f64>,
    /// Also report inner/outer bounds for the ball of relative size kappa in (0, 1).
    #[arg(long)]
    kappa: Option<f64>,
    /// Cross-check with a multistart Newton search.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CaseArgs {
    /// MATPOWER case file.
    #[arg(long = "case")]
    case: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long = "case")]
    case: PathBuf,
    #[arg(long, default_value_t = 1000)]
    dirs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// `direction_id,t_relax` rows from the relaxation solver.
    #[arg(long)]
    relax_csv: Option<PathBuf>,
    /// Write zeta(s) per direction as JSON lines for the relaxation solver.
    #[arg(long)]
    export_zeta: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RotateArgs {
    #[arg(long = "case")]
    case: PathBuf,
    /// Seed of the base direction (the first direction `scan` draws).
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 360)]
    theta_count: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_model(path: &Path) -> Result<PowerFlowModel<f64>> {
    let case = read_case(path).with_context(|| format!("cannot load case {}", path.display()))?;
    let model = build_model(&case)
        .with_context(|| format!("cannot build a model from {}", path.display()))?;
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(model)
}

#[derive(Serialize)]
struct CertifyReport {
    u: Vec<f64>,
    mode: &'static str,
    r: Option<f64>,
    terms: CertificateTerms<f64>,
    certificate: BallCertificate<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tightness: Option<Tightness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<SolveReport<f64>>,
}

#[derive(Serialize)]
struct Tightness {
    kappa: f64,
    bounds: TightnessBounds<f64>,
    guaranteed: bool,
    excluded: bool,
}

fn certify(args: &CertifyArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.system)
        .with_context(|| format!("cannot read {}", args.system.display()))?;
    let spec = SystemSpec::from_json(&text)
        .with_context(|| format!("invalid system file {}", args.system.display()))?;
    let sys = spec.to_system::<f64>()?;
    let (x_star, u_star) = spec.nominal::<f64>()?;
    let nominal = make_nominal(&sys, &x_star, &u_star).context("nominal point")?;
    let u = args.u.clone().unwrap_or_else(|| u_star.clone());
    if u.len() != sys.k() {
        bail!(
            "--u has {} entries but the system has k = {}",
            u.len(),
            sys.k()
        );
    }
    let terms = compute_terms(&nominal, &sys, &u)?;
    let (mode, certificate) = match args.r {
        Some(r) => ("ball", terms.ball(r)?),
        None => ("unbounded", terms.unbounded()),
    };
    let tightness = args
        .kappa
        .map(|kappa| -> Result<Tightness> {
            let bounds = tightness_bounds(&nominal, &sys, kappa)?;
            Ok(Tightness {
                kappa,
                guaranteed: bounds.guarantees(terms.e),
                excluded: bounds.excludes(terms.e),
                bounds,
            })
        })
        .transpose()?;
    let verification = if args.verify {
        let radius = args
            .r
            .or(certificate.witness_radius)
            .unwrap_or(f64::INFINITY);
        Some(newton_multistart(
            &sys,
            &u,
            &x_star,
            radius,
            VERIFY_GRID,
            NEWTON_TOL,
        )?)
    } else {
        None
    };
    let certified = certificate.certified;
    let report = CertifyReport {
        u,
        mode,
        r: args.r,
        terms,
        certificate,
        tightness,
        verification,
    };
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(certified)
}

fn scan_threads() -> Result<Option<usize>> {
    match std::env::var("QUADCERT_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| {
                format!("QUADCERT_THREADS must be a positive integer, got {v:?}")
            })?;
            if n == 0 {
                bail!("QUADCERT_THREADS must be positive");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn scan(args: &ScanArgs) -> Result<()> {
    if args.dirs == 0 {
        bail!("--dirs must be at least 1");
    }
    let model = load_model(&args.case)?;
    let dirs = random_directions(model.n(), args.dirs, args.seed);
    let mut records = match scan_threads()? {
        Some(t) => direction_scan_with_threads(&model, &dirs, t)?,
        None => direction_scan(&model, &dirs)?,
    };
    if let Some(path) = &args.relax_csv {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let relax = read_relaxation_csv(file)
            .with_context(|| format!("invalid relaxation file {}", path.display()))?;
        records = merge_relaxation(&records, &relax);
        let bad = records
            .iter()
            .filter(|r| r.status == RecordStatus::Inconsistent)
            .count();
        if bad > 0 {
            eprintln!(
                "warning: {bad} directions have a relaxation bound below the certified margin"
            );
        }
    }
    if let Some(path) = &args.export_zeta {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        export_zeta_jsonl(&model, &dirs, &records, &mut w)?;
        w.flush()?;
    }
    let mut out = output(args.out.as_deref())?;
    write_csv(&records, &mut out)?;
    out.flush()?;

    let s = summarize(&records);
    eprintln!(
        "{} directions: ratio_prior median {:.3}, >= 2 in {:.1}%, range [{:.3}, {:.3}]",
        s.count,
        s.median,
        100.0 * s.frac_at_least_2,
        s.min,
        s.max
    );
    if s.valid < s.count {
        eprintln!("warning: {} directions are invalid", s.count - s.valid);
    }
    Ok(())
}

fn rotate(args: &RotateArgs) -> Result<()> {
    if args.theta_count < 4 {
        bail!("--theta-count must be at least 4, got {}", args.theta_count);
    }
    let model = load_model(&args.case)?;
    let base = random_directions(model.n(), 1, args.seed).remove(0);
    let rows = rotation_scan(&model, &base.s_hat, args.theta_count)?;
    let mut out = output(args.out.as_deref())?;
    write_rotation_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn case_info(args: &CaseArgs) -> Result<()> {
    let model = load_model(&args.case)?;
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &model.summary())?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Certify(a) => certify(a).map(|ok| {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }),
        Command::Scan(a) => scan(a).map(|_| ExitCode::SUCCESS),
        Command::Rotate(a) => rotate(a).map(|_| ExitCode::SUCCESS),
        Command::CaseInfo(a) => case_info(a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
