//! Random-direction experiments on a power-flow model.
//!
//! Directions are drawn with `Xoshiro256PlusPlus::seed_from_u64(seed)`
//! (SplitMix64 seeding). Direction `d` consumes `2n` standard normal draws in
//! the order `Re s_0, Im s_0, Re s_1, ...` and is then scaled to unit 2-norm,
//! so a given `(n, count, seed)` reproduces the same directions bit for bit.
//! Scans evaluate directions in parallel and return records ordered by id.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::powerflow::{kappa_pair, zeta, PowerFlowModel};
use crate::scalar::{Real, C};

pub const CSV_HEADER: [&str; 7] = [
    "direction_id",
    "seed",
    "t_cert",
    "t_prior",
    "t_relax",
    "ratio_prior",
    "ratio_relax",
];

/// Relative slack when comparing a relaxation bound against `t_cert`.
pub const RELAX_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionDirection<T: Real> {
    pub id: usize,
    pub seed: u64,
    pub s_hat: Vec<C<T>>,
}

pub fn random_directions<T: Real>(n: usize, count: usize, seed: u64) -> Vec<InjectionDirection<T>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..count)
        .map(|id| {
            let raw: Vec<C<f64>> = (0..n)
                .map(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    C::new(a, b)
                })
                .collect();
            let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let s_hat = raw
                .iter()
                .map(|z| if norm > 0.0 { z / norm } else { *z })
                .map(|z| C::new(T::lit(z.re), T::lit(z.im)))
                .collect();
            InjectionDirection { id, seed, s_hat }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RecordStatus {
    Ok,
    /// `zeta` vanished along the direction; no finite margins.
    Invalid,
    /// The relaxation bound lies below the certified margin.
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub direction_id: usize,
    pub seed: u64,
    /// `1 / kappa(s_hat)`.
    pub t_cert: f64,
    /// `1 / kappa'(s_hat)`.
    pub t_prior: f64,
    pub t_relax: Option<f64>,
    pub ratio_prior: f64,
    pub ratio_relax: Option<f64>,
    pub status: RecordStatus,
}

fn scan_one<T: Real>(model: &PowerFlowModel<T>, d: &InjectionDirection<T>) -> Result<ScanRecord> {
    let (k, kp) = kappa_pair(model, &d.s_hat)?;
    let (k, kp) = (k.as_f64(), kp.as_f64());
    let valid = k > 0.0 && kp > 0.0 && k.is_finite() && kp.is_finite();
    Ok(ScanRecord {
        direction_id: d.id,
        seed: d.seed,
        t_cert: 1.0 / k,
        t_prior: 1.0 / kp,
        t_relax: None,
        ratio_prior: if valid { kp / k } else { f64::NAN },
        ratio_relax: None,
        status: if valid {
            RecordStatus::Ok
        } else {
            RecordStatus::Invalid
        },
    })
}

/// Certified and prior margins along each direction, in input order.
pub fn direction_scan<T: Real>(
    model: &PowerFlowModel<T>,
    directions: &[InjectionDirection<T>],
) -> Result<Vec<ScanRecord>> {
    directions.par_iter().map(|d| scan_one(model, d)).collect()
}

/// As [`direction_scan`], on a dedicated pool of at most `threads` workers.
pub fn direction_scan_with_threads<T: Real>(
    model: &PowerFlowModel<T>,
    directions: &[InjectionDirection<T>],
    threads: usize,
) -> Result<Vec<ScanRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| direction_scan(model, directions))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationRow {
    pub theta: f64,
    pub t_cert: f64,
    pub t_prior: f64,
}

/// Margins along `s_hat e^{i theta}` for `theta_count` equally spaced angles
/// in `[0, 2 pi)`.
pub fn rotation_scan<T: Real>(
    model: &PowerFlowModel<T>,
    s_hat: &[C<T>],
    theta_count: usize,
) -> Result<Vec<RotationRow>> {
    if theta_count < 4 {
        return Err(Error::Domain(format!(
            "theta count must be at least 4, got {theta_count}"
        )));
    }
    (0..theta_count)
        .into_par_iter()
        .map(|j| {
            let theta = TAU * j as f64 / theta_count as f64;
            let phase = C::from_polar(T::one(), T::lit(theta));
            let s: Vec<C<T>> = s_hat.iter().map(|z| z * phase).collect();
            let (k, kp) = kappa_pair(model, &s)?;
            Ok(RotationRow {
                theta,
                t_cert: 1.0 / k.as_f64(),
                t_prior: 1.0 / kp.as_f64(),
            })
        })
        .collect()
}

#[derive(Debug, serde::Deserialize)]
struct RelaxRow {
    direction_id: usize,
    t_relax: f64,
}

/// Reads `direction_id,t_relax` rows. A repeated id is a format error.
pub fn read_relaxation_csv<R: Read>(reader: R) -> Result<HashMap<usize, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = HashMap::new();
    for row in rdr.deserialize() {
        let row: RelaxRow = row?;
        if out.insert(row.direction_id, row.t_relax).is_some() {
            return Err(Error::Format(format!(
                "duplicate direction_id {} in relaxation file",
                row.direction_id
            )));
        }
    }
    Ok(out)
}

/// Attaches relaxation bounds to matching records. An infinite bound leaves
/// `ratio_relax` empty; a bound below `t_cert` marks the record
/// inconsistent.
pub fn merge_relaxation(records: &[ScanRecord], relax: &HashMap<usize, f64>) -> Vec<ScanRecord> {
    records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let Some(&t) = relax.get(&r.direction_id) {
                r.t_relax = Some(t);
                r.ratio_relax = (t.is_finite() && t > 0.0).then(|| r.t_cert / t);
                if r.status == RecordStatus::Ok && t < r.t_cert * (1.0 - RELAX_CONSISTENCY_TOL) {
                    r.status = RecordStatus::Inconsistent;
                }
            }
            r
        })
        .collect()
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub fn write_csv<W: Write>(records: &[ScanRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.direction_id.to_string(),
            r.seed.to_string(),
            float(r.t_cert),
            float(r.t_prior),
            opt(r.t_relax),
            float(r.ratio_prior),
            opt(r.ratio_relax),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rotation_csv<W: Write>(rows: &[RotationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "t_cert", "t_prior"])?;
    for r in rows {
        w.write_record([float(r.theta), float(r.t_cert), float(r.t_prior)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ZetaLine {
    direction_id: usize,
    n: usize,
    zeta_re: Vec<Vec<f64>>,
    zeta_im: Vec<Vec<f64>>,
    t_cert: f64,
}

/// One JSON object per direction with `zeta(s_hat)` split into real and
/// imaginary parts, the input format of the external relaxation solver.
pub fn export_zeta_jsonl<T: Real, W: Write>(
    model: &PowerFlowModel<T>,
    directions: &[InjectionDirection<T>],
    records: &[ScanRecord],
    mut out: W,
) -> Result<()> {
    let t_cert: HashMap<usize, f64> = records.iter().map(|r| (r.direction_id, r.t_cert)).collect();
    for d in directions {
        let z = zeta(model, &d.s_hat)?;
        let n = z.rows();
        let part = |f: fn(&C<T>) -> T| {
            (0..n)
                .map(|i| z.row(i).iter().map(|v| f(v).as_f64()).collect())
                .collect()
        };
        let line = ZetaLine {
            direction_id: d.id,
            n,
            zeta_re: part(|v| v.re),
            zeta_im: part(|v| v.im),
            t_cert: t_cert.get(&d.id).copied().unwrap_or(f64::NAN),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub count: usize,
    pub valid: usize,
    pub frac_at_least_1: f64,
    pub frac_at_least_2: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Distribution of `ratio_prior` over valid records.
pub fn summarize(records: &[ScanRecord]) -> RatioSummary {
    let mut ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.status != RecordStatus::Invalid)
        .map(|r| r.ratio_prior)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    let frac = |pred: &dyn Fn(f64) -> bool| {
        if m == 0 {
            f64::NAN
        } else {
            ratios.iter().filter(|&&r| pred(r)).count() as f64 / m as f64
        }
    };
    let median = match m {
        0 => f64::NAN,
        _ if !m.is_multiple_of(2) => ratios[m / 2],
        _ => 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]),
    };
    RatioSummary {
        count: records.len(),
        valid: m,
        frac_at_least_1: frac(&|r| r >= 1.0),
        frac_at_least_2: frac(&|r| r >= 2.0),
        median,
        min: ratios.first().copied().unwrap_or(f64::NAN),
        max: ratios.last().copied().unwrap_or(f64::NAN),
    }
}
