//! Reader and writer for the MATLAB subset used by MATPOWER case files.
//!
//! Only `mpc.baseMVA`, `mpc.bus`, `mpc.branch` and `mpc.gen` are interpreted.
//! Other assignments (`mpc.version`, `mpc.gencost`, cell arrays, ...) are
//! skipped. Columns beyond the ones this crate uses are preserved verbatim so
//! that writing a parsed case reproduces it.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, ParseErrorKind, Result};

pub const BUS_MIN_COLS: usize = 9;
pub const BRANCH_MIN_COLS: usize = 11;
pub const GEN_MIN_COLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BusType {
    Pq,
    Pv,
    Slack,
}

impl BusType {
    fn code(self) -> f64 {
        match self {
            BusType::Pq => 1.0,
            BusType::Pv => 2.0,
            BusType::Slack => 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bus {
    pub id: u64,
    pub bus_type: BusType,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub area: f64,
    pub vm: f64,
    pub va: f64,
    /// Columns after `Va` (baseKV, zone, limits, ...).
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub from: u64,
    pub to: u64,
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub rate_c: f64,
    /// Off-nominal tap ratio; `0` means 1.
    pub tap: f64,
    pub shift_deg: f64,
    pub status: f64,
    pub extra: Vec<f64>,
}

impl Branch {
    pub fn in_service(&self) -> bool {
        self.status != 0.0
    }

    pub fn effective_tap(&self) -> f64 {
        if self.tap == 0.0 {
            1.0
        } else {
            self.tap
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gen {
    pub bus: u64,
    pub pg: f64,
    pub qg: f64,
    pub qmax: f64,
    pub qmin: f64,
    pub vg: f64,
    pub mbase: f64,
    pub status: f64,
    pub extra: Vec<f64>,
}

impl Gen {
    pub fn in_service(&self) -> bool {
        self.status > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCase {
    pub name: Option<String>,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub gens: Vec<Gen>,
}

impl GridCase {
    pub fn slack(&self) -> &Bus {
        // Parsing guarantees exactly one.
        self.buses
            .iter()
            .find(|b| b.bus_type == BusType::Slack)
            .expect("case has a slack bus")
    }

    pub fn bus_index(&self, id: u64) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }
}

struct Row {
    line: usize,
    values: Vec<f64>,
}

struct Matrix {
    line: usize,
    rows: Vec<Row>,
}

fn perr(line: usize, kind: ParseErrorKind) -> Error {
    Error::Parse { line, kind }
}

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| perr(line, ParseErrorKind::MalformedNumber(tok.to_string())))
}

fn strip_comment(line: &str) -> &str {
    // `%` inside a quoted string is rare enough in case files to ignore.
    match line.find('%') {
        Some(p) => &line[..p],
        None => line,
    }
}

/// Splits an `mpc.<name> = <rest>` assignment.
fn assignment(line: &str) -> Option<(&str, &str)> {
    let rest = line.trim_start().strip_prefix("mpc.")?;
    let end = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    let (name, tail) = rest.split_at(end);
    let value = tail.trim_start().strip_prefix('=')?;
    Some((name, value.trim()))
}

/// Accumulates matrix rows; returns true once the closing bracket is seen.
fn feed_matrix(m: &mut Matrix, text: &str, line: usize) -> Result<bool> {
    let mut current: Vec<f64> = Vec::new();
    let flush = |current: &mut Vec<f64>, m: &mut Matrix| {
        if !current.is_empty() {
            m.rows.push(Row {
                line,
                values: std::mem::take(current),
            });
        }
    };
    let mut closed = false;
    for chunk in text.split_inclusive([';', ']']) {
        let (body, delim) = match chunk.chars().last() {
            Some(c @ (';' | ']')) => (&chunk[..chunk.len() - 1], Some(c)),
            _ => (chunk, None),
        };
        for tok in body
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            current.push(number(tok, line)?);
        }
        match delim {
            Some(';') => flush(&mut current, m),
            Some(']') => {
                flush(&mut current, m);
                closed = true;
                break;
            }
            _ => {}
        }
    }
    // A newline also terminates a row.
    flush(&mut current, m);
    Ok(closed)
}

enum State {
    Top,
    InMatrix(String, Matrix),
    InCell(usize),
}

fn check_widths(field: &'static str, m: &Matrix, min: usize) -> Result<()> {
    let Some(first) = m.rows.first() else {
        return Ok(());
    };
    let width = first.values.len();
    for row in &m.rows {
        if row.values.len() < min {
            return Err(perr(
                row.line,
                ParseErrorKind::ShortRow {
                    field,
                    min,
                    found: row.values.len(),
                },
            ));
        }
        if row.values.len() != width {
            return Err(perr(
                row.line,
                ParseErrorKind::RaggedRow {
                    field,
                    expected: width,
                    found: row.values.len(),
                },
            ));
        }
    }
    Ok(())
}

fn bus_id(v: f64, line: usize) -> Result<u64> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as u64)
    } else {
        Err(perr(line, ParseErrorKind::MalformedNumber(v.to_string())))
    }
}

/// Parses MATPOWER case text.
pub fn parse_matpower(text: &str) -> Result<GridCase> {
    let mut state = State::Top;
    let mut name = None;
    let mut base: Option<(usize, f64)> = None;
    let mut bus: Option<Matrix> = None;
    let mut branch: Option<Matrix> = None;
    let mut gen: Option<Matrix> = None;
    let mut last_line = 1;

    let mut store = |field: String, m: Matrix| match field.as_str() {
        "bus" => bus = Some(m),
        "branch" => branch = Some(m),
        "gen" => gen = Some(m),
        _ => {}
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let code = strip_comment(raw);
        state = match state {
            State::InMatrix(field, mut m) => {
                if feed_matrix(&mut m, code, line)? {
                    store(field, m);
                    State::Top
                } else {
                    State::InMatrix(field, m)
                }
            }
            State::InCell(start) => {
                if code.contains('}') {
                    State::Top
                } else {
                    State::InCell(start)
                }
            }
            State::Top => {
                let trimmed = code.trim();
                if let Some(rest) = trimmed.strip_prefix("function") {
                    if let Some((_, n)) = rest.split_once('=') {
                        name = Some(n.trim().trim_end_matches(';').to_string());
                    }
                    State::Top
                } else if let Some((field, value)) = assignment(trimmed) {
                    if let Some(body) = value.strip_prefix('[') {
                        let mut m = Matrix {
                            line,
                            rows: Vec::new(),
                        };
                        if feed_matrix(&mut m, body, line)? {
                            store(field.to_string(), m);
                            State::Top
                        } else {
                            State::InMatrix(field.to_string(), m)
                        }
                    } else if value.starts_with('{') {
                        if value.contains('}') {
                            State::Top
                        } else {
                            State::InCell(line)
                        }
                    } else {
                        if field == "baseMVA" {
                            let tok = value.trim_end_matches(';').trim();
                            base = Some((line, number(tok, line)?));
                        }
                        State::Top
                    }
                } else {
                    State::Top
                }
            }
        };
    }
    match state {
        State::InMatrix(field, m) => {
            let field: &'static str = match field.as_str() {
                "bus" => "bus",
                "branch" => "branch",
                "gen" => "gen",
                _ => "matrix",
            };
            return Err(perr(m.line, ParseErrorKind::Unterminated(field)));
        }
        State::InCell(start) => return Err(perr(start, ParseErrorKind::Unterminated("cell"))),
        State::Top => {}
    }

    let (base_line, base_mva) =
        base.ok_or_else(|| perr(last_line, ParseErrorKind::MissingField("baseMVA")))?;
    if !(base_mva > 0.0) {
        return Err(perr(base_line, ParseErrorKind::NonPositiveBaseMva));
    }
    let bus = bus.ok_or_else(|| perr(last_line, ParseErrorKind::MissingField("bus")))?;
    let branch = branch.ok_or_else(|| perr(last_line, ParseErrorKind::MissingField("branch")))?;
    let gen = gen.ok_or_else(|| perr(last_line, ParseErrorKind::MissingField("gen")))?;
    check_widths("bus", &bus, BUS_MIN_COLS)?;
    check_widths("branch", &branch, BRANCH_MIN_COLS)?;
    check_widths("gen", &gen, GEN_MIN_COLS)?;

    let mut buses = Vec::with_capacity(bus.rows.len());
    for row in &bus.rows {
        let v = &row.values;
        let id = bus_id(v[0], row.line)?;
        if buses.iter().any(|b: &Bus| b.id == id) {
            return Err(perr(row.line, ParseErrorKind::DuplicateBus(id.to_string())));
        }
        let bus_type = match v[1] {
            1.0 => BusType::Pq,
            2.0 => BusType::Pv,
            3.0 => BusType::Slack,
            t => {
                return Err(perr(
                    row.line,
                    ParseErrorKind::InvalidBusType(t.to_string()),
                ))
            }
        };
        buses.push(Bus {
            id,
            bus_type,
            pd: v[2],
            qd: v[3],
            gs: v[4],
            bs: v[5],
            area: v[6],
            vm: v[7],
            va: v[8],
            extra: v[BUS_MIN_COLS..].to_vec(),
        });
    }
    let slacks = buses
        .iter()
        .filter(|b| b.bus_type == BusType::Slack)
        .count();
    if slacks != 1 {
        return Err(perr(bus.line, ParseErrorKind::SlackCount(slacks)));
    }

    let known = |id: u64, line: usize| -> Result<u64> {
        if buses.iter().any(|b| b.id == id) {
            Ok(id)
        } else {
            Err(perr(line, ParseErrorKind::UnknownBus(id.to_string())))
        }
    };

    let mut branches = Vec::with_capacity(branch.rows.len());
    for row in &branch.rows {
        let v = &row.values;
        branches.push(Branch {
            from: known(bus_id(v[0], row.line)?, row.line)?,
            to: known(bus_id(v[1], row.line)?, row.line)?,
            r: v[2],
            x: v[3],
            b: v[4],
            rate_a: v[5],
            rate_b: v[6],
            rate_c: v[7],
            tap: v[8],
            shift_deg: v[9],
            status: v[10],
            extra: v[BRANCH_MIN_COLS..].to_vec(),
        });
    }

    let mut gens = Vec::with_capacity(gen.rows.len());
    for row in &gen.rows {
        let v = &row.values;
        gens.push(Gen {
            bus: known(bus_id(v[0], row.line)?, row.line)?,
            pg: v[1],
            qg: v[2],
            qmax: v[3],
            qmin: v[4],
            vg: v[5],
            mbase: v[6],
            status: v[7],
            extra: v[GEN_MIN_COLS..].to_vec(),
        });
    }

    Ok(GridCase {
        name,
        base_mva,
        buses,
        branches,
        gens,
    })
}

fn write_matrix(out: &mut String, field: &str, rows: impl Iterator<Item = Vec<f64>>) {
    let _ = writeln!(out, "mpc.{field} = [");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "\t{};", cells.join("\t"));
    }
    out.push_str("];\n\n");
}

/// Serializes a case in the same format. Numbers use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_matpower(case: &GridCase) -> String {
    let mut out = String::new();
    if let Some(name) = &case.name {
        let _ = writeln!(out, "function mpc = {name}\n");
    }
    out.push_str("mpc.version = '2';\n\n");
    let _ = writeln!(out, "mpc.baseMVA = {};\n", case.base_mva);
    write_matrix(
        &mut out,
        "bus",
        case.buses.iter().map(|b| {
            let mut v = vec![
                b.id as f64,
                b.bus_type.code(),
                b.pd,
                b.qd,
                b.gs,
                b.bs,
                b.area,
                b.vm,
                b.va,
            ];
            v.extend_from_slice(&b.extra);
            v
        }),
    );
    write_matrix(
        &mut out,
        "gen",
        case.gens.iter().map(|g| {
            let mut v = vec![
                g.bus as f64,
                g.pg,
                g.qg,
                g.qmax,
                g.qmin,
                g.vg,
                g.mbase,
                g.status,
            ];
            v.extend_from_slice(&g.extra);
            v
        }),
    );
    write_matrix(
        &mut out,
        "branch",
        case.branches.iter().map(|br| {
            let mut v = vec![
                br.from as f64,
                br.to as f64,
                br.r,
                br.x,
                br.b,
                br.rate_a,
                br.rate_b,
                br.rate_c,
                br.tap,
                br.shift_deg,
                br.status,
            ];
            v.extend_from_slice(&br.extra);
            v
        }),
    );
    out
}
