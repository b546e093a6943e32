//! Instance file formats, parsers and seeded generators.
//!
//! Both formats are line oriented. Blank lines and `#` comments are ignored.
//! The first record is a version header; unknown versions are rejected.
//!
//! Driver:
//!
//! ```text
//! driver-instance v1
//! pieces <n> shifts <m>
//! P <id> <work_minutes> <vehicle>
//! S <id> <paid_minutes> <work_minutes> <spells> <lp_fraction|-> <piece_id>...
//! W <w1> <w2> <w3> <w4> <w5>
//! ```
//!
//! Nurse:
//!
//! ```text
//! nurse-instance v1
//! nurses <n> periods 14 grades 3
//! D <grade> <r_1> ... <r_14>
//! N <id> <grade>
//! P <14 characters of 0/1> <cost>
//! ```
//!
//! `D` gives the demand of one grade across the 14 periods (one line per
//! grade). Each `P` line after an `N` line adds one feasible pattern for that
//! nurse; pattern indices count from 0 in file order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::driver::{DriverInstance, Shift, WorkPiece, DEFAULT_WEIGHTS};
use crate::engine::{rng_from_seed, EngineRng};
use crate::nurse::{Nurse, NurseInstance, Pattern, GRADES, PERIODS};

pub const DRIVER_HEADER: &str = "driver-instance v1";
pub const NURSE_HEADER: &str = "nurse-instance v1";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("unsupported format header `{0}`")]
    UnsupportedVersion(String),
    #[error("generator spec cannot be satisfied: {0}")]
    InfeasibleSpec(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Driver,
    Nurse,
}

impl std::str::FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "driver" => Ok(Self::Driver),
            "nurse" => Ok(Self::Nurse),
            other => Err(format!("unknown problem `{other}` (expected driver or nurse)")),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Driver => "driver",
            Self::Nurse => "nurse",
        })
    }
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn field<T: std::str::FromStr>(line: usize, token: Option<&&str>, name: &str) -> Result<T, InstanceError> {
    let token = token.ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    token
        .parse()
        .map_err(|_| parse_err(line, format!("bad {name} `{token}`")))
}

/// Reads the header line and reports which problem the text describes.
pub fn detect_problem(text: &str) -> Result<ProblemKind, InstanceError> {
    let (line, fields) = records(text)
        .next()
        .ok_or_else(|| parse_err(1, "empty instance file"))?;
    match fields.first().copied() {
        Some("driver-instance") => check_version(line, &fields, ProblemKind::Driver),
        Some("nurse-instance") => check_version(line, &fields, ProblemKind::Nurse),
        _ => Err(InstanceError::UnsupportedVersion(fields.join(" "))),
    }
}

fn check_version(_line: usize, fields: &[&str], kind: ProblemKind) -> Result<ProblemKind, InstanceError> {
    if fields.len() == 2 && fields[1] == "v1" {
        Ok(kind)
    } else {
        Err(InstanceError::UnsupportedVersion(fields.join(" ")))
    }
}

fn read(path: &Path) -> Result<String, InstanceError> {
    fs::read_to_string(path).map_err(|source| InstanceError::Io { path: path.to_path_buf(), source })
}

pub fn parse_driver(path: impl AsRef<Path>) -> Result<DriverInstance, InstanceError> {
    parse_driver_str(&read(path.as_ref())?)
}

pub fn parse_nurse(path: impl AsRef<Path>) -> Result<NurseInstance, InstanceError> {
    parse_nurse_str(&read(path.as_ref())?)
}

struct RawShift {
    line: usize,
    id: u32,
    paid: u32,
    work: u32,
    spells: u32,
    lp: Option<f64>,
    piece_ids: Vec<u32>,
}

pub fn parse_driver_str(text: &str) -> Result<DriverInstance, InstanceError> {
    if detect_problem(text)? != ProblemKind::Driver {
        return Err(InstanceError::UnsupportedVersion("expected a driver instance".into()));
    }
    let mut dims: Option<(usize, usize)> = None;
    let mut pieces = Vec::new();
    let mut raw_shifts = Vec::new();
    let mut weights: Option<[f64; 5]> = None;

    for (line, f) in records(text).skip(1) {
        match f[0] {
            "pieces" => {
                if f.len() != 4 || f[2] != "shifts" {
                    return Err(parse_err(line, "expected `pieces <n> shifts <m>`"));
                }
                dims = Some((field(line, f.get(1), "piece count")?, field(line, f.get(3), "shift count")?));
            }
            "P" => {
                if f.len() != 4 {
                    return Err(parse_err(line, "expected `P <id> <work_minutes> <vehicle>`"));
                }
                pieces.push(WorkPiece {
                    id: field(line, f.get(1), "piece id")?,
                    work_minutes: field(line, f.get(2), "work minutes")?,
                    vehicle: field(line, f.get(3), "vehicle")?,
                });
            }
            "S" => {
                if f.len() < 7 {
                    return Err(parse_err(
                        line,
                        "expected `S <id> <paid> <work> <spells> <lp|-> <piece_id>...`",
                    ));
                }
                let lp = match f[5] {
                    "-" => None,
                    t => Some(
                        t.parse::<f64>()
                            .ok()
                            .filter(|v| (0.0..=1.0).contains(v))
                            .ok_or_else(|| parse_err(line, format!("bad lp fraction `{t}`")))?,
                    ),
                };
                let piece_ids = f[6..]
                    .iter()
                    .map(|t| t.parse().map_err(|_| parse_err(line, format!("bad piece id `{t}`"))))
                    .collect::<Result<_, _>>()?;
                raw_shifts.push(RawShift {
                    line,
                    id: field(line, f.get(1), "shift id")?,
                    paid: field(line, f.get(2), "paid minutes")?,
                    work: field(line, f.get(3), "work minutes")?,
                    spells: field(line, f.get(4), "spell count")?,
                    lp,
                    piece_ids,
                });
            }
            "W" => {
                if f.len() != 6 {
                    return Err(parse_err(line, "expected five weights"));
                }
                let mut w = [0.0; 5];
                for (k, slot) in w.iter_mut().enumerate() {
                    *slot = field(line, f.get(k + 1), "weight")?;
                }
                weights = Some(w);
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }

    let (n, m) = dims.ok_or_else(|| parse_err(0, "missing `pieces <n> shifts <m>` line"))?;
    if pieces.len() != n || raw_shifts.len() != m {
        return Err(InstanceError::Validation(format!(
            "header declares {n} pieces and {m} shifts, file has {} and {}",
            pieces.len(),
            raw_shifts.len()
        )));
    }
    let weights = weights.ok_or_else(|| parse_err(0, "missing `W` weight line"))?;
    let index: std::collections::HashMap<u32, usize> =
        pieces.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    let shifts = raw_shifts
        .into_iter()
        .map(|r| {
            let pieces = r
                .piece_ids
                .iter()
                .map(|id| index.get(id).copied().ok_or_else(|| parse_err(r.line, format!("unknown piece id {id}"))))
                .collect::<Result<_, _>>()?;
            Ok(Shift {
                id: r.id,
                pieces,
                spells: r.spells,
                work_minutes: r.work,
                paid_minutes: r.paid,
                lp_fraction: r.lp,
            })
        })
        .collect::<Result<Vec<_>, InstanceError>>()?;
    DriverInstance::new(pieces, shifts, weights).map_err(|e| InstanceError::Validation(e.to_string()))
}

pub fn format_driver(instance: &DriverInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DRIVER_HEADER}");
    let _ = writeln!(out, "pieces {} shifts {}", instance.pieces().len(), instance.shifts().len());
    for p in instance.pieces() {
        let _ = writeln!(out, "P {} {} {}", p.id, p.work_minutes, p.vehicle);
    }
    for s in instance.shifts() {
        let lp = s.lp_fraction.map_or_else(|| "-".to_string(), |v| v.to_string());
        let _ = write!(out, "S {} {} {} {} {}", s.id, s.paid_minutes, s.work_minutes, s.spells, lp);
        for &p in &s.pieces {
            let _ = write!(out, " {}", instance.pieces()[p].id);
        }
        out.push('\n');
    }
    let w = instance.weights();
    let _ = writeln!(out, "W {} {} {} {} {}", w[0], w[1], w[2], w[3], w[4]);
    out
}

pub fn parse_nurse_str(text: &str) -> Result<NurseInstance, InstanceError> {
    if detect_problem(text)? != ProblemKind::Nurse {
        return Err(InstanceError::UnsupportedVersion("expected a nurse instance".into()));
    }
    let mut declared: Option<usize> = None;
    let mut demand = [[0u32; GRADES]; PERIODS];
    let mut seen_grades = [false; GRADES];
    let mut nurses: Vec<Nurse> = Vec::new();

    for (line, f) in records(text).skip(1) {
        match f[0] {
            "nurses" => {
                if f.len() != 6 || f[2] != "periods" || f[4] != "grades" {
                    return Err(parse_err(line, "expected `nurses <n> periods 14 grades 3`"));
                }
                if f[3] != "14" || f[5] != "3" {
                    return Err(parse_err(line, "only 14 periods and 3 grades are supported"));
                }
                declared = Some(field(line, f.get(1), "nurse count")?);
            }
            "D" => {
                if f.len() != 2 + PERIODS {
                    return Err(parse_err(line, "expected `D <grade>` followed by 14 demands"));
                }
                let g: usize = field(line, f.get(1), "grade")?;
                if !(1..=GRADES).contains(&g) {
                    return Err(parse_err(line, format!("grade {g} outside 1..=3")));
                }
                if std::mem::replace(&mut seen_grades[g - 1], true) {
                    return Err(parse_err(line, format!("duplicate demand line for grade {g}")));
                }
                for k in 0..PERIODS {
                    demand[k][g - 1] = field(line, f.get(k + 2), "demand")?;
                }
            }
            "N" => {
                if f.len() != 3 {
                    return Err(parse_err(line, "expected `N <id> <grade>`"));
                }
                nurses.push(Nurse {
                    id: field(line, f.get(1), "nurse id")?,
                    grade: field(line, f.get(2), "grade")?,
                    patterns: Vec::new(),
                });
            }
            "P" => {
                let nurse = nurses
                    .last_mut()
                    .ok_or_else(|| parse_err(line, "pattern before any `N` line"))?;
                if f.len() != 3 || f[1].len() != PERIODS {
                    return Err(parse_err(line, "expected `P <14 x 0/1> <cost>`"));
                }
                let mut cover = [false; PERIODS];
                for (k, ch) in f[1].chars().enumerate() {
                    cover[k] = match ch {
                        '0' => false,
                        '1' => true,
                        _ => return Err(parse_err(line, format!("bad coverage character `{ch}`"))),
                    };
                }
                nurse.patterns.push(Pattern::new(cover, field(line, f.get(2), "cost")?));
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }

    let n = declared.ok_or_else(|| parse_err(0, "missing `nurses <n> periods 14 grades 3` line"))?;
    if nurses.len() != n {
        return Err(InstanceError::Validation(format!("header declares {n} nurses, file has {}", nurses.len())));
    }
    if let Some(g) = seen_grades.iter().position(|s| !s) {
        return Err(InstanceError::Validation(format!("missing demand line for grade {}", g + 1)));
    }
    NurseInstance::new(nurses, demand).map_err(|e| InstanceError::Validation(e.to_string()))
}

pub fn format_nurse(instance: &NurseInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{NURSE_HEADER}");
    let _ = writeln!(out, "nurses {} periods {PERIODS} grades {GRADES}", instance.len());
    for g in 0..GRADES {
        let _ = write!(out, "D {}", g + 1);
        for k in 0..PERIODS {
            let _ = write!(out, " {}", instance.demand()[k][g]);
        }
        out.push('\n');
    }
    for n in instance.nurses() {
        let _ = writeln!(out, "N {} {}", n.id, n.grade);
        for p in &n.patterns {
            let bits: String = p.cover.iter().map(|&c| if c { '1' } else { '0' }).collect();
            let _ = writeln!(out, "P {bits} {}", p.cost);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverGenSpec {
    pub pieces: usize,
    pub shifts: usize,
    /// Attach a fractional-cover value to about half of the shifts.
    pub with_lp: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NurseGenSpec {
    pub nurses: usize,
    /// Upper bound on feasible patterns per nurse.
    pub patterns: usize,
    /// Demand as a fraction of a reference roster's qualified coverage.
    pub tightness: f64,
    /// Keep demand satisfiable (requires `tightness <= 1`).
    pub feasible: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Driver(DriverGenSpec),
    Nurse(NurseGenSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Driver { instance: DriverInstance, text: String },
    Nurse { instance: NurseInstance, text: String },
}

impl Generated {
    pub fn text(&self) -> &str {
        match self {
            Generated::Driver { text, .. } | Generated::Nurse { text, .. } => text,
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated, InstanceError> {
    match spec {
        GeneratorSpec::Driver(s) => {
            let instance = generate_driver(s)?;
            let text = format_driver(&instance);
            Ok(Generated::Driver { instance, text })
        }
        GeneratorSpec::Nurse(s) => {
            let instance = generate_nurse(s)?;
            let text = format_nurse(&instance);
            Ok(Generated::Nurse { instance, text })
        }
    }
}

const MAX_RUN: usize = 3;
const PIECES_PER_VEHICLE: usize = 4;

/// Random driver instance. Pieces sit on vehicles in blocks; a shift is one to
/// four spells, each a run of consecutive pieces on one vehicle. A backbone of
/// shifts partitioning all pieces comes first so every piece is coverable.
pub fn generate_driver(spec: &DriverGenSpec) -> Result<DriverInstance, InstanceError> {
    if spec.pieces == 0 {
        return Err(InstanceError::InfeasibleSpec("at least one piece is required".into()));
    }
    let mut rng = rng_from_seed(spec.seed);
    let vehicles = spec.pieces.div_ceil(PIECES_PER_VEHICLE);
    let pieces: Vec<WorkPiece> = (0..spec.pieces)
        .map(|i| WorkPiece {
            id: i as u32 + 1,
            work_minutes: rng.gen_range(20..=150),
            vehicle: (i / PIECES_PER_VEHICLE) as u32 + 1,
        })
        .collect();
    let blocks: Vec<Vec<usize>> = (0..vehicles)
        .map(|v| (v * PIECES_PER_VEHICLE..((v + 1) * PIECES_PER_VEHICLE).min(spec.pieces)).collect())
        .collect();

    let mut runs: Vec<Vec<usize>> = Vec::new();
    for block in &blocks {
        let mut start = 0;
        while start < block.len() {
            let len = rng.gen_range(1..=MAX_RUN).min(block.len() - start);
            runs.push(block[start..start + len].to_vec());
            start += len;
        }
    }
    runs.shuffle(&mut rng);
    let min_spells = runs.len().div_ceil(spec.shifts.max(1));
    if spec.shifts == 0 || min_spells > 4 {
        return Err(InstanceError::InfeasibleSpec(format!(
            "{} pieces cannot be covered by {} shifts of at most four spells",
            spec.pieces, spec.shifts
        )));
    }

    let mut spell_sets: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut queue = runs.into_iter().peekable();
    while queue.peek().is_some() {
        let remaining_shifts = spec.shifts - spell_sets.len();
        let remaining_runs = queue.len();
        let need = remaining_runs.div_ceil(remaining_shifts);
        let take = rng.gen_range(need..=need.max(2).min(4)).min(remaining_runs);
        spell_sets.push(queue.by_ref().take(take).collect());
    }
    while spell_sets.len() < spec.shifts {
        let spells = rng.gen_range(1..=4usize).min(vehicles);
        let mut chosen: Vec<usize> = (0..vehicles).collect();
        chosen.shuffle(&mut rng);
        chosen.truncate(spells);
        chosen.sort_unstable();
        let set = chosen
            .into_iter()
            .map(|v| {
                let block = &blocks[v];
                let len = rng.gen_range(1..=MAX_RUN.min(block.len()));
                let start = rng.gen_range(0..=block.len() - len);
                block[start..start + len].to_vec()
            })
            .collect();
        spell_sets.push(set);
    }
    spell_sets.shuffle(&mut rng);

    let shifts = spell_sets
        .into_iter()
        .enumerate()
        .map(|(i, spells)| {
            let count = spells.len() as u32;
            let mut covered: Vec<usize> = spells.into_iter().flatten().collect();
            covered.sort_unstable();
            let work: u32 = covered.iter().map(|&p| pieces[p].work_minutes).sum();
            let paid = work + rng.gen_range(0..=120);
            let lp = (spec.with_lp && rng.gen_bool(0.5)).then(|| f64::from(rng.gen_range(1..=1000u32)) / 1000.0);
            Shift { id: i as u32 + 1, pieces: covered, spells: count, work_minutes: work, paid_minutes: paid, lp_fraction: lp }
        })
        .collect();
    DriverInstance::new(pieces, shifts, DEFAULT_WEIGHTS).map_err(|e| InstanceError::Validation(e.to_string()))
}

fn random_pattern(rng: &mut EngineRng) -> Pattern {
    let half = if rng.gen_bool(0.5) { 0 } else { PERIODS / 2 };
    let mut slots: Vec<usize> = (half..half + PERIODS / 2).collect();
    slots.shuffle(rng);
    let mut cover = [false; PERIODS];
    for &k in &slots[..rng.gen_range(3..=5)] {
        cover[k] = true;
    }
    let cost = if rng.gen_bool(0.5) { rng.gen_range(0..=10) } else { rng.gen_range(0..=100) };
    Pattern::new(cover, cost)
}

/// Random nurse instance. Demand is derived from a randomly drawn reference
/// roster, scaled by `tightness`, so `tightness <= 1` leaves at least the
/// reference roster penalty-free.
pub fn generate_nurse(spec: &NurseGenSpec) -> Result<NurseInstance, InstanceError> {
    if spec.patterns == 0 {
        return Err(InstanceError::InfeasibleSpec("each nurse needs at least one pattern".into()));
    }
    if !(spec.tightness >= 0.0) || (spec.feasible && spec.tightness > 1.0) {
        return Err(InstanceError::InfeasibleSpec(format!(
            "tightness {} cannot guarantee a satisfiable demand",
            spec.tightness
        )));
    }
    let mut rng = rng_from_seed(spec.seed);
    let nurses: Vec<Nurse> = (0..spec.nurses)
        .map(|i| {
            let count = rng.gen_range(spec.patterns.div_ceil(2)..=spec.patterns);
            Nurse {
                id: i as u32 + 1,
                grade: rng.gen_range(1..=GRADES as u8),
                patterns: (0..count).map(|_| random_pattern(&mut rng)).collect(),
            }
        })
        .collect();
    let mut reference = [[0u32; GRADES]; PERIODS];
    for n in &nurses {
        let p = n.patterns[rng.gen_range(0..n.patterns.len())];
        for k in p.periods() {
            for g in (0..GRADES).filter(|&g| n.qualifies(g)) {
                reference[k][g] += 1;
            }
        }
    }
    let mut demand = [[0u32; GRADES]; PERIODS];
    for k in 0..PERIODS {
        for g in 0..GRADES {
            let scaled = spec.tightness * f64::from(reference[k][g]);
            demand[k][g] = if spec.feasible { scaled.floor() } else { scaled.round() } as u32;
        }
    }
    NurseInstance::new(nurses, demand).map_err(|e| InstanceError::Validation(e.to_string()))
}
