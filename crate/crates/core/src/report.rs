//! Per-run benchmark records and their aggregation.
//!
//! A report is a pure function of its run records: the CLI writes the
//! records, reads them back and aggregates, so re-running `stats` on the same
//! records file reproduces the report byte for byte.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed run record on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

const RECORD_HEADER: [&str; 7] = ["instance", "algorithm", "seed", "status", "objective", "iterations", "elapsed_s"];

/// Outcome of one (instance, algorithm, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub algorithm: String,
    pub seed: u64,
    /// `None` when the run failed.
    pub objective: Option<i64>,
    pub iterations: u64,
    /// Seconds, kept at microsecond precision.
    pub elapsed: f64,
}

impl RunRecord {
    pub fn new(instance: &str, algorithm: &str, seed: u64, objective: Option<i64>, iterations: u64, elapsed: f64) -> Self {
        Self {
            instance: instance.to_string(),
            algorithm: algorithm.to_string(),
            seed,
            objective,
            iterations,
            elapsed: (elapsed * 1e6).round() / 1e6,
        }
    }
}

pub fn write_records(records: &[RunRecord]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER)?;
    for r in records {
        let (status, objective) = match r.objective {
            Some(o) => ("ok", o.to_string()),
            None => ("failed", String::new()),
        };
        w.write_record([
            r.instance.as_str(),
            r.algorithm.as_str(),
            &r.seed.to_string(),
            status,
            &objective,
            &r.iterations.to_string(),
            &format!("{:.6}", r.elapsed),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Malformed { line: 0, message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_records(text: &str) -> Result<Vec<RunRecord>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| ReportError::Malformed { line, message };
        if row.len() != RECORD_HEADER.len() {
            return Err(bad(format!("expected {} fields, got {}", RECORD_HEADER.len(), row.len())));
        }
        let seed = row[2].parse().map_err(|_| bad(format!("bad seed `{}`", &row[2])))?;
        let objective = match &row[3] {
            "ok" => Some(row[4].parse().map_err(|_| bad(format!("bad objective `{}`", &row[4])))?),
            "failed" => None,
            other => return Err(bad(format!("bad status `{other}`"))),
        };
        out.push(RunRecord {
            instance: row[0].to_string(),
            algorithm: row[1].to_string(),
            seed,
            objective,
            iterations: row[5].parse().map_err(|_| bad(format!("bad iteration count `{}`", &row[5])))?,
            elapsed: row[6].parse().map_err(|_| bad(format!("bad elapsed `{}`", &row[6])))?,
        });
    }
    Ok(out)
}

/// Aggregate of all runs of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub algorithm: String,
    pub seeds: Vec<u64>,
    pub failures: usize,
    pub best: Option<i64>,
    pub mean: Option<f64>,
    /// Sample standard deviation (zero for a single run).
    pub std_dev: Option<f64>,
    pub mean_time: f64,
    /// Welch t-test against the other algorithm, present when exactly two
    /// algorithms were compared.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided p-value of Welch's unequal-variance t-test.
///
/// `None` if either sample has fewer than two values. Two constant samples
/// give 1 when their means agree and 0 otherwise.
pub fn welch_p_value(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a) / a.len() as f64, sample_variance(b) / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        return Some(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2.powi(2) / (va.powi(2) / (a.len() - 1) as f64 + vb.powi(2) / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

/// Groups records by (instance, algorithm) in first-appearance order; seeds
/// inside a row are sorted.
pub fn aggregate(records: &[RunRecord]) -> BenchmarkReport {
    let mut instances: Vec<&str> = Vec::new();
    let mut algorithms: Vec<&str> = Vec::new();
    for r in records {
        if !instances.contains(&r.instance.as_str()) {
            instances.push(&r.instance);
        }
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
    }
    let mut rows = Vec::new();
    for inst in &instances {
        let mut samples: Vec<Vec<f64>> = Vec::new();
        let first = rows.len();
        for alg in &algorithms {
            let mut runs: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.instance == *inst && r.algorithm == *alg)
                .collect();
            if runs.is_empty() {
                continue;
            }
            runs.sort_by_key(|r| r.seed);
            let values: Vec<f64> = runs.iter().filter_map(|r| r.objective).map(|o| o as f64).collect();
            let times: Vec<f64> = runs.iter().map(|r| r.elapsed).collect();
            rows.push(ReportRow {
                instance: inst.to_string(),
                algorithm: alg.to_string(),
                seeds: runs.iter().map(|r| r.seed).collect(),
                failures: runs.len() - values.len(),
                best: runs.iter().filter_map(|r| r.objective).min(),
                mean: (!values.is_empty()).then(|| mean(&values)),
                std_dev: (!values.is_empty()).then(|| sample_variance(&values).sqrt()),
                mean_time: mean(&times),
                p_value: None,
            });
            samples.push(values);
        }
        if algorithms.len() == 2 && samples.len() == 2 {
            let p = welch_p_value(&samples[0], &samples[1]);
            for row in &mut rows[first..] {
                row.p_value = p;
            }
        }
    }
    BenchmarkReport { rows }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

impl BenchmarkReport {
    /// Delimited output; this is the stable machine-readable form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,algorithm,runs,failures,best,mean,std,mean_time_s,p_value,seeds\n");
        for r in &self.rows {
            let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6},{},{}",
                r.instance,
                r.algorithm,
                r.seeds.len(),
                r.failures,
                opt(r.best, |b| b.to_string()),
                opt(r.mean, |m| format!("{m:.3}")),
                opt(r.std_dev, |s| format!("{s:.3}")),
                r.mean_time,
                opt(r.p_value, |p| format!("{p:.4}")),
                seeds.join(";"),
            );
        }
        out
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let header = ["instance", "algorithm", "runs", "fail", "best", "mean", "std", "time(s)", "p-value"];
        let body: Vec<[String; 9]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.instance.clone(),
                    r.algorithm.clone(),
                    r.seeds.len().to_string(),
                    r.failures.to_string(),
                    opt(r.best, |b| b.to_string()),
                    opt(r.mean, |m| format!("{m:.2}")),
                    opt(r.std_dev, |s| format!("{s:.2}")),
                    format!("{:.3}", r.mean_time),
                    opt(r.p_value, |p| format!("{p:.3}")),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let line = |cells: &[&str], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        };
        line(&header, &mut out);
        for row in &body {
            let cells: Vec<&str> = row.iter().map(String::as_str).collect();
            line(&cells, &mut out);
        }
        out
    }
}
