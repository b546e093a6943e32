use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use eswo::driver::{driver_objective, remove_redundant};
use eswo::instances::{self, ProblemKind};
use eswo::oracle::{self, OracleError, OracleLimits};
use eswo::report::{self, RunRecord};
use eswo::solve::{solve_driver, solve_nurse};
use eswo::Mode;
use rayon::prelude::*;

use crate::options::{GenArgs, Instance, SolverArgs};
use crate::solution::{self, RunInfo};
use crate::{CliError, Format};

struct Outcome {
    objective: i64,
    iterations: u64,
    elapsed: f64,
    solution: String,
}

fn run_one(
    instance: &Instance,
    args: &SolverArgs,
    mode: Mode,
    seed: u64,
    known_optimum: Option<i64>,
    redundant_pass: bool,
) -> Result<Outcome, CliError> {
    let mut cfg = args.engine_config(instance.kind(), seed)?;
    cfg.mode = mode;
    cfg.stop_on_known_optimum = known_optimum;
    let solver = |e: eswo::solve::SolveError| CliError::Solver(e.to_string());
    Ok(match instance {
        Instance::Driver(inst) => {
            let r = solve_driver(inst, args.driver_k(), &cfg).map_err(solver)?;
            let (schedule, objective) = if redundant_pass {
                let s = remove_redundant(&r.best_solution, inst);
                let o = driver_objective(&s, inst).map_err(|e| CliError::Solver(e.to_string()))?;
                (s, o)
            } else {
                (r.best_solution, r.best_objective)
            };
            let info = RunInfo { mode, seed, objective, iterations: r.iterations_run };
            Outcome {
                objective,
                iterations: r.iterations_run,
                elapsed: r.elapsed,
                solution: solution::format_driver(&info, &schedule, inst),
            }
        }
        Instance::Nurse(inst) => {
            let r = solve_nurse(inst, &args.nurse_params()?, &cfg).map_err(solver)?;
            let info = RunInfo { mode, seed, objective: r.best_objective, iterations: r.iterations_run };
            Outcome {
                objective: r.best_objective,
                iterations: r.iterations_run,
                elapsed: r.elapsed,
                solution: solution::format_nurse(&info, &r.best_solution, inst),
            }
        }
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn solve(
    path: &Path,
    args: &SolverArgs,
    known_optimum: Option<i64>,
    redundant_pass: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let instance = args.load(path)?;
    if redundant_pass && instance.kind() != ProblemKind::Driver {
        return Err(CliError::Input("--remove-redundant applies to driver instances only".into()));
    }
    let o = run_one(&instance, args, args.mode, args.seed, known_optimum, redundant_pass)?;
    emit(&o.solution, out)?;
    let summary = format!(
        "objective {} iterations {} seed {} mode {} time {:.3}s",
        o.objective, o.iterations, args.seed, args.mode, o.elapsed
    );
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn load_all(paths: &[PathBuf], args: &SolverArgs) -> Result<Vec<(String, Instance)>, CliError> {
    paths.iter().map(|p| Ok((instance_name(p), args.load(p)?))).collect()
}

fn render(report: &report::BenchmarkReport, format: Format) -> String {
    match format {
        Format::Table => report.to_table(),
        Format::Csv => report.to_csv(),
    }
}

pub fn benchmark(
    paths: &[PathBuf],
    args: &SolverArgs,
    runs: u64,
    algorithms: &[Mode],
    records_out: Option<&Path>,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::Input("--runs must be at least 1".into()));
    }
    let instances = load_all(paths, args)?;
    for (_, inst) in &instances {
        args.engine_config(inst.kind(), args.seed)?;
        if inst.kind() == ProblemKind::Nurse {
            args.nurse_params()?;
        }
    }
    let mut jobs = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &mode in algorithms {
            for seed in args.seed..args.seed + runs {
                jobs.push((i, mode, seed));
            }
        }
    }
    let mut records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(i, mode, seed)| {
            let (name, inst) = &instances[i];
            match run_one(inst, args, mode, seed, None, false) {
                Ok(o) => RunRecord::new(name, &mode.to_string(), seed, Some(o.objective), o.iterations, o.elapsed),
                Err(e) => {
                    eprintln!("warning: {name} {mode} seed {seed}: {e}");
                    RunRecord::new(name, &mode.to_string(), seed, None, 0, 0.0)
                }
            }
        })
        .collect();
    records.sort_by(|a, b| (&a.instance, &a.algorithm, a.seed).cmp(&(&b.instance, &b.algorithm, b.seed)));
    if let Some(path) = records_out {
        let text = report::write_records(&records).map_err(|e| CliError::Solver(e.to_string()))?;
        emit(&text, Some(path))?;
    }
    emit(&render(&report::aggregate(&records), format), out)
}

pub fn stats(path: &Path, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let records = report::read_records(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    emit(&render(&report::aggregate(&records), format), out)
}

pub fn generate(spec: &GenArgs, out: Option<&Path>) -> Result<(), CliError> {
    let generated = instances::generate(&spec.resolve()?).map_err(|e| CliError::Input(e.to_string()))?;
    emit(generated.text(), out)
}

enum Verdict {
    Checked { optimum: i64, results: Vec<i64> },
    Skipped(String),
}

pub fn verify(
    paths: &[PathBuf],
    args: &SolverArgs,
    runs: u64,
    min_hit_rate: Option<f64>,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if runs == 0 {
        return Err(CliError::Input("--runs must be at least 1".into()));
    }
    let instances = load_all(paths, args)?;
    let limits = OracleLimits::default();
    let verdicts: Vec<Result<Verdict, CliError>> = instances
        .par_iter()
        .map(|(_, inst)| {
            let optimum = match inst {
                Instance::Driver(d) => oracle::solve_driver_exact(d, &limits).map(|o| o.objective),
                Instance::Nurse(n) => oracle::solve_nurse_exact(n, args.nurse_params()?.w_demand, &limits).map(|o| o.objective),
            };
            let optimum = match optimum {
                Ok(o) => o,
                Err(e @ (OracleError::TooLarge(_) | OracleError::OutOfTime(_))) => return Ok(Verdict::Skipped(e.to_string())),
                Err(e) => return Err(CliError::Solver(e.to_string())),
            };
            let results = (args.seed..args.seed + runs)
                .map(|seed| run_one(inst, args, Mode::Eswo, seed, Some(optimum), false).map(|o| o.objective))
                .collect::<Result<_, _>>()?;
            Ok(Verdict::Checked { optimum, results })
        })
        .collect();

    let mut text = String::new();
    let (mut hits, mut total) = (0usize, 0usize);
    if format == Format::Csv {
        text.push_str("instance,status,optimum,best,hits,runs,gap\n");
    } else {
        let _ = writeln!(text, "{:<24} {:>8} {:>10} {:>10} {:>6} {:>9}", "instance", "status", "optimum", "best", "hits", "gap");
    }
    for ((name, _), verdict) in instances.iter().zip(verdicts) {
        match verdict? {
            Verdict::Checked { optimum, results } => {
                let h = results.iter().filter(|&&r| r == optimum).count();
                hits += h;
                total += results.len();
                let best = *results.iter().min().expect("at least one run");
                let gap = (best - optimum) as f64 / optimum.max(1) as f64;
                let status = if h == results.len() { "OK" } else { "MISS" };
                if format == Format::Csv {
                    let _ = writeln!(text, "{name},{status},{optimum},{best},{h},{},{gap:.6}", results.len());
                } else {
                    let _ = writeln!(
                        text,
                        "{name:<24} {status:>8} {optimum:>10} {best:>10} {:>6} {:>8.3}%",
                        format!("{h}/{}", results.len()),
                        gap * 100.0
                    );
                }
            }
            Verdict::Skipped(reason) => {
                if format == Format::Csv {
                    let _ = writeln!(text, "{name},SKIPPED,,,,,");
                } else {
                    let _ = writeln!(text, "{name:<24} {:>8} {reason}", "SKIPPED");
                }
            }
        }
    }
    let rate = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    if format == Format::Table {
        let _ = writeln!(text, "hit rate {hits}/{total} = {rate:.3}");
    }
    emit(&text, out)?;
    match min_hit_rate {
        Some(min) if rate < min => Err(CliError::Solver(format!("hit rate {rate:.3} below {min}"))),
        _ => Ok(()),
    }
}
