use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use eswo::driver::{self, DriverInstance};
use eswo::instances::{self, DriverGenSpec, GeneratorSpec, NurseGenSpec, ProblemKind};
use eswo::nurse::{NurseInstance, NurseParams};
use eswo::solve::{driver_config, nurse_config};
use eswo::{EngineConfig, Mode};

use crate::CliError;

/// Flags shared by every command that runs the solver. Unset values fall
/// back to the defaults of the instance's problem.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Problem type; detected from the instance header when omitted.
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    #[arg(long, default_value_t = Mode::Eswo)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop after this many iterations without a new best.
    #[arg(long)]
    pub iters_no_improve: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Selection offset subtracted from the random threshold (driver 0.3, nurse 0).
    #[arg(long)]
    pub p_offset: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// Driver: top-k candidates in construction (2). Nurse: k-cheapest list length (3).
    #[arg(long)]
    pub k: Option<usize>,
    /// Nurse rule probabilities (k-cheapest, overall cover, combined).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub rule_probs: Option<Vec<f64>>,
    /// Driver: five fuzzy criterion weights. Nurse: combined-rule weights (w_p, w1, w2, w3).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Nurse penalty per missing nurse, period and grade.
    #[arg(long)]
    pub w_demand: Option<i64>,
}

#[derive(Debug, Clone)]
pub enum Instance {
    Driver(DriverInstance),
    Nurse(NurseInstance),
}

impl SolverArgs {
    /// Reads and validates an instance, applying `--weights` to driver pools.
    pub fn load(&self, path: &Path) -> Result<Instance, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let input = |e: instances::InstanceError| CliError::Input(format!("{}: {e}", path.display()));
        let kind = match self.problem {
            Some(kind) => kind,
            None => instances::detect_problem(&text).map_err(input)?,
        };
        Ok(match kind {
            ProblemKind::Driver => {
                let inst = instances::parse_driver_str(&text).map_err(input)?;
                Instance::Driver(match &self.weights {
                    Some(w) => {
                        let w: [f64; 5] = w.as_slice().try_into().map_err(|_| {
                            CliError::Input(format!("driver --weights takes 5 values, got {}", w.len()))
                        })?;
                        inst.with_weights(w).map_err(|e| CliError::Input(e.to_string()))?
                    }
                    None => inst,
                })
            }
            ProblemKind::Nurse => Instance::Nurse(instances::parse_nurse_str(&text).map_err(input)?),
        })
    }

    pub fn engine_config(&self, kind: ProblemKind, seed: u64) -> Result<EngineConfig, CliError> {
        let mut cfg = match kind {
            ProblemKind::Driver => driver_config(seed),
            ProblemKind::Nurse => nurse_config(seed),
        };
        cfg.mode = self.mode;
        if let Some(n) = self.iters_no_improve {
            cfg.stop_no_improve = n;
        }
        cfg.stop_max_iters = self.max_iters.or(cfg.stop_max_iters);
        if let Some(p) = self.p_offset {
            cfg.selection_offset = p;
        }
        if let Some(r) = self.mutation_rate {
            cfg.mutation_rate = r;
        }
        cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(cfg)
    }

    pub fn driver_k(&self) -> usize {
        self.k.unwrap_or(driver::DEFAULT_K)
    }

    pub fn nurse_params(&self) -> Result<NurseParams, CliError> {
        let mut p = NurseParams::default();
        if let Some(k) = self.k {
            p.k_cheapest = k;
        }
        if let Some(r) = &self.rule_probs {
            p.rule_probs = r
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Input("--rule-probs takes 3 values".into()))?;
        }
        if let Some(w) = &self.weights {
            p.combined_weights = w.as_slice().try_into().map_err(|_| {
                CliError::Input(format!("nurse --weights takes 4 values, got {}", w.len()))
            })?;
        }
        if let Some(w) = self.w_demand {
            p.w_demand = w;
        }
        p.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(p)
    }
}

impl Instance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Driver(_) => ProblemKind::Driver,
            Instance::Nurse(_) => ProblemKind::Nurse,
        }
    }
}

/// Generator settings, from flags, a TOML spec file, or both (flags win).
#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    /// TOML file with any of the keys below, e.g. `problem = "driver"`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub pieces: Option<usize>,
    #[arg(long)]
    pub shifts: Option<usize>,
    /// Attach fractional-cover values to about half of the shifts.
    #[arg(long)]
    pub with_lp: bool,
    #[arg(long)]
    pub nurses: Option<usize>,
    /// Upper bound on patterns per nurse.
    #[arg(long)]
    pub patterns: Option<usize>,
    /// Demand as a fraction of a reference roster's coverage.
    #[arg(long)]
    pub tightness: Option<f64>,
    /// Round demand instead of flooring it; may make demand unsatisfiable.
    #[arg(long)]
    pub infeasible: bool,
}

impl GenArgs {
    pub fn resolve(&self) -> Result<GeneratorSpec, CliError> {
        let table = match &self.spec {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        let bad = |key: &str| CliError::Input(format!("spec key `{key}` has the wrong type"));
        let int = |key: &str| -> Result<Option<u64>, CliError> {
            table
                .get(key)
                .map(|v| v.as_integer().and_then(|i| u64::try_from(i).ok()).ok_or_else(|| bad(key)))
                .transpose()
        };
        let float = |key: &str| -> Result<Option<f64>, CliError> {
            table
                .get(key)
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(|| bad(key)))
                .transpose()
        };
        let boolean = |key: &str| -> Result<Option<bool>, CliError> {
            table.get(key).map(|v| v.as_bool().ok_or_else(|| bad(key))).transpose()
        };
        let problem = match (self.problem, table.get("problem")) {
            (Some(p), _) => p,
            (None, Some(v)) => v
                .as_str()
                .ok_or_else(|| bad("problem"))?
                .parse()
                .map_err(CliError::Input)?,
            (None, None) => return Err(CliError::Input("--problem is required".into())),
        };
        let seed = self.seed.or(int("seed")?).unwrap_or(0);
        Ok(match problem {
            ProblemKind::Driver => GeneratorSpec::Driver(DriverGenSpec {
                pieces: self.pieces.or(int("pieces")?.map(|v| v as usize)).unwrap_or(12),
                shifts: self.shifts.or(int("shifts")?.map(|v| v as usize)).unwrap_or(20),
                with_lp: self.with_lp || boolean("with_lp")?.unwrap_or(false),
                seed,
            }),
            ProblemKind::Nurse => GeneratorSpec::Nurse(NurseGenSpec {
                nurses: self.nurses.or(int("nurses")?.map(|v| v as usize)).unwrap_or(5),
                patterns: self.patterns.or(int("patterns")?.map(|v| v as usize)).unwrap_or(8),
                tightness: self.tightness.or(float("tightness")?).unwrap_or(1.0),
                feasible: !self.infeasible && boolean("feasible")?.unwrap_or(true),
                seed,
            }),
        })
    }
}
