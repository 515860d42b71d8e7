//! Flag parsing and the merge of flags over an optional JSON config file.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use dyadic_sobolev::carleson::Mode;
use dyadic_sobolev::operators::Smoothness;
use dyadic_sobolev::parallel::worker_count;

pub const MAX_DEPTH: u32 = 14;
pub const DEFAULT_DEPTH: u32 = 8;
pub const DEFAULT_SOLVE_DEPTH: u32 = 12;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_S: [f64; 3] = [0.25, 0.5, 0.75];
pub const JOBS_ENV: &str = "DYADIC_SOBOLEV_JOBS";

const CSV_HELP: &str = "\
CSV reports have the columns
  suite      command or experiment that produced the row
  s          smoothness parameter (empty for s-independent rows)
  depth      dyadic depth the row refers to (see each command)
  seed       random seed of the run
  statistic  name of the reported quantity
  value      its value (booleans as 0/1)

Exit status: 0 success, 1 identity check failed, 2 invalid arguments or
input, 3 a solver did not converge (the report is still written).";

#[derive(Debug, Parser)]
#[command(name = "dyadic-sobolev", version, about = "Dyadic fractional Sobolev spaces on [0,1]: identities, capacities, Carleson norms, operator bounds", after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every exact identity on random step functions; `depth` is the
    /// function depth, `--trials` the number of samples per identity.
    Verify,
    /// Norms of a step function `{"depth": N, "values": [...]}`.
    Norm(InputArgs),
    /// Restricted capacity of a dyadic set `{"depth": M, "leaves": [...]}`;
    /// `depth` in CSV rows is the solve depth.
    Capacity {
        /// Set as inline JSON (otherwise read from --input).
        #[arg(long)]
        set: Option<String>,
        #[command(flatten)]
        input: InputArgs,
    },
    /// `BMO^s` norm of a symbol step function; `depth` in CSV rows is the
    /// Carleson depth (symbol depth minus one).
    Bmos(InputArgs),
    /// Best Carleson embedding constant of a sequence
    /// `{"depth": N, "entries": [{"level", "pos", "mu"}...]}`.
    Embed(InputArgs),
    /// `H^s` operator norm of `{"kind": "identity" | "shift" | "paraproduct" |
    /// "adjoint_paraproduct" | "shift_commutator", "symbol": <step function>}`.
    Opnorm(InputArgs),
    /// Run a ratio experiment. For experiments built on BMO^s, `depth` is the
    /// Carleson depth and the random symbols have one more level.
    #[command(after_help = CSV_HELP)]
    Suite {
        /// capacity_scan, mazya, embedding, single_interval, paraproduct, adjoint_paraproduct,
        /// algebra, shift_commutator, bmo_s_vs_sobolev, bmo_vs_bmo_s,
        /// maximal_commutation, cmo_tail, or `theorems` for the operator
        /// and norm-comparison group.
        name: String,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// JSON input file, `-` for standard input.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Heuristic,
}

/// Options shared by every command. Each may also come from `--config`;
/// flags take precedence.
#[derive(Debug, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Common {
    /// Smoothness values in (0,1), comma separated [default: 0.25,0.5,0.75]
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub s: Option<Vec<f64>>,
    /// Dyadic depth, at most 14 [default: 8, or taken from the input]
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    /// Grid depth of capacity solves [default: 12]
    #[arg(long, global = true)]
    pub solve_depth: Option<u32>,
    /// Capacity solver tolerance on the KKT residual [default: 1e-9]
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Capacity solver iteration cap [default: 50·2^M]
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    /// [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Random samples per experiment [default: 200]
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Carleson supremum: exhaustive (Carleson depth ≤ 3) or heuristic
    /// lower bound [default: exact where allowed, else heuristic]
    #[arg(long, global = true)]
    pub mode: Option<ModeArg>,
    /// Permit exact mode at Carleson depth 4
    #[arg(long, global = true)]
    #[serde(default)]
    pub allow_depth_4: bool,
    /// Worker threads; DYADIC_SOBOLEV_JOBS overrides [default: logical CPUs]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Report file [default: standard output]
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// [default: csv for verify and suite, json otherwise]
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// JSON object with any of the options above (kebab-case keys)
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Options after merging flags, config file and environment.
#[derive(Debug, Clone)]
pub struct Settings {
    pub s: Vec<Smoothness>,
    pub depth: Option<u32>,
    pub solve_depth: Option<u32>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub mode: Option<Mode>,
    pub allow_depth_4: bool,
    pub jobs: usize,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Settings {
    pub fn resolve(flags: Common) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("--config: cannot read {}", path.display()))?;
                serde_json::from_str::<Common>(&text).with_context(|| format!("--config: invalid JSON in {}", path.display()))?
            }
            None => Common::default(),
        };
        let s_raw = flags.s.or(file.s).unwrap_or_else(|| DEFAULT_S.to_vec());
        if s_raw.is_empty() {
            bail!("--s: at least one value is required");
        }
        let s = s_raw
            .iter()
            .map(|&v| Smoothness::new(v).with_context(|| format!("--s: {v} is not in (0,1)")))
            .collect::<Result<Vec<_>>>()?;
        let depth = flags.depth.or(file.depth);
        if let Some(d) = depth {
            if d > MAX_DEPTH {
                bail!("--depth: {d} exceeds the maximum {MAX_DEPTH}");
            }
        }
        let tol = flags.tol.or(file.tol);
        if let Some(t) = tol {
            if !(t > 0.0) {
                bail!("--tol: must be positive, got {t}");
            }
        }
        let trials = flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            bail!("--trials: must be at least 1");
        }
        let env_jobs = match std::env::var(JOBS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().with_context(|| format!("{JOBS_ENV}: not a count: {v:?}"))?),
            Err(_) => None,
        };
        Ok(Self {
            s,
            depth,
            solve_depth: flags.solve_depth.or(file.solve_depth),
            tol,
            max_iters: flags.max_iters.or(file.max_iters),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            trials,
            mode: flags.mode.or(file.mode).map(|m| match m {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Heuristic => Mode::Heuristic,
            }),
            allow_depth_4: flags.allow_depth_4 || file.allow_depth_4,
            jobs: worker_count(env_jobs.or(flags.jobs).or(file.jobs)),
            output: flags.output.or(file.output),
            format: flags.format.or(file.format),
        })
    }

    /// Deepest Carleson depth allowed in exact mode.
    pub fn exact_cap(&self) -> u32 {
        if self.allow_depth_4 {
            dyadic_sobolev::carleson::EXACT_MAX_DEPTH_OVERRIDE
        } else {
            dyadic_sobolev::carleson::EXACT_MAX_DEPTH
        }
    }

    /// Mode for a Carleson supremum at `depth`: the requested one (exact is
    /// rejected beyond the cap), else exact when allowed.
    pub fn mode_for(&self, depth: u32) -> Result<Mode> {
        match self.mode {
            Some(Mode::Exact) if depth > self.exact_cap() => bail!(
                "--mode: exact mode supports Carleson depth at most {}, got {depth} (use --mode heuristic{})",
                self.exact_cap(),
                if depth == 4 && !self.allow_depth_4 { " or --allow-depth-4" } else { "" }
            ),
            Some(m) => Ok(m),
            None if depth <= self.exact_cap() => Ok(Mode::Exact),
            None => Ok(Mode::Heuristic),
        }
    }
}
