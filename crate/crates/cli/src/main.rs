mod config;

use std::io::{Read, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;

use dyadic_sobolev::capacity::{capacity, CapacityCache, CapacityEstimate, CapacityOptions, DyadicSet};
use dyadic_sobolev::carleson::{
    bmo_s_norm, embedding_constant, operator_norm_hs, single_interval_sup, CarlesonOptions, CarlesonSequence, Operator,
    SpectralEstimate,
};
use dyadic_sobolev::dyadic::StepFunction;
use dyadic_sobolev::identities::verify_all;
use dyadic_sobolev::norms::NormReport;
use dyadic_sobolev::suites::{run_suite, theorem_suites, Row, SuiteConfig, SUITE_NAMES};

use config::{Cli, Command, Format, Settings, DEFAULT_DEPTH, DEFAULT_SOLVE_DEPTH};

/// One CSV line.
#[derive(Debug, Serialize)]
struct Record {
    suite: String,
    s: Option<f64>,
    depth: u32,
    seed: u64,
    statistic: String,
    value: f64,
}

impl From<Row> for Record {
    fn from(r: Row) -> Self {
        Self {
            suite: r.suite,
            s: Some(r.s),
            depth: r.depth,
            seed: r.seed,
            statistic: r.statistic,
            value: r.value,
        }
    }
}

enum Status {
    Ok,
    IdentityFailure,
    Unconverged,
}

/// A finished command: rendered JSON document, CSV rows and outcome.
struct Report {
    json: String,
    rows: Vec<Record>,
    status: Status,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// One JSON object for a single `s`, an array otherwise.
fn per_s<T: Serialize>(items: &[T]) -> Result<String> {
    Ok(match items {
        [one] => serde_json::to_string_pretty(one)?,
        many => serde_json::to_string_pretty(many)?,
    })
}

fn read_input<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).context("--input: cannot read standard input")?;
    } else {
        text = std::fs::read_to_string(path).with_context(|| format!("--input: cannot read {}", path.display()))?;
    }
    serde_json::from_str(&text).with_context(|| format!("--input: invalid JSON in {}", path.display()))
}

fn capacity_options(st: &Settings, fallback_depth: u32) -> CapacityOptions {
    let mut opts = CapacityOptions::at_depth(st.solve_depth.unwrap_or(fallback_depth));
    if let Some(t) = st.tol {
        opts.tol = t;
    }
    opts.max_iters = st.max_iters;
    opts
}

fn status_if(converged: bool) -> Status {
    if converged {
        Status::Ok
    } else {
        Status::Unconverged
    }
}

fn verify(st: &Settings) -> Result<Report> {
    let depth = st.depth.unwrap_or(DEFAULT_DEPTH);
    let report = verify_all(depth, st.seed, st.trials, st.jobs);
    let mut rows = Vec::new();
    for c in &report.checks {
        rows.push(Record {
            suite: "verify".into(),
            s: c.s,
            depth,
            seed: st.seed,
            statistic: c.name.clone(),
            value: c.max_residual,
        });
        if !c.passed {
            eprintln!("identity {} failed: residual {:e} > {:e}", c.name, c.max_residual, c.tolerance);
        }
    }
    let status = if report.passed() {
        Status::Ok
    } else {
        Status::IdentityFailure
    };
    Ok(Report {
        json: serde_json::to_string_pretty(&report)?,
        rows,
        status,
    })
}

fn norm(st: &Settings, input: &Path) -> Result<Report> {
    let f: StepFunction = read_input(input)?;
    let reports: Vec<NormReport> = st.s.iter().map(|&s| NormReport::compute(&f, s)).collect();
    let mut rows = Vec::new();
    for r in &reports {
        for (statistic, value) in [("l2", r.l2), ("sup", r.sup), ("hs", r.hs), ("hs_dot", r.hs_dot), ("hs_leftright", r.hs_leftright)] {
            rows.push(Record {
                suite: "norm".into(),
                s: Some(r.s.get()),
                depth: f.depth(),
                seed: st.seed,
                statistic: statistic.into(),
                value,
            });
        }
    }
    Ok(Report {
        json: per_s(&reports)?,
        rows,
        status: Status::Ok,
    })
}

fn capacity_cmd(st: &Settings, set: Option<&str>, input: &Path) -> Result<Report> {
    let e: DyadicSet = match set {
        Some(text) => serde_json::from_str(text).context("--set: invalid dyadic set JSON")?,
        None => read_input(input)?,
    };
    let needed = e.canonical().depth();
    let opts = capacity_options(st, DEFAULT_SOLVE_DEPTH.max(needed));
    let estimates: Vec<CapacityEstimate> = st
        .s
        .iter()
        .map(|&s| capacity(&e, s, &opts).context("--solve-depth"))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (s, est) in st.s.iter().zip(&estimates) {
        let lebesgue = e.measure();
        let scaled = if lebesgue > 0.0 {
            est.value / lebesgue.powf(1.0 - 2.0 * s.get())
        } else {
            0.0
        };
        for (statistic, value) in [
            ("capacity", est.value),
            ("measure", lebesgue),
            ("capacity_over_measure_power", scaled),
            ("kkt_residual", est.kkt_residual),
            ("iterations", est.iterations as f64),
            ("converged", flag(est.converged)),
        ] {
            rows.push(Record {
                suite: "capacity".into(),
                s: Some(s.get()),
                depth: est.solve_depth,
                seed: st.seed,
                statistic: statistic.into(),
                value,
            });
        }
    }
    let converged = estimates.iter().all(|e| e.converged);
    Ok(Report {
        json: per_s(&estimates)?,
        rows,
        status: status_if(converged),
    })
}

fn bmos(st: &Settings, input: &Path) -> Result<Report> {
    let b: StepFunction = read_input(input)?;
    let carleson_depth = b.depth().max(1) - 1;
    let opts = CarlesonOptions {
        mode: st.mode_for(carleson_depth)?,
        capacity: capacity_options(st, DEFAULT_SOLVE_DEPTH),
        allow_depth_4: st.allow_depth_4,
    };
    let cache = CapacityCache::new();
    let values = st
        .s
        .iter()
        .map(|&s| bmo_s_norm(&b, s, &opts, &cache).context("--solve-depth"))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (s, v) in st.s.iter().zip(&values) {
        let mu = CarlesonSequence::from_symbol(&b, *s);
        let single = single_interval_sup(&mu, *s, &opts, &cache)?;
        for (statistic, value) in [
            ("bmo_s", v.ratio.sqrt()),
            ("carleson_ratio", v.ratio),
            ("single_interval_ratio", single.ratio),
            ("mass", v.mass),
            ("capacity", v.cap.value),
            ("collection_size", v.collection.len() as f64),
            ("heuristic", flag(v.heuristic)),
        ] {
            rows.push(Record {
                suite: "bmos".into(),
                s: Some(s.get()),
                depth: carleson_depth,
                seed: st.seed,
                statistic: statistic.into(),
                value,
            });
        }
    }
    let converged = values.iter().all(|v| v.cap.converged);
    Ok(Report {
        json: per_s(&values)?,
        rows,
        status: status_if(converged),
    })
}

fn spectral_report(st: &Settings, suite: &str, depth: u32, estimates: Vec<SpectralEstimate>) -> Result<Report> {
    let mut rows = Vec::new();
    for (s, e) in st.s.iter().zip(&estimates) {
        for (statistic, value) in [
            ("value", e.value),
            ("residual", e.residual),
            ("iterations", e.iterations as f64),
            ("converged", flag(e.converged)),
        ] {
            rows.push(Record {
                suite: suite.into(),
                s: Some(s.get()),
                depth,
                seed: st.seed,
                statistic: statistic.into(),
                value,
            });
        }
    }
    let converged = estimates.iter().all(|e| e.converged);
    Ok(Report {
        json: per_s(&estimates)?,
        rows,
        status: status_if(converged),
    })
}

fn embed(st: &Settings, input: &Path) -> Result<Report> {
    let mu: CarlesonSequence = read_input(input)?;
    let depth = st.depth.unwrap_or(mu.depth());
    let estimates = st
        .s
        .iter()
        .map(|&s| embedding_constant(&mu, s, depth).context("--depth"))
        .collect::<Result<Vec<_>>>()?;
    spectral_report(st, "embed", depth, estimates)
}

fn opnorm(st: &Settings, input: &Path) -> Result<Report> {
    let op: Operator = read_input(input)?;
    let depth = st.depth.or(op.symbol_depth()).unwrap_or(4);
    let estimates = st
        .s
        .iter()
        .map(|&s| operator_norm_hs(|f| op.apply(f), s, depth).context("--depth"))
        .collect::<Result<Vec<_>>>()?;
    spectral_report(st, "opnorm", depth, estimates)
}

/// Experiments whose `depth` is a Carleson depth.
const CARLESON_SUITES: [&str; 7] = [
    "embedding",
    "single_interval",
    "paraproduct",
    "adjoint_paraproduct",
    "shift_commutator",
    "bmo_s_vs_sobolev",
    "bmo_vs_bmo_s",
];

fn suite(st: &Settings, name: &str) -> Result<Report> {
    if name != "theorems" && !SUITE_NAMES.contains(&name) {
        bail!("suite: unknown experiment {name:?}; expected one of {}, theorems", SUITE_NAMES.join(", "));
    }
    let depth = st.depth.unwrap_or(DEFAULT_DEPTH);
    let mode = if name == "theorems" || CARLESON_SUITES.contains(&name) {
        st.mode_for(depth)?
    } else {
        st.mode.unwrap_or(dyadic_sobolev::carleson::Mode::Exact)
    };
    let cfg = SuiteConfig {
        seed: st.seed,
        trials: st.trials,
        jobs: st.jobs,
        solve_depth: st.solve_depth,
        alpha: 0.0,
        mode,
        allow_depth_4: st.allow_depth_4,
    };
    let s: Vec<f64> = st.s.iter().map(|s| s.get()).collect();
    let rows = if name == "theorems" {
        theorem_suites(&s, depth, &cfg)?
    } else {
        run_suite(name, &s, depth, &cfg)?
    };
    let unconverged = rows.iter().any(|r| r.statistic == "unconverged" && r.value > 0.0);
    Ok(Report {
        json: serde_json::to_string_pretty(&rows)?,
        rows: rows.into_iter().map(Record::from).collect(),
        status: status_if(!unconverged),
    })
}

fn write_report(st: &Settings, default: Format, report: &Report) -> Result<()> {
    let mut buf = Vec::new();
    match st.format.unwrap_or(default) {
        Format::Json => {
            buf.extend_from_slice(report.json.as_bytes());
            buf.push(b'\n');
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in &report.rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    match &st.output {
        Some(path) => std::fs::write(path, &buf).with_context(|| format!("--output: cannot write {}", path.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    let st = Settings::resolve(cli.common)?;
    let (report, default) = match &cli.command {
        Command::Verify => (verify(&st)?, Format::Csv),
        Command::Norm(a) => (norm(&st, &a.input)?, Format::Json),
        Command::Capacity { set, input } => (capacity_cmd(&st, set.as_deref(), &input.input)?, Format::Json),
        Command::Bmos(a) => (bmos(&st, &a.input)?, Format::Json),
        Command::Embed(a) => (embed(&st, &a.input)?, Format::Json),
        Command::Opnorm(a) => (opnorm(&st, &a.input)?, Format::Json),
        Command::Suite { name } => (suite(&st, name)?, Format::Csv),
    };
    write_report(&st, default, &report)?;
    Ok(report.status)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::IdentityFailure) => ExitCode::from(1),
        Ok(Status::Unconverged) => {
            eprintln!("warning: a solver did not reach its tolerance");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
