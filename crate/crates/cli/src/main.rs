//! `gibbsgraph`: command-line front end.
//!
//! Every subcommand reads one spec file (JSON, or TOML by extension) and
//! writes its results either to `--out <dir>` or to stdout. Exit codes: 0 on
//! success, 1 when an experiment's assertions fail, 2 on usage or
//! configuration errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gibbsgraph_core::experiments::{self, ExperimentSpec};
use gibbsgraph_core::gpp::{
    approximate_partition, default_truncation, oracle_partition, sample_configuration, GppInstance, NMode,
    SamplerKind,
};
use gibbsgraph_core::graph::sample_graph_seeded;
use gibbsgraph_core::rng::{replicate_stream, stream};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "gibbsgraph",
    version,
    about = "Repulsive Gibbs point processes via hard-core models on random graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Spec file (JSON or TOML).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Replaces the seed given in the spec file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "GIBBSGRAPH_THREADS")]
    threads: Option<usize>,

    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Sample a random graph and emit it as JSON.
    #[command(alias = "generate")]
    Graph,
    /// Estimate the partition function.
    Estimate,
    /// Draw approximate samples and emit them as JSONL.
    Sample,
    /// Run an experiment spec.
    #[command(alias = "validate")]
    Experiment,
    /// Recompute an experiment summary from its `rows.jsonl`.
    Analyze,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    #[default]
    Approximate,
    Oracle,
}

fn default_eps() -> f64 {
    0.1
}

fn default_draws() -> usize {
    1
}

fn default_oracle_samples() -> usize {
    100_000
}

/// Spec of the `graph`, `estimate` and `sample` subcommands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskSpec {
    instance: GppInstance,
    /// Vertex count; the worst-case bound is used when absent (not allowed
    /// for `graph`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    method: Method,
    #[serde(default = "default_draws")]
    draws: usize,
    #[serde(default)]
    sampler: SamplerKind,
    #[serde(default = "default_oracle_samples")]
    oracle_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation: Option<usize>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(String),
    Assertion(String),
}

impl From<gibbsgraph_core::Error> for Failure {
    fn from(e: gibbsgraph_core::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn spec_path(cli: &Cli) -> CliResult<&Path> {
    cli.spec
        .as_deref()
        .ok_or_else(|| Failure::Config("--spec <path> is required".into()))
}

fn read_task(cli: &Cli) -> CliResult<TaskSpec> {
    let path = spec_path(cli)?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let mut spec: TaskSpec = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?
    } else {
        serde_json::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?
    };
    spec.instance.validate()?;
    if !(spec.eps > 0.0 && spec.eps <= 1.0) {
        return Err(Failure::Config("eps must lie in (0, 1]".into()));
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn n_mode(spec: &TaskSpec) -> NMode {
    spec.n.map_or(NMode::Paper, NMode::Practical)
}

/// Writes `text` to `<out>/<name>` or to stdout.
fn emit(cli: &Cli, name: &str, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
            log::info!("wrote {}", dir.join(name).display());
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_graph(cli: &Cli) -> CliResult<()> {
    let spec = read_task(cli)?;
    let n = spec
        .n
        .ok_or_else(|| Failure::Config("graph needs n in the spec file".into()))?;
    let inst = &spec.instance;
    let g = sample_graph_seeded(&inst.region, &inst.potential, n, spec.seed)?;
    let doc = json!({ "spec": spec, "seed": spec.seed, "graph": g.to_json() });
    emit(cli, "graph.json", &(serde_json::to_string_pretty(&doc)? + "\n"))
}

fn cmd_estimate(cli: &Cli) -> CliResult<()> {
    let spec = read_task(cli)?;
    let inst = &spec.instance;
    let mut rng = stream(spec.seed);
    let doc = match spec.method {
        Method::Approximate => {
            let a = approximate_partition(inst, spec.eps, &mut rng, n_mode(&spec))?;
            json!({
                "spec": spec,
                "seed": spec.seed,
                "method": spec.method,
                "estimate": a.estimate,
                "n": a.n,
                "paper_n": a.paper_n,
                "practical": a.practical,
                "max_degree": a.max_degree,
                "degree_threshold": a.degree_threshold,
            })
        }
        Method::Oracle => {
            let m = spec
                .truncation
                .unwrap_or_else(|| default_truncation(inst, spec.eps));
            let e = oracle_partition(inst, m, spec.oracle_samples, &mut rng)?;
            json!({
                "spec": spec,
                "seed": spec.seed,
                "method": spec.method,
                "estimate": e,
                "truncation": m,
            })
        }
    };
    emit(
        cli,
        "estimate.json",
        &(serde_json::to_string_pretty(&doc)? + "\n"),
    )
}

fn cmd_sample(cli: &Cli) -> CliResult<()> {
    let spec = read_task(cli)?;
    let mut out = serde_json::to_string(&json!({ "spec": spec, "seed": spec.seed }))? + "\n";
    for id in 0..spec.draws as u64 {
        let mut rng = replicate_stream(spec.seed, id);
        let d = sample_configuration(&spec.instance, spec.eps, &mut rng, n_mode(&spec), spec.sampler)?;
        out += &serde_json::to_string(&json!({
            "id": id,
            "points": d.configuration,
            "degree_failure": d.degree_failure,
        }))?;
        out.push('\n');
    }
    emit(cli, "samples.jsonl", &out)
}

fn finish(summary: &experiments::Summary) -> CliResult<()> {
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure::Assertion("experiment assertions failed".into()))
    }
}

fn cmd_experiment(cli: &Cli) -> CliResult<()> {
    let mut spec = ExperimentSpec::from_path(spec_path(cli)?)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let report = experiments::run(&spec)?;
    let dir = cli.out.clone().or_else(|| spec.output.clone());
    let summary = json!({ "spec": report.spec, "seed": report.seed, "summary": report.summary });
    match dir {
        Some(dir) => {
            experiments::write_report(&report, &dir)?;
            log::info!("wrote {}", dir.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&summary)?),
    }
    finish(&report.summary)
}

fn cmd_analyze(cli: &Cli) -> CliResult<()> {
    let (spec, rows) = experiments::read_rows(spec_path(cli)?)?;
    let summary = experiments::summarize(&spec, &rows)?;
    let doc = json!({ "spec": spec, "seed": spec.seed, "summary": summary });
    emit(cli, "summary.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    finish(&summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Graph => cmd_graph(&cli),
        Command::Estimate => cmd_estimate(&cli),
        Command::Sample => cmd_sample(&cli),
        Command::Experiment => cmd_experiment(&cli),
        Command::Analyze => cmd_analyze(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
