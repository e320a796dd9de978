use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hieradmm::exec::{init_thread_pool, threads_from_env};
use hieradmm::harness::{
    build_state, cached_oracle, centralized_oracle, compare_runs, read_metrics, run_experiment,
    sweep, ExperimentConfig, MetricsFile, RunOutcome,
};
use hieradmm::Execution;
use log::info;

#[derive(Parser)]
#[command(
    name = "hieradmm",
    version,
    about = "Hierarchical federated learning simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its per-round metrics.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Metrics file (CSV unless it ends in .jsonl); a `.meta.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cartesian product of one or more `key=v1,v2,...` axes.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Axis to vary, e.g. `--axis algorithm=hierfed,hierfadmm`. Repeatable.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare the objective of several metrics files at one round.
    Compare {
        /// Metrics files, optionally as `label=path`.
        #[arg(required = true)]
        runs: Vec<String>,
        /// Round to compare at; defaults to the last round every completed run reached.
        #[arg(long)]
        at_round: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Solve the pooled problem centrally and print F*.
    Oracle {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Reuse or store the solution in this JSON file.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iters: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    rounds: Option<String>,
    #[arg(long)]
    local_steps: Option<String>,
    /// Intra-set iterations per global round (initial value when growing).
    #[arg(long)]
    intra_iters: Option<String>,
    /// Grow the intra-set iterations at this rate per round.
    #[arg(long)]
    tau_growing: Option<String>,
    #[arg(long)]
    sets: Option<String>,
    /// One value for every set or a comma-separated list.
    #[arg(long)]
    clients_per_set: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    sigma_c: Option<String>,
    #[arg(long)]
    sigma_kc: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// `synthetic` or `adult:PATH`.
    #[arg(long)]
    data: Option<String>,
    /// `iid` or `single-class`.
    #[arg(long)]
    partition: Option<String>,
    /// Arbitrary `key=value` override. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
    /// Run sets and clients one after another.
    #[arg(long)]
    sequential: bool,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("algorithm", &self.algorithm),
            ("seed", &self.seed),
            ("rounds", &self.rounds),
            ("local_steps", &self.local_steps),
            ("tau", &self.intra_iters),
            ("tau_growing", &self.tau_growing),
            ("sets", &self.sets),
            ("clients_per_set", &self.clients_per_set),
            ("mu", &self.mu),
            ("sigma_c", &self.sigma_c),
            ("sigma_kc", &self.sigma_kc),
            ("lambda", &self.lambda),
            ("data", &self.data),
            ("partition", &self.partition),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if self.sequential {
            cfg.hier.execution = Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summarize(label: &str, file: &MetricsFile) {
    let last = file.records.last().expect("initial record");
    match &file.meta.outcome {
        RunOutcome::Diverged {
            round,
            quantity,
            value,
        } => {
            println!(
                "{label}: diverged in round {round} ({quantity} = {value:e}); \
                 last objective {:.12e} at t = {}",
                last.objective, last.t
            )
        }
        _ => println!(
            "{label}: t = {}  objective {:.12e}  consensus {:.3e}  stationarity {:.3e}",
            last.t, last.objective, last.consensus_residual, last.stationarity_residual
        ),
    }
}

fn run(exp: &ExperimentArgs, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = exp.load()?;
    if let Some(out) = out {
        if out.extension().is_some_and(|e| e == "jsonl") {
            cfg.set("format", "jsonl")?;
        }
        cfg.output = Some(out);
    }
    let file = run_experiment(&cfg)?;
    summarize(cfg.hier.algorithm.name(), &file);
    if let Some(out) = &cfg.output {
        info!("metrics written to {}", out.display());
    }
    Ok(())
}

fn parse_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("--axis expects key=v1,v2,..., got `{spec}`"))?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        bail!("--axis `{key}` has no values");
    }
    Ok((key.trim().to_string(), values))
}

fn run_sweep(exp: &ExperimentArgs, axes: &[String], out_dir: &Path) -> Result<()> {
    let cfg = exp.load()?;
    let axes = axes
        .iter()
        .map(|a| parse_axis(a))
        .collect::<Result<Vec<_>>>()?;
    let mut failed = 0;
    for point in sweep(&cfg, &axes, out_dir)? {
        let label = point
            .output
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        match &point.result {
            Ok(file) => summarize(&label, file),
            Err(e) => {
                failed += 1;
                eprintln!("{label}: {e}");
            }
        }
    }
    if failed > 0 {
        bail!("{failed} sweep point(s) failed");
    }
    Ok(())
}

fn compare(runs: &[String], at_round: Option<usize>, json: bool) -> Result<()> {
    let mut loaded = Vec::new();
    for spec in runs {
        let (label, path) = match spec.split_once('=') {
            Some((label, path)) => (label.to_string(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                (
                    path.file_stem()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned(),
                    path,
                )
            }
        };
        let file = read_metrics(&path).with_context(|| format!("reading {}", path.display()))?;
        loaded.push((label, file));
    }
    let at_round = match at_round {
        Some(t) => t,
        None => loaded
            .iter()
            .filter(|(_, f)| !f.meta.outcome.diverged())
            .filter_map(|(_, f)| f.records.last().map(|r| r.t))
            .min()
            .unwrap_or(0),
    };
    let report = compare_runs(&loaded, at_round)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{report}");
    }
    Ok(())
}

fn oracle(exp: &ExperimentArgs, cache: Option<&Path>, tol: f64, max_iters: usize) -> Result<()> {
    let cfg = exp.load()?;
    let pool = build_state(&cfg)?.pooled_data();
    let reg = cfg.hier.reg();
    let (solution, cached) = match cache {
        Some(path) => {
            let (entry, hit) = cached_oracle(path, &pool, reg, max_iters, tol)?;
            (entry.solution, hit)
        }
        None => (centralized_oracle(&pool, reg, max_iters, tol)?, false),
    };
    let summary = serde_json::json!({
        "fingerprint": pool.fingerprint(),
        "lambda": reg.lambda,
        "value": solution.value,
        "grad_norm": solution.grad_norm,
        "iterations": solution.iterations,
        "cached": cached,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<hieradmm::Error>() {
        Some(e) => e.kind(),
        None => "Usage",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(threads) = threads_from_env() {
        init_thread_pool(threads);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { exp, out } => run(exp, out.clone()),
        Command::Sweep { exp, axes, out_dir } => run_sweep(exp, axes, out_dir),
        Command::Compare {
            runs,
            at_round,
            json,
        } => compare(runs, *at_round, *json),
        Command::Oracle {
            exp,
            cache,
            tol,
            max_iters,
        } => oracle(exp, cache.as_deref(), *tol, *max_iters),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({ "error": { "kind": error_kind(&err), "message": format!("{err:#}") } });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
