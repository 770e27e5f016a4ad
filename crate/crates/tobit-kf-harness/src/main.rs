use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tobit_kf::scenarios;
use tobit_kf_harness::report::summarize;
use tobit_kf_harness::runner::{execute_many, FilterKind};
use tobit_kf_harness::trace::write_trace;

#[derive(Parser)]
#[command(
    name = "tobitkf",
    version,
    about = "Kalman filtering under censored measurements: scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a scenario and run the requested filters on each seed's
    /// measurement stream, writing one CSV trace per seed and a JSON summary.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name: constant-1d, vlc, or attitude.
    scenario: String,

    /// Comma-separated subset of kf,akf,tkf,atkf.
    #[arg(long, default_value = "kf,akf,tkf,atkf")]
    filters: String,

    /// Base seed; replicate i draws from an independent stream i of this
    /// seed.
    #[arg(long, env = "TOBITKF_SEED", default_value_t = 0)]
    seed: u64,

    /// Number of independent replicates.
    #[arg(long, default_value_t = 1)]
    replicates: usize,

    /// Override the scenario trajectory length.
    #[arg(long)]
    steps: Option<usize>,

    /// Override the adaptive fading factor (0 <= gamma < 1).
    #[arg(long)]
    gamma: Option<f64>,

    /// Override the adaptive innovation window length (>= 1).
    #[arg(long)]
    window: Option<usize>,

    /// Directory for CSV traces, created if missing.
    #[arg(long, default_value = "runs")]
    out: PathBuf,

    /// Path for the JSON summary (default: <out>/summary.json).
    #[arg(long)]
    summary_json: Option<PathBuf>,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn internal_error(msg: String) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run(args) => run(args),
    }
}

fn run(args: RunArgs) -> ExitCode {
    let Some(mut cfg) = scenarios::by_name(&args.scenario) else {
        return usage_error(&format!(
            "unknown scenario `{}` (expected one of: {})",
            args.scenario,
            scenarios::NAMES.join(", ")
        ));
    };

    let mut kinds: Vec<FilterKind> = Vec::new();
    for part in args.filters.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match FilterKind::parse(part) {
            Some(k) if !kinds.contains(&k) => kinds.push(k),
            Some(_) => {} // duplicate: keep first occurrence
            None => {
                return usage_error(&format!(
                    "unknown filter `{part}` (expected kf, akf, tkf, atkf)"
                ))
            }
        }
    }
    if kinds.is_empty() {
        return usage_error("at least one filter is required");
    }
    if args.replicates == 0 {
        return usage_error("--replicates must be at least 1");
    }
    if let Some(g) = args.gamma {
        if !(0.0..1.0).contains(&g) {
            return usage_error("--gamma must lie in [0, 1)");
        }
        cfg.gamma = g;
    }
    if let Some(w) = args.window {
        if w == 0 {
            return usage_error("--window must be at least 1");
        }
        cfg.window_n = w;
    }
    if let Some(s) = args.steps {
        if s <= cfg.burn_in {
            return usage_error(&format!(
                "--steps must exceed the scenario burn-in ({})",
                cfg.burn_in
            ));
        }
        cfg.steps = s;
    }

    let runs = match execute_many(&cfg, &kinds, args.seed, args.replicates) {
        Ok(r) => r,
        Err(e) => return internal_error(format!("simulation failed: {e}")),
    };

    if let Err(e) = std::fs::create_dir_all(&args.out) {
        return internal_error(format!("cannot create {}: {e}", args.out.display()));
    }
    let mut trace_names = Vec::with_capacity(runs.len());
    for run in &runs {
        let name = format!("{}_seed{}_rep{:03}.csv", cfg.name, args.seed, run.replicate);
        if let Err(e) = write_trace(run, &args.out.join(&name)) {
            return internal_error(e.to_string());
        }
        trace_names.push(name);
    }

    let report = summarize(&cfg, args.seed, &runs, trace_names);
    let json_path = args
        .summary_json
        .unwrap_or_else(|| args.out.join("summary.json"));
    if let Err(e) = std::fs::write(&json_path, report.to_json()) {
        return internal_error(format!("cannot write {}: {e}", json_path.display()));
    }

    print!("{}", report.render_text());
    let diverged: usize = report.filters.values().map(|f| f.diverged.len()).sum();
    if diverged > 0 {
        println!(
            "note: {diverged} filter run(s) diverged; see {} for details",
            json_path.display()
        );
    }
    ExitCode::SUCCESS
}
