use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holeguard::config::{bundled, parse_config};
use holeguard::output::{write_outputs, Emit};
use holeguard::sim::{run, Mode};

/// Coverage-hole-free camera team simulator. Set RUST_LOG for log output.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file and write its outputs.
    Run {
        /// Scenario file, or `bundled:<name>` (trio, nine_agents, five_agents).
        #[arg(long)]
        config: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(Mode))]
        mode: Option<Mode>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of trace, summary, plotdata.
        #[arg(long, default_value = "trace,summary")]
        emit: Emit,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run { config, out, mode, steps, dt, seed, emit } = Cli::parse().command;
    match execute(&config, &out, mode, steps, dt, seed, emit) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(
    config: &str,
    out: &std::path::Path,
    mode: Option<Mode>,
    steps: Option<usize>,
    dt: Option<f64>,
    seed: Option<u64>,
    emit: Emit,
) -> Result<(), String> {
    let text = match config.strip_prefix("bundled:") {
        Some(name) => bundled(name).ok_or_else(|| format!("no bundled scenario named `{name}`"))?.to_string(),
        None => std::fs::read_to_string(config).map_err(|e| format!("cannot read {config}: {e}"))?,
    };
    let mut sc = parse_config(&text).map_err(|e| format!("{config}: {e}"))?;
    if let Some(m) = mode {
        sc.mode = m;
    }
    if let Some(n) = steps {
        sc.steps = n;
    }
    if let Some(d) = dt {
        sc.dt = d;
    }
    if let Some(s) = seed {
        sc.seed = s;
    }
    sc.validate()?;
    log::info!("running {} agents for {} steps in {} mode", sc.agents.len(), sc.steps, sc.mode);
    let (trace, summary) = run(&sc);
    let files = write_outputs(out, &trace, &summary, emit).map_err(|e| format!("writing {}: {e}", out.display()))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}
