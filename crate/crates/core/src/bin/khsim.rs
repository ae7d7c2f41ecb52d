use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use koopman_hybrid::experiments::{
    compare_runs, emit_config, parse_config, run_into, resolve_output, ExperimentConfig, RunError,
    RunOutcome,
};

/// Koopman and hybrid quantum-classical phase-space simulations.
#[derive(Parser)]
#[command(name = "khsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured model and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exact / reference solution of a config into `<output>_oracle`.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare run B against run A checkpoint by checkpoint.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Report directory; defaults to `<dir_a>/compare_<name of dir_b>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print it fully expanded.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        ExitCode::from(2)
    })?;
    parse_config(&text).map_err(|e| {
        eprint!("{}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn report(result: Result<RunOutcome, RunError>) -> ExitCode {
    match result {
        Ok(o) => {
            let last = o.rows.last().expect("at least one checkpoint");
            println!(
                "wrote {} checkpoints to {} in {:.1} s (t = {}, norm = {:.12}, energy = {:.12})",
                o.rows.len(),
                o.dir.display(),
                o.wall_time,
                last.t,
                last.total_norm,
                last.energy
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let RunError::Numerical { dir, .. } = &e {
                eprintln!("abort record written to {}", dir.join("error.json").display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = out.unwrap_or_else(|| resolve_output(&cfg.output));
            report(run_into(&cfg, &dir, false))
        }
        Command::Oracle { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = out.unwrap_or_else(|| resolve_output(&format!("{}_oracle", cfg.output.trim_end_matches('/'))));
            report(run_into(&cfg, &dir, true))
        }
        Command::Compare { dir_a, dir_b, out } => match compare_runs(&dir_a, &dir_b, out.as_deref()) {
            Ok(r) => {
                let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
                println!(
                    "{} checkpoints: max bloch deviation {}, max density L1 {}, min purity gap {}, max state L2 {}",
                    r.checkpoints.len(),
                    show(r.max_bloch_deviation),
                    show(r.max_density_l1),
                    show(r.min_purity_gap),
                    show(r.max_state_l2)
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", emit_config(&cfg));
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
