use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use crcm::exec::Execution;
use crcm_lab::{checkpoint, run, Command, ExperimentSpec, LabError, RunRequest};

/// Simulation experiments for the continuum random cluster and
/// Widom-Rowlinson models.
#[derive(Parser, Debug)]
#[command(name = "crcm-lab", version)]
struct Cli {
    /// Subcommand followed by `key=value` overrides of the experiment spec.
    ///
    /// Subcommands: sample-poisson, sample-crcm, sample-wr, gnz-check,
    /// fk-check, dlr-check, bounds-audit, localization, shield,
    /// entropy-bounds, np-decay, coverage-probe.
    #[arg(value_name = "SUBCOMMAND [KEY=VALUE]...")]
    args: Vec<String>,
    /// TOML file with experiment settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Same as `seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Same as `chains=N`.
    #[arg(long)]
    chains: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Continue a halted sampling run from its checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Run chains one after another instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

fn request(cli: Cli) -> Result<RunRequest, LabError> {
    let mut args = cli.args.into_iter().peekable();
    let named = args.next_if(|a| !a.contains('=')).map(|a| a.parse::<Command>()).transpose()?;
    let mut overrides: Vec<String> = args.collect();
    if let Some(s) = cli.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(c) = cli.chains {
        overrides.push(format!("chains={c}"));
    }
    let document = cli
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| LabError::Spec(format!("{}: {e}", p.display()))))
        .transpose()?;
    let (command, base) = match &cli.resume {
        Some(path) => {
            let (cmd, mut spec) = checkpoint::peek(path)?;
            if named.is_some_and(|n| n != cmd) {
                return Err(LabError::Spec(format!("checkpoint belongs to {}", cmd.name())));
            }
            spec.halt_after = None;
            (cmd, Some(spec))
        }
        None => (
            named.ok_or_else(|| LabError::Spec(format!("missing subcommand\n{}", Cli::command().render_usage())))?,
            None,
        ),
    };
    let spec = ExperimentSpec::from_sources(base.as_ref(), document.as_deref(), &overrides)?;
    Ok(RunRequest {
        command,
        spec,
        out: cli.out,
        resume: cli.resume,
        exec: if cli.sequential { Execution::Sequential } else { Execution::default() },
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = request(cli).and_then(|req| run(&req));
    match result {
        Ok(outcome) => {
            for l in &outcome.lines {
                println!("{l}");
            }
            if outcome.passed {
                println!("PASS");
                ExitCode::SUCCESS
            } else {
                println!("FAIL");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let LabError::Spec(_) = e {
                eprintln!("{}", Cli::command().render_usage());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
